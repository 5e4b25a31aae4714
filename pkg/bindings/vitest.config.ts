import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // The fidelity suite drives a few hundred engine subprocesses in one test.
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
