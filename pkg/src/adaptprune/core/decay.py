"""Suppression kernels: how much a selected token discounts its neighbors.

Both kernels map into (0, 1].  Spatial decay falls off with squared patch
distance; similarity decay falls off with squared cosine *distance*, so
identical keys give 1 and orthogonal keys give exp(-1 / (2 * sigma_s**2)).
"""

from __future__ import annotations

import numpy as np


def spatial_decay(distance, sigma_d: float):
    """exp(-d^2 / (2 sigma_d^2)) for Euclidean patch distance d.

    Parameters
    ----------
    distance : float or np.ndarray
        Euclidean distance between patch coordinates, in patches.
    sigma_d : float
        Spatial bandwidth.
    """
    d = np.asarray(distance, dtype=np.float64)
    out = np.exp(-(d * d) / (2.0 * sigma_d * sigma_d))
    return out if out.ndim else float(out)


def similarity_decay(cos_sim, sigma_s: float):
    """exp(-(1 - cos)^2 / (2 sigma_s^2)) for cosine similarity cos.

    Parameters
    ----------
    cos_sim : float or np.ndarray
        Cosine similarity between key vectors, in [-1, 1].
    sigma_s : float
        Similarity bandwidth.
    """
    gap = 1.0 - np.asarray(cos_sim, dtype=np.float64)
    out = np.exp(-(gap * gap) / (2.0 * sigma_s * sigma_s))
    return out if out.ndim else float(out)


def cosine_similarity(a: np.ndarray, b: np.ndarray):
    """Cosine similarity along the last axis; a zero-norm vector scores 0.

    Broadcasts like a dot product: ``a`` of shape (d,) against ``b`` of
    shape (m, d) yields (m,).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    num = np.sum(a * b, axis=-1)
    denom = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
    out = np.divide(num, denom, out=np.zeros_like(num, dtype=np.float64), where=denom != 0)
    return out if out.ndim else float(out)
