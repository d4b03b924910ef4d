"""Internal-angle cosines and similarity transforms."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

#: Vector norms below this are treated as overlapping points (angle 0, cos 1).
EPS = 1e-12


def internal_cosine(pi, pj, pk, eps: float = EPS) -> float:
    """Cosine of the angle at ``pi`` between ``pj - pi`` and ``pk - pi``.

    If either vector is shorter than ``eps`` the angle is taken to be 0, so the
    result is 1.0. The value is clamped to [-1, 1].
    """
    pi, pj, pk = (np.asarray(p, dtype=np.float64) for p in (pi, pj, pk))
    if not (pi.shape == pj.shape == pk.shape) or pi.ndim != 1:
        raise ValidationError(
            f"points must be 1-D with equal dimension, got {pi.shape}, {pj.shape}, {pk.shape}")
    return float(triplet_cosines(np.stack([pi, pj, pk]), [0], [1], [2], eps)[0])


def triplet_cosines(points: np.ndarray, i, j, k, eps: float = EPS) -> np.ndarray:
    """Vectorised :func:`internal_cosine` over index arrays ``i``, ``j``, ``k``."""
    base = points[i]
    u = points[j] - base
    v = points[k] - base
    nu = np.sqrt(np.einsum("ij,ij->i", u, u))
    nv = np.sqrt(np.einsum("ij,ij->i", v, v))
    dot = np.einsum("ij,ij->i", u, v)
    degenerate = (nu < eps) | (nv < eps)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = dot / (nu * nv)
    c[degenerate] = 1.0
    np.clip(c, -1.0, 1.0, out=c)
    return c


def apply_similarity(points, rotation, scale: float, translation) -> np.ndarray:
    """Map every row ``x`` to ``scale * R @ x + translation``."""
    pts = np.asarray(points, dtype=np.float64)
    R = np.asarray(rotation, dtype=np.float64)
    d = pts.shape[1]
    if R.shape != (d, d):
        raise ValidationError(f"rotation must be {d}x{d}, got {R.shape}")
    if not np.allclose(R.T @ R, np.eye(d), rtol=0.0, atol=1e-10):
        raise ValidationError("rotation matrix is not orthogonal")
    if not scale > 0:
        raise ValidationError(f"scale must be positive, got {scale}")
    return scale * pts @ R.T + np.asarray(translation, dtype=np.float64)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))
