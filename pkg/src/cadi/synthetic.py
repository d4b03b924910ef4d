"""Synthetic benchmark datasets with non-globular classes.

Five generators, each deterministic for a given seed (numpy PCG64):

========== ====== ===== =========
name       n      d     classes
========== ====== ===== =========
concentric3 2760  3     5
concentric4 3240  4     5
donuts     3750   3     3
matryoshka 6400   3     7
rings      4000   100   20
========== ====== ===== =========
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .sampling import make_rng

GENERATORS = ("concentric3", "concentric4", "donuts", "matryoshka", "rings")


def _sphere_surface(rng, count: int, dim: int, radius: float, center=None) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    pts = radius * g
    if center is not None:
        pts += center
    return pts


def gen_concentric(dim: int = 3, n_spheres: int = 5, per_sphere: int | None = None,
                   radii=None, seed: int = 0) -> Dataset:
    """Nested hollow (hyper)spheres around the origin, one class per sphere.

    Defaults: 552 points per sphere in 3-D and 648 in 4-D, radii 1..n_spheres.
    """
    if per_sphere is None:
        per_sphere = {3: 552, 4: 648}.get(dim)
        if per_sphere is None:
            raise ValidationError(f"no default sphere size for dim={dim}")
    if per_sphere < 1:
        raise ValidationError("per_sphere must be >= 1")
    radii = np.arange(1, n_spheres + 1, dtype=np.float64) if radii is None else np.asarray(radii, float)
    if len(radii) != n_spheres:
        raise ValidationError(f"{len(radii)} radii for {n_spheres} spheres")
    if radii[0] <= 0 or np.any(np.diff(radii) <= 0):
        raise ValidationError("radii must be positive and strictly increasing")
    rng = make_rng(seed)
    pts = np.vstack([_sphere_surface(rng, per_sphere, dim, r) for r in radii])
    return Dataset(pts, np.repeat(np.arange(n_spheres), per_sphere))


def gen_rings(n_rings: int = 20, per_ring: int = 200, ambient_dim: int = 100,
              ring_radius: float = 1.0, spacing: float = 0.9, noise_sigma: float = 0.01,
              seed: int = 0) -> Dataset:
    """A chain of interlocking circles in mutually orthogonal planes.

    Ring ``r`` lies in the plane of axes ``e_r`` and ``e_shared`` (with
    ``shared = n_rings``), centred at ``r * spacing`` along ``e_shared``.
    Each ring thus owns one private axis and all rings share one more, giving
    an intrinsic dimensionality of ``n_rings + 1``. Consecutive rings link
    whenever ``spacing < ring_radius``. Isotropic Gaussian noise of scale
    ``noise_sigma`` is then added in every ambient coordinate.
    """
    if ambient_dim < n_rings + 1:
        raise ValidationError(f"ambient_dim must be >= {n_rings + 1}")
    if per_ring < 3:
        raise ValidationError("per_ring must be >= 3")
    if not 0 < spacing < 2 * ring_radius:
        raise ValidationError("spacing must lie in (0, 2 * ring_radius) to keep the chain")
    if noise_sigma < 0:
        raise ValidationError("noise_sigma must be >= 0")
    rng = make_rng(seed)
    shared = n_rings
    pts = np.zeros((n_rings * per_ring, ambient_dim))
    phi = rng.uniform(0.0, 2 * math.pi, size=(n_rings, per_ring))
    for r in range(n_rings):
        rows = slice(r * per_ring, (r + 1) * per_ring)
        pts[rows, r] = ring_radius * np.cos(phi[r])
        pts[rows, shared] = r * spacing + ring_radius * np.sin(phi[r])
    if noise_sigma > 0:
        pts += noise_sigma * rng.standard_normal(pts.shape)
    return Dataset(pts, np.repeat(np.arange(n_rings), per_ring))


def gen_donuts(n_tori: int = 3, per_torus: int = 1250, major_radii=(2.0, 4.0, 6.0),
               minor_radii=(0.5, 0.5, 0.5), seed: int = 0) -> Dataset:
    """Co-axial tori nested in the xy-plane, uniform in surface area.

    The tube angle is drawn by rejection against the area element
    ``R + r cos(v)`` so points are not over-dense on the inner rim.
    """
    R = np.asarray(major_radii, dtype=np.float64)
    rr = np.asarray(minor_radii, dtype=np.float64)
    if len(R) != n_tori or len(rr) != n_tori:
        raise ValidationError("need one major and one minor radius per torus")
    if np.any(rr <= 0) or np.any(rr >= R):
        raise ValidationError("each torus needs 0 < minor radius < major radius")
    if np.any(R[:-1] + rr[:-1] >= R[1:] - rr[1:]):
        raise ValidationError("tori intersect: need R_i + r_i < R_(i+1) - r_(i+1)")
    rng = make_rng(seed)
    parts = []
    for big, small in zip(R, rr):
        u = rng.uniform(0.0, 2 * math.pi, size=per_torus)
        v = np.empty(per_torus)
        filled = 0
        while filled < per_torus:
            need = per_torus - filled
            cand = rng.uniform(0.0, 2 * math.pi, size=2 * need + 16)
            keep = cand[rng.uniform(0.0, big + small, size=cand.size) < big + small * np.cos(cand)]
            take = keep[:need]
            v[filled:filled + len(take)] = take
            filled += len(take)
        ring = big + small * np.cos(v)
        parts.append(np.column_stack([ring * np.cos(u), ring * np.sin(u), small * np.sin(v)]))
    return Dataset(np.vstack(parts), np.repeat(np.arange(n_tori), per_torus))


# -- matryoshka ---------------------------------------------------------------

@dataclass(frozen=True)
class Dumbbell:
    """Two balls at ``(+-L, 0, 0)`` joined by a cylindrical neck.

    Ball radius is ``rho * scale`` and neck radius half of that; the centres do
    not move with ``scale``. Shells of increasing scale are therefore
    concentric around each ball and around the neck, so they nest strictly
    (a uniform scaling about the origin would not, since the neck makes the
    solid non-star-shaped).
    """

    rho: float = 1.0
    L: float = 2.5
    scale: float = 1.0

    def __post_init__(self):
        if not (self.rho > 0 and self.scale > 0):
            raise ValidationError("rho and scale must be positive")
        if self.x_join <= 0:
            raise ValidationError(
                f"balls of radius {self.radius} at +-{self.L} merge; need L > {self.radius * math.sqrt(3) / 2:.4g}")

    @property
    def radius(self) -> float:
        return self.rho * self.scale

    @property
    def neck(self) -> float:
        return self.radius / 2

    @property
    def x_join(self) -> float:
        """|x| where the neck cylinder meets the ball surface."""
        return self.L - math.sqrt(self.radius ** 2 - self.neck ** 2)

    def areas(self) -> tuple[float, float]:
        """(area of both ball parts, area of the neck)."""
        cap_h = self.x_join - (self.L - self.radius)
        sphere = 2 * (4 * math.pi * self.radius ** 2 - 2 * math.pi * self.radius * cap_h)
        neck = 2 * math.pi * self.neck * 2 * self.x_join
        return sphere, neck

    @property
    def area(self) -> float:
        return sum(self.areas())

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Strict interior test for the solid bounded by this surface."""
        p = np.asarray(pts, dtype=np.float64)
        radial = np.hypot(p[:, 1], p[:, 2])
        in_ball = np.hypot(np.abs(p[:, 0]) - self.L, radial) < self.radius
        in_neck = (np.abs(p[:, 0]) < self.L) & (radial < self.neck)
        return in_ball | in_neck

    def sample(self, rng, count: int) -> np.ndarray:
        sphere_area, neck_area = self.areas()
        n_neck = int(round(count * neck_area / (sphere_area + neck_area)))
        n_sph = count - n_neck
        xj = self.x_join
        # ball parts: uniform on a sphere, drop the cap hidden inside the neck
        sph = np.empty((0, 3))
        while len(sph) < n_sph:
            need = n_sph - len(sph)
            cand = _sphere_surface(rng, 2 * need + 16, 3, self.radius)
            side = np.where(rng.uniform(size=len(cand)) < 0.5, -1.0, 1.0)
            cand[:, 0] = side * (self.L + cand[:, 0])
            cand = cand[np.abs(cand[:, 0]) >= xj]
            sph = np.vstack([sph, cand[:need]])
        x = rng.uniform(-xj, xj, size=n_neck)
        ang = rng.uniform(0.0, 2 * math.pi, size=n_neck)
        neck = np.column_stack([x, self.neck * np.cos(ang), self.neck * np.sin(ang)])
        return np.vstack([sph, neck])


@dataclass(frozen=True)
class MatryoshkaConfig:
    n_total: int = 6400
    rho: float = 1.0
    L: float = 2.5
    scales: tuple[float, ...] = (1.0, 1.5, 2.0)
    # two concentric hollow spheres at each end of the innermost dumbbell
    inner_radii: tuple[float, ...] = field(default=(1 / 3, 2 / 3))


def _split_counts(total: int, weights) -> np.ndarray:
    """Largest-remainder split of ``total`` proportional to ``weights``."""
    w = np.asarray(weights, dtype=np.float64)
    raw = total * w / w.sum()
    base = np.floor(raw).astype(np.int64)
    rest = total - int(base.sum())
    base[np.argsort(-(raw - base), kind="stable")[:rest]] += 1
    return base


def matryoshka_shapes(cfg: MatryoshkaConfig = MatryoshkaConfig()):
    """Class shapes in label order: dumbbells (inner to outer) then inner spheres.

    Each sphere is ``(center, radius)`` with radius given in units of ``rho``.
    """
    bells = [Dumbbell(cfg.rho, cfg.L, s) for s in cfg.scales]
    spheres = [((side * cfg.L, 0.0, 0.0), frac * cfg.rho)
               for side in (-1.0, 1.0) for frac in cfg.inner_radii]
    return bells, spheres


def gen_matryoshka(seed: int = 0, cfg: MatryoshkaConfig | None = None) -> Dataset:
    """Three nested dumbbell surfaces with concentric spheres inside the innermost one.

    Default layout has 7 classes: dumbbells with ball radii 1, 1.5 and 2, plus
    spheres of radius rho/3 and 2*rho/3 centred at each end. Point counts are
    proportional to surface area.
    """
    cfg = cfg or MatryoshkaConfig()
    if cfg.n_total < 1:
        raise ValidationError("n_total must be positive")
    bells, spheres = matryoshka_shapes(cfg)
    areas = [b.area for b in bells] + [4 * math.pi * r ** 2 for _, r in spheres]
    counts = _split_counts(cfg.n_total, areas)
    rng = make_rng(seed)
    parts = [b.sample(rng, int(c)) for b, c in zip(bells, counts)]
    parts += [_sphere_surface(rng, int(c), 3, r, np.asarray(ctr))
              for (ctr, r), c in zip(spheres, counts[len(bells):])]
    labels = np.repeat(np.arange(len(parts)), counts)
    return Dataset(np.vstack(parts), labels)


def generate(name: str, seed: int = 0, size_factor: float = 1.0) -> Dataset:
    """Build a named dataset; ``size_factor`` scales the per-class point counts."""
    def scaled(k):
        return max(1, int(round(k * size_factor)))

    if name == "concentric3":
        return gen_concentric(3, per_sphere=scaled(552), seed=seed)
    if name == "concentric4":
        return gen_concentric(4, per_sphere=scaled(648), seed=seed)
    if name == "donuts":
        return gen_donuts(per_torus=scaled(1250), seed=seed)
    if name == "matryoshka":
        return gen_matryoshka(seed, MatryoshkaConfig(n_total=scaled(6400)))
    if name == "rings":
        return gen_rings(per_ring=max(3, scaled(200)), seed=seed)
    raise ValidationError(f"unknown dataset {name!r}; choose from {', '.join(GENERATORS)}")
