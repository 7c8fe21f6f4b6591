"""User density: ground/aerial mixture and its midpoint-rule discretization.

The mixture  r * lambda_G + (1 - r) * lambda_U  is turned into a weighted
sample grid; every integral downstream becomes a weighted sum over it.
Ground samples carry mass r, corridor samples mass 1 - r.  Each sample also
keeps its class-conditional weight (summing to 1 within the class) so
per-class statistics stay well defined even when r is 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# samples across a corridor's altitude band (width/length come from the
# horizontal resolution)
CORRIDOR_Z_SAMPLES = 2


@dataclass
class GaussComponent:
    weight: float
    mean: tuple[float, float]
    cov: list  # 2x2, row-major

    def cov_array(self) -> np.ndarray:
        c = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if not np.allclose(c, c.T):
            raise ConfigError("gmm: covariance must be symmetric")
        try:
            np.linalg.cholesky(c)
        except np.linalg.LinAlgError:
            raise ConfigError("gmm: covariance must be positive definite") from None
        return c


@dataclass
class DensitySpec:
    """Mixture of a ground-user density over a box and uniform corridor boxes."""

    r_mix: float = 0.5
    gue_region: tuple[float, float, float, float] = (-750.0, 750.0, -750.0, 750.0)
    gue_height_m: float = 1.5
    gue_kind: str = "uniform"  # "uniform" | "gmm"
    gmm: list[GaussComponent] = field(default_factory=list)
    # each corridor box: (xmin, xmax, ymin, ymax, zmin, zmax) in meters
    corridors: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.r_mix <= 1.0:
            raise ConfigError(f"density.r_mix: {self.r_mix} outside [0, 1]")
        x0, x1, y0, y1 = self.gue_region
        if x1 <= x0 or y1 <= y0:
            raise ConfigError("density.gue_region: box must have positive area")
        if self.gue_kind not in ("uniform", "gmm"):
            raise ConfigError(f"density.gue_kind: unknown kind {self.gue_kind!r}")
        if self.gue_kind == "gmm":
            if not self.gmm:
                raise ConfigError("density.gmm: components required for gue_kind=gmm")
            w = sum(c.weight for c in self.gmm)
            if abs(w - 1.0) > 1e-9 or any(c.weight <= 0 for c in self.gmm):
                raise ConfigError(f"density.gmm: weights must be positive and sum to 1 (got {w})")
            for c in self.gmm:
                c.cov_array()
        for k, box in enumerate(self.corridors):
            x0, x1, y0, y1, z0, z1 = box
            if x1 <= x0 or y1 <= y0 or z1 <= z0:
                raise ConfigError(f"density.corridors[{k}]: box must have positive volume")


def gmm_pdf(points_xy, components: list[GaussComponent]) -> np.ndarray:
    """Mixture density (1/m^2) at 2D points, shape (K,)."""
    pts = np.atleast_2d(np.asarray(points_xy, dtype=float))
    out = np.zeros(pts.shape[0])
    for c in components:
        cov = c.cov_array()
        inv = np.linalg.inv(cov)
        det = np.linalg.det(cov)
        d = pts - np.asarray(c.mean, dtype=float)
        quad = np.einsum("ki,ij,kj->k", d, inv, d)
        out += c.weight * np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))
    return out


@dataclass
class SampleGrid:
    """Weighted discrete stand-in for the user density.

    weight sums to 1 overall (r over ground samples, 1-r over corridors);
    cond_weight sums to 1 within each class.
    """

    xyz: np.ndarray  # (S,3) meters
    weight: np.ndarray  # (S,) objective mass
    cond_weight: np.ndarray  # (S,) class-conditional mass
    is_uav: np.ndarray  # (S,) bool
    res_ground_m: float = 0.0
    res_corridor_m: float = 0.0

    @property
    def n_samples(self) -> int:
        return self.xyz.shape[0]


def _midpoints(lo: float, hi: float, res: float) -> np.ndarray:
    n = max(1, round((hi - lo) / res))
    step = (hi - lo) / n
    return lo + step * (np.arange(n) + 0.5)


def build_grid(
    spec: DensitySpec, res_ground_m: float = 25.0, res_corridor_m: float = 20.0
) -> SampleGrid:
    """Midpoint-rule discretization of the mixture density.

    Ground weights follow lambda_G at the cell centers (renormalized to r);
    corridor weights are proportional to cell volume (renormalized to 1-r),
    i.e. corridor mass splits volume-proportionally.
    """
    if res_ground_m <= 0 or res_corridor_m <= 0:
        raise ConfigError("grid: resolutions must be > 0")

    x0, x1, y0, y1 = spec.gue_region
    gx = _midpoints(x0, x1, res_ground_m)
    gy = _midpoints(y0, y1, res_ground_m)
    gxx, gyy = np.meshgrid(gx, gy, indexing="ij")
    g_xy = np.column_stack([gxx.ravel(), gyy.ravel()])
    if spec.gue_kind == "gmm":
        g_w = gmm_pdf(g_xy, spec.gmm)
        if g_w.sum() <= 0:
            raise ConfigError("density.gmm: zero mass over the ground region")
    else:
        g_w = np.ones(g_xy.shape[0])
    g_w = g_w / g_w.sum()
    g_xyz = np.column_stack([g_xy, np.full(g_xy.shape[0], spec.gue_height_m)])

    c_xyz = np.zeros((0, 3))
    c_vol = np.zeros(0)
    for box in spec.corridors:
        bx0, bx1, by0, by1, bz0, bz1 = box
        cx = _midpoints(bx0, bx1, res_corridor_m)
        cy = _midpoints(by0, by1, res_corridor_m)
        cz = bz0 + (bz1 - bz0) * (np.arange(CORRIDOR_Z_SAMPLES) + 0.5) / CORRIDOR_Z_SAMPLES
        xx, yy, zz = np.meshgrid(cx, cy, cz, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
        cell_vol = ((bx1 - bx0) / len(cx)) * ((by1 - by0) / len(cy)) * ((bz1 - bz0) / len(cz))
        c_xyz = np.vstack([c_xyz, pts])
        c_vol = np.concatenate([c_vol, np.full(pts.shape[0], cell_vol)])
    if spec.corridors:
        c_w = c_vol / c_vol.sum()
    else:
        c_w = c_vol
        if spec.r_mix < 1.0:
            raise ConfigError("density.corridors: required when r_mix < 1")

    xyz = np.vstack([g_xyz, c_xyz])
    cond = np.concatenate([g_w, c_w])
    weight = np.concatenate([spec.r_mix * g_w, (1.0 - spec.r_mix) * c_w])
    is_uav = np.concatenate(
        [np.zeros(g_xyz.shape[0], dtype=bool), np.ones(c_xyz.shape[0], dtype=bool)]
    )
    return SampleGrid(
        xyz=xyz,
        weight=weight,
        cond_weight=cond,
        is_uav=is_uav,
        res_ground_m=res_ground_m,
        res_corridor_m=res_corridor_m,
    )


def cell_masses(grid: SampleGrid, assignment: np.ndarray, n_cells: int) -> np.ndarray:
    """Probability mass captured by each cell, (N,)."""
    return np.bincount(assignment, weights=grid.weight, minlength=n_cells)


def cell_mass(grid: SampleGrid, partition, n: int) -> float:
    """Mass of one cell under a partition."""
    return float(grid.weight[partition.assignment == n].sum())
