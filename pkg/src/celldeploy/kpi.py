"""The two performance functionals evaluated over a partitioned sample grid.

KPI #1 trades sum-log-rate against a sigmoid surrogate of SINR coverage;
KPI #2 is per-cell mean spectral efficiency discounted by cell load.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkBudget, Network, lin_to_db, link_budget, serving_fields
from .density import SampleGrid, cell_masses
from .errors import ConfigError


@dataclass
class KpiConfig:
    beta: float = 0.5  # trade-off weight; 1 = pure sum-log-rate
    t_db: float = -5.0  # coverage SINR threshold
    kappa: float = 2.0  # sigmoid steepness
    offset: float = 0.002  # per-cell load offset o_n (scalar, broadcast)
    sinr_floor_lin: float = 1e-6  # keeps log2(log2(1+x)) finite

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"kpi.beta: {self.beta} outside [0, 1]")
        if self.kappa <= 0:
            raise ConfigError("kpi.kappa: must be > 0")
        if self.offset < 0:
            raise ConfigError("kpi.offset: must be >= 0")
        if self.sinr_floor_lin <= 0:
            raise ConfigError("kpi.sinr_floor_lin: must be > 0")


@dataclass
class KpiReport:
    total: float
    per_cell: np.ndarray  # (N,)
    per_class: dict  # {"gue": float, "uav": float}
    coverage_fraction: float  # exact indicator version, for reporting


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def clamped_sinr(sinr_lin, cfg: KpiConfig):
    """(sinr_lin, sinr_db) with the numerical floor applied to both."""
    s = np.maximum(np.asarray(sinr_lin, dtype=float), cfg.sinr_floor_lin)
    return s, lin_to_db(s)


def kpi1_pointwise(sinr_db, sinr_lin, cfg: KpiConfig):
    """beta * log2(log2(1+SINR)) + (1-beta) * sigmoid(kappa * (SINR_dB - T))."""
    s_lin, s_db = clamped_sinr(sinr_lin, cfg)
    rate = np.log2(1.0 + s_lin)
    return cfg.beta * np.log2(rate) + (1.0 - cfg.beta) * sigmoid(cfg.kappa * (s_db - cfg.t_db))


def _report(grid: SampleGrid, assignment, contrib, covered, n_cells) -> KpiReport:
    per_cell = np.bincount(assignment, weights=contrib, minlength=n_cells)
    gue = float(contrib[~grid.is_uav].sum())
    uav = float(contrib[grid.is_uav].sum())
    return KpiReport(
        total=float(contrib.sum()),
        per_cell=per_cell,
        per_class={"gue": gue, "uav": uav},
        coverage_fraction=float((grid.weight * covered).sum()),
    )


def eval_P1_gamma1(
    grid: SampleGrid,
    partition,
    network: Network,
    cfg: KpiConfig,
    lb: LinkBudget | None = None,
) -> KpiReport:
    """Coverage-capacity functional: weighted sum of kpi1 at each sample's
    assigned sector."""
    if lb is None:
        lb = link_budget(grid, network)
    assignment = partition.assignment
    _, sinr, _ = serving_fields(lb, assignment)
    s_lin, s_db = clamped_sinr(sinr, cfg)
    contrib = grid.weight * kpi1_pointwise(s_db, s_lin, cfg)
    covered = s_db >= cfg.t_db
    return _report(grid, assignment, contrib, covered, network.n)


def eval_P_gamma2(
    grid: SampleGrid,
    partition,
    network: Network,
    cfg: KpiConfig,
    lb: LinkBudget | None = None,
) -> KpiReport:
    """Capacity-per-region functional: per-cell mean rate over (offset + cell mass)."""
    if lb is None:
        lb = link_budget(grid, network)
    assignment = partition.assignment
    _, sinr, s_db = serving_fields(lb, assignment)
    masses = cell_masses(grid, assignment, network.n)
    denom = cfg.offset + masses
    if np.any(denom <= 0):
        raise ConfigError("kpi.offset: must be > 0 when a cell can be empty")
    contrib = grid.weight * np.log2(1.0 + sinr) / denom[assignment]
    covered = s_db >= cfg.t_db
    return _report(grid, assignment, contrib, covered, network.n)


def coverage_fraction(
    grid: SampleGrid,
    partition,
    network: Network,
    t_db: float,
    lb: LinkBudget | None = None,
) -> float:
    """Weighted fraction of samples whose serving SINR meets the threshold
    (exact indicator; reporting only)."""
    if lb is None:
        lb = link_budget(grid, network)
    _, _, s_db = serving_fields(lb, partition.assignment)
    return float((grid.weight * (s_db >= t_db)).sum())
