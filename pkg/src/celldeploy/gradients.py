"""Analytic gradients of both functionals, plus a finite-difference oracle.

Every SINR partial has the same shape: the parameter of sector t enters the
serving cell's SINR either directly (t is the serving sector) or through the
interference sum, giving

    d SINR_dB(serving) / d param_t  =  base_t              if t == serving
                                    = -base_t * RSS_lin(t) * SINR_lin / RSS_lin(serving)
                                                            otherwise,

where base_t = d RSS_dBm(t) / d param_t.  Tilt, power, bearing and position
all share this; the per-parameter pieces only differ in base_t.  Site-level
parameters (position, reference bearing) sum the three co-located sectors'
columns.

The partition is frozen during differentiation: on the discrete grid the
cell-boundary terms of the continuous theory are absent, so the frozen-
partition derivative is the exact derivative of what the optimizer evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    DEG_PER_RAD,
    LinkBudget,
    Location3D,
    Network,
    UserClass,
    compute_geometry,
    link_budget,
    serving_fields,
)
from .density import SampleGrid, cell_masses
from .errors import NonFiniteGradient
from .kpi import KpiConfig, eval_P1_gamma1, eval_P_gamma2, sigmoid, clamped_sinr

LOG10_E = math.log10(math.e)
# d log2(1+SINR_lin) / d SINR_dB  =  C_RATE * SINR/(1+SINR)
C_RATE = math.log2(math.e) * math.log(10.0) * 0.1
# extra 1/(ln 2 * log2(1+SINR)) factor for the log-of-log-rate chain
C_LOGLOG = math.log2(math.e) * C_RATE


@dataclass
class GradientVector:
    d_tilt: np.ndarray  # (N,) per degree
    d_power: np.ndarray  # (N,) per dBm
    d_site_pos: np.ndarray  # (M,2) per meter
    d_site_bearing: np.ndarray  # (M,) per degree

    def max_abs(self) -> float:
        return max(
            float(np.max(np.abs(v))) if v.size else 0.0
            for v in (self.d_tilt, self.d_power, self.d_site_pos, self.d_site_bearing)
        )


# ---------------------------------------------------------------------------
# Per-sample KPI chain weights (the bracketed factors in front of dSINR_dB)
# ---------------------------------------------------------------------------

def kpi1_gradient_weight(sinr_lin_raw, cfg: KpiConfig):
    """d kpi1 / d SINR_dB at each sample; zero where the SINR floor clamps."""
    s_lin, s_db = clamped_sinr(sinr_lin_raw, cfg)
    rate = np.log2(1.0 + s_lin)
    loglog = cfg.beta * C_LOGLOG / rate * s_lin / (1.0 + s_lin)
    sig = sigmoid(cfg.kappa * (s_db - cfg.t_db))
    cov = (1.0 - cfg.beta) * cfg.kappa * sig * (1.0 - sig)
    w = loglog + cov
    return np.where(np.asarray(sinr_lin_raw) < cfg.sinr_floor_lin, 0.0, w)


def kpi2_gradient_weight(sinr_lin, assignment, masses, cfg: KpiConfig):
    """d gamma2 / d SINR_dB at each sample, with frozen cell masses."""
    denom = cfg.offset + masses
    return C_RATE * sinr_lin / (1.0 + sinr_lin) / denom[assignment]


# ---------------------------------------------------------------------------
# Batch kernels
# ---------------------------------------------------------------------------

def _chain_matrix(lb: LinkBudget, assignment, factor):
    """(S,N) of factor_s * [own: 1 | cross: -RSS_lin(t) * SINR/RSS_lin(serv)]."""
    n = lb.rss_lin.shape[1]
    rss_serv, sinr, _ = serving_fields(lb, assignment)
    own = assignment[:, None] == np.arange(n)[None, :]
    cross = -(sinr / rss_serv)[:, None] * lb.rss_lin
    return factor[:, None] * np.where(own, 1.0, cross)


def rss_position_gradient(lb: LinkBudget, grid: SampleGrid, network: Network) -> np.ndarray:
    """d RSS_dBm(t) / d p_t for every (sample, sector), shape (S,N,2), dB/m.

    The two angle terms convert the radian-domain geometric derivatives to
    degrees so they compose with the degree-squared beamwidth coefficients.
    """
    geom = lb.geom
    dxy = grid.xyz[:, None, :2] - network.pos[None, :, :]  # q - p, (S,N,2)
    pq = -dxy
    hbq = network.height[None, :] - grid.xyz[:, 2:3]  # h_B - h_q, (S,N)
    toff = geom.elev_deg - network.tilt[None, :]
    pat = network.pattern
    d2d, d3d = geom.d2d_m, geom.d3d_m

    elev_coef = (
        -24.0 / pat.theta_3db_deg**2 * toff * DEG_PER_RAD * hbq / (d2d**3 + d2d * hbq**2)
    )
    az_coef = -24.0 / pat.phi_3db_deg**2 * lb.azoff_deg * DEG_PER_RAD / d2d**2
    az_dir = np.stack([dxy[:, :, 1], -dxy[:, :, 0]], axis=-1)  # (dy, -dx)
    _, b = network.consts.coeffs(grid.is_uav)
    pl_coef = -b[:, None] * LOG10_E / d3d**2

    return (
        elev_coef[:, :, None] * pq + az_coef[:, :, None] * az_dir + pl_coef[:, :, None] * pq
    )


def _site_sums(per_sector: np.ndarray, network: Network) -> np.ndarray:
    """Sum per-sector entries into per-site entries along axis 0."""
    out = np.zeros((network.n_sites,) + per_sector.shape[1:])
    np.add.at(out, network.site_of, per_sector)
    return out


def _gradient(
    grid: SampleGrid,
    partition,
    network: Network,
    cfg: KpiConfig,
    functional: str,
    include_sites: bool,
    lb: LinkBudget | None,
) -> GradientVector:
    if lb is None:
        lb = link_budget(grid, network)
    assignment = partition.assignment
    _, sinr, _ = serving_fields(lb, assignment)
    if functional == "gamma1":
        w = kpi1_gradient_weight(sinr, cfg)
    elif functional == "gamma2":
        masses = cell_masses(grid, assignment, network.n)
        w = kpi2_gradient_weight(sinr, assignment, masses, cfg)
    else:
        raise ValueError(f"unknown functional {functional!r}")
    factor = grid.weight * w
    chain = _chain_matrix(lb, assignment, factor)

    toff = lb.geom.elev_deg - network.tilt[None, :]
    base_tilt = 24.0 / network.pattern.theta_3db_deg**2 * toff
    d_tilt = np.einsum("sn,sn->n", chain, base_tilt)
    d_power = chain.sum(axis=0)
    d_tilt[~network.tilt_opt] = 0.0
    d_power[~network.power_opt] = 0.0

    m = network.n_sites
    d_site_pos = np.zeros((m, 2))
    d_site_bearing = np.zeros(m)
    if include_sites:
        base_pos = rss_position_gradient(lb, grid, network)
        d_pos_sector = np.einsum("sn,snk->nk", chain, base_pos)
        base_bearing = 24.0 / network.pattern.phi_3db_deg**2 * lb.azoff_deg
        d_bear_sector = np.einsum("sn,sn->n", chain, base_bearing)
        d_site_pos = _site_sums(d_pos_sector, network)
        d_site_bearing = _site_sums(d_bear_sector, network)
        d_site_pos[~network.site_deployable] = 0.0
        d_site_bearing[~network.site_deployable] = 0.0
    return GradientVector(d_tilt, d_power, d_site_pos, d_site_bearing)


def grad_P1_gamma1(grid, partition, network, cfg, lb=None) -> GradientVector:
    """Coverage-capacity gradient w.r.t. tilts and powers (fixed sites)."""
    return _gradient(grid, partition, network, cfg, "gamma1", False, lb)


def grad_P2_gamma1(grid, partition, network, cfg, lb=None) -> GradientVector:
    """Coverage-capacity gradient, extended with site locations and bearings."""
    return _gradient(grid, partition, network, cfg, "gamma1", True, lb)


def grad_P_gamma2(grid, partition, network, cfg, which_params=("tilt", "power"), lb=None):
    """Capacity-per-region gradient; `which_params` may add site families."""
    include_sites = "site_pos" in which_params or "site_bearing" in which_params
    return _gradient(grid, partition, network, cfg, "gamma2", include_sites, lb)


def check_finite(g: GradientVector) -> GradientVector:
    for name, v in (
        ("tilt", g.d_tilt),
        ("power", g.d_power),
        ("site_pos", g.d_site_pos),
        ("site_bearing", g.d_site_bearing),
    ):
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise NonFiniteGradient(f"non-finite {name} gradient at coordinate {tuple(bad)}")
    return g


# ---------------------------------------------------------------------------
# Scalar single-link partials (unit-test surface; same formulas, one sample)
# ---------------------------------------------------------------------------

def _single_sample_lb(network: Network, q: Location3D):
    grid = SampleGrid(
        xyz=np.array([[q.x_m, q.y_m, q.z_m]]),
        weight=np.array([1.0]),
        cond_weight=np.array([1.0]),
        is_uav=np.array([q.user_class is UserClass.UAV]),
    )
    return grid, link_budget(grid, network)


def _unified_partial(lb: LinkBudget, m: int, n: int, base_n: float) -> float:
    """dSINR_dB(m)/dparam_n from the shared own/cross structure."""
    rss_m = lb.rss_lin[0, m]
    sinr_m = rss_m / (lb.total_lin[0] - rss_m)
    if m == n:
        return float(base_n)
    return float(-base_n * lb.rss_lin[0, n] * sinr_m / rss_m)


def dsinr_dtilt(network: Network, m: int, n: int, q: Location3D) -> float:
    """d SINR_dB of cell m / d tilt of sector n, dB per degree."""
    _, lb = _single_sample_lb(network, q)
    toff = lb.geom.elev_deg[0, n] - network.tilt[n]
    base = 24.0 / network.pattern.theta_3db_deg**2 * toff
    return _unified_partial(lb, m, n, base)


def dsinr_dpower(network: Network, m: int, n: int, q: Location3D) -> float:
    """d SINR_dB of cell m / d transmit power of sector n; exactly 1 when m == n."""
    if m == n:
        return 1.0
    _, lb = _single_sample_lb(network, q)
    return _unified_partial(lb, m, n, 1.0)


def grad_rss_pos(network: Network, n: int, q: Location3D) -> np.ndarray:
    """d RSS_dBm(n) / d p_n, the single-link position gradient (2,), dB/m."""
    grid, lb = _single_sample_lb(network, q)
    return rss_position_gradient(lb, grid, network)[0, n]


def grad_sinr_sitepos(network: Network, m_site: int, n: int, q: Location3D) -> np.ndarray:
    """d SINR_dB of cell n / d position of site m_site, (2,), dB/m."""
    grid, lb = _single_sample_lb(network, q)
    g = rss_position_gradient(lb, grid, network)
    out = np.zeros(2)
    for t in network.site_members[m_site]:
        out += _unified_partial(lb, n, int(t), 1.0) * g[0, t]
    return out


def dsinr_dbearing(network: Network, m_site: int, n: int, q: Location3D) -> float:
    """d SINR_dB of cell n / d reference bearing of site m_site, dB per degree."""
    _, lb = _single_sample_lb(network, q)
    coef = 24.0 / network.pattern.phi_3db_deg**2
    out = 0.0
    for t in network.site_members[m_site]:
        base = coef * lb.azoff_deg[0, t]
        out += _unified_partial(lb, n, int(t), base)
    return out


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------

def finite_difference_gradient(f, x0, h: float) -> np.ndarray:
    """Central differences (f(x+h)-f(x-h))/2h per coordinate."""
    x0 = np.asarray(x0, dtype=float)
    flat = x0.ravel().copy()
    g = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(flat.reshape(x0.shape))
        flat[i] = orig - h
        fm = f(flat.reshape(x0.shape))
        flat[i] = orig
        g[i] = (fp - fm) / (2.0 * h)
    return g.reshape(x0.shape)


def _objective_total(grid, partition, network, cfg, functional, geom=None):
    lb = link_budget(grid, network, geom)
    if functional == "gamma1":
        return eval_P1_gamma1(grid, partition, network, cfg, lb).total
    return eval_P_gamma2(grid, partition, network, cfg, lb).total


def relative_errors(analytic, fd, zero_tol: float = 1e-10) -> np.ndarray:
    """|a - fd| / max(|a|, |fd|); coordinates where both are ~0 count as exact."""
    a = np.asarray(analytic, float).ravel()
    f = np.asarray(fd, float).ravel()
    scale = np.maximum(np.abs(a), np.abs(f))
    err = np.abs(a - f)
    return np.where(scale > zero_tol, err / np.maximum(scale, zero_tol), 0.0)


def fd_check(
    grid: SampleGrid,
    partition,
    network: Network,
    cfg: KpiConfig,
    functional: str = "gamma1",
    h_tilt: float = 1e-4,
    h_power: float = 1e-4,
    h_pos: float = 1e-3,
    h_bearing: float = 1e-4,
    include_sites: bool = True,
) -> dict:
    """Max relative error of each gradient family against frozen-partition FD.

    Only optimizable coordinates are compared (fixed ones are pinned to zero
    by contract and would legitimately disagree with FD).
    """
    net = network.copy()
    analytic = _gradient(grid, partition, net, cfg, functional, include_sites, None)
    check_finite(analytic)
    geom = compute_geometry(grid, net)
    out = {}

    def obj_params(setter, reuse_geom):
        def f(x):
            setter(x)
            return _objective_total(
                grid, partition, net, cfg, functional, geom if reuse_geom else None
            )

        return f

    # raw attribute writes: FD probes the objective itself, so feasibility
    # projections (power cap, tilt clamp) must not distort the perturbations
    def set_tilt_raw(x):
        net.tilt = np.asarray(x, dtype=float).copy()

    def set_power_raw(x):
        net.power = np.asarray(x, dtype=float).copy()

    if np.any(net.tilt_opt):
        t0 = net.tilt.copy()
        fd = finite_difference_gradient(obj_params(set_tilt_raw, True), t0, h_tilt)
        set_tilt_raw(t0)
        out["tilt"] = float(np.max(relative_errors(analytic.d_tilt[net.tilt_opt], fd[net.tilt_opt])))
    if np.any(net.power_opt):
        p0 = net.power.copy()
        fd = finite_difference_gradient(obj_params(set_power_raw, True), p0, h_power)
        set_power_raw(p0)
        out["power"] = float(
            np.max(relative_errors(analytic.d_power[net.power_opt], fd[net.power_opt]))
        )
    if include_sites and np.any(net.site_deployable):
        mask = net.site_deployable
        s0 = net.site_pos.copy()
        fd = finite_difference_gradient(
            obj_params(lambda x: net.set_site_positions(x.reshape(-1, 2)), False),
            s0,
            h_pos,
        )
        net.set_site_positions(s0)
        out["site_pos"] = float(
            np.max(relative_errors(analytic.d_site_pos[mask], fd[mask]))
        )
        b0 = net.site_ref_bearing.copy()
        fd = finite_difference_gradient(obj_params(net.set_site_bearings, True), b0, h_bearing)
        net.set_site_bearings(b0)
        out["site_bearing"] = float(
            np.max(relative_errors(analytic.d_site_bearing[mask], fd[mask]))
        )
    return out
