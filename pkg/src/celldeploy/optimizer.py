"""Alternating optimization: partition updates plus monotone-safe gradient
ascent on tilts, powers, site locations and site bearings.

Plain gradient ascent needs a learning rate nobody specifies, so every step
is wrapped in a backtracking line search: a step is only taken if it does
not decrease the objective, which makes the per-iteration monotonicity
unconditional.  One outer iteration applies the families in listing order
(partition, tilts, powers, then positions and bearings when deploying).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Network, compute_geometry, link_budget
from .density import SampleGrid, build_grid
from .errors import NonFiniteGradient
from .gradients import check_finite, grad_P1_gamma1, grad_P2_gamma1, grad_P_gamma2
from .kpi import eval_P1_gamma1, eval_P_gamma2
from .partition import Partition, conditional_partition_update_kpi2, max_rss_partition


@dataclass
class OptimizerConfig:
    """Step sizes are trust radii: each family update moves its most-pulled
    coordinate by at most the current step (the engine normalizes the ascent
    direction), and backtracking adapts the step both ways."""

    max_outer_iters: int = 300
    step_tilt_deg: float = 5.0
    step_power_db: float = 5.0
    step_pos_m: float = 250.0
    step_bearing_deg: float = 45.0
    backtrack_factor: float = 0.5
    backtrack_max: int = 30
    conv_tol: float = 1e-6  # min relative improvement per outer iteration
    inner_steps: int = 4  # max ascent steps per family per outer iteration
    seed: int = 0
    snapshot_every: int = 0  # 0 = no parameter snapshots

    def __post_init__(self):
        for name in ("step_tilt_deg", "step_power_db", "step_pos_m", "step_bearing_deg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"optimizer.{name}: must be > 0")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("optimizer.backtrack_factor: must be in (0, 1)")
        if self.conv_tol <= 0:
            raise ValueError("optimizer.conv_tol: must be > 0")


@dataclass
class RunTrace:
    """Objective history and final state of one optimization run."""

    objective: list = field(default_factory=list)  # baseline + one value per iteration
    accepted_steps: list = field(default_factory=list)  # per-iteration {family: step}
    snapshots: list = field(default_factory=list)  # (iteration, tilt, power, pos, bearing)
    converged: bool = False
    n_iters: int = 0
    final_network: Network | None = None
    final_partition: Partition | None = None

    @property
    def final_objective(self) -> float:
        return self.objective[-1]


def project_powers(powers_dbm, p_max):
    """Componentwise cap at the maximum transmit power."""
    return np.minimum(np.asarray(powers_dbm, dtype=float), p_max)


def ascent_step(
    objective,
    params,
    grad,
    step: float,
    *,
    project=None,
    backtrack_factor: float = 0.5,
    backtrack_max: int = 30,
    f0: float | None = None,
):
    """One gradient step with backtracking; never decreases the objective.

    Returns (new_params, accepted_step, new_objective).  accepted_step is 0
    when the gradient is identically zero or no tried step improved.
    """
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        bad = np.argwhere(~np.isfinite(grad))[0]
        raise NonFiniteGradient(f"non-finite gradient entry at {tuple(bad)}")
    if f0 is None:
        f0 = objective(params)
    if not np.any(grad):
        return params, 0.0, f0
    s = step
    for _ in range(backtrack_max + 1):
        cand = params + s * grad
        if project is not None:
            cand = project(cand)
        f1 = objective(cand)
        if f1 >= f0:
            return cand, s, f1
        s *= backtrack_factor
    return params, 0.0, f0


def _random_init(network: Network, rng: np.random.Generator, deploy: bool, gue_region):
    """Random start: downtilt-biased tilts, full power, sites scattered over
    the ground region when deploying.  Draw order is fixed so a deploy run
    with zero deployable sites consumes exactly the tune-only draws."""
    k = int(network.tilt_opt.sum())
    tilts = network.tilt.copy()
    tilts[network.tilt_opt] = rng.uniform(-15.0, 5.0, size=k)
    network.set_tilts(tilts)
    powers = network.power.copy()
    powers[network.power_opt] = network.power_max[network.power_opt]
    network.set_powers(powers)
    if deploy and np.any(network.site_deployable):
        x0, x1, y0, y1 = gue_region
        idx = np.flatnonzero(network.site_deployable)
        pos = network.site_pos.copy()
        pos[idx, 0] = rng.uniform(x0, x1, size=idx.size)
        pos[idx, 1] = rng.uniform(y0, y1, size=idx.size)
        network.set_site_positions(pos)
        bearings = network.site_ref_bearing.copy()
        bearings[idx] = rng.uniform(-180.0, 180.0, size=idx.size)
        network.set_site_bearings(bearings)


def _run(scenario, grid: SampleGrid | None, kpi_mode: str, deploy: bool) -> RunTrace:
    opt = scenario.optimizer
    kpi_cfg = scenario.kpi
    network = scenario.build_network()
    if grid is None:
        grid = build_grid(scenario.density, scenario.res_ground_m, scenario.res_corridor_m)
    rng = np.random.default_rng(opt.seed)
    _random_init(network, rng, deploy, scenario.density.gue_region)

    gamma1 = kpi_mode == "coverage_capacity"

    def evaluate(part, lb):
        if gamma1:
            return eval_P1_gamma1(grid, part, network, kpi_cfg, lb).total
        return eval_P_gamma2(grid, part, network, kpi_cfg, lb).total

    geom = compute_geometry(grid, network)
    lb = link_budget(grid, network, geom)
    part = max_rss_partition(grid, network, lb)
    obj = evaluate(part, lb)

    trace = RunTrace()
    trace.objective.append(obj)
    steps = {
        "tilt": opt.step_tilt_deg,
        "power": opt.step_power_db,
        "pos": opt.step_pos_m,
        "bearing": opt.step_bearing_deg,
    }
    initial = dict(steps)
    bt = dict(backtrack_factor=opt.backtrack_factor, backtrack_max=opt.backtrack_max)

    # a family's turn may take several ascent steps (gradient refreshed each
    # time) while they keep paying; the other families stay fixed throughout,
    # matching the listing order, and monotonicity is preserved step by step
    inner_max = max(1, opt.inner_steps)

    def family_step(name, get_params, get_grad, apply_fn, project, f0, reuse_geom=True):
        """Ascend one family until improvement stalls; leaves the network at
        the accepted parameters and returns (last accepted step, objective)."""
        nonlocal geom

        def f(x):
            apply_fn(x)
            lb_c = link_budget(grid, network, geom if reuse_geom else None)
            return evaluate(part, lb_c)

        f_cur = f0
        last_acc = 0.0
        for _ in range(inner_max):
            grad_arr = np.asarray(get_grad(), dtype=float)
            gmax = float(np.max(np.abs(grad_arr))) if grad_arr.size else 0.0
            if gmax == 0.0:
                break
            tried = steps[name]
            new, acc, f1 = ascent_step(
                f, get_params(), grad_arr / gmax, tried, project=project, f0=f_cur, **bt
            )
            apply_fn(new)
            if not reuse_geom:
                geom = compute_geometry(grid, network)
            # grow while the full step keeps being accepted, settle where
            # backtracking pushes back, retreat when no scale improved
            if acc > 0.0:
                steps[name] = min(2.0 * acc if acc == tried else acc, 1e12)
            else:
                steps[name] = max(steps[name] * opt.backtrack_factor**5, 1e-9)
                break
            gain, f_cur, last_acc = f1 - f_cur, f1, acc
            if gain < 0.1 * opt.conv_tol * max(1.0, abs(f_cur)):
                break
        return last_acc, f_cur

    def current_grad(include_sites: bool):
        lb_g = link_budget(grid, network, geom)
        if gamma1:
            fn = grad_P2_gamma1 if include_sites else grad_P1_gamma1
            g = fn(grid, part, network, kpi_cfg, lb_g)
        else:
            which = ("tilt", "power", "site_pos", "site_bearing") if include_sites else (
                "tilt", "power")
            g = grad_P_gamma2(grid, part, network, kpi_cfg, which, lb_g)
        return check_finite(g)

    for it in range(1, opt.max_outer_iters + 1):
        prev = obj
        lb = link_budget(grid, network, geom)
        if gamma1:
            part = max_rss_partition(grid, network, lb, version=it)
        else:
            part = conditional_partition_update_kpi2(grid, network, part, kpi_cfg, lb)
        obj = evaluate(part, lb)

        accepted = {}
        accepted["tilt"], obj = family_step(
            "tilt", lambda: network.tilt.copy(), lambda: current_grad(False).d_tilt,
            network.set_tilts, lambda x: np.clip(x, -90.0, 90.0), obj,
        )
        accepted["power"], obj = family_step(
            "power", lambda: network.power.copy(), lambda: current_grad(False).d_power,
            network.set_powers, lambda x: project_powers(x, network.power_max), obj,
        )
        if deploy:
            accepted["pos"], obj = family_step(
                "pos", lambda: network.site_pos.copy().ravel(),
                lambda: current_grad(True).d_site_pos.ravel(),
                lambda x: network.set_site_positions(x.reshape(-1, 2)), None, obj,
                reuse_geom=False,
            )
            accepted["bearing"], obj = family_step(
                "bearing", lambda: network.site_ref_bearing.copy(),
                lambda: current_grad(True).d_site_bearing,
                network.set_site_bearings, None, obj,
            )

        trace.objective.append(obj)
        trace.accepted_steps.append(accepted)
        trace.n_iters = it
        if opt.snapshot_every and it % opt.snapshot_every == 0:
            trace.snapshots.append(
                (it, network.tilt.copy(), network.power.copy(),
                 network.site_pos.copy(), network.site_ref_bearing.copy())
            )
        if obj - prev < opt.conv_tol * max(1.0, abs(prev)):
            trace.converged = True
            break

    # final partition refresh so the reported state is self-consistent
    lb = link_budget(grid, network, geom)
    if gamma1:
        part = max_rss_partition(grid, network, lb, version=trace.n_iters + 1)
    else:
        part = conditional_partition_update_kpi2(grid, network, part, kpi_cfg, lb)
    trace.objective.append(evaluate(part, lb))
    trace.final_network = network
    trace.final_partition = part
    return trace


def run_algorithm1(scenario, grid=None) -> RunTrace:
    """Tilt and power optimization for the coverage-capacity trade-off."""
    return _run(scenario, grid, "coverage_capacity", deploy=False)


def run_algorithm2(scenario, grid=None) -> RunTrace:
    """Algorithm 1 plus site-location and reference-bearing optimization."""
    return _run(scenario, grid, "coverage_capacity", deploy=True)


def run_algorithm3(scenario, grid=None) -> RunTrace:
    """Tilt and power optimization for maximum capacity per region."""
    return _run(scenario, grid, "capacity_per_region", deploy=False)


def run_algorithm4(scenario, grid=None) -> RunTrace:
    """Algorithm 3 plus site-location and reference-bearing optimization."""
    return _run(scenario, grid, "capacity_per_region", deploy=True)
