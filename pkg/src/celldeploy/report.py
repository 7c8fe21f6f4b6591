"""Report artifacts: KPI summary, per-class SINR/rate CDFs, partition map,
tilt/power table, config echo and run trace.

All tabular output is CSV with a provenance header (scenario hash + seed);
plotting happens downstream of these files.  CDFs are computed over the
weighted sample grid, so they are deterministic for a fixed seed and grid.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .channel import Network, link_budget, serving_fields, spectral_efficiency
from .density import SampleGrid
from .kpi import coverage_fraction, eval_P1_gamma1, eval_P_gamma2
from .optimizer import RunTrace
from .scenario import Scenario, dumps_scenario, scenario_hash


@dataclass
class ClassCdf:
    values: np.ndarray  # sorted
    cum_weight: np.ndarray  # objective mass, ends at the class mass
    cum_fraction: np.ndarray  # class-conditional, ends at 1.0


@dataclass
class ReportBundle:
    summary: dict
    sinr_cdf: dict  # class name -> ClassCdf
    rate_cdf: dict
    partition_rows: list  # (x, y, z, class, cell_id, weight)
    tilt_power_rows: list  # (bs, site, x, y, bearing, tilt, power)
    config_echo: str
    provenance: dict
    trace: RunTrace | None = None


def weighted_cdf(values, weights, cond_weights) -> ClassCdf:
    order = np.argsort(values, kind="stable")
    return ClassCdf(
        values=np.asarray(values)[order],
        cum_weight=np.cumsum(np.asarray(weights)[order]),
        cum_fraction=np.cumsum(np.asarray(cond_weights)[order]),
    )


def quantile_from_cdf(cdf: ClassCdf, q: float) -> float:
    """Smallest value whose class-conditional cumulative weight reaches q."""
    idx = int(np.searchsorted(cdf.cum_fraction, q, side="left"))
    idx = min(idx, len(cdf.values) - 1)
    return float(cdf.values[idx])


def build_bundle(
    scenario: Scenario,
    grid: SampleGrid,
    network: Network,
    partition,
    trace: RunTrace | None = None,
) -> ReportBundle:
    lb = link_budget(grid, network)
    _, sinr_lin, sinr_db = serving_fields(lb, partition.assignment)
    rate = spectral_efficiency(sinr_lin)

    if scenario.kpi_mode == "coverage_capacity":
        rep = eval_P1_gamma1(grid, partition, network, scenario.kpi, lb)
    else:
        rep = eval_P_gamma2(grid, partition, network, scenario.kpi, lb)

    sinr_cdf, rate_cdf = {}, {}
    for name, mask in (("gue", ~grid.is_uav), ("uav", grid.is_uav)):
        if not np.any(mask):
            continue
        sinr_cdf[name] = weighted_cdf(
            sinr_db[mask], grid.weight[mask], grid.cond_weight[mask]
        )
        rate_cdf[name] = weighted_cdf(
            rate[mask], grid.weight[mask], grid.cond_weight[mask]
        )

    summary = {
        "kpi_mode": scenario.kpi_mode,
        "objective": rep.total,
        "kpi_gue": rep.per_class["gue"],
        "kpi_uav": rep.per_class["uav"],
        "coverage_fraction": coverage_fraction(
            grid, partition, network, scenario.kpi.t_db, lb
        ),
        "n_sites": len(scenario.sites),
        "n_bs": network.n,
        "n_samples": grid.n_samples,
        "r_mix": scenario.density.r_mix,
    }
    if trace is not None:
        summary["iterations"] = trace.n_iters
        summary["converged"] = trace.converged
        summary["final_objective"] = trace.final_objective

    classes = np.where(grid.is_uav, "uav", "gue")
    partition_rows = [
        (
            float(grid.xyz[s, 0]),
            float(grid.xyz[s, 1]),
            float(grid.xyz[s, 2]),
            classes[s],
            int(partition.assignment[s]),
            float(grid.weight[s]),
        )
        for s in range(grid.n_samples)
    ]
    tilt_power_rows = [
        (
            i,
            int(network.site_of[i]),
            float(network.pos[i, 0]),
            float(network.pos[i, 1]),
            float(network.bearing[i]),
            float(network.tilt[i]),
            float(network.power[i]),
        )
        for i in range(network.n)
    ]

    return ReportBundle(
        summary=summary,
        sinr_cdf=sinr_cdf,
        rate_cdf=rate_cdf,
        partition_rows=partition_rows,
        tilt_power_rows=tilt_power_rows,
        config_echo=dumps_scenario(scenario),
        provenance={"scenario": scenario_hash(scenario), "seed": scenario.optimizer.seed},
        trace=trace,
    )


def _header(bundle: ReportBundle) -> str:
    return f"# scenario={bundle.provenance['scenario']} seed={bundle.provenance['seed']}\n"


def _write_cdf_csv(path: str, bundle: ReportBundle, cdfs: dict, value_name: str):
    with open(path, "w") as f:
        f.write(_header(bundle))
        f.write(f"class,{value_name},cum_weight,cum_fraction\n")
        for name in sorted(cdfs):
            c = cdfs[name]
            for v, w, p in zip(c.values, c.cum_weight, c.cum_fraction):
                f.write(f"{name},{v:.10g},{w:.12g},{p:.12g}\n")


def write_bundle(bundle: ReportBundle, out_dir: str) -> list[str]:
    """Write all artifacts into out_dir; returns the manifest file list."""
    os.makedirs(out_dir, exist_ok=True)
    files = []

    def path(name):
        files.append(name)
        return os.path.join(out_dir, name)

    with open(path("kpi_summary.txt"), "w") as f:
        f.write(_header(bundle))
        for k, v in bundle.summary.items():
            f.write(f"{k}: {v}\n")

    _write_cdf_csv(path("sinr_cdf.csv"), bundle, bundle.sinr_cdf, "sinr_db")
    _write_cdf_csv(path("rate_cdf.csv"), bundle, bundle.rate_cdf, "rate_bps_hz")

    with open(path("partition.csv"), "w") as f:
        f.write(_header(bundle))
        f.write("x_m,y_m,z_m,class,cell_id,weight\n")
        for x, y, z, cls, cell, w in bundle.partition_rows:
            f.write(f"{x:.10g},{y:.10g},{z:.10g},{cls},{cell},{w:.12g}\n")

    with open(path("tilt_power.csv"), "w") as f:
        f.write(_header(bundle))
        f.write("bs,site,x_m,y_m,bearing_deg,tilt_deg,power_dbm\n")
        for row in bundle.tilt_power_rows:
            f.write(
                f"{row[0]},{row[1]},{row[2]:.10g},{row[3]:.10g},"
                f"{row[4]:.10g},{row[5]:.10g},{row[6]:.10g}\n"
            )

    with open(path("config_echo.yaml"), "w") as f:
        f.write(bundle.config_echo)

    if bundle.trace is not None:
        with open(path("trace.csv"), "w") as f:
            f.write(_header(bundle))
            f.write("iteration,objective\n")
            for i, obj in enumerate(bundle.trace.objective):
                f.write(f"{i},{obj:.15g}\n")

    with open(os.path.join(out_dir, "manifest.txt"), "w") as f:
        for name in files:
            f.write(name + "\n")
        f.write("manifest.txt\n")
    files.append("manifest.txt")
    return files
