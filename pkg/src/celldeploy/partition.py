"""Cell association rules.

Max-RSS association is optimal for any KPI that increases with SINR; the
load-aware KPI needs the conditional variant that only adopts the max-RSS
candidate when it actually improves the functional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkBudget, Network, link_budget
from .density import SampleGrid
from .kpi import KpiConfig, eval_P_gamma2


@dataclass
class Partition:
    assignment: np.ndarray  # (S,) serving sector index per sample
    version: int = 0


def max_rss_partition(
    grid: SampleGrid, network: Network, lb: LinkBudget | None = None, version: int = 0
) -> Partition:
    """Assign every sample to its strongest sector (ties to the lowest index)."""
    if lb is None:
        lb = link_budget(grid, network)
    return Partition(assignment=np.argmax(lb.rss_dbm, axis=1), version=version)


def conditional_partition_update_kpi2(
    grid: SampleGrid,
    network: Network,
    current: Partition,
    cfg: KpiConfig,
    lb: LinkBudget | None = None,
) -> Partition:
    """Adopt the max-RSS candidate only if it improves the load-aware KPI.

    Returns `current` unchanged otherwise, so the functional never decreases
    across this update.
    """
    if lb is None:
        lb = link_budget(grid, network)
    candidate = max_rss_partition(grid, network, lb, version=current.version + 1)
    if np.array_equal(candidate.assignment, current.assignment):
        return current
    now = eval_P_gamma2(grid, current, network, cfg, lb).total
    new = eval_P_gamma2(grid, candidate, network, cfg, lb).total
    return candidate if new > now else current
