"""celldeploy: cell deployment and antenna configuration optimization for
mixed ground / UAV-corridor user populations."""

from .channel import (
    AntennaPattern,
    BaseStation,
    Location3D,
    Network,
    PathlossConstants,
    UserClass,
)
from .density import DensitySpec, GaussComponent, SampleGrid, build_grid
from .errors import ConfigError, DegenerateGeometry, NonFiniteGradient
from .kpi import KpiConfig, KpiReport, eval_P1_gamma1, eval_P_gamma2
from .optimizer import (
    OptimizerConfig,
    RunTrace,
    run_algorithm1,
    run_algorithm2,
    run_algorithm3,
    run_algorithm4,
)
from .partition import Partition, max_rss_partition
from .scenario import Scenario, Site, hex_layout, load_scenario, preset_case_study, save_scenario

__version__ = "0.1.0"

__all__ = [
    "AntennaPattern",
    "BaseStation",
    "ConfigError",
    "DegenerateGeometry",
    "DensitySpec",
    "GaussComponent",
    "KpiConfig",
    "KpiReport",
    "Location3D",
    "Network",
    "NonFiniteGradient",
    "OptimizerConfig",
    "Partition",
    "PathlossConstants",
    "RunTrace",
    "SampleGrid",
    "Scenario",
    "Site",
    "UserClass",
    "build_grid",
    "eval_P1_gamma1",
    "eval_P_gamma2",
    "hex_layout",
    "load_scenario",
    "max_rss_partition",
    "preset_case_study",
    "run_algorithm1",
    "run_algorithm2",
    "run_algorithm3",
    "run_algorithm4",
    "save_scenario",
]
