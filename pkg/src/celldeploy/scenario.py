"""Problem instances: the hexagonal case-study preset, scenario files, and
wiring of density, network, KPI and optimizer configuration.

Scenario files are YAML with a canonical key order, so save(load(x)) is
byte-identical for canonical files and configs diff cleanly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .channel import AntennaPattern, BaseStation, Network, PathlossConstants
from .density import DensitySpec, GaussComponent, SampleGrid, build_grid
from .errors import ConfigError
from .kpi import KpiConfig
from .optimizer import OptimizerConfig

KPI_MODES = ("coverage_capacity", "capacity_per_region")
APPLICATIONS = ("tune", "deploy")

# sites that stay fixed in the deploy variant of the case study (1-based,
# sorted by ring then angle: the center plus the six far corners)
CASE_STUDY_FIXED_SITES = (1, 8, 10, 12, 14, 16, 18)

CASE_STUDY_GMM = [
    GaussComponent(0.35, (-375.0, -225.0), [[5.0e4, 0.0], [0.0, 5.0e4]]),
    GaussComponent(0.25, (150.0, 375.0), [[4.2e4, 0.0], [0.0, 4.2e4]]),
    GaussComponent(0.25, (375.0, -375.0), [[3.2e4, 0.0], [0.0, 3.2e4]]),
    GaussComponent(0.15, (-300.0, 300.0), [[3.8e4, 0.0], [0.0, 3.8e4]]),
]

CASE_STUDY_CORRIDORS = [
    (-770.0, -730.0, -1000.0, 1000.0, 135.0, 150.0),
    (-1000.0, 1000.0, -770.0, -730.0, 105.0, 120.0),
    (-1000.0, 1000.0, 730.0, 770.0, 105.0, 120.0),
    (730.0, 770.0, -1000.0, 1000.0, 135.0, 150.0),
]


@dataclass
class Site:
    """One deployment site: three co-located sectors at 120-degree spacing."""

    id: int  # 1-based, stable across reports
    pos_xy: tuple[float, float]
    ref_bearing_deg: float = 30.0
    deployable: bool = False
    sector_ids: list = field(default_factory=list)


@dataclass
class Scenario:
    sites: list[Site]
    pattern: AntennaPattern = field(default_factory=AntennaPattern)
    channel: PathlossConstants = field(default_factory=PathlossConstants)
    density: DensitySpec = field(default_factory=DensitySpec)
    kpi: KpiConfig = field(default_factory=KpiConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    kpi_mode: str = "coverage_capacity"
    application: str = "tune"
    bs_height_m: float = 25.0
    power_max_dbm: float = 43.0
    res_ground_m: float = 25.0
    res_corridor_m: float = 20.0
    # per-sector state, keyed by flat BS index: tilt_deg, power_dbm, and the
    # optimizability flags; position/bearing overrides are rejected because
    # they would silently break the co-located-sector constraint
    sector_overrides: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kpi_mode not in KPI_MODES:
            raise ConfigError(f"kpi_mode: {self.kpi_mode!r} not one of {KPI_MODES}")
        if self.application not in APPLICATIONS:
            raise ConfigError(f"application: {self.application!r} not one of {APPLICATIONS}")
        if not self.sites:
            raise ConfigError("sites: at least one site required")
        ids = [s.id for s in self.sites]
        if len(set(ids)) != len(ids):
            raise ConfigError("sites: ids must be unique")
        n_deploy = sum(s.deployable for s in self.sites)
        if self.application == "deploy" and n_deploy == 0:
            raise ConfigError("application: deploy requires at least one deployable site")
        if self.application == "tune" and n_deploy > 0:
            raise ConfigError("application: tune forbids deployable sites")
        if self.res_ground_m <= 0 or self.res_corridor_m <= 0:
            raise ConfigError("res_ground_m/res_corridor_m: must be > 0")
        n_bs = 3 * len(self.sites)
        allowed = {"bs", "tilt_deg", "power_dbm", "tilt_optimizable", "power_optimizable"}
        for k, ov in enumerate(self.sector_overrides):
            extra = set(ov) - allowed
            if extra:
                raise ConfigError(
                    f"sector_overrides[{k}]: unknown/forbidden keys {sorted(extra)}"
                )
            if "bs" not in ov or not 0 <= int(ov["bs"]) < n_bs:
                raise ConfigError(f"sector_overrides[{k}].bs: index outside [0, {n_bs})")
            if "tilt_deg" in ov and not -90.0 <= float(ov["tilt_deg"]) <= 90.0:
                raise ConfigError(
                    f"sector_overrides[{k}].tilt_deg: {ov['tilt_deg']} outside [-90, 90]"
                )
            if "power_dbm" in ov and float(ov["power_dbm"]) > self.power_max_dbm:
                raise ConfigError(
                    f"sector_overrides[{k}].power_dbm: exceeds max {self.power_max_dbm}"
                )

    def build_network(self) -> Network:
        """Flatten sites into sectors (bearings ref + 0/120/240) and apply
        per-sector overrides."""
        overrides = {int(ov["bs"]): ov for ov in self.sector_overrides}
        stations = []
        for m, site in enumerate(self.sites):
            site.sector_ids = [3 * m, 3 * m + 1, 3 * m + 2]
            for j in range(3):
                i = 3 * m + j
                ov = overrides.get(i, {})
                stations.append(
                    BaseStation(
                        id=i,
                        site_id=m,
                        pos_xy=tuple(site.pos_xy),
                        height_m=self.bs_height_m,
                        tilt_deg=float(ov.get("tilt_deg", 0.0)),
                        bearing_deg=site.ref_bearing_deg + 120.0 * j,
                        power_dbm=float(ov.get("power_dbm", self.power_max_dbm)),
                        power_max_dbm=self.power_max_dbm,
                        tilt_optimizable=bool(ov.get("tilt_optimizable", True)),
                        power_optimizable=bool(ov.get("power_optimizable", True)),
                    )
                )
        deployable = np.array([s.deployable for s in self.sites], dtype=bool)
        return Network(stations, self.pattern, self.channel, deployable)

    def build_grid(self) -> SampleGrid:
        return build_grid(self.density, self.res_ground_m, self.res_corridor_m)


def hex_layout(n_rings: int, isd_m: float) -> np.ndarray:
    """Hexagonal site grid: center plus `n_rings` rings, nearest-neighbor
    spacing `isd_m`.  Sites are ordered by (ring, angle from east), which
    fixes the 1-based ids used by the case study."""
    if n_rings < 0:
        raise ConfigError("hex_layout: n_rings must be >= 0")
    u = np.array([1.0, 0.0])
    v = np.array([0.5, math.sqrt(3.0) / 2.0])
    rows = []
    for a in range(-n_rings, n_rings + 1):
        for b in range(-n_rings, n_rings + 1):
            ring = max(abs(a), abs(b), abs(a + b))
            if ring > n_rings:
                continue
            p = isd_m * (a * u + b * v)
            ang = math.degrees(math.atan2(p[1], p[0])) % 360.0
            rows.append((ring, round(ang, 9), p[0], p[1]))
    rows.sort()
    return np.array([[r[2], r[3]] for r in rows])


def preset_case_study(
    r_mix: float = 0.5,
    gue_kind: str = "gmm",
    application: str = "tune",
    kpi_mode: str = "coverage_capacity",
    seed: int = 0,
) -> Scenario:
    """The 19-site / 57-sector hexagonal network with ground users over a
    1.5 km square and four elevated UAV corridors."""
    positions = hex_layout(2, 500.0)
    sites = []
    for k, (x, y) in enumerate(positions, start=1):
        deployable = application == "deploy" and k not in CASE_STUDY_FIXED_SITES
        sites.append(
            Site(id=k, pos_xy=(float(x), float(y)), ref_bearing_deg=30.0, deployable=deployable)
        )
    density = DensitySpec(
        r_mix=r_mix,
        gue_region=(-750.0, 750.0, -750.0, 750.0),
        gue_height_m=1.5,
        gue_kind=gue_kind,
        gmm=[GaussComponent(c.weight, c.mean, c.cov) for c in CASE_STUDY_GMM]
        if gue_kind == "gmm"
        else [],
        corridors=list(CASE_STUDY_CORRIDORS),
    )
    return Scenario(
        sites=sites,
        pattern=AntennaPattern(a_max_dbi=14.0, theta_3db_deg=10.0, phi_3db_deg=65.0),
        channel=PathlossConstants(
            a_gue_db=38.42, b_gue=30.0, a_uav_db=34.02, b_uav=22.0, noise_dbm=-95.0
        ),
        density=density,
        kpi=KpiConfig(beta=0.5, t_db=-5.0, kappa=2.0, offset=0.002),
        optimizer=OptimizerConfig(seed=seed),
        kpi_mode=kpi_mode,
        application=application,
        bs_height_m=25.0,
        power_max_dbm=43.0,
    )


# ---------------------------------------------------------------------------
# Serialization (canonical YAML)
# ---------------------------------------------------------------------------

def _to_dict(sc: Scenario) -> dict:
    return {
        "kpi_mode": sc.kpi_mode,
        "application": sc.application,
        "bs_height_m": float(sc.bs_height_m),
        "power_max_dbm": float(sc.power_max_dbm),
        "res_ground_m": float(sc.res_ground_m),
        "res_corridor_m": float(sc.res_corridor_m),
        "pattern": {
            "a_max_dbi": float(sc.pattern.a_max_dbi),
            "theta_3db_deg": float(sc.pattern.theta_3db_deg),
            "phi_3db_deg": float(sc.pattern.phi_3db_deg),
        },
        "channel": {
            "a_gue_db": float(sc.channel.a_gue_db),
            "b_gue": float(sc.channel.b_gue),
            "a_uav_db": float(sc.channel.a_uav_db),
            "b_uav": float(sc.channel.b_uav),
            "noise_dbm": float(sc.channel.noise_dbm),
        },
        "density": {
            "r_mix": float(sc.density.r_mix),
            "gue_region": [float(x) for x in sc.density.gue_region],
            "gue_height_m": float(sc.density.gue_height_m),
            "gue_kind": sc.density.gue_kind,
            "gmm": [
                {
                    "weight": float(c.weight),
                    "mean": [float(x) for x in c.mean],
                    "cov": [[float(x) for x in row] for row in np.reshape(c.cov, (2, 2))],
                }
                for c in sc.density.gmm
            ],
            "corridors": [[float(x) for x in box] for box in sc.density.corridors],
        },
        "kpi": {
            "beta": float(sc.kpi.beta),
            "t_db": float(sc.kpi.t_db),
            "kappa": float(sc.kpi.kappa),
            "offset": float(sc.kpi.offset),
            "sinr_floor_lin": float(sc.kpi.sinr_floor_lin),
        },
        "optimizer": {
            "max_outer_iters": int(sc.optimizer.max_outer_iters),
            "step_tilt_deg": float(sc.optimizer.step_tilt_deg),
            "step_power_db": float(sc.optimizer.step_power_db),
            "step_pos_m": float(sc.optimizer.step_pos_m),
            "step_bearing_deg": float(sc.optimizer.step_bearing_deg),
            "backtrack_factor": float(sc.optimizer.backtrack_factor),
            "backtrack_max": int(sc.optimizer.backtrack_max),
            "conv_tol": float(sc.optimizer.conv_tol),
            "inner_steps": int(sc.optimizer.inner_steps),
            "seed": int(sc.optimizer.seed),
            "snapshot_every": int(sc.optimizer.snapshot_every),
        },
        "sites": [
            {
                "id": int(s.id),
                "pos": [float(s.pos_xy[0]), float(s.pos_xy[1])],
                "ref_bearing_deg": float(s.ref_bearing_deg),
                "deployable": bool(s.deployable),
            }
            for s in sc.sites
        ],
        "sector_overrides": [
            {k: (int(v) if k == "bs" else (bool(v) if isinstance(v, bool) else float(v)))
             for k, v in ov.items()}
            for ov in sc.sector_overrides
        ],
    }


def _dataclass_from(d: dict, cls, path: str, **extra):
    try:
        return cls(**{**d, **extra})
    except TypeError as e:
        raise ConfigError(f"{path}: {e}") from None
    except (ConfigError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None


def _from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError("scenario: top level must be a mapping")
    known = {
        "kpi_mode", "application", "bs_height_m", "power_max_dbm", "res_ground_m",
        "res_corridor_m", "pattern", "channel", "density", "kpi", "optimizer",
        "sites", "sector_overrides",
    }
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"scenario: unknown keys {sorted(unknown)}")
    if "sites" not in d or not d["sites"]:
        raise ConfigError("sites: missing or empty")

    pattern = _dataclass_from(d.get("pattern", {}), AntennaPattern, "pattern")
    channel = _dataclass_from(d.get("channel", {}), PathlossConstants, "channel")

    dens = dict(d.get("density", {}))
    gmm_in = dens.pop("gmm", [])
    gmm = []
    for k, c in enumerate(gmm_in):
        gmm.append(
            _dataclass_from(
                {
                    "weight": c.get("weight"),
                    "mean": tuple(c.get("mean", ())),
                    "cov": c.get("cov"),
                },
                GaussComponent,
                f"density.gmm[{k}]",
            )
        )
    if "gue_region" in dens:
        dens["gue_region"] = tuple(dens["gue_region"])
    if "corridors" in dens:
        dens["corridors"] = [tuple(box) for box in dens["corridors"]]
    density = _dataclass_from(dens, DensitySpec, "density", gmm=gmm)

    kpi = _dataclass_from(d.get("kpi", {}), KpiConfig, "kpi")
    try:
        opt = OptimizerConfig(**d.get("optimizer", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"optimizer: {e}") from None

    sites = []
    for k, s in enumerate(d["sites"]):
        if "pos" not in s:
            raise ConfigError(f"sites[{k}].pos: missing")
        sites.append(
            Site(
                id=int(s.get("id", k + 1)),
                pos_xy=(float(s["pos"][0]), float(s["pos"][1])),
                ref_bearing_deg=float(s.get("ref_bearing_deg", 30.0)),
                deployable=bool(s.get("deployable", False)),
            )
        )

    return Scenario(
        sites=sites,
        pattern=pattern,
        channel=channel,
        density=density,
        kpi=kpi,
        optimizer=opt,
        kpi_mode=d.get("kpi_mode", "coverage_capacity"),
        application=d.get("application", "tune"),
        bs_height_m=float(d.get("bs_height_m", 25.0)),
        power_max_dbm=float(d.get("power_max_dbm", 43.0)),
        res_ground_m=float(d.get("res_ground_m", 25.0)),
        res_corridor_m=float(d.get("res_corridor_m", 20.0)),
        sector_overrides=list(d.get("sector_overrides", [])),
    )


def dumps_scenario(sc: Scenario) -> str:
    """Canonical YAML text: fixed key order, defaults materialized."""
    return yaml.safe_dump(_to_dict(sc), sort_keys=False, default_flow_style=None)


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as f:
        f.write(dumps_scenario(sc))


def load_scenario(path) -> Scenario:
    try:
        with open(path) as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"scenario file does not parse: {e}") from None
    return _from_dict(raw)


def scenario_hash(sc: Scenario) -> str:
    """Short content hash of the canonical dump, for report provenance."""
    return hashlib.sha256(dumps_scenario(sc).encode()).hexdigest()[:16]
