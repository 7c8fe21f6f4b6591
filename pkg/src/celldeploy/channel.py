"""Per-link radio math: angles, sector antenna gains, pathloss, RSS and SINR.

Angles are kept in degrees end to end (the 12/theta_3dB^2 pattern
coefficients assume degrees) and powers in dB/dBm; linear units appear only
where a formula needs them.  Scalar functions operate on one (BS, location)
pair; the array kernels at the bottom evaluate all samples x all sectors at
once and are what the KPI/gradient/optimizer layers use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, DegenerateGeometry

DEG_PER_RAD = 180.0 / math.pi


class UserClass(Enum):
    GUE = "gue"
    UAV = "uav"


def wrap_angle_deg(x):
    """Wrap an angle (difference) into [-180, 180); +180 maps to -180.

    The pattern math only ever squares the wrapped value, so the boundary
    convention does not affect any gain.
    """
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


def normalize_bearing_deg(x: float) -> float:
    """Normalize a bearing into (-180, 180]."""
    w = float(wrap_angle_deg(x))
    return 180.0 if w == -180.0 else w


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db) / 10.0)


def lin_to_db(x_lin):
    return 10.0 * np.log10(x_lin)


@dataclass
class AntennaPattern:
    """Quadratic sector pattern: peak gain plus vertical/horizontal rolloff."""

    a_max_dbi: float = 14.0
    theta_3db_deg: float = 10.0  # vertical HPBW
    phi_3db_deg: float = 65.0  # horizontal HPBW

    def __post_init__(self):
        if self.theta_3db_deg <= 0 or self.phi_3db_deg <= 0:
            raise ConfigError("pattern: half-power beamwidths must be > 0")


@dataclass
class PathlossConstants:
    """Log-distance pathloss intercept/slope per user class, plus noise power."""

    a_gue_db: float = 38.42
    b_gue: float = 30.0
    a_uav_db: float = 34.02
    b_uav: float = 22.0
    noise_dbm: float = -95.0

    def __post_init__(self):
        if self.b_gue <= 0 or self.b_uav <= 0:
            raise ConfigError("channel: pathloss slopes must be > 0")

    @property
    def noise_lin(self) -> float:
        return float(db_to_lin(self.noise_dbm))

    def coeffs(self, is_uav):
        """Per-sample (intercept dB, slope) arrays selected by user class."""
        is_uav = np.asarray(is_uav, dtype=bool)
        a = np.where(is_uav, self.a_uav_db, self.a_gue_db)
        b = np.where(is_uav, self.b_uav, self.b_gue)
        return a, b


@dataclass
class Location3D:
    x_m: float
    y_m: float
    z_m: float
    user_class: UserClass = UserClass.GUE

    def __post_init__(self):
        if self.z_m < 0:
            raise ConfigError("location: z_m must be >= 0")


@dataclass
class BaseStation:
    """One sector antenna with its adjustable parameters.

    ``bearing_deg`` is normalized to (-180, 180] on construction; tilt and
    power bounds are enforced.
    """

    id: int
    site_id: int
    pos_xy: tuple[float, float]
    height_m: float = 25.0
    tilt_deg: float = 0.0
    bearing_deg: float = 0.0
    power_dbm: float = 43.0
    power_max_dbm: float = 43.0
    tilt_optimizable: bool = True
    power_optimizable: bool = True

    def __post_init__(self):
        if not -90.0 <= self.tilt_deg <= 90.0:
            raise ConfigError(f"bs[{self.id}].tilt_deg: {self.tilt_deg} outside [-90, 90]")
        if self.power_dbm > self.power_max_dbm:
            raise ConfigError(
                f"bs[{self.id}].power_dbm: {self.power_dbm} exceeds max {self.power_max_dbm}"
            )
        self.bearing_deg = normalize_bearing_deg(self.bearing_deg)


# ---------------------------------------------------------------------------
# Scalar per-link operations
# ---------------------------------------------------------------------------

def elevation_angle_deg(bs: BaseStation, q: Location3D) -> float:
    """Elevation angle from the BS antenna to q, in (-90, 90) degrees.

    Directly above/below the BS returns +/-90 by the sign of the height
    difference; a 3D-coincident point raises DegenerateGeometry.
    """
    dx = q.x_m - bs.pos_xy[0]
    dy = q.y_m - bs.pos_xy[1]
    dz = q.z_m - bs.height_m
    d2d = math.hypot(dx, dy)
    if d2d == 0.0:
        if dz == 0.0:
            raise DegenerateGeometry(f"q coincides with BS {bs.id}")
        return math.copysign(90.0, dz)
    return math.degrees(math.atan2(dz, d2d))


def azimuth_angle_deg(bs: BaseStation, q: Location3D) -> float:
    """Azimuth angle of q seen from the BS, offset so it stays within
    +/-180 degrees of the sector bearing."""
    dx = q.x_m - bs.pos_xy[0]
    dy = q.y_m - bs.pos_xy[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometry(f"q horizontally coincides with BS {bs.id}")
    raw = math.degrees(math.atan2(dy, dx))
    return bs.bearing_deg + float(wrap_angle_deg(raw - bs.bearing_deg))


def antenna_gain_db(bs: BaseStation, pattern: AntennaPattern, q: Location3D) -> float:
    """Total sector gain: peak minus quadratic vertical and horizontal rolloff."""
    toff = elevation_angle_deg(bs, q) - bs.tilt_deg
    aoff = azimuth_angle_deg(bs, q) - bs.bearing_deg
    return (
        pattern.a_max_dbi
        - 12.0 / pattern.theta_3db_deg**2 * toff**2
        - 12.0 / pattern.phi_3db_deg**2 * aoff**2
    )


def pathloss_db(q: Location3D, bs: BaseStation, consts: PathlossConstants) -> float:
    """Log-distance pathloss over the 3D distance, class-dependent constants."""
    dx = q.x_m - bs.pos_xy[0]
    dy = q.y_m - bs.pos_xy[1]
    dz = q.z_m - bs.height_m
    d3d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d3d == 0.0:
        raise DegenerateGeometry(f"q coincides with BS {bs.id}")
    if q.user_class is UserClass.UAV:
        return consts.a_uav_db + consts.b_uav * math.log10(d3d)
    return consts.a_gue_db + consts.b_gue * math.log10(d3d)


def rss_dbm(
    bs: BaseStation, pattern: AntennaPattern, consts: PathlossConstants, q: Location3D
) -> float:
    """Received signal strength: transmit power plus gain minus pathloss."""
    return bs.power_dbm + antenna_gain_db(bs, pattern, q) - pathloss_db(q, bs, consts)


def sinr_lin(
    all_bs: list[BaseStation],
    serving: int,
    pattern: AntennaPattern,
    consts: PathlossConstants,
    q: Location3D,
) -> float:
    """Wideband SINR (linear) of `serving` against all other sectors plus noise."""
    rss = [db_to_lin(rss_dbm(bs, pattern, consts, q)) for bs in all_bs]
    interference = sum(r for j, r in enumerate(rss) if j != serving)
    return rss[serving] / (interference + consts.noise_lin)


def sinr_db(
    all_bs: list[BaseStation],
    serving: int,
    pattern: AntennaPattern,
    consts: PathlossConstants,
    q: Location3D,
) -> float:
    return float(lin_to_db(sinr_lin(all_bs, serving, pattern, consts, q)))


def spectral_efficiency(sinr_linear) -> float:
    """Achievable rate log2(1 + SINR) in bps/Hz."""
    return np.log2(1.0 + np.asarray(sinr_linear))


# ---------------------------------------------------------------------------
# Network: all sectors as parallel arrays, with site ties
# ---------------------------------------------------------------------------

class Network:
    """Mutable array-of-structs view of a deployment.

    Sectors of one site share a position, and their bearings move together
    with the site's reference bearing (each sector keeps the angular offset
    it was constructed with, 0/120/240 for the standard 3-sector site).
    """

    def __init__(
        self,
        stations: list[BaseStation],
        pattern: AntennaPattern,
        consts: PathlossConstants,
        site_deployable=None,
    ):
        if not stations:
            raise ConfigError("network: needs at least one base station")
        self.pattern = pattern
        self.consts = consts
        self.n = len(stations)

        self.pos = np.array([bs.pos_xy for bs in stations], dtype=float)  # (N,2)
        self.height = np.array([bs.height_m for bs in stations], dtype=float)
        self.tilt = np.array([bs.tilt_deg for bs in stations], dtype=float)
        self.bearing = np.array([bs.bearing_deg for bs in stations], dtype=float)
        self.power = np.array([bs.power_dbm for bs in stations], dtype=float)
        self.power_max = np.array([bs.power_max_dbm for bs in stations], dtype=float)
        self.tilt_opt = np.array([bs.tilt_optimizable for bs in stations], dtype=bool)
        self.power_opt = np.array([bs.power_optimizable for bs in stations], dtype=bool)
        self.site_of = np.array([bs.site_id for bs in stations], dtype=int)

        site_ids = sorted(set(self.site_of.tolist()))
        if site_ids != list(range(len(site_ids))):
            raise ConfigError("network: site ids must be contiguous from 0")
        self.n_sites = len(site_ids)
        self.site_members = [np.flatnonzero(self.site_of == m) for m in range(self.n_sites)]
        for m, members in enumerate(self.site_members):
            ref = self.pos[members[0]]
            if not np.allclose(self.pos[members], ref, atol=0.0):
                raise ConfigError(f"site[{m}]: sectors do not share one position")
        self.site_pos = np.array(
            [self.pos[members[0]] for members in self.site_members], dtype=float
        )  # (M,2)
        self.site_ref_bearing = np.array(
            [self.bearing[members[0]] for members in self.site_members], dtype=float
        )
        # fixed per-sector offset from the site reference bearing
        self.sector_offset = wrap_angle_deg(
            self.bearing - self.site_ref_bearing[self.site_of]
        ).astype(float)
        if site_deployable is None:
            site_deployable = np.zeros(self.n_sites, dtype=bool)
        self.site_deployable = np.asarray(site_deployable, dtype=bool).copy()
        if self.site_deployable.shape != (self.n_sites,):
            raise ConfigError("network: site_deployable length must equal site count")

    # --- mutation keeping invariants -------------------------------------

    def set_tilts(self, tilt_deg):
        t = np.asarray(tilt_deg, dtype=float)
        self.tilt = np.clip(t, -90.0, 90.0)

    def set_powers(self, power_dbm):
        self.power = np.minimum(np.asarray(power_dbm, dtype=float), self.power_max)

    def set_site_positions(self, pos_m):
        """Move sites; every sector of a site follows its site position."""
        p = np.asarray(pos_m, dtype=float).reshape(self.n_sites, 2)
        self.site_pos = p.copy()
        self.pos = p[self.site_of].copy()

    def set_site_bearings(self, ref_deg):
        """Rotate sites; sector bearings keep their construction offsets."""
        r = np.asarray(ref_deg, dtype=float)
        w = wrap_angle_deg(r)
        w = np.where(w == -180.0, 180.0, w)
        self.site_ref_bearing = w.astype(float)
        b = wrap_angle_deg(self.site_ref_bearing[self.site_of] + self.sector_offset)
        self.bearing = np.where(b == -180.0, 180.0, b).astype(float)

    def station(self, i: int) -> BaseStation:
        """Detached single-sector view (for scalar ops and reporting)."""
        return BaseStation(
            id=i,
            site_id=int(self.site_of[i]),
            pos_xy=(float(self.pos[i, 0]), float(self.pos[i, 1])),
            height_m=float(self.height[i]),
            tilt_deg=float(self.tilt[i]),
            bearing_deg=float(self.bearing[i]),
            power_dbm=float(self.power[i]),
            power_max_dbm=float(self.power_max[i]),
            tilt_optimizable=bool(self.tilt_opt[i]),
            power_optimizable=bool(self.power_opt[i]),
        )

    def stations(self) -> list[BaseStation]:
        return [self.station(i) for i in range(self.n)]

    def copy(self) -> "Network":
        return Network(
            self.stations(), self.pattern, self.consts, self.site_deployable.copy()
        )


# ---------------------------------------------------------------------------
# Array kernels (samples x sectors)
# ---------------------------------------------------------------------------

@dataclass
class Geometry:
    """Position-dependent link fields, all (S, N); cacheable while sites sit still."""

    d2d_m: np.ndarray
    d3d_m: np.ndarray
    elev_deg: np.ndarray
    raw_az_deg: np.ndarray
    pathloss_db: np.ndarray


@dataclass
class LinkBudget:
    """RSS fields for the current parameters, plus the geometry they used."""

    geom: Geometry
    azoff_deg: np.ndarray  # (S,N) wrapped azimuth offset from each bearing
    rss_dbm: np.ndarray  # (S,N)
    rss_lin: np.ndarray  # (S,N) mW
    total_lin: np.ndarray  # (S,) sum of all RSS plus noise


def compute_geometry(grid, network: Network) -> Geometry:
    """Distances, angles and pathloss for every (sample, sector) pair."""
    dx = grid.xyz[:, 0:1] - network.pos[None, :, 0]
    dy = grid.xyz[:, 1:2] - network.pos[None, :, 1]
    dz = grid.xyz[:, 2:3] - network.height[None, :]
    d2d = np.hypot(dx, dy)
    d3d = np.sqrt(d2d * d2d + dz * dz)
    elev = np.degrees(np.arctan2(dz, d2d))
    raw_az = np.degrees(np.arctan2(dy, dx))
    a, b = network.consts.coeffs(grid.is_uav)
    pl = a[:, None] + b[:, None] * np.log10(d3d)
    return Geometry(d2d_m=d2d, d3d_m=d3d, elev_deg=elev, raw_az_deg=raw_az, pathloss_db=pl)


def link_budget(grid, network: Network, geom: Geometry | None = None) -> LinkBudget:
    """RSS of every sector at every sample, under current tilts/bearings/powers."""
    if geom is None:
        geom = compute_geometry(grid, network)
    pat = network.pattern
    toff = geom.elev_deg - network.tilt[None, :]
    azoff = wrap_angle_deg(geom.raw_az_deg - network.bearing[None, :])
    gain = (
        pat.a_max_dbi
        - 12.0 / pat.theta_3db_deg**2 * toff**2
        - 12.0 / pat.phi_3db_deg**2 * azoff**2
    )
    rss = network.power[None, :] + gain - geom.pathloss_db
    rss_lin = db_to_lin(rss)
    total = rss_lin.sum(axis=1) + network.consts.noise_lin
    return LinkBudget(geom=geom, azoff_deg=azoff, rss_dbm=rss, rss_lin=rss_lin, total_lin=total)


def serving_fields(lb: LinkBudget, assignment: np.ndarray):
    """(rss_serv_lin, sinr_lin, sinr_db) of each sample's assigned sector."""
    idx = np.arange(assignment.shape[0])
    rss_serv = lb.rss_lin[idx, assignment]
    sinr = rss_serv / (lb.total_lin - rss_serv)
    return rss_serv, sinr, lin_to_db(sinr)


def sinr_lin_matrix(lb: LinkBudget) -> np.ndarray:
    """SINR (linear) for every possible serving choice, (S, N)."""
    return lb.rss_lin / (lb.total_lin[:, None] - lb.rss_lin)
