"""Shared builders for small random test instances."""

import numpy as np
import pytest

from celldeploy.channel import AntennaPattern, BaseStation, Network, PathlossConstants
from celldeploy.density import SampleGrid


def make_network(
    rng,
    n_sites=2,
    sectors_per_site=3,
    box=500.0,
    deployable="all",
    pattern=None,
    consts=None,
):
    """Random multi-site network inside [-box, box]^2."""
    stations = []
    for m in range(n_sites):
        pos = tuple(rng.uniform(-box, box, 2))
        ref = rng.uniform(-180.0, 180.0)
        for j in range(sectors_per_site):
            stations.append(
                BaseStation(
                    id=len(stations),
                    site_id=m,
                    pos_xy=pos,
                    height_m=25.0,
                    tilt_deg=rng.uniform(-12.0, 4.0),
                    bearing_deg=ref + j * 360.0 / sectors_per_site,
                    power_dbm=rng.uniform(35.0, 43.0),
                    power_max_dbm=43.0,
                )
            )
    if deployable == "all":
        dep = np.ones(n_sites, dtype=bool)
    elif deployable == "none":
        dep = np.zeros(n_sites, dtype=bool)
    else:
        dep = np.asarray(deployable, dtype=bool)
    return Network(
        stations, pattern or AntennaPattern(), consts or PathlossConstants(), dep
    )


def make_grid(rng, n_samples=200, box=600.0, uav_fraction=0.3, r_mix=0.5):
    """Random weighted samples: ground users at 1.5 m, aerial at 105-150 m."""
    xy = rng.uniform(-box, box, (n_samples, 2))
    is_uav = rng.random(n_samples) < uav_fraction
    z = np.where(is_uav, rng.uniform(105.0, 150.0, n_samples), 1.5)
    raw = rng.uniform(0.2, 1.0, n_samples)
    cond = np.zeros(n_samples)
    weight = np.zeros(n_samples)
    for mask, mass in ((~is_uav, r_mix), (is_uav, 1.0 - r_mix)):
        if mask.any():
            cond[mask] = raw[mask] / raw[mask].sum()
            weight[mask] = mass * cond[mask]
    return SampleGrid(
        xyz=np.column_stack([xy, z]),
        weight=weight,
        cond_weight=cond,
        is_uav=is_uav,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
