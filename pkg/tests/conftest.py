"""Shared fixtures: the red-LED reference setup and a calibrated profile."""

import warnings

import numpy as np
import pytest

import svehdr as sv

EOL = 3400
E2 = 0.20
E3 = 0.09
GAIN = 10000.0          # DN per (irradiance unit * second)


def exact_inverse(values, provenance, eol=EOL, e2=E2, e3=E3):
    """Ground-truth piecewise inversion of the tier merge (the oracle)."""
    v = np.asarray(values, dtype=float)
    return np.where(provenance == 0, v,
           np.where(provenance == 1, (v - eol) / e2, (v - 2 * eol) / e3))


def flatfield_series(n=20, s_lo_frac=0.08, s_hi_frac=0.98, knee_margin=0.15,
                     shape=(512, 512), sensor=None, roles=None, level=1.0):
    """Noiseless flat-field series spanning all three tiers of `roles`."""
    roles = roles or sv.roles_for_wavelength(625)
    sensor = sensor or sv.SensorModel(gain=GAIN, eol=EOL)
    per_second = sensor.gain * level
    knees = (EOL / per_second, EOL / (roles.e2 * per_second))
    times = sv.flatfield_times(EOL * s_lo_frac / per_second,
                               EOL / roles.e3 * s_hi_frac / per_second, n,
                               knee_times=knees, knee_margin=knee_margin)
    scene = sv.make_flatfield(level, shape)
    entries = tuple((float(t), sv.expose(scene, sensor, sv.RGGB, roles, float(t)))
                    for t in times)
    return sv.ExposureSeries(entries)


@pytest.fixture(scope="session")
def red_roles():
    return sv.roles_for_wavelength(625)


@pytest.fixture(scope="session")
def sensor():
    return sv.SensorModel(gain=GAIN, eol=EOL)


@pytest.fixture(scope="session")
def red_profile(red_roles, sensor):
    """Standard noiseless calibration used across the suite."""
    series = flatfield_series(roles=red_roles, sensor=sensor)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return sv.calibrate(series, layout=sv.RGGB, roles=red_roles, eol=EOL)
