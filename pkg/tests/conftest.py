import numpy as np
import pytest

import planarsieve as ps


def atoms_signal(geom, atoms):
    """Sum of time-frequency shifted window atoms on the sampling lattice."""
    t = geom.times()
    samples = np.zeros(geom.n, dtype=complex)
    for c, a, b in atoms:
        samples += c * ps.window_values(t - a) * np.exp(2j * np.pi * b * t)
    return ps.Signal(samples, geom.dt, geom.t0)


@pytest.fixture(scope="session")
def small_geom():
    return ps.SignalGeometry(321, 1.0 / 16, -10.0)


@pytest.fixture(scope="session")
def small_grid():
    return ps.TFGrid(65, 65, 1.0 / 8, 1.0 / 8, -4.0, -4.0)


@pytest.fixture(scope="session")
def tiny_geom():
    return ps.SignalGeometry(8, 0.5, -1.75)


@pytest.fixture(scope="session")
def tiny_grid():
    return ps.TFGrid(12, 12, 0.5, 1.0 / 8, -2.75, -0.75)


@pytest.fixture(scope="session")
def small_two_atom(small_geom):
    return atoms_signal(small_geom, [(0.8, 0.0, 0.0), (-0.5j, 1.0, 0.75)])


@pytest.fixture(scope="session")
def small_window_signal(small_geom):
    t = small_geom.times()
    return ps.Signal(ps.window_values(t).astype(complex),
                     small_geom.dt, small_geom.t0)
