import math

import numpy as np
import pytest

import core_state
import measurement
import reconstruction


def campaign_records(q, plan=None, n_total=0, seed_base=0):
    plan = reconstruction.campaign() if plan is None else plan
    records = []
    for index, (a, b, f1, f2) in enumerate(plan):
        config = measurement.MeasurementConfig.from_angles(
            math.radians(a), math.radians(b), f1, f2, n_total=n_total, seed=seed_base + index)
        records.append(measurement.simulate_coincidences(q, config))
    return records


def well_conditioned_states(rng, count, floor=0.05):
    """Canonical random states whose four amplitudes all exceed floor in magnitude."""
    states = []
    while len(states) < count:
        q = core_state.canonicalize(core_state.random_ququart(rng))
        if np.min(np.abs(q.vector())) >= floor:
            states.append(q)
    return states


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_records():
    return campaign_records


@pytest.fixture
def conditioned_states():
    return well_conditioned_states


@pytest.fixture
def product_h():
    return core_state.make_ququart(1, 0, 0, 0)


@pytest.fixture
def singlet():
    return core_state.make_ququart(0, 0, 0, 1)
