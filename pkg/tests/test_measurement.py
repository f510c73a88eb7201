import math

import numpy as np
import pytest
from scipy.stats import chisquare

import core_state
import measurement
from errors import QQLabError, EmptyRecord, InconsistentTotals
from measurement import MeasurementConfig

S = 1 / math.sqrt(2)


def test_hv_examples(product_h, singlet):
    assert np.allclose(measurement.conditional_probabilities_hv(product_h).probabilities, [1, 0, 0, 0])
    assert np.allclose(measurement.conditional_probabilities_hv(singlet).probabilities, [0, 0.5, 0.5, 0])
    q = core_state.make_ququart(0.6, 0, 0.8, 0)
    assert np.allclose(measurement.conditional_probabilities_hv(q).probabilities, [0.36, 0, 0, 0.64])


def test_hv_matches_wave_function_projection(rng):
    config = MeasurementConfig.from_angles(0.0, 0.0)
    for _ in range(200):
        q = core_state.random_ququart(rng)
        closed = measurement.conditional_probabilities_hv(q).probabilities
        assert abs(closed.sum() - 1) < 1e-12
        assert np.allclose(closed, measurement.exact_distribution(q, config).probabilities, atol=1e-12)


def test_rotated_examples(rng, singlet):
    q = core_state.random_ququart(rng)
    assert np.allclose(measurement.conditional_probabilities_rotated(q, 0.0).probabilities,
                       measurement.conditional_probabilities_hv(q).probabilities)

    dist = measurement.conditional_probabilities_rotated(core_state.make_ququart(0, 1, 0, 0), math.pi / 4)
    assert math.isclose(dist.probability(math.pi / 4, math.pi / 4), 0.5)

    for alpha in np.linspace(0, math.pi, 7):
        dist = measurement.conditional_probabilities_rotated(singlet, alpha)
        assert np.allclose(dist.probabilities, [0, 0.5, 0.5, 0], atol=1e-15)


def test_rotated_closed_form_matches_projection(rng):
    for _ in range(300):
        q = core_state.random_ququart(rng)
        alpha = rng.uniform(0, math.pi)
        closed = measurement.conditional_probabilities_rotated(q, alpha).probabilities
        projected = measurement.exact_distribution(q, MeasurementConfig.from_angles(alpha, alpha)).probabilities
        assert np.allclose(closed, projected, atol=1e-12)
        assert abs(closed.sum() - 1) < 1e-12


def test_freq_resolved_examples():
    plus = core_state.make_ququart(0, 1, 0, 0)
    dist = measurement.freq_resolved_distribution(plus, 0.0)
    assert math.isclose(dist.conditional_w(0, math.pi / 2, 'h', 'l'), 0.5)

    dist = measurement.freq_resolved_distribution(core_state.make_ququart(0, S, 0, S), 0.0)
    assert math.isclose(dist.conditional_w(0, math.pi / 2, 'h', 'l'), 1.0)
    assert abs(dist.conditional_w(0, math.pi / 2, 'l', 'h')) < 1e-15

    dist = measurement.freq_resolved_distribution(core_state.make_ququart(0, S, 0, -S), 0.0)
    assert abs(dist.conditional_w(0, math.pi / 2, 'h', 'l')) < 1e-15


def test_freq_resolved_marginal_and_exchange_symmetry(rng):
    for _ in range(200):
        q = core_state.random_ququart(rng)
        alpha = rng.uniform(0, math.pi)
        dist = measurement.freq_resolved_distribution(q, alpha)
        assert len(dist.outcomes) == 16
        assert abs(dist.probabilities.sum() - 1) < 1e-12
        marginal = dist.marginal_polarization().probabilities
        assert np.allclose(marginal, measurement.conditional_probabilities_rotated(q, alpha).probabilities,
                           atol=1e-12)
        p = dist.probabilities.reshape(2, 2, 2, 2)
        assert np.allclose(p, p.transpose(1, 0, 3, 2), atol=1e-12)


def test_exact_distribution_sums_to_one_for_any_setting(rng):
    for _ in range(200):
        q = core_state.random_ququart(rng)
        a, b = rng.uniform(0, math.pi, 2)
        for filters in ((None, None), ('h', 'l')):
            dist = measurement.exact_distribution(q, MeasurementConfig.from_angles(a, b, *filters))
            assert abs(dist.probabilities.sum() - 1) < 1e-12
            assert np.all(dist.probabilities >= -1e-15)


def test_background_mixes_in_uniform_counts(product_h):
    config = MeasurementConfig.from_angles(0, 0, background_rate=0.1)
    dist = measurement.exact_distribution(product_h, config)
    assert np.allclose(dist.probabilities, [0.925, 0.025, 0.025, 0.025])


def test_angle_normalization():
    assert measurement.normalize_angle(math.pi) == 0.0
    assert math.isclose(measurement.normalize_angle(-math.pi / 4), 3 * math.pi / 4)
    assert math.isclose(measurement.PolarizerSetting(1, 3 * math.pi / 2).angle, math.pi / 2)
    assert measurement.same_angle(0.0, math.pi)
    assert measurement.angle_label(math.radians(135)) == '135'


@pytest.mark.parametrize('kwargs', [
    {'channel': 3, 'angle': 0.0},
    {'channel': 1, 'angle': 0.0, 'frequency_filter': 'x'},
])
def test_polarizer_setting_validation(kwargs):
    with pytest.raises(QQLabError):
        measurement.PolarizerSetting(**kwargs)


def test_measurement_config_validation():
    with pytest.raises(QQLabError):
        MeasurementConfig.from_angles(0, 0, n_total=-1)
    with pytest.raises(QQLabError):
        MeasurementConfig.from_angles(0, 0, background_rate=2.0)
    with pytest.raises(QQLabError):
        MeasurementConfig((measurement.PolarizerSetting(2, 0), measurement.PolarizerSetting(1, 0)))


def test_outcome_labels():
    outcomes = measurement.outcomes_for(MeasurementConfig.from_angles(0, math.pi / 2, 'h', 'l'))
    assert len(outcomes) == 16
    assert outcomes[0].label == '0:h|90:h'
    assert outcomes[-1].label == '90:l|0:l'


def test_simulate_degenerate_distribution(product_h):
    for seed in (0, 1, 99):
        record = measurement.simulate_coincidences(product_h, MeasurementConfig.from_angles(0, 0, n_total=1000, seed=seed))
        assert list(record.counts.values()) == [1000, 0, 0, 0]


def test_simulate_is_deterministic_per_seed(rng):
    q = core_state.random_ququart(rng)
    config = MeasurementConfig.from_angles(0.3, 1.1, n_total=5000, seed=42)
    first = measurement.simulate_coincidences(q, config)
    assert first == measurement.simulate_coincidences(q, config)
    assert first.rng_algorithm == 'numpy.random.PCG64'
    other = measurement.simulate_coincidences(q, MeasurementConfig.from_angles(0.3, 1.1, n_total=5000, seed=43))
    assert other.counts != first.counts


def test_simulate_singlet_cross_ratio_within_three_sigma(singlet):
    for seed in range(3):
        record = measurement.simulate_coincidences(
            singlet, MeasurementConfig.from_angles(0, 0, n_total=10 ** 6, seed=seed))
        assert 0.4985 <= record.ratio(0, math.pi / 2) <= 0.5015


def test_simulated_counts_sum_to_n_total(rng):
    q = core_state.random_ququart(rng)
    record = measurement.simulate_coincidences(q, MeasurementConfig.from_angles(0, math.pi / 2, 'h', 'l',
                                                                               n_total=12345, seed=3))
    assert len(record.counts) == 16
    assert sum(record.counts.values()) == 12345
    record.validate()


def test_exact_mode_stores_probabilities(rng):
    q = core_state.random_ququart(rng)
    config = MeasurementConfig.from_angles(0.2, 0.2)
    record = measurement.simulate_coincidences(q, config)
    assert record.exact
    assert np.allclose(record.ratios(), measurement.exact_distribution(q, config).probabilities)
    record.validate()


def test_simulated_counts_pass_chi_square():
    q = core_state.make_ququart(0.5 * np.exp(0.3j), 0.5, 0.5 * np.exp(-0.4j), 0.5 * np.exp(0.7j))
    failures = 0
    for seed in range(100):
        config = MeasurementConfig.from_angles(math.radians(30), math.radians(70), n_total=10 ** 5, seed=seed)
        record = measurement.simulate_coincidences(q, config)
        expected = measurement.exact_distribution(q, config).probabilities * config.n_total
        _, pvalue = chisquare(list(record.counts.values()), expected)
        if pvalue < 1e-3:
            failures += 1
    assert failures <= 2


def test_record_validation(product_h):
    config = MeasurementConfig.from_angles(0, 0, n_total=10)
    outcomes = measurement.outcomes_for(config)
    with pytest.raises(EmptyRecord):
        measurement.CountRecord(config, dict.fromkeys(outcomes, 0)).validate()
    with pytest.raises(InconsistentTotals):
        measurement.CountRecord(config, dict(zip(outcomes, [5, 0, 0, 0]))).validate()
    with pytest.raises(InconsistentTotals):
        measurement.CountRecord(MeasurementConfig.from_angles(0, 0), dict(zip(outcomes, [0.5, 0, 0, 0]))).validate()
