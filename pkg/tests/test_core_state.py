import math

import numpy as np
import pytest

import core_state
from errors import NotNormalized, ZeroState, QQLabError

S = 1 / math.sqrt(2)
H, V, h, l = 0, 1, 0, 1


def test_make_ququart_accepts_normalized_inputs():
    q = core_state.make_ququart(1, 0, 0, 0)
    assert q.c1 == 1
    q = core_state.make_ququart(0.5, 0.5, 0.5, 0.5)
    assert np.isclose(q.norm_squared(), 1.0)


def test_make_ququart_rejects_bad_inputs():
    with pytest.raises(NotNormalized):
        core_state.make_ququart(1, 1, 0, 0)
    with pytest.raises(ZeroState):
        core_state.make_ququart(0, 0, 0, 0)
    with pytest.raises(QQLabError):
        core_state.make_ququart(float('nan'), 0, 0, 0)


def test_make_ququart_renormalize_flag():
    q = core_state.make_ququart(1, 1, 0, 0, renormalize=True)
    assert np.isclose(q.c1, S) and np.isclose(q.b_plus, S)


def test_b_from_c_examples():
    assert np.allclose(core_state.b_from_c(S, S), (1, 0))
    assert np.allclose(core_state.b_from_c(S, -S), (0, 1))
    assert np.allclose(core_state.b_from_c(1, 0), (S, S))


def test_b_from_c_inverse_and_norm(rng):
    for _ in range(200):
        c2, c3 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b_plus, b_minus = core_state.b_from_c(c2, c3)
        assert math.isclose(abs(b_plus) ** 2 + abs(b_minus) ** 2, abs(c2) ** 2 + abs(c3) ** 2, rel_tol=1e-12)
        assert np.allclose(core_state.c_from_b(b_plus, b_minus), (c2, c3), atol=1e-12)


def test_wave_function_of_single_basis_state(product_h):
    psi = core_state.wave_function(product_h)
    expected = np.zeros((2, 2, 2, 2), dtype=complex)
    expected[H, h, H, l] = expected[H, l, H, h] = S
    assert np.allclose(psi, expected, atol=1e-15)


def test_wave_function_of_singlet(singlet):
    psi = core_state.wave_function(singlet)
    assert np.isclose(psi[H, h, V, l], 0.5)
    assert np.isclose(psi[H, l, V, h], -0.5)
    assert np.isclose(psi[V, l, H, h], 0.5)
    assert np.isclose(psi[V, h, H, l], -0.5)
    assert np.count_nonzero(np.abs(psi) > 1e-15) == 4


def test_wave_function_symmetric_and_normalized(rng):
    for _ in range(500):
        psi = core_state.wave_function(core_state.random_ququart(rng))
        assert np.allclose(psi, psi.transpose(2, 3, 0, 1), atol=1e-12)
        assert abs(np.sum(np.abs(psi) ** 2) - 1) < 1e-12


def test_rotate_frame_examples(product_h):
    rng = np.random.default_rng(1)
    q = core_state.random_ququart(rng)
    assert np.allclose(core_state.rotate_frame(q, 0.0).vector(), q.vector())

    r = core_state.rotate_frame(product_h, math.pi / 2)
    assert np.allclose(r.vector(), [0, 0, 1, 0], atol=1e-15)

    r = core_state.rotate_frame(product_h, math.pi / 4)
    assert np.allclose(r.vector(), [0.5, -S, 0.5, 0], atol=1e-15)
    assert abs(r.norm_squared() - 1) < 1e-12


def test_rotate_frame_preserves_norm_and_b_minus(rng):
    for _ in range(1000):
        q = core_state.random_ququart(rng)
        alpha = rng.uniform(-math.pi, math.pi)
        r = core_state.rotate_frame(q, alpha)
        assert abs(r.norm_squared() - q.norm_squared()) < 1e-12
        assert r.b_minus == q.b_minus
        back = core_state.rotate_frame(r, -alpha)
        assert np.allclose(back.vector(), q.vector(), atol=1e-10)


def test_rotated_amplitudes_match_rotated_wave_function(rng):
    for _ in range(200):
        q = core_state.random_ququart(rng)
        alpha = rng.uniform(0, math.pi)
        direct = core_state.rotate_polarization(core_state.wave_function(q), alpha)
        from_params = core_state.wave_function(core_state.rotate_frame(q, alpha))
        assert np.allclose(direct, from_params, atol=1e-12)


def test_pure_schmidt_number_examples(product_h, singlet):
    assert math.isclose(core_state.pure_schmidt_number(core_state.wave_function(product_h)), 2.0, rel_tol=1e-12)
    assert math.isclose(core_state.pure_schmidt_number(core_state.wave_function(singlet)), 4.0, rel_tol=1e-12)


def test_every_ququart_is_entangled(rng):
    for _ in range(10000):
        psi = core_state.wave_function(core_state.random_ququart(rng))
        assert core_state.pure_schmidt_number(psi) > 1 + 1e-9


def test_canonicalize_phase_conventions():
    q = core_state.make_ququart(0.5j, 0.5j, 0.5, -0.5)
    c = core_state.canonicalize(q)
    assert c.b_plus.imag == 0 and c.b_plus.real > 0
    # same ray
    overlap = np.vdot(q.vector(), c.vector())
    assert math.isclose(abs(overlap), 1.0, rel_tol=1e-12)

    c = core_state.canonicalize(core_state.make_ququart(-0.6j, 0, 0.8, 0))
    assert c.c1 == 0.6 and np.isclose(c.c4, 0.8j)

    c = core_state.canonicalize(core_state.make_ququart(0, 0, 0, -1j))
    assert c.b_minus == 1


def test_state_dict_roundtrip():
    q = core_state.make_ququart(0.5j, 0.5, -0.5, 0.5)
    data = q.to_dict()
    assert data['version'] == 'v1'
    assert data['c1'] == [0.0, 0.5]
    assert core_state.QuquartParams.from_dict(data) == q
    with pytest.raises(QQLabError):
        core_state.QuquartParams.from_dict({'version': 'v2', **{k: [0, 0] for k in core_state.FIELDS}})
