import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_params
from qubitlcu.channels import check_cptp, from_universal_params, generalized_amplitude_damping
from qubitlcu.linalg import I2, X, Z, RejectedInputError, is_unitary
from qubitlcu.lcu import (
    build_lcu,
    decompose_four_unitaries,
    duality_gates,
    lcu_amplitudes,
    reconstruct_kraus,
    w_block,
    w_block_direct,
)

angles = st.floats(0, 2 * math.pi, allow_nan=False)


def test_identity_corner():
    plan = build_lcu(1.0, 0.0, 0.0, 0.0, 0.0)
    assert np.allclose(plan.coefficients, [1, 0, 0, 0])
    assert is_unitary(plan.v) and is_unitary(plan.w)
    k = reconstruct_kraus(plan).kraus
    assert np.allclose(k[0], I2)
    assert all(np.allclose(m, 0) for m in k[1:])


def test_generic_plan_unitary():
    plan = build_lcu(0.6, math.pi / 3, math.pi / 4, math.pi / 2, math.pi / 6)
    assert np.max(np.abs(plan.v.conj().T @ plan.v - np.eye(4))) < 1e-10
    assert np.max(np.abs(plan.w.conj().T @ plan.w - np.eye(4))) < 1e-10
    assert np.all(plan.w[:2, 2:] == 0) and np.all(plan.w[2:, :2] == 0)


def test_amplitudes_match_closed_form(rng):
    for _ in range(50):
        P, a1, b1, a2, b2 = random_params(rng)
        plan = build_lcu(P, a1, b1, a2, b2)
        expected = [
            math.sqrt(P * (1 + math.cos(b1 - a1)) / 2),
            math.sqrt(P * (1 - math.cos(b1 - a1)) / 2),
            math.sqrt((1 - P) * (1 + math.cos(b2 - a2)) / 2),
            math.sqrt((1 - P) * (1 - math.cos(b2 - a2)) / 2),
        ]
        assert np.allclose(plan.coefficients, expected, atol=1e-12)
        assert np.allclose(lcu_amplitudes(plan.params), expected, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(angles, angles)
def test_w_block_orthogonal_and_matches_quotient_form(alpha, beta):
    w = w_block(alpha, beta)
    assert np.allclose(w.T @ w, np.eye(2), atol=1e-12)
    c = math.cos(beta - alpha)
    if abs(1 - abs(c)) > 1e-6:
        assert np.allclose(w, w_block_direct(alpha, beta), atol=1e-9)
    # the two unnormalized columns are orthogonal by a trig identity
    lhs = (math.cos(beta) + math.cos(alpha)) * (math.cos(beta) - math.cos(alpha)) + (
        math.sin(beta) + math.sin(alpha)
    ) * (math.sin(beta) - math.sin(alpha))
    assert abs(lhs) < 1e-12


def test_w_block_degenerate_point():
    for beta in (0.0, 0.7, math.pi, 4.0):
        w = w_block(beta, beta)
        assert np.allclose(w[:, 1], [-math.sin(beta), math.cos(beta)], atol=1e-15)


def test_duality_gates_closed_form(rng):
    for _ in range(20):
        P, a1, b1, a2, b2 = random_params(rng)
        L = duality_gates(build_lcu(P, a1, b1, a2, b2))
        assert np.allclose(L[0], math.sqrt(P) * np.diag([math.cos(b1), math.cos(a1)]), atol=1e-12)
        assert np.allclose(L[1], math.sqrt(P) * np.diag([math.sin(b1), math.sin(a1)]), atol=1e-12)
        assert np.allclose(sum(g.conj().T @ g for g in L), I2, atol=1e-12)


def test_l0_expansion():
    # W00 V00 + W01 V10 Z = sqrt(P) ((cos b + cos a) I + (cos b - cos a) Z) / 2
    P, a, b = 0.6, math.pi / 3, math.pi / 4
    L0 = duality_gates(build_lcu(P, a, b, 0.2, 0.9))[0]
    expected = math.sqrt(P) * ((math.cos(b) + math.cos(a)) * I2 + (math.cos(b) - math.cos(a)) * Z) / 2
    assert np.allclose(L0, expected, atol=1e-12)


def test_reconstruct_class_a():
    for b1 in np.arange(9) * math.pi / 4:
        got = reconstruct_kraus(build_lcu(0.6, 0, b1, math.pi / 2, math.pi / 6))
        want = from_universal_params(0.6, 0, b1, math.pi / 2, math.pi / 6)
        for g, w in zip(got.kraus, want.kraus):
            assert np.max(np.abs(g - w)) < 1e-12
        assert check_cptp(got).completeness_residual < 1e-12


def test_four_unitaries_identity():
    dec = decompose_four_unitaries(I2)
    u1, u2, u3, u4 = dec.unitaries
    assert np.allclose(u1, I2) and np.allclose(u2, I2)
    assert np.allclose(u3, 1j * I2) and np.allclose(u4, -1j * I2)
    assert np.allclose(dec.recombine(), I2)


def test_four_unitaries_ad_kraus():
    k0 = generalized_amplitude_damping(0.5, 1.0).kraus[0]
    assert np.allclose(k0, np.diag([1, math.sqrt(0.5)]))
    dec = decompose_four_unitaries(k0)
    assert np.max(np.abs(dec.recombine() - k0)) < 1e-10


def test_four_unitaries_random(rng):
    for _ in range(50):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a /= np.linalg.norm(a, 2) * rng.uniform(1.0, 3.0)
        dec = decompose_four_unitaries(a)
        for u in dec.unitaries:
            assert np.max(np.abs(u.conj().T @ u - I2)) < 1e-9
        assert np.max(np.abs(dec.recombine() - a)) < 1e-8


def test_four_unitaries_norm_check():
    with pytest.raises(RejectedInputError):
        decompose_four_unitaries(2 * X)
    dec = decompose_four_unitaries(2 * X, rescale=True)
    assert dec.scale == pytest.approx(2.0)
    assert np.allclose(dec.recombine(), 2 * X)
