import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ad_capacity_oracle, random_density, random_ket, random_params, random_unitary
from qubitlcu.channels import (
    QubitChannel,
    apply,
    from_universal_params,
    generalized_amplitude_damping,
    identity_channel,
    phase_damping,
)
from qubitlcu.linalg import I2, bloch_density, partial_trace, pure_density
from qubitlcu.metrics import (
    binary_entropy,
    bloch_grid,
    coherent_information,
    coherent_information_batch,
    entanglement_fidelity,
    entanglement_fidelity_purified,
    one_shot_capacity,
    purify,
    state_fidelity,
    von_neumann_entropy,
)


def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert abs(von_neumann_entropy(I2 / 2) - 1.0) < 1e-12
    h = -(0.9 * math.log2(0.9) + 0.1 * math.log2(0.1))
    assert von_neumann_entropy(np.diag([0.9, 0.1])) == pytest.approx(h, abs=1e-12)
    assert h == pytest.approx(0.4689955935892812, abs=1e-15)


def test_entropy_bounds_and_unitary_invariance(rng):
    for _ in range(50):
        rho = random_density(rng)
        s = von_neumann_entropy(rho)
        assert 0.0 <= s <= 1.0
        u = random_unitary(rng)
        assert abs(von_neumann_entropy(u @ rho @ u.conj().T) - s) < 1e-10


def test_fidelity_examples(rng):
    rho = random_density(rng)
    assert state_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert state_fidelity(np.diag([1.0, 0]), np.diag([0, 1.0])) == 0.0
    assert state_fidelity(np.diag([1.0, 0]), I2 / 2) == pytest.approx(0.5)


def test_fidelity_symmetric(rng):
    a, b = random_density(rng), random_density(rng)
    assert state_fidelity(a, b) == pytest.approx(state_fidelity(b, a), abs=1e-10)


def test_purify_examples(rng):
    psi = purify(I2 / 2).amplitudes
    assert np.allclose(partial_trace(np.outer(psi, psi.conj()), [2, 2], [0]), I2 / 2)
    assert np.allclose(np.abs(psi), [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])
    ket = random_ket(rng)
    psi = purify(pure_density(ket)).amplitudes
    assert abs(abs(np.vdot(np.kron(ket, [1, 0]), psi)) - 1) < 1e-10


def test_purify_reduces_to_input(rng):
    for _ in range(20):
        rho = random_density(rng)
        psi = purify(rho).amplitudes
        assert np.allclose(partial_trace(np.outer(psi, psi.conj()), [2, 2], [0]), rho, atol=1e-10)


def test_entanglement_fidelity_forms(rng):
    rho = random_density(rng)
    assert entanglement_fidelity(rho, identity_channel()) == pytest.approx(1.0)
    deph = phase_damping(1.0)
    assert entanglement_fidelity(I2 / 2, deph) == pytest.approx(0.5)
    assert entanglement_fidelity_purified(I2 / 2, deph) == pytest.approx(0.5)
    for _ in range(30):
        ch = from_universal_params(*random_params(rng))
        rho = random_density(rng)
        fe = entanglement_fidelity(rho, ch)
        assert abs(fe - entanglement_fidelity_purified(rho, ch)) < 1e-10
        assert fe <= state_fidelity(rho, apply(ch, rho)) + 1e-9


def test_coherent_information_examples(rng):
    assert coherent_information(identity_channel(), I2 / 2) == pytest.approx(1.0, abs=1e-12)
    assert abs(coherent_information(phase_damping(1.0), I2 / 2)) < 1e-12
    ch = from_universal_params(*random_params(rng))
    assert abs(coherent_information(ch, pure_density(random_ket(rng)))) < 1e-9


def test_batch_matches_purification_route(rng):
    ch = from_universal_params(*random_params(rng))
    pts = bloch_grid(7)
    batch = coherent_information_batch(ch, pts)
    direct = [coherent_information(ch, bloch_density(p)) for p in pts]
    assert np.allclose(batch, direct, atol=1e-9)


def test_bloch_grid_shape():
    g = bloch_grid(5)
    assert g.shape == (125, 3)
    r = np.linalg.norm(g, axis=1)
    assert r.min() == 0.0 and r.max() == pytest.approx(1.0)


def test_capacity_identity():
    res = one_shot_capacity(identity_channel())
    assert res.value == pytest.approx(1.0, abs=1e-4)
    assert np.allclose(res.argmax_state, I2 / 2, atol=1e-3)
    assert res.grid_resolution == 21 and res.optimizer_trace


def test_capacity_replacer_zero():
    res = one_shot_capacity(generalized_amplitude_damping(1.0, 1.0))
    assert res.value < 1e-4


@pytest.mark.parametrize("lam", [0.2, 0.5])
def test_capacity_ad_oracle(lam):
    got = one_shot_capacity(generalized_amplitude_damping(lam, 1.0)).value
    assert got == pytest.approx(ad_capacity_oracle(lam), abs=1e-3)


def test_ad_oracle_frozen_value():
    # brute force over p at 2e5 points, cross-checked against the optimizer
    assert ad_capacity_oracle(0.2) == pytest.approx(0.5062152409, abs=1e-9)


def test_capacity_argmax_consistent(rng):
    ch = from_universal_params(*random_params(rng))
    res = one_shot_capacity(ch)
    assert res.value >= 0
    assert abs(res.value - max(coherent_information(ch, res.argmax_state), 0.0)) < 1e-6


def test_gad_capacity_monotone_in_lambda():
    caps = [one_shot_capacity(generalized_amplitude_damping(l, 1.0)).value for l in np.linspace(0, 1, 21)]
    assert all(b <= a + 1e-9 for a, b in zip(caps, caps[1:]))


def test_unital_branch_a_maxima():
    from qubitlcu.channels import unital

    for b in (0.0, math.pi / 2, math.pi):
        assert one_shot_capacity(unital(b, b, 0.6, "a")).value == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_pure_inputs_have_zero_coherent_information(P, a, b):
    ch = from_universal_params(P, a, b, b, a)
    ket = np.array([math.cos(a / 2), math.sin(a / 2) * np.exp(1j * b)])
    assert abs(coherent_information(ch, pure_density(ket))) < 1e-9


def test_binary_entropy():
    assert np.allclose(binary_entropy([0, 0.5, 1]), [0, 1, 0])


def test_metrics_reject_invalid_state():
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([0.8, 0.8]))
    with pytest.raises(ValueError):
        coherent_information(QubitChannel((I2,)), np.eye(3) / 3)
