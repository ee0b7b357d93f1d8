import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_params, random_unitary
from qubitlcu import channels as chm
from qubitlcu.channels import (
    ChannelSpecError,
    QubitChannel,
    apply,
    apply_extended,
    channel_from_spec,
    check_cptp,
    conjugate,
    from_universal_params,
    generalized_amplitude_damping,
    identity_channel,
    kraus_equal,
    load_channel_spec,
    pauli_transfer,
    phase_damping,
    quasiextreme,
)
from qubitlcu.linalg import I2, X, Y, Z, RejectedInputError, bloch_density, partial_trace

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
probs = st.floats(0, 1, allow_nan=False)


def test_identity_corner():
    ch = from_universal_params(1.0, 0.0, 0.0, 0.3, 1.1)
    assert np.allclose(ch.kraus[0], I2)
    for k in ch.kraus[1:]:
        assert np.allclose(k, 0)


def test_class_a_k3():
    ch = from_universal_params(0.6, 0.0, 0.0, math.pi / 2, math.pi / 6)
    assert np.allclose(ch.kraus[3], math.sqrt(0.4) * np.array([[0, 1], [0.5, 0]]), atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(probs, angles, angles, angles, angles)
def test_universal_family_is_cptp(P, a1, b1, a2, b2):
    ch = from_universal_params(P, a1, b1, a2, b2)
    rep = check_cptp(ch)
    assert rep.ok and rep.completeness_residual < 1e-12
    t = pauli_transfer(ch).t_matrix
    assert np.allclose(t[0], [1, 0, 0, 0], atol=1e-12)


def test_quasiextreme_examples():
    assert np.allclose(chm.choi_matrix(quasiextreme(0, 0)), chm.choi_matrix(identity_channel()))
    ch = quasiextreme(math.pi / 2, 0)
    assert np.allclose(ch.kraus[0], np.diag([1, 0]), atol=1e-15)
    assert np.allclose(ch.kraus[1], [[0, 1], [0, 0]], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(angles, angles)
def test_quasiextreme_transfer_matrix(alpha, beta):
    # Hand expansion: Phi(X) = cos(a - b) X and Phi(Y) = cos(a + b) Y.
    u, v = alpha - beta, alpha + beta
    tm = pauli_transfer(quasiextreme(alpha, beta))
    assert np.allclose(tm.T, np.diag([math.cos(u), math.cos(v), math.cos(u) * math.cos(v)]), atol=1e-12)
    assert np.allclose(tm.t, [0, 0, math.sin(u) * math.sin(v)], atol=1e-12)
    assert np.isclose(tm.t[2], 0.5 * (math.cos(2 * beta) - math.cos(2 * alpha)))


def test_gad_limits(rng):
    rho = random_density(rng)
    for P in (0.0, 0.3, 1.0):
        assert np.allclose(apply(generalized_amplitude_damping(0.0, P), rho), rho)
    assert np.allclose(apply(generalized_amplitude_damping(1.0, 1.0), rho), np.diag([1, 0]))
    assert np.allclose(apply(generalized_amplitude_damping(1.0, 0.0), rho), np.diag([0, 1]))


def test_gad_rejects_out_of_range():
    with pytest.raises(RejectedInputError):
        generalized_amplitude_damping(1.5, 0.5)


def test_phase_damping(rng):
    rho = random_density(rng)
    assert np.allclose(apply(phase_damping(0, 0, 0.4), rho), rho)
    assert np.allclose(apply(phase_damping(1.0), rho), np.diag(np.diag(rho)))
    for _ in range(20):
        assert check_cptp(phase_damping(*rng.uniform(size=3))).ok


def test_apply_examples():
    plus = bloch_density([1, 0, 0])
    for b1 in np.arange(9) * math.pi / 4:
        out = apply(from_universal_params(0.6, 0, b1, math.pi / 2, math.pi / 6), plus)
        assert np.isclose(np.trace(X @ out).real, 0.6 * math.cos(b1) + 0.2, atol=1e-12)
    assert np.allclose(apply(phase_damping(1.0), plus), I2 / 2)
    assert np.allclose(apply(identity_channel(), plus), plus)


def test_apply_rejects_invalid_density():
    with pytest.raises(RejectedInputError):
        apply(identity_channel(), np.diag([0.7, 0.7]))


def test_apply_extended(rng):
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    bell_rho = np.outer(bell, bell)
    assert np.allclose(apply_extended(identity_channel(), bell_rho), bell_rho)
    out = apply_extended(phase_damping(1.0), bell_rho)
    assert np.allclose(out, np.diag([0.5, 0, 0, 0.5]))
    for _ in range(20):
        ch = from_universal_params(*random_params(rng))
        rho_wr = random_density(rng, 4)
        lhs = partial_trace(apply_extended(ch, rho_wr), [2, 2], [0])
        rhs = apply(ch, partial_trace(rho_wr, [2, 2], [0]))
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_pauli_transfer_examples(rng):
    assert np.allclose(pauli_transfer(identity_channel()).t_matrix, np.eye(4))
    tm = pauli_transfer(generalized_amplitude_damping(1.0, 1.0))
    assert np.allclose(tm.t, [0, 0, 1]) and np.allclose(tm.T, 0)
    ch = from_universal_params(*random_params(rng))
    rho = random_density(rng)
    r = [np.trace(s @ rho).real for s in (X, Y, Z)]
    out = apply(ch, rho)
    assert np.allclose(tm.map_bloch([0, 0, 0]), [0, 0, 1])
    assert np.allclose(pauli_transfer(ch).map_bloch(r), [np.trace(s @ out).real for s in (X, Y, Z)])


def test_conjugate(rng):
    ch = from_universal_params(*random_params(rng))
    assert kraus_equal(conjugate(ch, I2, I2), ch)
    u = random_unitary(rng)
    t = pauli_transfer(conjugate(identity_channel(), u, u.conj().T)).t_matrix
    assert np.allclose(t, np.eye(4), atol=1e-12)


def _rotation(u):
    return np.array([[0.5 * np.trace(a @ u @ b @ u.conj().T).real for b in (X, Y, Z)] for a in (X, Y, Z)])


def test_conjugate_transfer_structure(rng):
    for _ in range(10):
        ch = from_universal_params(*random_params(rng))
        ua, ub = random_unitary(rng), random_unitary(rng)
        t0, t1 = pauli_transfer(ch), pauli_transfer(conjugate(ch, ua, ub))
        ra, rb = _rotation(ua), _rotation(ub)
        assert np.allclose(t1.T, rb @ t0.T @ ra, atol=1e-12)
        assert np.allclose(t1.t, rb @ t0.t, atol=1e-12)


def test_check_cptp_examples():
    rep = check_cptp(QubitChannel((I2, I2)))
    assert not rep.ok and np.isclose(rep.completeness_residual, 1.0)
    assert check_cptp(QubitChannel((I2 / math.sqrt(2), Z / math.sqrt(2)))).ok


def test_channel_rejects_bad_shapes():
    with pytest.raises(RejectedInputError):
        QubitChannel((np.eye(3),))
    with pytest.raises(RejectedInputError):
        QubitChannel(tuple([I2 / math.sqrt(5)] * 5))


def test_spec_roundtrip(rng):
    ch = from_universal_params(*random_params(rng))
    spec = json.loads(json.dumps(chm.channel_to_spec(ch)))
    assert kraus_equal(channel_from_spec(spec), ch)


def test_spec_parses_angle_strings_and_aliases():
    spec = {"family": "universal", "params": {"p": 0.6, "a1": 0, "b1": "pi/4", "a2": "pi/2", "b2": "pi/6"}}
    ch = channel_from_spec(spec)
    assert kraus_equal(ch, from_universal_params(0.6, 0, math.pi / 4, math.pi / 2, math.pi / 6))


@pytest.mark.parametrize(
    "spec, field",
    [
        ({"params": {}}, "family"),
        ({"family": "nope"}, "family"),
        ({"family": "universal", "params": {"P": 0.5}}, "params.alpha1"),
        ({"family": "gad", "params": {"lam": "pi/"}}, "params.lam"),
        ({"family": "gad", "params": {"lam": 0.1, "gamma": 1}}, "params.gamma"),
        ({"family": "kraus", "kraus": [[1, 0, 0]]}, "kraus[0]"),
    ],
)
def test_spec_errors_name_field(spec, field):
    with pytest.raises(ChannelSpecError, match=field.replace("[", r"\[").replace("]", r"\]")):
        channel_from_spec(spec)


def test_load_spec_reports_position():
    with pytest.raises(ChannelSpecError, match="line 2"):
        load_channel_spec('{"family": "gad",\n "params": {,}}')


def test_unital_families_fix_maximally_mixed(rng):
    for branch in ("a", "b"):
        for _ in range(10):
            b1, b2 = rng.uniform(0, math.pi, 2)
            ch = chm.unital(b1, b2, 0.6, branch)
            assert np.allclose(apply(ch, I2 / 2), I2 / 2, atol=1e-12)
