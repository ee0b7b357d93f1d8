"""Qubit channels in Kraus form and the universal four-Kraus family.

Every qubit channel is unitarily equivalent to a convex combination of two
quasiextreme maps; the four Kraus operators

    K0 = sqrt(P)   diag(cos b1, cos a1)     K1 = sqrt(P)   [[0, sin a1], [sin b1, 0]]
    K2 = sqrt(1-P) diag(cos b2, cos a2)     K3 = sqrt(1-P) [[0, sin a2], [sin b2, 0]]

cover the whole family.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from .linalg import (
    PAULIS,
    ComplexMatrix,
    I2,
    RejectedInputError,
    as_matrix,
    dagger,
    is_density_matrix,
    is_unitary,
    kron,
)

# Tolerance for user supplied density matrices (tomographic data is noisy).
INPUT_TOL = 1e-7


@dataclass(frozen=True)
class UniversalParams:
    """Parameters of the four-Kraus universal channel (angles in radians)."""

    P: float
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float

    def __post_init__(self):
        if not 0.0 <= self.P <= 1.0:
            raise RejectedInputError(f"P={self.P} outside [0, 1]")

    def as_dict(self) -> dict[str, float]:
        return {
            "P": self.P,
            "alpha1": self.alpha1,
            "beta1": self.beta1,
            "alpha2": self.alpha2,
            "beta2": self.beta2,
        }


@dataclass(frozen=True)
class QubitChannel:
    """Ordered Kraus operators plus the parameters that produced them.

    Zero operators are kept so that operator ``j`` always corresponds to
    ancilla outcome ``j`` of the simulation circuit.
    """

    kraus: tuple[np.ndarray, ...]
    params: UniversalParams | None = None
    label: str = ""
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        ops = []
        for k in self.kraus:
            k = np.array(as_matrix(k), dtype=complex)
            if k.shape != (2, 2):
                raise RejectedInputError(f"Kraus operator has shape {k.shape}, expected (2, 2)")
            k.setflags(write=False)
            ops.append(k)
        if not 1 <= len(ops) <= 4:
            raise RejectedInputError(f"a qubit channel needs 1 to 4 Kraus operators, got {len(ops)}")
        object.__setattr__(self, "kraus", tuple(ops))

    @property
    def dim(self) -> int:
        return 2

    def __len__(self) -> int:
        return len(self.kraus)


@dataclass(frozen=True)
class TransferMatrix:
    """Real 4x4 matrix of a channel in the (I, X, Y, Z) basis."""

    t_matrix: np.ndarray

    @property
    def t(self) -> np.ndarray:
        """Shift of the Bloch ball centre."""
        return self.t_matrix[1:, 0]

    @property
    def T(self) -> np.ndarray:
        """Linear 3x3 block acting on Bloch vectors."""
        return self.t_matrix[1:, 1:]

    def map_bloch(self, r) -> np.ndarray:
        return self.t + self.T @ np.asarray(r, dtype=float)


@dataclass(frozen=True)
class CptpReport:
    ok: bool
    completeness_residual: float


def _quasi_pair(weight: float, alpha: float, beta: float) -> list[np.ndarray]:
    s = math.sqrt(weight)
    k_even = s * np.array([[math.cos(beta), 0], [0, math.cos(alpha)]], dtype=complex)
    k_odd = s * np.array([[0, math.sin(alpha)], [math.sin(beta), 0]], dtype=complex)
    return [k_even, k_odd]


def from_universal_params(
    P: float, alpha1: float, beta1: float, alpha2: float, beta2: float, label: str = "universal"
) -> QubitChannel:
    params = UniversalParams(float(P), float(alpha1), float(beta1), float(alpha2), float(beta2))
    kraus = _quasi_pair(params.P, params.alpha1, params.beta1) + _quasi_pair(
        1.0 - params.P, params.alpha2, params.beta2
    )
    return QubitChannel(tuple(kraus), params=params, label=label, provenance=params.as_dict())


def from_params(params: UniversalParams, label: str = "universal") -> QubitChannel:
    return from_universal_params(**params.as_dict(), label=label)


def quasiextreme(alpha: float, beta: float) -> QubitChannel:
    """Two-Kraus channel in the closure of the extreme points."""
    params = UniversalParams(1.0, float(alpha), float(beta), 0.0, 0.0)
    return QubitChannel(
        tuple(_quasi_pair(1.0, alpha, beta)),
        params=params,
        label="quasiextreme",
        provenance={"alpha": alpha, "beta": beta},
    )


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise RejectedInputError(f"{name}={value} outside [0, 1]")
    return value


def gad_params(lam: float, P: float) -> UniversalParams:
    """Universal parameters of generalized amplitude damping.

    The first pair damps towards |0>, the second is its mirror damping
    towards |1>; P weights the two (P=1 is zero temperature, P=1/2 infinite).
    """
    lam = _check_unit("lambda", lam)
    P = _check_unit("P", P)
    theta = math.acos(math.sqrt(1.0 - lam))
    return UniversalParams(P, theta, 0.0, 0.0, theta)


def generalized_amplitude_damping(lam: float, P: float = 1.0) -> QubitChannel:
    ch = from_params(gad_params(lam, P), label="gad")
    return QubitChannel(ch.kraus, ch.params, "gad", {"lam": float(lam), "P": float(P)})


def phase_damping(gamma1: float, gamma2: float = 0.0, P: float = 1.0) -> QubitChannel:
    gamma1 = _check_unit("gamma1", gamma1)
    gamma2 = _check_unit("gamma2", gamma2)
    P = _check_unit("P", P)
    s, r = math.sqrt(P), math.sqrt(1.0 - P)
    kraus = (
        s * np.diag([1.0, math.sqrt(1.0 - gamma1)]),
        s * np.diag([0.0, math.sqrt(gamma1)]),
        r * np.diag([1.0, math.sqrt(1.0 - gamma2)]),
        r * np.diag([0.0, math.sqrt(gamma2)]),
    )
    return QubitChannel(kraus, None, "pd", {"gamma1": gamma1, "gamma2": gamma2, "P": P})


def unital_params(beta1: float, beta2: float, P: float = 0.6, branch: str = "a") -> UniversalParams:
    """Unital member of the universal family.

    Branch "a" takes alpha_i = beta_i (sin b = sin a for both pairs); branch
    "b" flips the second pair to alpha2 = -beta2 (sin b2 = -sin a2).
    """
    if branch not in ("a", "b"):
        raise RejectedInputError(f"unknown unital branch {branch!r}")
    P = _check_unit("P", P)
    return UniversalParams(P, float(beta1), float(beta1), float(beta2) if branch == "a" else -float(beta2), float(beta2))


def unital(beta1: float, beta2: float, P: float = 0.6, branch: str = "a") -> QubitChannel:
    params = unital_params(beta1, beta2, P, branch)
    ch = from_params(params, label=f"unital_{branch}")
    prov = {"beta1": float(beta1), "beta2": float(beta2), "P": float(P), "branch": branch}
    return QubitChannel(ch.kraus, params, ch.label, prov)


def identity_channel() -> QubitChannel:
    return from_universal_params(1.0, 0.0, 0.0, 0.0, 0.0, label="identity")


def validate_density(rho, dim: int, tol: float = INPUT_TOL) -> ComplexMatrix:
    rho = as_matrix(rho)
    if rho.shape != (dim, dim):
        raise RejectedInputError(f"density matrix has shape {rho.shape}, expected ({dim}, {dim})")
    if not is_density_matrix(rho, tol):
        raise RejectedInputError("input is not a valid density matrix")
    return rho


def apply(ch: QubitChannel, rho) -> ComplexMatrix:
    """Sum of K rho K^dagger over the channel's Kraus operators."""
    rho = validate_density(rho, 2)
    return sum(k @ rho @ dagger(k) for k in ch.kraus)


def apply_extended(ch: QubitChannel, rho_wr) -> ComplexMatrix:
    """Apply ``ch`` to the first qubit of a two-qubit state, identity on the second."""
    rho_wr = validate_density(rho_wr, 4)
    out = np.zeros((4, 4), dtype=complex)
    for k in ch.kraus:
        kk = kron(k, I2)
        out += kk @ rho_wr @ dagger(kk)
    return out


def apply_unchecked(ch: QubitChannel, rho: np.ndarray) -> np.ndarray:
    """Kraus sum without validation; ``rho`` may be a stack of matrices."""
    return sum(k @ rho @ dagger(k) for k in ch.kraus)


def pauli_transfer(ch: QubitChannel) -> TransferMatrix:
    t = np.empty((4, 4))
    for b, sb in enumerate(PAULIS):
        out = apply_unchecked(ch, sb)
        for a, sa in enumerate(PAULIS):
            t[a, b] = 0.5 * np.trace(sa @ out).real
    return TransferMatrix(t)


def choi_matrix(ch: QubitChannel) -> ComplexMatrix:
    """(Phi x I) applied to |Phi+><Phi+|; PSD exactly when Phi is CP."""
    bell = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    rho = np.outer(bell, bell.conj())
    return sum(kron(k, I2) @ rho @ dagger(kron(k, I2)) for k in ch.kraus)


def is_completely_positive(ch: QubitChannel, tol: float = 1e-9) -> bool:
    c = choi_matrix(ch)
    return bool(np.linalg.eigvalsh((c + dagger(c)) / 2)[0] >= -tol)


def completeness_residual(ch: QubitChannel) -> float:
    s = sum(dagger(k) @ k for k in ch.kraus)
    return float(np.max(np.abs(s - I2)))


def check_cptp(ch: QubitChannel, tol: float = 1e-9) -> CptpReport:
    res = completeness_residual(ch)
    return CptpReport(ok=res < tol, completeness_residual=res)


def conjugate(ch: QubitChannel, u_a, u_b) -> QubitChannel:
    """The map rho -> U_B Phi(U_A rho U_A^dagger) U_B^dagger."""
    u_a, u_b = as_matrix(u_a), as_matrix(u_b)
    if not (is_unitary(u_a) and is_unitary(u_b)):
        raise RejectedInputError("conjugating matrices must be unitary")
    kraus = tuple(u_b @ k @ u_a for k in ch.kraus)
    return QubitChannel(kraus, None, f"conjugated {ch.label}".strip(), dict(ch.provenance))


def kraus_equal(a: QubitChannel, b: QubitChannel, tol: float = 1e-10) -> bool:
    """Elementwise equality of the Kraus lists (not of the maps; compare Choi matrices for that)."""
    if len(a) != len(b):
        return False
    return all(np.max(np.abs(x - y)) < tol for x, y in zip(a.kraus, b.kraus))


# ---------------------------------------------------------------------------
# JSON channel description
# ---------------------------------------------------------------------------

FAMILIES = ("universal", "quasiextreme", "gad", "pd", "unital_a", "unital_b", "kraus")

_ALIASES = {
    "p": "P",
    "a1": "alpha1",
    "b1": "beta1",
    "a2": "alpha2",
    "b2": "beta2",
    "lambda": "lam",
    "g1": "gamma1",
    "g2": "gamma2",
}


class ChannelSpecError(ValueError):
    """Malformed JSON channel description; message names the offending field."""


def _eval_number(value: Any, where: str) -> float:
    from .qasm import eval_angle

    if isinstance(value, bool):
        raise ChannelSpecError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return eval_angle(value)
        except ValueError as exc:
            raise ChannelSpecError(f"{where}: {exc}") from None
    raise ChannelSpecError(f"{where}: expected a number, got {value!r}")


def normalize_params(raw: Mapping[str, Any], where: str = "params") -> dict[str, float]:
    if not isinstance(raw, Mapping):
        raise ChannelSpecError(f"{where}: expected an object")
    out = {}
    for key, value in raw.items():
        name = _ALIASES.get(key, key)
        out[name] = _eval_number(value, f"{where}.{key}")
    return out


def _require(params: Mapping[str, float], names: Iterable[str], family: str, defaults=None):
    defaults = defaults or {}
    vals = []
    for n in names:
        if n in params:
            vals.append(params[n])
        elif n in defaults:
            vals.append(defaults[n])
        else:
            raise ChannelSpecError(f"params.{n}: required for family '{family}'")
    unknown = set(params) - set(names)
    if unknown:
        raise ChannelSpecError(f"params.{sorted(unknown)[0]}: unknown parameter for family '{family}'")
    return vals


def channel_from_params(family: str, params: Mapping[str, float]) -> QubitChannel:
    """Build a channel of ``family`` from already-normalized numeric params."""
    try:
        if family == "universal":
            return from_universal_params(*_require(params, ("P", "alpha1", "beta1", "alpha2", "beta2"), family))
        if family == "quasiextreme":
            return quasiextreme(*_require(params, ("alpha", "beta"), family))
        if family == "gad":
            return generalized_amplitude_damping(*_require(params, ("lam", "P"), family, {"P": 1.0}))
        if family == "pd":
            g1, g2, P = _require(params, ("gamma1", "gamma2", "P"), family, {"gamma2": 0.0, "P": 1.0})
            return phase_damping(g1, g2, P)
        if family in ("unital_a", "unital_b"):
            b1, b2, P = _require(params, ("beta1", "beta2", "P"), family, {"P": 0.6})
            return unital(b1, b2, P, family[-1])
    except RejectedInputError as exc:
        raise ChannelSpecError(f"params: {exc}") from None
    raise ChannelSpecError(f"family: unknown channel family {family!r}; expected one of {FAMILIES}")


def _parse_entry(e: Any, where: str) -> complex:
    if isinstance(e, (list, tuple)) and len(e) == 2:
        return complex(_eval_number(e[0], where), _eval_number(e[1], where))
    return complex(_eval_number(e, where), 0.0)


def _parse_kraus(raw: Any) -> list[np.ndarray]:
    if not isinstance(raw, list) or not raw:
        raise ChannelSpecError("kraus: expected a non-empty list of matrices")
    ops = []
    for j, op in enumerate(raw):
        where = f"kraus[{j}]"
        if not isinstance(op, list):
            raise ChannelSpecError(f"{where}: expected a list")
        if len(op) == 4:
            entries = op
        elif len(op) == 2 and all(isinstance(row, list) and len(row) == 2 for row in op):
            entries = op[0] + op[1]
        else:
            raise ChannelSpecError(f"{where}: expected 4 row-major entries or 2 rows of 2")
        vals = [_parse_entry(e, f"{where}[{i}]") for i, e in enumerate(entries)]
        ops.append(np.array(vals, dtype=complex).reshape(2, 2))
    return ops


def channel_from_spec(spec: Mapping[str, Any]) -> QubitChannel:
    """Build a channel from its JSON description (already decoded)."""
    if not isinstance(spec, Mapping):
        raise ChannelSpecError("top level: expected a JSON object")
    family = spec.get("family")
    if family is None:
        raise ChannelSpecError("family: missing")
    if family == "kraus":
        ops = _parse_kraus(spec.get("kraus"))
        try:
            return QubitChannel(tuple(ops), None, spec.get("label", "kraus"))
        except RejectedInputError as exc:
            raise ChannelSpecError(f"kraus: {exc}") from None
    return channel_from_params(family, normalize_params(spec.get("params", {})))


def load_channel_spec(text: str) -> dict:
    """Decode JSON text, turning decode errors into :class:`ChannelSpecError`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelSpecError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ChannelSpecError("top level: expected a JSON object")
    return data


def channel_to_spec(ch: QubitChannel) -> dict:
    return {
        "family": "kraus",
        "label": ch.label,
        "kraus": [[[float(e.real), float(e.imag)] for e in k.reshape(-1)] for k in ch.kraus],
    }
