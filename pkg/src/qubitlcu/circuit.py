"""Gate-level circuits for the LCU channel and an exact state-vector simulator.

Register layout of a channel circuit (big-endian, qubit 0 most significant):

    q0, q1   ancilla pair, basis label j = 2*q0 + q1
    q2       work qubit
    q3       optional reference qubit for purified inputs

The circuit applies V to the ancillas, Z on the work qubit for ancilla
labels with U_i = Z, W on the ancillas, and finally X on the work qubit when
the ancilla low bit is 1. Outcome j of the ancilla then carries K_j |psi>.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channels import QubitChannel, validate_density
from .lcu import LcuPlan
from .linalg import (
    I2,
    X,
    Y,
    Z,
    ComplexMatrix,
    RejectedInputError,
    StateVector,
    as_matrix,
    as_state_vector,
    bloch_density,
    dagger,
    is_unitary,
    partial_trace,
)

SINGLE = "single_qubit"
CNOT = "cnot"
CONTROLLED = "controlled_unitary"
UNITARY = "unitary"
GATE_KINDS = (SINGLE, CNOT, CONTROLLED, UNITARY)

ANCILLA, WORK, REFERENCE = "ancilla", "work", "reference"

MAX_UNITARY_QUBITS = 4

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# Rotation taking the eigenbasis of each Pauli to the computational basis.
BASIS_ROTATIONS = {"Z": I2, "X": _H, "Y": _H @ _SDG}


@dataclass(frozen=True)
class Gate:
    """A unitary on ``targets``, active when every ``(qubit, value)`` control matches.

    ``targets[0]`` is the most significant index of ``matrix``.
    """

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray
    controls: tuple[tuple[int, int], ...] = ()
    label: str = ""

    def __post_init__(self):
        m = np.array(as_matrix(self.matrix), dtype=complex)
        targets = tuple(int(t) for t in self.targets)
        controls = tuple((int(q), int(v)) for q, v in self.controls)
        if self.kind not in GATE_KINDS:
            raise RejectedInputError(f"unknown gate kind {self.kind!r}")
        if m.shape != (2 ** len(targets),) * 2:
            raise RejectedInputError(f"matrix shape {m.shape} does not fit {len(targets)} target(s)")
        if not is_unitary(m, 1e-10):
            raise RejectedInputError(f"gate {self.label or self.kind} is not unitary")
        qubits = list(targets) + [q for q, _ in controls]
        if len(set(qubits)) != len(qubits):
            raise RejectedInputError("controls and targets must be distinct qubits")
        if any(v not in (0, 1) for _, v in controls):
            raise RejectedInputError("control values must be 0 or 1")
        if self.kind == SINGLE and (len(targets) != 1 or controls):
            raise RejectedInputError("single_qubit gates take one target and no controls")
        if self.kind == CNOT and (len(targets) != 1 or len(controls) != 1 or not np.allclose(m, X)):
            raise RejectedInputError("cnot gates take one control, one target and the X matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "controls", controls)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + self.targets

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "targets": list(self.targets),
            "controls": [list(c) for c in self.controls],
            "matrix": [[[float(e.real), float(e.imag)] for e in row] for row in self.matrix],
        }


def single(target: int, matrix, label: str = "") -> Gate:
    return Gate(SINGLE, (target,), matrix, (), label)


def cnot(control: int, target: int, label: str = "") -> Gate:
    return Gate(CNOT, (target,), X, ((control, 1),), label)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    roles: tuple[str, ...] = ()
    measure: tuple[int, ...] = ()

    def __post_init__(self):
        roles = tuple(self.roles) or (WORK,) * self.num_qubits
        if len(roles) != self.num_qubits:
            raise RejectedInputError("one role per qubit is required")
        gates = tuple(self.gates)
        for g in gates:
            if any(q < 0 or q >= self.num_qubits for q in g.qubits):
                raise RejectedInputError(f"gate {g.label or g.kind} addresses a qubit outside the register")
        if any(q < 0 or q >= self.num_qubits for q in self.measure):
            raise RejectedInputError("measured qubit outside the register")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "measure", tuple(self.measure))

    def qubits_with_role(self, role: str) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r == role)

    @property
    def ancillas(self) -> tuple[int, ...]:
        return self.qubits_with_role(ANCILLA)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r != ANCILLA)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return replace(self, gates=tuple(gates))

    def with_reference(self) -> "Circuit":
        """Append an idle reference qubit, unless one is already present."""
        if REFERENCE in self.roles:
            return self
        return Circuit(self.num_qubits + 1, self.gates, self.roles + (REFERENCE,), self.measure)

    def without_reference(self) -> "Circuit":
        refs = self.qubits_with_role(REFERENCE)
        if not refs:
            return self
        if refs != (self.num_qubits - 1,) or any(refs[0] in g.qubits for g in self.gates):
            raise RejectedInputError("reference qubit must be the idle last qubit")
        return Circuit(self.num_qubits - 1, self.gates, self.roles[:-1], tuple(q for q in self.measure if q not in refs))

    def gate_counts(self) -> dict[str, int]:
        counts = Counter(g.kind for g in self.gates)
        return {k: counts.get(k, 0) for k in GATE_KINDS}

    def to_json(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "roles": list(self.roles),
            "measure": list(self.measure),
            "gates": [g.to_json() for g in self.gates],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


@dataclass(frozen=True)
class BranchOutcome:
    ancilla_label: int
    probability: float
    work_state: StateVector | None


def build_channel_circuit(plan: LcuPlan, with_reference: bool = False, x_correction: bool = True) -> Circuit:
    """Gate sequence realizing the plan's four Kraus operators on ancilla outcomes.

    With ``x_correction=False`` the final controlled-X is omitted and the
    outcomes carry the bare duality gates L_j instead of K_j.
    """
    gates = [Gate(UNITARY, (0, 1), plan.v, label="V")]
    for i, u in enumerate(plan.unitaries[:4]):
        if np.allclose(u, I2):
            continue
        gates.append(Gate(CONTROLLED, (2,), u, ((0, i >> 1), (1, i & 1)), label=f"U{i}"))
    gates.append(Gate(UNITARY, (0, 1), plan.w, label="W"))
    if x_correction:
        gates.append(Gate(CNOT, (2,), plan.unitaries[4], ((1, 1),), label="U4"))
    c = Circuit(3, tuple(gates), (ANCILLA, ANCILLA, WORK), (0, 1, 2))
    return c.with_reference() if with_reference else c


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _apply_gate(tensor: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply ``gate`` to the first ``n`` axes of ``tensor`` (shape (2,)*n + rest)."""
    out = tensor.copy()
    idx = [slice(None)] * tensor.ndim
    for q, v in gate.controls:
        idx[q] = v
    idx = tuple(idx)
    sub = tensor[idx]
    # axes of `sub`: the non-control qubits in order, then the trailing axes
    free = [q for q in range(n) if q not in dict(gate.controls)]
    pos = [free.index(t) for t in gate.targets]
    k = len(pos)
    moved = np.moveaxis(sub, pos, list(range(k)))
    shape = moved.shape
    res = (gate.matrix @ moved.reshape(2**k, -1)).reshape(shape)
    out[idx] = np.moveaxis(res, list(range(k)), pos)
    return out


def _initial_state(c: Circuit, data_state) -> np.ndarray:
    """|0> on every ancilla, ``data_state`` on the remaining qubits in order."""
    data = as_state_vector(data_state)
    k = len(c.data_qubits)
    if data.num_qubits != k:
        raise RejectedInputError(f"input has {data.num_qubits} qubit(s), circuit expects {k}")
    full = np.zeros((2,) * c.num_qubits, dtype=complex)
    idx = tuple(0 if r == ANCILLA else slice(None) for r in c.roles)
    full[idx] = data.amplitudes.reshape((2,) * k) if k else data.amplitudes[0]
    return full.reshape(-1)


def simulate_state(c: Circuit, state) -> np.ndarray:
    """Evolve a full-register state vector through every gate in order."""
    psi = np.asarray(state.amplitudes if isinstance(state, StateVector) else state, dtype=complex).reshape(-1)
    if psi.size != 2**c.num_qubits:
        raise RejectedInputError(f"state of length {psi.size} does not match {c.num_qubits} qubits")
    t = psi.reshape((2,) * c.num_qubits)
    for g in c.gates:
        t = _apply_gate(t, g, c.num_qubits)
    return t.reshape(-1)


def full_unitary(c: Circuit) -> ComplexMatrix:
    if c.num_qubits > MAX_UNITARY_QUBITS:
        raise RejectedInputError(f"full unitary limited to {MAX_UNITARY_QUBITS} qubits")
    dim = 2**c.num_qubits
    t = np.eye(dim, dtype=complex).reshape((2,) * c.num_qubits + (dim,))
    for g in c.gates:
        t = _apply_gate(t, g, c.num_qubits)
    return t.reshape(dim, dim)


def _require_channel_layout(c: Circuit) -> None:
    if c.roles[:3] != (ANCILLA, ANCILLA, WORK) or any(r != REFERENCE for r in c.roles[3:]):
        raise RejectedInputError("expected a channel circuit: two ancillas, a work qubit, optional reference")


def branch_states(c: Circuit, work_input) -> list[BranchOutcome]:
    """Project the final state onto each ancilla basis state."""
    _require_channel_layout(c)
    data = as_state_vector(work_input)
    if data.num_qubits == 2 and c.num_qubits == 3:
        c = c.with_reference()
    final = simulate_state(c, _initial_state(c, data)).reshape(4, -1)
    out = []
    for j in range(4):
        vec = final[j]
        p = float(np.vdot(vec, vec).real)
        state = StateVector(vec) if p > 1e-15 else None
        out.append(BranchOutcome(j, p, state))
    return out


def circuit_kraus(c: Circuit) -> list[np.ndarray]:
    """K_j = <j|_anc U |00>_anc, read off the circuit's full unitary."""
    _require_channel_layout(c)
    u = full_unitary(c.without_reference()).reshape(4, 2, 4, 2)
    return [u[j, :, 0, :].copy() for j in range(4)]


def circuit_channel(c: Circuit, label: str = "circuit") -> QubitChannel:
    return QubitChannel(tuple(circuit_kraus(c)), None, label)


def channel_output(c: Circuit, rho) -> ComplexMatrix:
    """Work (and reference) state after the circuit, ancillas traced out."""
    _require_channel_layout(c)
    rho = as_matrix(rho)
    if rho.shape == (4, 4):
        c = c.with_reference()
    elif c.num_qubits != 3:
        c = c.without_reference()
    rho = validate_density(rho, 2 ** (c.num_qubits - 2))
    u = full_unitary(c)
    anc0 = np.zeros((4, 4), dtype=complex)
    anc0[0, 0] = 1.0
    big = u @ np.kron(anc0, rho) @ dagger(u)
    return partial_trace(big, [4, rho.shape[0]], [1])


# ---------------------------------------------------------------------------
# Finite-shot measurement and tomography
# ---------------------------------------------------------------------------


def _basis_per_qubit(basis, qubits: Sequence[int]) -> list[str]:
    if isinstance(basis, Mapping):
        axes = [str(basis.get(q, "Z")).upper() for q in qubits]
    else:
        b = str(basis).upper()
        axes = list(b) * len(qubits) if len(b) == 1 else list(b)
    if len(axes) != len(qubits) or any(a not in BASIS_ROTATIONS for a in axes):
        raise RejectedInputError(f"basis {basis!r} must give one of X, Y, Z per measured qubit")
    return axes


def outcome_probabilities(c: Circuit, work_input, basis="Z", qubits: Sequence[int] | None = None) -> dict[str, float]:
    """Exact distribution of the measured bits after rotating to ``basis``."""
    qubits = tuple(c.measure if qubits is None else qubits)
    if not qubits:
        raise RejectedInputError("no qubits to measure")
    data = as_state_vector(work_input)
    if c.roles[:3] == (ANCILLA, ANCILLA, WORK) and data.num_qubits == len(c.data_qubits) + 1:
        c = c.with_reference()
    axes = _basis_per_qubit(basis, qubits)
    rot = [single(q, BASIS_ROTATIONS[a]) for q, a in zip(qubits, axes) if a != "Z"]
    final = simulate_state(c.with_gates(c.gates + tuple(rot)), _initial_state(c, data))
    probs = np.abs(final.reshape((2,) * c.num_qubits)) ** 2
    others = tuple(q for q in range(c.num_qubits) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    # `marg` axes are in ascending qubit order; reorder to the requested order
    order = sorted(qubits)
    marg = np.transpose(marg, [order.index(q) for q in qubits])
    flat = marg.reshape(-1)
    flat = flat / flat.sum()
    width = len(qubits)
    return {format(i, f"0{width}b"): float(p) for i, p in enumerate(flat)}


def sample_shots(
    c: Circuit,
    work_input,
    basis="Z",
    n_shots: int = 8192,
    seed: int = 0,
    qubits: Sequence[int] | None = None,
) -> dict[str, int]:
    """Multinomial sample of measurement outcomes; deterministic for a fixed seed.

    Keys are bitstrings over ``qubits`` (default: the circuit's measured
    qubits) in the given order; outcomes never observed are omitted.
    """
    if n_shots < 1:
        raise RejectedInputError("n_shots must be at least 1")
    dist = outcome_probabilities(c, work_input, basis, qubits)
    keys = list(dist)
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(n_shots, np.array([dist[k] for k in keys]))
    return {k: int(n) for k, n in zip(keys, draws) if n}


def expectation_from_counts(counts: Mapping[str, int], position: int = 0) -> float:
    """Mean of (-1)^bit at ``position`` of each outcome string."""
    total = sum(counts.values())
    if total == 0:
        raise RejectedInputError("empty counts")
    s = sum(n if key[position] == "0" else -n for key, n in counts.items())
    return s / total


def tomography_reconstruct(sx: float, sy: float, sz: float) -> ComplexMatrix:
    """Qubit state from Pauli expectations; slightly long vectors are clipped to the sphere."""
    r = np.array([sx, sy, sz], dtype=float)
    length = float(np.linalg.norm(r))
    if length > 1.2:
        raise RejectedInputError(f"Bloch vector length {length:.3f} is unphysical")
    if length > 1.0:
        r = r / length
    return bloch_density(r)


def pauli_expectation(rho, axis: str) -> float:
    p = {"X": X, "Y": Y, "Z": Z}[axis.upper()]
    return float(np.trace(as_matrix(rho) @ p).real)
