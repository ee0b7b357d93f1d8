"""Lower channel circuits to single-qubit gates and CNOTs.

Two-qubit ancilla blocks are factored into two-level (Givens) rotations
between Gray-code neighbours, each of which is a singly-controlled
single-qubit gate. Controlled single-qubit gates use the ZYZ construction
(two CNOTs); extra controls are peeled off with the square-root recursion.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import schur

from .circuit import CNOT, CONTROLLED, SINGLE, UNITARY, Circuit, Gate, cnot, full_unitary, single
from .linalg import I2, X, RejectedInputError, dagger

_EPS = 1e-12
_GRAY = (0, 1, 3, 2)


def rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """(phase, b, g, d) with u = e^{i phase} Rz(b) Ry(g) Rz(d)."""
    phase = 0.5 * np.angle(np.linalg.det(u))
    v = u * np.exp(-1j * phase)
    a, b = v[0, 0], v[1, 0]
    g = 2.0 * np.arctan2(abs(b), abs(a))
    arg_a = np.angle(a) if abs(a) > _EPS else 0.0
    arg_b = np.angle(b) if abs(b) > _EPS else 0.0
    plus = -2.0 * arg_a
    minus = 2.0 * arg_b
    return float(phase), float(0.5 * (plus + minus)), float(g), float(0.5 * (plus - minus))


def is_identity_up_to_phase(u: np.ndarray, tol: float = 1e-12) -> bool:
    n = u.shape[0]
    return abs(abs(np.trace(u)) / n - 1.0) < tol and np.max(np.abs(u - np.trace(u) / n * np.eye(n))) < 1e-9


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Strip the global phase so the leading nonzero entry of column 0 is real positive."""
    pivot = u[0, 0] if abs(u[0, 0]) > 1e-9 else u[1, 0]
    return u * (abs(pivot) / pivot)


def unitary_sqrt(u: np.ndarray) -> np.ndarray:
    t, q = schur(u, output="complex")
    return q @ np.diag(np.sqrt(np.diag(t))) @ dagger(q)


def _controlled_1q(control: int, target: int, u: np.ndarray) -> list[Gate]:
    """Singly-controlled u (control value 1) as CNOTs and single-qubit gates."""
    if np.allclose(u, X, atol=1e-14):
        return [cnot(control, target)]
    phase, b, g, d = zyz_angles(u)
    a_m = rz(b) @ ry(g / 2)
    b_m = ry(-g / 2) @ rz(-(d + b) / 2)
    c_m = rz((d - b) / 2)
    return [
        single(target, c_m, "C"),
        cnot(control, target),
        single(target, b_m, "B"),
        cnot(control, target),
        single(target, a_m, "A"),
        single(control, np.diag([1.0, np.exp(1j * phase)]), "phase"),
    ]


def _multi_controlled(controls: list[int], target: int, u: np.ndarray) -> list[Gate]:
    """C^n(u) with all control values 1."""
    if not controls:
        return [single(target, u)]
    if len(controls) == 1:
        return _controlled_1q(controls[0], target, u)
    *rest, last = controls
    v = unitary_sqrt(u)
    return (
        _controlled_1q(last, target, v)
        + _multi_controlled(rest, last, X)
        + _controlled_1q(last, target, dagger(v))
        + _multi_controlled(rest, last, X)
        + _multi_controlled(rest, target, v)
    )


def _lower_controlled(g: Gate) -> list[Gate]:
    if len(g.targets) != 1:
        raise RejectedInputError("controlled gates with several targets are not supported")
    flips = [single(q, X, "x") for q, v in g.controls if v == 0]
    body = _multi_controlled([q for q, _ in g.controls], g.targets[0], g.matrix)
    return flips + body + flips


def two_level_factors(m: np.ndarray) -> list[tuple[int, int, np.ndarray]]:
    """Factor a 4x4 unitary into two-level unitaries acting on Gray-code neighbours.

    Returns ``(i, j, G)`` in time order: G acts on span(|i>, |j>) and the
    product of the factors (last one leftmost) equals ``m``.
    """
    g = list(_GRAY)
    work = m[np.ix_(g, g)].astype(complex)
    ops = []
    for col in range(3):
        for r in range(3, col, -1):
            a, b = work[r - 1, col], work[r, col]
            if abs(b) < _EPS and (r - 1 != col or abs(a - 1) < _EPS):
                continue
            n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
            gm = np.array([[np.conj(a), np.conj(b)], [b, -a]]) / n
            work[[r - 1, r], :] = gm @ work[[r - 1, r], :]
            ops.append((r - 1, gm))
    factors = []
    last = work[3, 3]
    if abs(last - 1) > _EPS:
        factors.append((g[2], g[3], np.diag([1.0, last])))
    for p, gm in reversed(ops):
        factors.append((g[p], g[p + 1], dagger(gm)))
    return factors


def _lower_two_qubit(g: Gate) -> list[Gate]:
    hi, lo = g.targets
    out = []
    for i, j, gm in two_level_factors(g.matrix):
        if np.allclose(gm, I2, atol=_EPS):
            continue
        diff = i ^ j
        tgt, ctl, ctl_bit, tgt_shift = (lo, hi, 1, 0) if diff == 1 else (hi, lo, 0, 1)
        ctl_val = (i >> ctl_bit) & 1
        sub = gm if (i >> tgt_shift) & 1 == 0 else X @ gm @ X
        out += _lower_controlled(Gate(CONTROLLED, (tgt,), sub, ((ctl, ctl_val),)))
    return out


def _lower(g: Gate) -> list[Gate]:
    if g.kind == SINGLE:
        return [g]
    if g.kind == CNOT:
        (q, v), = g.controls
        return [g] if v == 1 else _lower_controlled(g)
    if g.kind == UNITARY and not g.controls:
        if len(g.targets) == 1:
            return [single(g.targets[0], g.matrix, g.label)]
        if len(g.targets) == 2:
            return _lower_two_qubit(g)
    if g.kind == CONTROLLED:
        if not g.controls:
            return _lower(Gate(UNITARY, g.targets, g.matrix, (), g.label))
        return _lower_controlled(g)
    raise RejectedInputError(f"unsupported gate shape: {g.kind} on {len(g.targets)} target(s)")


def fuse_single_qubit(gates: list[Gate], num_qubits: int) -> list[Gate]:
    """Merge runs of single-qubit gates per qubit and drop identities."""
    pending: dict[int, np.ndarray] = {}
    out: list[Gate] = []

    def flush(q: int) -> None:
        u = pending.pop(q, None)
        if u is not None and not is_identity_up_to_phase(u):
            out.append(single(q, canonical_phase(u)))

    for g in gates:
        if g.kind == SINGLE:
            q = g.targets[0]
            pending[q] = g.matrix @ pending.get(q, I2)
        else:
            for q in g.qubits:
                flush(q)
            out.append(g)
    for q in range(num_qubits):
        flush(q)
    return out


def cancel_cnot_pairs(gates: list[Gate]) -> list[Gate]:
    """Remove CNOT pairs with nothing in between on either of their qubits."""
    out: list[Gate | None] = []
    last: dict[int, int] = {}
    for g in gates:
        if g.kind == CNOT:
            qs = g.qubits
            idx = last.get(qs[0])
            if idx is not None and all(last.get(q) == idx for q in qs):
                prev = out[idx]
                if prev is not None and prev.kind == CNOT and prev.qubits == qs:
                    out[idx] = None
                    for q in qs:
                        del last[q]
                    continue
        out.append(g)
        for q in g.qubits:
            last[q] = len(out) - 1
    return [g for g in out if g is not None]


def merge_complementary_controls(gates: list[Gate]) -> list[Gate]:
    """Merge adjacent controlled gates that differ only in one control's value.

    C_{q=0}(U) C_{q=1}(U) with otherwise equal controls is U controlled by
    the remaining qubits alone.
    """
    out: list[Gate] = []
    for g in gates:
        prev = out[-1] if out else None
        if (
            prev is not None
            and g.kind in (CONTROLLED, CNOT)
            and prev.kind in (CONTROLLED, CNOT)
            and prev.targets == g.targets
            and np.allclose(prev.matrix, g.matrix, atol=1e-14)
        ):
            a, b = dict(prev.controls), dict(g.controls)
            diff = [q for q in a if a[q] != b.get(q)]
            if a.keys() == b.keys() and len(diff) == 1:
                rest = tuple((q, v) for q, v in prev.controls if q != diff[0])
                out[-1] = Gate(CONTROLLED, g.targets, g.matrix, rest, prev.label + g.label)
                continue
        out.append(g)
    return out


def compile_to_cnot_basis(c: Circuit) -> Circuit:
    gates = [h for g in merge_complementary_controls(list(c.gates)) for h in _lower(g)]
    while True:
        reduced = cancel_cnot_pairs(fuse_single_qubit(gates, c.num_qubits))
        if len(reduced) == len(gates):
            break
        gates = reduced
    return c.with_gates(reduced)


def is_cnot_basis(c: Circuit) -> bool:
    return all(
        g.kind == SINGLE or (g.kind == CNOT and g.controls[0][1] == 1) for g in c.gates
    )


def unitary_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|Tr(a^dagger b)| / dim, insensitive to global phase."""
    return float(abs(np.trace(dagger(a) @ b)) / a.shape[0])


def circuit_fidelity(c1: Circuit, c2: Circuit) -> float:
    return unitary_fidelity(full_unitary(c1), full_unitary(c2))
