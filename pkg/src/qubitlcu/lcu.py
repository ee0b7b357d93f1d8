"""Linear-combination-of-unitaries plans for the universal qubit channel.

Each Kraus operator of the universal family is a combination of I and Z,
followed for odd indices by an X:

    K_{2m}   = L_{2m}
    K_{2m+1} = X L_{2m+1},    L_j = sum_i W[j, i] V[i, 0] U_i,  U = (I, Z, I, Z)

V prepares the coefficient amplitudes on a two-qubit ancilla and the block
diagonal W = diag(W1, W2) recombines them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import QubitChannel, UniversalParams
from .linalg import (
    I2,
    X,
    Z,
    ComplexMatrix,
    RejectedInputError,
    as_matrix,
    complete_unitary,
    dagger,
    psd_sqrt,
)


@dataclass(frozen=True)
class LcuPlan:
    unitaries: tuple[np.ndarray, ...]
    v: np.ndarray
    w: np.ndarray
    params: UniversalParams

    @property
    def coefficients(self) -> np.ndarray:
        """Column 0 of V: the amplitudes loaded onto the ancilla."""
        return self.v[:, 0]

    @property
    def w_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        return self.w[:2, :2], self.w[2:, 2:]


@dataclass(frozen=True)
class FourUnitaryDecomposition:
    """A = (U1 + U2)/2 + i (U3 + U4)/2, with ``scale`` applied first if needed."""

    unitaries: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    source: np.ndarray
    scale: float = 1.0
    coefficients: tuple[complex, complex, complex, complex] = (0.5, 0.5, 0.5j, 0.5j)

    def recombine(self) -> ComplexMatrix:
        total = sum(c * u for c, u in zip(self.coefficients, self.unitaries))
        return total * self.scale


def _sign(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def w_block(alpha: float, beta: float) -> np.ndarray:
    """Real orthogonal 2x2 recombination block for one quasiextreme pair.

    Columns are ((cos b + cos a), (sin b + sin a)) / sqrt(2(1 + cos(b - a)))
    and ((cos b - cos a), (sin b - sin a)) / sqrt(2(1 - cos(b - a))),
    evaluated in half-angle form so the 0/0 points resolve to the limit
    column (-sin b, cos b) (resp. its orthogonal partner).
    """
    s = 0.5 * (alpha + beta)
    d = 0.5 * (beta - alpha)
    c_d, s_d = math.cos(d), math.sin(d)
    sg1 = _sign(c_d) if abs(c_d) > 1e-15 else 1.0
    sg2 = _sign(s_d) if abs(s_d) > 1e-15 else 1.0
    return np.array(
        [
            [sg1 * math.cos(s), -sg2 * math.sin(s)],
            [sg1 * math.sin(s), sg2 * math.cos(s)],
        ]
    )


def w_block_direct(alpha: float, beta: float) -> np.ndarray:
    """Literal quotient form of :func:`w_block`; undefined when cos(b - a) = +-1."""
    c = math.cos(beta - alpha)
    n_plus = math.sqrt(2 * (1 + c))
    n_minus = math.sqrt(2 * (1 - c))
    return np.array(
        [
            [(math.cos(beta) + math.cos(alpha)) / n_plus, (math.cos(beta) - math.cos(alpha)) / n_minus],
            [(math.sin(beta) + math.sin(alpha)) / n_plus, (math.sin(beta) - math.sin(alpha)) / n_minus],
        ]
    )


def lcu_amplitudes(params: UniversalParams) -> np.ndarray:
    """sqrt(P(1 +- cos(b1 - a1))/2), sqrt((1-P)(1 +- cos(b2 - a2))/2)."""
    out = []
    for weight, a, b in ((params.P, params.alpha1, params.beta1), (1 - params.P, params.alpha2, params.beta2)):
        d = 0.5 * (b - a)
        root = math.sqrt(weight)
        out += [root * abs(math.cos(d)), root * abs(math.sin(d))]
    return np.array(out)


def build_lcu(P, alpha1=0.0, beta1=0.0, alpha2=0.0, beta2=0.0) -> LcuPlan:
    params = P if isinstance(P, UniversalParams) else UniversalParams(
        float(P), float(alpha1), float(beta1), float(alpha2), float(beta2)
    )
    amps = lcu_amplitudes(params)
    amps = amps / np.linalg.norm(amps)
    v = complete_unitary(amps.astype(complex))
    w = np.zeros((4, 4), dtype=complex)
    w[:2, :2] = w_block(params.alpha1, params.beta1)
    w[2:, 2:] = w_block(params.alpha2, params.beta2)
    unitaries = (I2, Z, I2, Z, X)
    for a in (v, w):
        a.setflags(write=False)
    return LcuPlan(unitaries=tuple(u.copy() for u in unitaries), v=v, w=w, params=params)


def duality_gates(plan: LcuPlan) -> list[np.ndarray]:
    """L_j = sum_i W[j, i] V[i, 0] U_i for j = 0..3."""
    coeff = plan.v[:, 0]
    return [sum(plan.w[j, i] * coeff[i] * plan.unitaries[i] for i in range(4)) for j in range(4)]


def reconstruct_kraus(plan: LcuPlan) -> QubitChannel:
    gates = duality_gates(plan)
    kraus = tuple(g if j % 2 == 0 else X @ g for j, g in enumerate(gates))
    return QubitChannel(kraus, plan.params, "lcu", plan.params.as_dict())


def decompose_four_unitaries(a, rescale: bool = False) -> FourUnitaryDecomposition:
    """Write a contraction as a combination of four unitaries.

    ``B = (A + A^dagger)/2`` and ``C = (A - A^dagger)/2i`` are Hermitian with
    norm at most 1, so ``B +- i sqrt(I - B^2)`` (and likewise for C) are
    unitary. With ``rescale=True`` a matrix of norm above one is divided by
    its norm first and the factor kept in ``scale``.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise RejectedInputError("matrix must be square")
    norm = float(np.linalg.norm(a, 2))
    scale = 1.0
    if norm > 1 + 1e-12:
        if not rescale:
            raise RejectedInputError(f"operator norm {norm:.6g} exceeds 1")
        scale = norm
    m = a / scale
    eye = np.eye(m.shape[0])
    b = 0.5 * (m + dagger(m))
    c = (m - dagger(m)) / 2j
    rb = psd_sqrt(eye - b @ b)
    rc = psd_sqrt(eye - c @ c)
    us = (b + 1j * rb, b - 1j * rb, c + 1j * rc, c - 1j * rc)
    return FourUnitaryDecomposition(us, a, scale)
