"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. Qubit
registers are big-endian: in ``kron(a, b)`` the index of ``a`` is the most
significant, so ancilla qubits written first occupy the high bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ComplexMatrix = np.ndarray

# Eigenvalues this close to zero are treated as exactly zero.
EIG_CLAMP = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)


class RejectedInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


def as_matrix(m) -> ComplexMatrix:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise RejectedInputError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.asarray(m)).T


def matmul(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise RejectedInputError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(*ms) -> ComplexMatrix:
    """Kronecker product, leftmost factor most significant."""
    out = np.ones((1, 1), dtype=complex)
    for m in ms:
        out = np.kron(out, as_matrix(m))
    return out


def is_square(m: ComplexMatrix) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1]


def is_hermitian(m: ComplexMatrix, tol: float = 1e-9) -> bool:
    m = np.asarray(m)
    return is_square(m) and bool(np.max(np.abs(m - dagger(m)), initial=0.0) < tol)


def is_unitary(m: ComplexMatrix, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if not is_square(m):
        return False
    return bool(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0]))) < tol)


def is_psd(m: ComplexMatrix, tol: float = 1e-9) -> bool:
    if not is_hermitian(m, tol):
        return False
    return bool(np.linalg.eigvalsh((m + dagger(m)) / 2)[0] >= -tol)


def is_density_matrix(m: ComplexMatrix, tol: float = 1e-9) -> bool:
    m = np.asarray(m)
    return is_psd(m, tol) and abs(np.trace(m) - 1) < tol


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> ComplexMatrix:
    """Trace out every subsystem whose index is not in ``keep``.

    ``dims`` lists subsystem dimensions in the same big-endian order used by
    :func:`kron`. The kept subsystems appear in ascending index order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    if not is_square(m) or int(np.prod(dims)) != m.shape[0]:
        raise RejectedInputError(f"dims {dims} inconsistent with matrix shape {m.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise RejectedInputError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = m.reshape(dims + dims)
    # Contract traced subsystems one by one, highest index first so axes stay valid.
    traced = [i for i in range(n) if i not in keep]
    current = n
    for i in reversed(traced):
        t = np.trace(t, axis1=i, axis2=i + current)
        current -= 1
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def hermitian_eig(h, tol: float = 1e-9) -> tuple[np.ndarray, ComplexMatrix]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise RejectedInputError("matrix is not Hermitian")
    return np.linalg.eigh((h + dagger(h)) / 2)


def psd_sqrt(m) -> ComplexMatrix:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues down to -1e-6 are treated as rounding noise and clamped to
    zero; anything more negative is rejected.
    """
    w, v = hermitian_eig(m)
    if w[0] < -1e-6:
        raise RejectedInputError(f"matrix has negative eigenvalue {w[0]:.3g}")
    w = np.where(w < EIG_CLAMP, 0.0, w)
    return (v * np.sqrt(w)) @ dagger(v)


def complete_unitary(first_column) -> ComplexMatrix:
    """Return a unitary whose first column is exactly ``first_column``.

    A Householder reflection sends e0 to the phase-rotated column; real input
    therefore gives a real orthogonal matrix.
    """
    v = np.asarray(first_column, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(v) - 1) > 1e-10:
        raise RejectedInputError(f"column has norm {np.linalg.norm(v):.12g}, expected 1")
    n = v.size
    phase = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    u = v / phase
    w = -u
    w[0] += 1.0
    nw = np.vdot(w, w).real
    if nw < 1e-30:
        out = np.eye(n, dtype=complex)
    else:
        out = np.eye(n, dtype=complex) - 2.0 * np.outer(w, np.conj(w)) / nw
    out = phase * out
    out[:, 0] = v
    return out


def pure_density(psi) -> ComplexMatrix:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, np.conj(psi))


def bloch_density(r) -> ComplexMatrix:
    """Qubit density matrix (I + r.sigma)/2 for a Bloch vector ``r``."""
    x, y, z = (float(c) for c in r)
    return 0.5 * (I2 + x * X + y * Y + z * Z)


def bloch_vector(rho) -> np.ndarray:
    rho = as_matrix(rho)
    return np.array([np.trace(rho @ p).real for p in (X, Y, Z)])


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = a.size.bit_length() - 1
        if a.size < 1 or 1 << n != a.size:
            raise RejectedInputError(f"state length {a.size} is not a power of two")
        norm = np.linalg.norm(a)
        if norm == 0:
            raise RejectedInputError("zero state vector")
        a = a / norm
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> ComplexMatrix:
        return pure_density(self.amplitudes)

    @classmethod
    def basis(cls, index: int, num_qubits: int) -> "StateVector":
        a = np.zeros(1 << num_qubits, dtype=complex)
        a[index] = 1.0
        return cls(a)

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "StateVector":
        return cls([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def as_state_vector(state) -> StateVector:
    return state if isinstance(state, StateVector) else StateVector(state)
