"""Entropies, fidelities, coherent information and one-shot quantum capacity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channels import QubitChannel, apply, apply_extended, pauli_transfer, validate_density
from .linalg import EIG_CLAMP, X, Y, Z, StateVector, bloch_density, dagger, psd_sqrt


def _entropy_from_eigs(w: np.ndarray) -> np.ndarray:
    w = np.where(w < EIG_CLAMP, 0.0, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, -w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return terms.sum(axis=-1)


def von_neumann_entropy(rho) -> float:
    """-Tr(rho log2 rho) in bits."""
    rho = np.asarray(rho, dtype=complex)
    rho = validate_density(rho, rho.shape[0])
    w = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
    return float(_entropy_from_eigs(w))


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    rho = np.asarray(rho, dtype=complex)
    rho = validate_density(rho, rho.shape[0])
    sigma = validate_density(sigma, rho.shape[0])
    r = psd_sqrt(rho)
    m = r @ sigma @ r
    f = np.trace(psd_sqrt((m + dagger(m)) / 2)).real ** 2
    return float(min(max(f, 0.0), 1.0))


def purify(rho) -> StateVector:
    """sum_k sqrt(p_k) |e_k>_W |k>_R over the eigenpairs of rho, largest first."""
    rho = validate_density(rho, 2)
    w, v = np.linalg.eigh((rho + dagger(rho)) / 2)
    order = np.argsort(-w, kind="stable")
    w = np.clip(w[order], 0.0, None)
    v = v[:, order]
    psi = np.zeros(4, dtype=complex)
    for k in range(2):
        ref = np.zeros(2)
        ref[k] = 1.0
        psi += np.sqrt(w[k]) * np.kron(v[:, k], ref)
    return StateVector(psi)


def entanglement_fidelity(rho, ch: QubitChannel) -> float:
    """sum_j |Tr(rho K_j)|^2."""
    rho = validate_density(rho, 2)
    return float(sum(abs(np.trace(rho @ k)) ** 2 for k in ch.kraus))


def entanglement_fidelity_purified(rho, ch: QubitChannel) -> float:
    """<psi|(Phi x I)(|psi><psi|)|psi> for the canonical purification psi of rho."""
    psi = purify(rho).amplitudes
    out = apply_extended(ch, np.outer(psi, psi.conj()))
    return float(np.vdot(psi, out @ psi).real)


def coherent_information(ch: QubitChannel, rho) -> float:
    """S[Phi(rho)] - S[(Phi x I)(|psi_rho><psi_rho|)] in bits."""
    rho = validate_density(rho, 2)
    psi = purify(rho).amplitudes
    joint = apply_extended(ch, np.outer(psi, psi.conj()))
    return von_neumann_entropy(apply(ch, rho)) - von_neumann_entropy(joint)


class _AffineModel:
    """Output Bloch vector and environment matrix as affine maps of the input Bloch vector."""

    def __init__(self, ch: QubitChannel):
        tm = pauli_transfer(ch)
        self.shift, self.linear = tm.t.copy(), tm.T.copy()
        ks = np.stack(ch.kraus)
        # E(sigma)_jk = Tr(K_j sigma K_k^dagger) for sigma in (I, X, Y, Z)
        self.env = np.stack([np.einsum("jab,bc,kac->jk", ks, s, ks.conj()) for s in (np.eye(2), X, Y, Z)])

    def __call__(self, bloch: np.ndarray) -> np.ndarray:
        b = np.atleast_2d(np.asarray(bloch, dtype=float))
        r_out = np.minimum(np.linalg.norm(self.shift + b @ self.linear.T, axis=1), 1.0)
        p = 0.5 * (1.0 - r_out)
        s_out = _entropy_from_eigs(np.stack([p, 1.0 - p], axis=-1))
        env = 0.5 * (self.env[0] + np.tensordot(b, self.env[1:], axes=(1, 0)))
        return s_out - _entropy_from_eigs(np.linalg.eigvalsh(env))


def coherent_information_batch(ch: QubitChannel, bloch: np.ndarray) -> np.ndarray:
    """Coherent information for an (N, 3) array of Bloch vectors.

    Uses the environment matrix E_jk = Tr(K_j rho K_k^dagger), whose spectrum
    matches the nonzero spectrum of the purified joint output, instead of
    building the purification.
    """
    return _AffineModel(ch)(bloch)


@dataclass(frozen=True)
class CapacityResult:
    value: float
    argmax_state: np.ndarray
    argmax_bloch: np.ndarray
    optimizer_trace: list[tuple[tuple[float, float, float], float]] = field(default_factory=list)
    grid_resolution: int = 0
    refinement_iterations: int = 0


def bloch_grid(n: int) -> np.ndarray:
    """Spherical grid over the Bloch ball, including the centre and the surface."""
    r = np.linspace(0.0, 1.0, n)
    theta = np.linspace(0.0, np.pi, n)
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    rr, tt, pp = np.meshgrid(r, theta, phi, indexing="ij")
    pts = np.stack([rr * np.sin(tt) * np.cos(pp), rr * np.sin(tt) * np.sin(pp), rr * np.cos(tt)], axis=-1)
    return pts.reshape(-1, 3)


def _project_ball(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x)
    return x / n if n > 1.0 else x


def one_shot_capacity(ch: QubitChannel, grid_n: int = 21, refine_iters: int = 200) -> CapacityResult:
    """Maximize coherent information over qubit inputs.

    A deterministic Bloch-ball grid seeds a Nelder-Mead refinement from its
    best point. Pure inputs give zero coherent information, so the grid's
    surface shell keeps the result non-negative.
    """
    model = _AffineModel(ch)
    grid = bloch_grid(grid_n)
    values = model(grid)
    best = int(np.argmax(values))
    x0, f0 = grid[best], float(values[best])
    trace = [(tuple(float(c) for c in x0), f0)]

    def objective(x):
        return -float(model(_project_ball(x))[0])

    def record(xk):
        p = _project_ball(xk)
        trace.append((tuple(float(c) for c in p), -objective(p)))

    h = 1.0 / max(grid_n - 1, 1)
    simplex = np.vstack([x0] + [x0 + h * e for e in np.eye(3)])
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        callback=record,
        options={"maxiter": refine_iters, "xatol": 1e-8, "fatol": 1e-12, "initial_simplex": simplex},
    )
    x_best, f_best = x0, f0
    if -res.fun > f0:
        x_best, f_best = _project_ball(res.x), float(-res.fun)
    value = max(f_best, 0.0)
    return CapacityResult(
        value=value,
        argmax_state=bloch_density(x_best),
        argmax_bloch=np.array(x_best, dtype=float),
        optimizer_trace=trace,
        grid_resolution=grid_n,
        refinement_iterations=int(res.nit),
    )


def binary_entropy(p) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(np.where(p > 0, p, 1.0)) - (1 - p) * np.log2(np.where(p < 1, 1 - p, 1.0))
    return h
