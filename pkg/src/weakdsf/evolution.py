"""Unitary time evolution exp(-i H t) with hbar = 1 and time in units of 1/J.

Two propagators are available:

``dense_exponential``
    exact exponential through the eigendecomposition of the dense matrix,
    computed once and reused for every state and time.
``krylov``
    Lanczos-Krylov approximation of exp(-i H dt) v using only sparse
    matrix-vector products; steps that do not converge inside the subspace
    are split in half.
"""

from __future__ import annotations

from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from .errors import ConfigurationError, NumericalError
from .fockspace import QuantumState
from .hamiltonian import DENSE_LIMIT, SparseHamiltonian

Method = Literal["auto", "dense_exponential", "krylov"]

NORM_DRIFT_TOL = 1e-10


def _rmul(real: np.ndarray, x: np.ndarray) -> np.ndarray:
    # real @ complex without upcasting the real matrix
    return real @ x.real + 1j * (real @ x.imag)


def krylov_expm_step(matvec, v: np.ndarray, dt: float, m_max: int = 40, tol: float = 1e-12):
    """One Lanczos approximation of ``exp(-i A dt) v`` for Hermitian ``A``.

    Returns ``(w, err, converged)`` where ``err`` is the a posteriori error
    estimate ``beta * b_m * |e_m^T exp(-i T dt) e_1|``.
    """
    n = v.shape[0]
    beta = float(np.linalg.norm(v))
    if beta == 0.0:
        return np.zeros_like(v), 0.0, True
    m_max = min(m_max, n)
    basis = np.zeros((m_max, n), dtype=np.complex128)
    basis[0] = v / beta
    alphas: list[float] = []
    betas: list[float] = []
    err = np.inf
    for k in range(m_max):
        w = matvec(basis[k])
        a = float(np.vdot(basis[k], w).real)
        w = w - a * basis[k]
        if k > 0:
            w -= betas[-1] * basis[k - 1]
        # full reorthogonalization; the subspace is small
        w -= basis[: k + 1].T @ (basis[: k + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        alphas.append(a)

        tri = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        evals, evecs = np.linalg.eigh(tri)
        y = evecs @ (np.exp(-1j * evals * dt) * evecs[0])
        err = beta * b * abs(y[-1])
        if b < 1e-13 * max(1.0, abs(a)) or err < tol or k == m_max - 1:
            w_out = beta * (basis[: k + 1].T @ y)
            converged = b < 1e-13 * max(1.0, abs(a)) or err < tol
            return w_out, float(err), converged
        betas.append(b)
        basis[k + 1] = w / b
    raise AssertionError("unreachable")


class Propagator:
    """Applies exp(-i H t) to states of a fixed Hamiltonian."""

    def __init__(
        self,
        hamiltonian: SparseHamiltonian,
        method: Method = "auto",
        krylov_dim: int = 40,
        tol: float = 1e-12,
        max_splits: int = 12,
    ):
        if method == "auto":
            method = "dense_exponential" if hamiltonian.dim <= DENSE_LIMIT else "krylov"
        if method not in ("dense_exponential", "krylov"):
            raise ConfigurationError(f"unknown propagation method {method!r}")
        self.hamiltonian = hamiltonian
        self.method = method
        self.krylov_dim = krylov_dim
        self.tol = tol
        self.max_splits = max_splits

    @property
    def basis(self):
        return self.hamiltonian.basis

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and (real, orthonormal) eigenvectors of the dense matrix."""
        return np.linalg.eigh(self.hamiltonian.dense())

    # -- raw amplitude interface -------------------------------------------------

    def _krylov(self, v: np.ndarray, dt: float, depth: int = 0) -> np.ndarray:
        mat = self.hamiltonian.matrix
        w, err, ok = krylov_expm_step(mat.dot, v, dt, self.krylov_dim, self.tol)
        if ok:
            return w
        if depth >= self.max_splits:
            raise NumericalError(f"Krylov step dt={dt:g} did not converge", err)
        half = self._krylov(v, dt / 2, depth + 1)
        return self._krylov(half, dt / 2, depth + 1)

    def propagate(self, amps: np.ndarray, dt: float) -> np.ndarray:
        """``exp(-i H dt)`` applied to a vector or to the columns of a block."""
        if dt < 0:
            raise ValueError(f"time step must be >= 0, got {dt}")
        amps = np.asarray(amps, dtype=np.complex128)
        if dt == 0:
            return amps.copy()
        if self.method == "dense_exponential":
            evals, evecs = self.spectrum
            coeff = _rmul(evecs.T, amps)
            phase = np.exp(-1j * evals * dt)
            coeff = coeff * (phase if amps.ndim == 1 else phase[:, None])
            return _rmul(evecs, coeff)
        if amps.ndim == 1:
            return self._krylov(amps, dt)
        return np.stack([self._krylov(col, dt) for col in amps.T], axis=1)

    def propagate_grid(self, amps: np.ndarray, times: Sequence[float]) -> np.ndarray:
        """Vector evolved to every time in ``times``, stepping between them.

        Returns an array of shape ``(len(times),) + amps.shape``.
        """
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("time grid must be a non-empty 1D sequence")
        if times[0] < 0 or np.any(np.diff(times) < 0):
            raise ValueError("time grid must be non-negative and ascending")
        amps = np.asarray(amps, dtype=np.complex128)
        steps = np.diff(np.concatenate([[0.0], times]))

        if self.method == "dense_exponential":
            evals, evecs = self.spectrum
            coeff = _rmul(evecs.T, amps)
            out = np.empty((times.size,) + amps.shape, dtype=np.complex128)
            coeffs = np.empty((times.size,) + coeff.shape, dtype=np.complex128)
            for k, dt in enumerate(steps):
                if dt:
                    phase = np.exp(-1j * evals * dt)
                    coeff = coeff * (phase if amps.ndim == 1 else phase[:, None])
                coeffs[k] = coeff
            if amps.ndim == 1:
                out[:] = _rmul(evecs, coeffs.T).T
            else:
                for k in range(times.size):
                    out[k] = _rmul(evecs, coeffs[k])
            return out

        out = np.empty((times.size,) + amps.shape, dtype=np.complex128)
        current = amps
        for k, dt in enumerate(steps):
            current = self.propagate(current, dt) if dt else current.copy()
            out[k] = current
        return out

    # -- state interface ------------------------------------------------------------

    def _to_state(self, amps: np.ndarray) -> QuantumState:
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_DRIFT_TOL:
            raise NumericalError("propagation did not preserve the norm", abs(norm - 1.0))
        return QuantumState(self.basis, amps / norm)

    def evolve(self, state: QuantumState, dt: float) -> QuantumState:
        if dt == 0:
            return state
        return self._to_state(self.propagate(state.amplitudes, dt))

    def evolve_grid(self, state: QuantumState, times: Sequence[float]) -> list[QuantumState]:
        return [self._to_state(a) for a in self.propagate_grid(state.amplitudes, times)]


def energy_expectation(h: SparseHamiltonian, state: QuantumState) -> float:
    return float(np.vdot(state.amplitudes, h.matrix @ state.amplitudes).real)
