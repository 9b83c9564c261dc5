"""Bose-Hubbard Hamiltonian in a fixed-N Fock basis and its ground state.

    H = -J sum_j (a_j^+ a_{j+1} + h.c.) + (U/2) sum_j n_j (n_j - 1)

The alternative interaction convention ``(U/2) n_j (n_j + 1)`` differs by the
constant ``U * N`` inside a fixed-N sector and is available as a flag.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConfigurationError, NumericalError
from .fockspace import FockBasis, QuantumState

log = logging.getLogger(__name__)

InteractionConvention = Literal["standard_nn_minus_1", "paper_nn_plus_1"]

DENSE_LIMIT = 5000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class BoseHubbardParams:
    J: float = 1.0
    U: float = 0.0
    interaction_convention: InteractionConvention = "standard_nn_minus_1"
    periodic: bool = False

    def __post_init__(self) -> None:
        if not self.J > 0:
            raise ConfigurationError(f"tunneling J must be positive, got {self.J}")
        if self.U < 0:
            raise ConfigurationError(f"interaction U must be >= 0, got {self.U}")
        if self.interaction_convention not in ("standard_nn_minus_1", "paper_nn_plus_1"):
            raise ConfigurationError(
                f"unknown interaction convention {self.interaction_convention!r}"
            )

    def as_dict(self) -> dict:
        return {
            "J": self.J,
            "U": self.U,
            "interaction_convention": self.interaction_convention,
            "periodic": self.periodic,
        }


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    basis: FockBasis
    params: BoseHubbardParams
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.basis.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _bonds(sites: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(j, j + 1) for j in range(sites - 1)]
    # a periodic two-site chain would double-count its only bond
    if periodic and sites > 2:
        bonds.append((sites - 1, 0))
    return bonds


def interaction_energies(basis: FockBasis, params: BoseHubbardParams) -> np.ndarray:
    occ = basis.occupations.astype(float)
    if params.interaction_convention == "standard_nn_minus_1":
        pair = occ * (occ - 1.0)
    else:
        pair = occ * (occ + 1.0)
    return 0.5 * params.U * pair.sum(axis=1)


def build_hamiltonian(basis: FockBasis, params: BoseHubbardParams) -> SparseHamiltonian:
    occ = basis.occupations
    n_max = basis.spec.n_max
    weights = (n_max + 1) ** np.arange(basis.sites - 1, -1, -1, dtype=np.int64)
    codes = occ @ weights
    order = np.argsort(codes)
    sorted_codes = codes[order]

    rows, cols, vals = [], [], []
    for a, b in _bonds(basis.sites, params.periodic):
        # hop one boson b -> a; the transposed entry covers a -> b
        ok = (occ[:, b] > 0) & (occ[:, a] < n_max)
        src = np.nonzero(ok)[0]
        if src.size == 0:
            continue
        target_codes = codes[src] + weights[a] - weights[b]
        dst = order[np.searchsorted(sorted_codes, target_codes)]
        amp = -params.J * np.sqrt((occ[src, a] + 1.0) * occ[src, b])
        rows += [dst, src]
        cols += [src, dst]
        vals += [amp, amp]

    diag = interaction_energies(basis, params)
    idx = np.arange(basis.dim)
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    ).tocsr()
    mat.sum_duplicates()
    return SparseHamiltonian(basis=basis, params=params, matrix=mat)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    # deterministic global phase: largest-magnitude amplitude real and positive
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def ground_state(
    h: SparseHamiltonian,
    method: Literal["auto", "dense", "lanczos"] = "auto",
    tol: float = RESIDUAL_TOL,
    max_iterations: int | None = None,
) -> tuple[QuantumState, float]:
    """Lowest eigenpair of ``h``.

    Dense diagonalization is used up to ``DENSE_LIMIT`` basis states, an
    implicitly restarted Lanczos solver above.  The residual
    ``||H psi - E psi||`` is checked against ``tol`` either way.
    """
    if method == "auto":
        method = "dense" if h.dim <= DENSE_LIMIT else "lanczos"
    if h.dim == 1:
        method = "dense"

    if method == "dense":
        evals, evecs = np.linalg.eigh(h.dense())
        energy, vec = float(evals[0]), evecs[:, 0].astype(np.complex128)
    elif method == "lanczos":
        v0 = np.ones(h.dim) / np.sqrt(h.dim)
        try:
            evals, evecs = eigsh(
                h.matrix, k=1, which="SA", v0=v0, tol=tol * 1e-3,
                maxiter=max_iterations, ncv=min(h.dim - 1, 40),
            )
        except ArpackNoConvergence as exc:
            raise NumericalError("Lanczos ground-state solver did not converge") from exc
        energy, vec = float(evals[0]), evecs[:, 0].astype(np.complex128)
    else:
        raise ConfigurationError(f"unknown eigensolver method {method!r}")

    vec = _fix_phase(vec / np.linalg.norm(vec))
    residual = float(np.linalg.norm(h.matrix @ vec - energy * vec))
    if residual > tol:
        raise NumericalError(f"{method} ground state failed residual check", residual)
    log.debug("ground state E=%.12f dim=%d method=%s residual=%.2e", energy, h.dim, method, residual)
    return QuantumState(h.basis, vec), energy
