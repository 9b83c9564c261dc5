"""Exact two-time expectation values used as reference for the estimators.

All quantities follow from evolving a handful of vectors built from the
initial state: ``psi``, ``n_j psi`` and ``dn_j^2 psi`` for every site, where
``dn_j = n_j - <n_j>``.  For example

    <n_j(0) n_jp(t)> = <U n_j psi | n_jp | U psi>.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from ..evolution import Propagator
from ..fockspace import QuantumState, apply_number_op, density_expectation
from .correlations import VanHoveGrid, van_hove_from_correlations


class Oracle:
    """Exact correlators of ``psi0`` on a grid of delays."""

    def __init__(self, propagator: Propagator, psi0: QuantumState, times: Sequence[float]):
        self.propagator = propagator
        self.psi0 = psi0
        self.times = np.asarray(times, dtype=float)
        self.occ = psi0.basis.occupations.astype(float)
        self.n0 = density_expectation(psi0)

    @cached_property
    def _psi_t(self) -> np.ndarray:
        return self.propagator.propagate_grid(self.psi0.amplitudes, self.times)  # (T, D)

    @cached_property
    def _dn_psi_t(self) -> np.ndarray:
        dn = (self.occ - self.n0) * self.psi0.amplitudes[:, None]
        return self.propagator.propagate_grid(dn, self.times)  # (T, D, L)

    @cached_property
    def _dn2_psi_t(self) -> np.ndarray:
        dn2 = (self.occ - self.n0) ** 2 * self.psi0.amplitudes[:, None]
        return self.propagator.propagate_grid(dn2, self.times)

    @cached_property
    def densities(self) -> np.ndarray:
        """<n_j(t)> of the unmeasured evolution, shape (T, L)."""
        return np.abs(self._psi_t) ** 2 @ self.occ

    @cached_property
    def connected(self) -> np.ndarray:
        """<dn_j(0) n_jp(t)> = <n_j(0) n_jp(t)> - <n_j><n_jp(t)>, shape (T, L, L) complex."""
        return np.einsum("tkj,kp,tk->tjp", self._dn_psi_t.conj(), self.occ, self._psi_t)

    @cached_property
    def correlations(self) -> np.ndarray:
        """<n_j(0) n_jp(t)>, shape (T, L, L) complex."""
        return self.connected + self.n0[None, :, None] * self.densities[:, None, :]

    @cached_property
    def lindblad(self) -> np.ndarray:
        """The O(gamma) drift term L_jp(t), shape (T, L)."""
        psi, a, b = self._psi_t, self._dn2_psi_t, self._dn_psi_t
        first = np.einsum("tkj,kp,tk->tp", a.conj(), self.occ, psi)
        second = np.einsum("tkj,kp,tkj->tp", b.conj(), self.occ, b)
        return np.real(first - second)

    def van_hove(self, connected: bool = False) -> VanHoveGrid:
        corr = self.connected if connected else self.correlations
        return van_hove_from_correlations(self.times, corr, connected=connected)

    def predicted_variance(self, gamma: float, include_systematic: bool = True) -> np.ndarray:
        """Variance of dn_{j,0} dn_{jp,t} per (t, j, jp) for records with noise on both measurements."""
        r = np.real(self.connected)
        var = 1.0 / (16.0 * gamma**2) + r**2 + (r**2).sum(axis=1, keepdims=True)
        if include_systematic:
            var = var + 4.0 * gamma * self.lindblad[:, None, :] ** 2
        return var


def oracle_two_time(propagator: Propagator, psi0: QuantumState, j: int, jp: int, dt: float) -> complex:
    """<psi0| n_j U^+(dt) n_jp U(dt) |psi0>."""
    left = propagator.propagate(apply_number_op(psi0, j), dt)
    right = propagator.propagate(psi0.amplitudes, dt)
    right = psi0.basis.occupations[:, jp] * right
    return complex(np.vdot(left, right))


def lindblad_term(propagator: Propagator, psi0: QuantumState, jp: int, dt: float) -> float:
    return float(Oracle(propagator, psi0, [dt]).lindblad[0, jp])


def predicted_variance(
    propagator: Propagator,
    psi0: QuantumState,
    gamma: float,
    j: int,
    jp: int,
    dt: float,
    include_systematic: bool = False,
) -> float:
    """Predicted variance of the fluctuation product dn_{j,0} dn_{jp,dt}."""
    var = Oracle(propagator, psi0, [dt]).predicted_variance(gamma, include_systematic)
    return float(var[0, j, jp])
