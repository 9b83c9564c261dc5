"""Cross-correlations of measurement records and the Van Hove function."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..trajectory import TrajectoryRecord


def sem(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    """Standard error of the mean, sqrt(var / (M - 1)) with the population variance."""
    m = samples.shape[axis]
    if m < 2:
        raise ValueError("standard error needs at least two samples")
    return np.sqrt(np.var(samples, axis=axis) / (m - 1))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Records of a two-measurement ensemble stacked into arrays.

    ``first`` (and ``first_noise``, ``first_densities``) has shape ``(M, L)``,
    or ``(M, T, L)`` when each delay had its own first measurement.
    ``densities`` and ``second_noise`` have shape ``(M, T, L)``.  ``k_max`` is
    the spatial cutoff already applied to every per-site array, if any.
    """

    times: np.ndarray
    gamma: float
    first: np.ndarray
    first_noise: np.ndarray
    first_densities: np.ndarray
    densities: np.ndarray
    second_noise: np.ndarray | None
    indices: np.ndarray
    k_max: float | None = None

    @classmethod
    def from_records(cls, records: Sequence[TrajectoryRecord]) -> "Ensemble":
        if not records:
            raise ValueError("empty ensemble")
        r0 = records[0]
        for r in records[1:]:
            if r.gamma != r0.gamma or not np.array_equal(r.times, r0.times):
                raise ValueError("records disagree on gamma or time grid")
        if isinstance(r0.first, tuple):
            first = np.stack([[o.record for o in r.first] for r in records])
            noise = np.stack([[o.noise.values for o in r.first] for r in records])
            dens = np.stack([[o.densities for o in r.first] for r in records])
        else:
            first = np.stack([r.first.record for r in records])
            noise = np.stack([r.first.noise.values for r in records])
            dens = np.stack([r.first.densities for r in records])
        second_noise = None
        if r0.second_noise is not None:
            second_noise = np.stack([r.second_noise for r in records])
        return cls(
            times=np.asarray(r0.times, dtype=float),
            gamma=float(r0.gamma),
            first=first,
            first_noise=noise,
            first_densities=dens,
            densities=np.stack([r.densities for r in records]),
            second_noise=second_noise,
            indices=np.array([r.index for r in records]),
        )

    @property
    def size(self) -> int:
        return self.densities.shape[0]

    @property
    def sites(self) -> int:
        return self.densities.shape[2]

    @property
    def strict(self) -> bool:
        return self.first.ndim == 3

    def first_aligned(self) -> np.ndarray:
        """First records broadcast against the time axis, shape (M, T or 1, L)."""
        return self.first if self.strict else self.first[:, None, :]

    def second(self, include_noise: bool | None = None) -> np.ndarray:
        """Second-measurement outcomes; noise is added when present unless disabled."""
        if include_noise is None:
            include_noise = self.second_noise is not None
        if not include_noise:
            return self.densities
        if self.second_noise is None:
            raise ValueError("ensemble was recorded without second-measurement noise")
        return self.densities + self.second_noise * (0.5 / np.sqrt(self.gamma))

    def head(self, n: int) -> "Ensemble":
        """The first ``n`` trajectories."""
        return replace(
            self,
            first=self.first[:n],
            first_noise=self.first_noise[:n],
            first_densities=self.first_densities[:n],
            densities=self.densities[:n],
            second_noise=None if self.second_noise is None else self.second_noise[:n],
            indices=self.indices[:n],
        )

    def time_index(self, dt: float) -> int:
        hits = np.nonzero(np.isclose(self.times, dt, rtol=0, atol=1e-9))[0]
        if hits.size == 0:
            raise ValueError(f"delay {dt} is not on the recorded time grid")
        return int(hits[0])


def _as_ensemble(ens) -> Ensemble:
    return ens if isinstance(ens, Ensemble) else Ensemble.from_records(ens)


def _products(ens: Ensemble, j: int, jp: int, dt: float, connected: bool, include_noise) -> np.ndarray:
    k = ens.time_index(dt)
    x = ens.first[:, k, j] if ens.strict else ens.first[:, j]
    y = ens.second(include_noise)[:, k, jp]
    if connected:
        x = x - x.mean()
        y = y - y.mean()
    return x * y


def cross_correlate(ens, j: int, jp: int, dt: float, include_noise: bool | None = None) -> tuple[float, float]:
    """Trajectory average of ``n_{j,0} n_{jp,dt}`` and its standard error."""
    p = _products(_as_ensemble(ens), j, jp, dt, False, include_noise)
    return float(p.mean()), float(sem(p))


def noise_cross_correlate(ens, j: int, jp: int, dt: float, include_noise: bool | None = None) -> tuple[float, float]:
    """Average of the fluctuation product ``dn_{j,0} dn_{jp,dt}`` about the ensemble means."""
    p = _products(_as_ensemble(ens), j, jp, dt, True, include_noise)
    return float(p.mean()), float(sem(p))


def pair_products(ens: Ensemble, connected: bool = False, include_noise: bool | None = None) -> np.ndarray:
    """Per-trajectory ``x_j(0) y_jp(t)`` with shape (M, T, L, L)."""
    x = ens.first_aligned()
    y = ens.second(include_noise)
    if connected:
        x = x - x.mean(axis=0)
        y = y - y.mean(axis=0)
    return x[:, :, :, None] * y[:, :, None, :]


def displacement_average(pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Average ``pairs[..., j, j + d]`` over the valid ``j`` of an open chain.

    Returns ``(displacements, averages with d moved to the last axis, pair counts)``.
    """
    sites = pairs.shape[-1]
    disp = np.arange(-(sites - 1), sites)
    out = np.stack([np.diagonal(pairs, offset=d, axis1=-2, axis2=-1).mean(axis=-1) for d in disp], axis=-1)
    return disp, out, sites - np.abs(disp)


@dataclass(frozen=True, eq=False)
class VanHoveGrid:
    """G_d(t) on displacements ``d`` (rows) and delays ``t`` (columns)."""

    displacements: np.ndarray
    times: np.ndarray
    values: np.ndarray
    sem: np.ndarray
    pairs: np.ndarray
    samples: np.ndarray | None = None
    connected: bool = False

    def value(self, d: int, t: float) -> float:
        row = int(np.nonzero(self.displacements == d)[0][0])
        col = int(np.nonzero(np.isclose(self.times, t, rtol=0, atol=1e-9))[0][0])
        return float(self.values[row, col])

    def restrict(self, max_displacement: int) -> "VanHoveGrid":
        keep = np.abs(self.displacements) <= max_displacement
        return replace(
            self,
            displacements=self.displacements[keep],
            values=self.values[keep],
            sem=self.sem[keep],
            pairs=self.pairs[keep],
            samples=None if self.samples is None else self.samples[:, keep],
        )


def van_hove(
    ens,
    connected: bool = False,
    include_noise: bool | None = None,
    keep_samples: bool = True,
) -> VanHoveGrid:
    """Ensemble estimate of the Van Hove function with per-cell standard errors.

    Each trajectory yields its own G_d(t) by averaging the record products over
    the site pairs at displacement ``d`` that fit on the open chain; the
    estimate and its error are the mean and standard error of those.
    """
    ens = _as_ensemble(ens)
    pairs = pair_products(ens, connected, include_noise)
    disp, per_traj, counts = displacement_average(pairs)
    per_traj = np.moveaxis(per_traj, -1, 1)  # (M, D, T)
    return VanHoveGrid(
        displacements=disp,
        times=ens.times.copy(),
        values=per_traj.mean(axis=0),
        sem=sem(per_traj),
        pairs=counts,
        samples=per_traj if keep_samples else None,
        connected=connected,
    )


def van_hove_from_correlations(times: np.ndarray, corr: np.ndarray, connected: bool = False) -> VanHoveGrid:
    """Van Hove grid of an exact correlation tensor ``corr[t, j, jp]`` (real part taken)."""
    disp, vals, counts = displacement_average(np.real(corr))
    vals = vals.T
    return VanHoveGrid(
        displacements=disp,
        times=np.asarray(times, dtype=float),
        values=vals,
        sem=np.zeros_like(vals),
        pairs=counts,
        connected=connected,
    )
