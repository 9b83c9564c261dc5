"""Dynamical structure factor and the spatial imaging cutoff."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from ..errors import ConfigurationError
from ..measurement import MeasurementOutcome, NoiseRealization
from ..trajectory import ThreeMeasurementRecord, TrajectoryRecord
from .correlations import Ensemble, VanHoveGrid, sem

Window = Literal["none", "hann"]


@dataclass(frozen=True, eq=False)
class DsfGrid:
    """S(q, w) with q in radians per site (rows) and w in units of J (columns).

    ``values`` keeps the complex transform; ``real`` is the reported estimate.
    """

    q: np.ndarray
    omegas: np.ndarray
    values: np.ndarray
    sem: np.ndarray | None
    window: str
    rule: str = "trapezoid"

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def q_index(self, q: float) -> int:
        return int(np.argmin(np.abs(self.q - q)))


def q_grid(n_displacements: int) -> np.ndarray:
    """Wavenumbers 2 pi k / n folded into (-pi, pi], ascending."""
    q = 2 * np.pi * np.fft.fftfreq(n_displacements)
    q[np.isclose(q, -np.pi)] = np.pi
    return np.sort(q)


def window_weights(times: np.ndarray, window: Window) -> np.ndarray:
    if window == "none":
        return np.ones_like(times)
    if window == "hann":
        span = times[-1] - times[0]
        if span == 0:
            return np.ones_like(times)
        # half of a Hann window: 1 at the first delay, 0 at the horizon
        return 0.5 * (1.0 + np.cos(np.pi * (times - times[0]) / span))
    raise ConfigurationError(f"unknown window {window!r}")


def _time_kernel(times: np.ndarray, omegas: np.ndarray, window: Window) -> np.ndarray:
    if times.size > 1:
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("DSF needs a uniform time grid")
        trap = np.full(times.size, steps[0])
        trap[[0, -1]] *= 0.5
    else:
        trap = np.zeros(1)
    w = trap * window_weights(times, window)
    return w[:, None] * np.exp(1j * np.outer(times, omegas))  # (T, W)


def dsf(
    g: VanHoveGrid,
    omegas: Sequence[float],
    window: Window = "hann",
    q: Sequence[float] | None = None,
) -> DsfGrid:
    """Space-time transform of a Van Hove grid.

    S(q, w) = sum_d exp(-i q d) * integral_0^T G_d(t) exp(i w t) w(t) dt, with the
    one-sided integral evaluated by the trapezoid rule over the recorded
    delays.  When per-trajectory samples are attached, the standard error of
    the real part is propagated by transforming each sample.

    ``q`` defaults to the 2 pi k / D grid of the D displacements; any other
    wavenumbers may be requested since the spatial sum is explicit.
    """
    omegas = np.asarray(omegas, dtype=float)
    kernel = _time_kernel(np.asarray(g.times, dtype=float), omegas, window)
    q = q_grid(len(g.displacements)) if q is None else np.asarray(q, dtype=float)
    phases = np.exp(-1j * np.outer(q, g.displacements))  # (Q, D)
    values = phases @ (g.values @ kernel)
    err = None
    if g.samples is not None and g.samples.shape[0] > 1:
        per = np.einsum("qd,mdt,tw->mqw", phases, g.samples, kernel, optimize=True)
        err = sem(per.real)
    return DsfGrid(q=q, omegas=omegas, values=values, sem=err, window=window)


# -- imaging resolution ------------------------------------------------------------

def _cutoff_mask(sites: int, k_max: float) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(sites)
    return np.abs(k) <= k_max + 1e-12


def _check_kmax(k_max: float) -> None:
    if not 0 < k_max <= np.pi + 1e-12:
        raise ConfigurationError(f"k_max must lie in (0, pi], got {k_max}")


def lowpass_sites(values: np.ndarray, k_max: float, axis: int = -1) -> np.ndarray:
    """Remove every spatial Fourier component with |k| > k_max along ``axis``."""
    _check_kmax(k_max)
    values = np.asarray(values, dtype=float)
    mask = _cutoff_mask(values.shape[axis], k_max)
    if mask.all():
        return values.copy()
    shape = [1] * values.ndim
    shape[axis] = mask.size
    spec = np.fft.fft(values, axis=axis) * mask.reshape(shape)
    return np.fft.ifft(spec, axis=axis).real


def lowpass_matrix(sites: int, k_max: float) -> np.ndarray:
    """Real symmetric projector P with ``P @ x == lowpass_sites(x, k_max)``."""
    return lowpass_sites(np.eye(sites), k_max, axis=0)


def filter_correlations(corr: np.ndarray, k_max: float) -> np.ndarray:
    """Correlation tensor ``corr[..., j, jp]`` of low-pass filtered records."""
    p = lowpass_matrix(corr.shape[-1], k_max)
    return np.einsum("ja,...ab,pb->...jp", p, corr, p)


def fourier_cutoff(obj, k_max: float):
    """Low-pass filter every per-site array of an ensemble or record.

    The filter is a projection, so anything already cut at ``k_max`` or below
    is returned unchanged.
    """
    _check_kmax(k_max)
    if isinstance(obj, Ensemble):
        if obj.k_max is not None and obj.k_max <= k_max:
            return obj
        f = lambda a: None if a is None else lowpass_sites(a, k_max)
        return replace(
            obj,
            first=f(obj.first),
            first_noise=f(obj.first_noise),
            first_densities=f(obj.first_densities),
            densities=f(obj.densities),
            second_noise=f(obj.second_noise),
            k_max=k_max if obj.k_max is None else min(k_max, obj.k_max),
        )
    if isinstance(obj, (TrajectoryRecord, ThreeMeasurementRecord)):
        return _filter_record(obj, k_max)
    if isinstance(obj, (list, tuple)):
        return type(obj)(fourier_cutoff(o, k_max) for o in obj)
    raise TypeError(f"cannot filter {type(obj).__name__}")


def _filter_outcome(o, k_max):
    noise = NoiseRealization(lowpass_sites(o.noise.values, k_max), o.noise.seed, o.noise.time)
    return MeasurementOutcome(
        record=lowpass_sites(o.record, k_max), noise=noise,
        densities=lowpass_sites(o.densities, k_max), gamma=o.gamma,
    )


def _filter_record(rec, k_max):
    if rec.k_max is not None and rec.k_max <= k_max:
        return rec
    k_new = k_max if rec.k_max is None else min(k_max, rec.k_max)
    if isinstance(rec, ThreeMeasurementRecord):
        outcomes = tuple(_filter_outcome(o, k_max) for o in rec.outcomes)
        return replace(rec, outcomes=outcomes, k_max=k_new)
    first = (
        tuple(_filter_outcome(o, k_max) for o in rec.first)
        if isinstance(rec.first, tuple) else _filter_outcome(rec.first, k_max)
    )
    return replace(
        rec,
        first=first,
        densities=lowpass_sites(rec.densities, k_max),
        second_noise=None if rec.second_noise is None else lowpass_sites(rec.second_noise, k_max),
        k_max=k_new,
    )
