"""Measurement protocols run as ensembles of seeded quantum trajectories.

Two-measurement protocol: weakly measure at t = 0, evolve the conditioned
state, and read out the densities on a grid of delays.  Each grid readout is
terminal, so one first-measurement realization serves the whole grid and the
second measurement's backaction never enters.  ``strict_grid`` instead starts
a fresh trajectory for every delay.

Three-measurement protocol: measure at t1, t2 and t3 with backaction applied
after the first two.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Literal, Sequence, Union

import numpy as np

from .errors import ConfigurationError, NumericalError, WeakDsfError
from .evolution import Propagator
from .fockspace import QuantumState
from .measurement import (
    SELECT_STAGE,
    MeasurementOutcome,
    Mode,
    measure,
    measurement_stream,
)

InitialState = Union[QuantumState, Sequence[tuple[QuantumState, float]]]


@dataclass(frozen=True)
class ProtocolConfig:
    gamma: float
    times: tuple[float, ...] = tuple(np.round(np.arange(0, 61) * 0.05, 10))
    trajectories: int = 50
    second_noise: Literal["include", "omit"] = "omit"
    mode: Mode = "linearized"
    seed: int = 0
    strict_grid: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma}")
        if self.trajectories < 1:
            raise ConfigurationError("need at least one trajectory")
        if not self.times or self.times[0] < 0 or any(
            b < a for a, b in zip(self.times, self.times[1:])
        ):
            raise ConfigurationError("time grid must be non-empty, non-negative and ascending")
        if self.second_noise not in ("include", "omit"):
            raise ConfigurationError(f"second_noise must be include or omit, not {self.second_noise!r}")
        if self.mode not in ("linearized", "exact_kraus"):
            raise ConfigurationError(f"unknown measurement mode {self.mode!r}")

    @property
    def include_noise(self) -> bool:
        return self.second_noise == "include"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["times"] = list(self.times)
        return d


def time_grid(t_max: float, dt: float) -> tuple[float, ...]:
    """Uniform grid ``0, dt, ..., t_max`` (endpoint included when it lands on the grid)."""
    if dt <= 0 or t_max < 0:
        raise ConfigurationError("need dt > 0 and t_max >= 0")
    n = int(np.floor(t_max / dt + 1e-9))
    return tuple(float(x) for x in np.round(np.arange(n + 1) * dt, 12))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One trajectory of the two-measurement protocol.

    ``first`` is a single outcome, or one outcome per grid time in strict-grid
    mode.  ``densities`` and ``second_noise`` have shape ``(len(times), L)``.
    """

    index: int
    gamma: float
    times: np.ndarray
    first: Union[MeasurementOutcome, tuple[MeasurementOutcome, ...]]
    densities: np.ndarray
    second_noise: np.ndarray | None = None
    component: int = 0
    k_max: float | None = None

    @property
    def second_outcomes(self) -> np.ndarray:
        if self.second_noise is None:
            return self.densities
        return self.densities + self.second_noise * (0.5 / np.sqrt(self.gamma))


@dataclass(frozen=True, eq=False)
class ThreeMeasurementRecord:
    index: int
    gamma: float
    times: np.ndarray
    outcomes: tuple[MeasurementOutcome, MeasurementOutcome, MeasurementOutcome]
    component: int = 0
    k_max: float | None = None

    @property
    def records(self) -> np.ndarray:
        return np.stack([o.record for o in self.outcomes])


class EnsembleFailure(WeakDsfError):
    """Some trajectories failed; the others are kept in ``records``."""

    def __init__(self, failures: dict[int, BaseException], records: list):
        idx = ", ".join(str(i) for i in sorted(failures))
        super().__init__(f"{len(failures)} trajectories failed: {idx}")
        self.failures = failures
        self.records = records


def _pick_initial(initial: InitialState, cfg: ProtocolConfig, index: int) -> tuple[QuantumState, int]:
    if isinstance(initial, QuantumState):
        return initial, 0
    states = [s for s, _ in initial]
    weights = np.array([w for _, w in initial], dtype=float)
    if not len(states) or np.any(weights < 0) or weights.sum() <= 0:
        raise ConfigurationError("mixed initial ensemble needs non-negative weights with positive sum")
    rng = measurement_stream(cfg.seed, index, SELECT_STAGE)
    k = int(rng.choice(len(states), p=weights / weights.sum()))
    return states[k], k


def _grid_densities(amps: np.ndarray, occupations: np.ndarray) -> np.ndarray:
    probs = np.abs(amps) ** 2
    probs /= probs.sum(axis=-1, keepdims=True)
    return probs @ occupations


def _second_noise(cfg: ProtocolConfig, index: int, sites: int) -> np.ndarray | None:
    if not cfg.include_noise:
        return None
    return np.stack([
        measurement_stream(cfg.seed, index, 1, k).standard_normal(sites)
        for k in range(len(cfg.times))
    ])


def first_measurement(
    psi0: QuantumState, cfg: ProtocolConfig, index: int, time_index: int = 0
) -> tuple[MeasurementOutcome, QuantumState]:
    """The t = 0 measurement of trajectory ``index`` with its post-measurement state."""
    rng = measurement_stream(cfg.seed, index, 0, time_index)
    return measure(psi0, cfg.gamma, rng, cfg.mode, seed=(cfg.seed, index, 0, time_index))


def run_trajectory(
    psi0: InitialState, cfg: ProtocolConfig, index: int, propagator: Propagator
) -> TrajectoryRecord:
    state, component = _pick_initial(psi0, cfg, index)
    times = np.asarray(cfg.times)
    occ = state.basis.occupations

    if cfg.strict_grid:
        firsts, rows = [], []
        for k, t in enumerate(times):
            outcome, post = first_measurement(state, cfg, index, k)
            amps = propagator.propagate(post.amplitudes, float(t))
            firsts.append(outcome)
            rows.append(_grid_densities(amps, occ))
        first = tuple(firsts)
        densities = np.stack(rows)
    else:
        first, post = first_measurement(state, cfg, index)
        amps = propagator.propagate_grid(post.amplitudes, times)
        densities = _grid_densities(amps, occ)

    return TrajectoryRecord(
        index=index,
        gamma=cfg.gamma,
        times=times,
        first=first,
        densities=densities,
        second_noise=_second_noise(cfg, index, state.basis.sites),
        component=component,
    )


def _map(fn, indices: Sequence[int], workers: int | None) -> list:
    results: dict[int, object] = {}
    failures: dict[int, BaseException] = {}

    def task(i):
        try:
            results[i] = fn(i)
        except ConfigurationError:
            raise
        except (NumericalError, ValueError, FloatingPointError) as exc:
            failures[i] = exc

    workers = workers or os.cpu_count() or 1
    if workers == 1:
        for i in indices:
            task(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(task, indices))
    records = [results[i] for i in indices if i in results]
    if failures:
        raise EnsembleFailure(failures, records)
    return records


def run_ensemble(
    psi0: InitialState,
    cfg: ProtocolConfig,
    propagator: Propagator,
    indices: Sequence[int] | None = None,
    workers: int | None = 1,
) -> list[TrajectoryRecord]:
    """Run trajectories ``indices`` (default ``range(cfg.trajectories)``).

    Each trajectory owns its random streams, so the result does not depend
    on ``workers`` or on the order of ``indices``.
    """
    if indices is None:
        indices = range(cfg.trajectories)
    return _map(lambda i: run_trajectory(psi0, cfg, i, propagator), list(indices), workers)


def run_three_measurement(
    psi0: InitialState,
    cfg: ProtocolConfig,
    times: Sequence[float],
    index: int,
    propagator: Propagator,
) -> ThreeMeasurementRecord:
    """Measure at ``t1 <= t2 <= t3`` with backaction after the first two.

    The middle outcome always carries its noise, because that noise is what
    the third measurement is correlated with.  ``cfg.second_noise`` only
    controls the final readout.
    """
    t = [float(x) for x in times]
    if len(t) != 3 or t[0] < 0 or not t[0] <= t[1] <= t[2]:
        raise ConfigurationError(f"need three ordered non-negative times, got {times}")
    state, component = _pick_initial(psi0, cfg, index)
    state = propagator.evolve(state, t[0])
    outcomes = []
    prev = t[0]
    for stage, ti in enumerate(t):
        state = propagator.evolve(state, ti - prev)
        prev = ti
        rng = measurement_stream(cfg.seed, index, stage)
        outcome, post = measure(state, cfg.gamma, rng, cfg.mode, seed=(cfg.seed, index, stage, 0), time=ti)
        if stage == 2 and not cfg.include_noise:
            outcome = MeasurementOutcome(
                record=outcome.densities.copy(), noise=outcome.noise,
                densities=outcome.densities, gamma=outcome.gamma,
            )
        outcomes.append(outcome)
        state = post
    return ThreeMeasurementRecord(
        index=index, gamma=cfg.gamma, times=np.asarray(t), outcomes=tuple(outcomes), component=component
    )


def run_three_measurement_ensemble(
    psi0: InitialState,
    cfg: ProtocolConfig,
    times: Sequence[float],
    propagator: Propagator,
    indices: Sequence[int] | None = None,
    workers: int | None = 1,
) -> list[ThreeMeasurementRecord]:
    if indices is None:
        indices = range(cfg.trajectories)
    return _map(lambda i: run_three_measurement(psi0, cfg, times, i, propagator), list(indices), workers)
