"""Weak homodyne measurement of the site densities.

A measurement of strength ``gamma`` reports, for every site,

    n_j = <n_j> + m_j / (2 sqrt(gamma)),        m_j ~ N(0, 1) i.i.d.

and, in the linearized model, conditions the state on that record with

    |psi'> ~ (1 + sqrt(gamma) sum_j m_j dn_j - (gamma/2) sum_j dn_j^2) |psi>,
    dn_j = n_j - <n_j>,

followed by explicit renormalization.  The exact mode instead applies the
Gaussian Kraus operator ``exp(-gamma sum_j (n_j - record_j)^2)`` with the
record drawn from the matching POVM density.

Both updates are diagonal in the Fock basis, so they reduce to elementwise
products with the occupation table.

Random streams
--------------
Every measurement draws from its own generator, derived from
``SeedSequence(master_seed, spawn_key=(trajectory, stage, time_index))``.
``stage`` is 0 for the first measurement, 1 for second-measurement noise on
the readout grid, 0/1/2 for the three measurements of the Leggett-Garg
protocol, and :data:`SELECT_STAGE` for drawing an initial state out of a
mixed ensemble.  Streams therefore do not depend on execution order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigurationError
from .fockspace import QuantumState, density_expectation

Mode = Literal["linearized", "exact_kraus"]

LINEARIZED_GAMMA_WARN = 0.5
SELECT_STAGE = 7


def measurement_stream(master_seed: int, trajectory: int, stage: int, time_index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(trajectory, stage, time_index))
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class MeasurementStrength:
    gamma: float

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ConfigurationError(f"measurement strength must be > 0, got {self.gamma}")

    @property
    def noise_scale(self) -> float:
        """Standard deviation 1/(2 sqrt(gamma)) of the record noise."""
        return 0.5 / np.sqrt(self.gamma)


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    values: np.ndarray
    seed: tuple = ()
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    """Noisy per-site record with the noise and pre-measurement densities used."""

    record: np.ndarray
    noise: NoiseRealization
    densities: np.ndarray
    gamma: float


def sample_noise(rng: np.random.Generator, sites: int, seed: tuple = (), time: float = 0.0) -> NoiseRealization:
    return NoiseRealization(values=rng.standard_normal(sites), seed=seed, time=time)


def _strength(gamma) -> float:
    return gamma.gamma if isinstance(gamma, MeasurementStrength) else MeasurementStrength(float(gamma)).gamma


def linearized_factor(state: QuantumState, gamma: float, noise: np.ndarray, densities: np.ndarray) -> np.ndarray:
    """Diagonal of the linearized backaction operator in the Fock basis."""
    dn = state.basis.occupations - densities
    return 1.0 + np.sqrt(gamma) * (dn @ noise) - 0.5 * gamma * np.einsum("kj,kj->k", dn, dn)


def weak_measure(
    state: QuantumState, gamma, noise: NoiseRealization
) -> tuple[MeasurementOutcome, QuantumState]:
    """Linearized weak density measurement driven by a given noise realization."""
    g = _strength(gamma)
    if g > LINEARIZED_GAMMA_WARN:
        warnings.warn(
            f"linearized measurement update used at gamma={g} > {LINEARIZED_GAMMA_WARN}",
            RuntimeWarning,
            stacklevel=2,
        )
    values = np.asarray(noise.values, dtype=float)
    if values.shape != (state.basis.sites,):
        raise ValueError(f"noise must have one value per site, got shape {values.shape}")
    dens = density_expectation(state)
    record = dens + values * (0.5 / np.sqrt(g))
    factor = linearized_factor(state, g, values, dens)
    post = QuantumState.from_unnormalized(state.basis, factor * state.amplitudes)
    return MeasurementOutcome(record=record, noise=noise, densities=dens, gamma=g), post


def exact_kraus_measure(
    state: QuantumState, gamma, rng: np.random.Generator, seed: tuple = (), time: float = 0.0
) -> tuple[MeasurementOutcome, QuantumState]:
    """Gaussian-Kraus density measurement with the record drawn from its POVM.

    The POVM density of the record is a mixture over Fock states ``k`` with
    weights ``|c_k|^2`` of product Gaussians centred on the occupations of
    ``k`` with variance 1/(4 gamma) per site; it is sampled by first drawing
    ``k`` and then the Gaussian.
    """
    g = _strength(gamma)
    occ = state.basis.occupations
    probs = state.probabilities()
    k = rng.choice(state.basis.dim, p=probs / probs.sum())
    scale = 0.5 / np.sqrt(g)
    record = occ[k] + scale * rng.standard_normal(state.basis.sites)
    dens = density_expectation(state)

    logw = -g * ((occ - record) ** 2).sum(axis=1)
    factor = np.exp(logw - logw.max())
    post = QuantumState.from_unnormalized(state.basis, factor * state.amplitudes)
    # express the record in the same noise variable as the linearized model
    noise = NoiseRealization(values=(record - dens) / scale, seed=seed, time=time)
    return MeasurementOutcome(record=record, noise=noise, densities=dens, gamma=g), post


def measure(
    state: QuantumState,
    gamma: float,
    rng: np.random.Generator,
    mode: Mode = "linearized",
    seed: tuple = (),
    time: float = 0.0,
) -> tuple[MeasurementOutcome, QuantumState]:
    """Draw noise from ``rng`` and measure in the requested mode."""
    if mode == "linearized":
        return weak_measure(state, gamma, sample_noise(rng, state.basis.sites, seed, time))
    if mode == "exact_kraus":
        return exact_kraus_measure(state, gamma, rng, seed, time)
    raise ConfigurationError(f"unknown measurement mode {mode!r}")
