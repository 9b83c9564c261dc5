"""Fixed-particle-number bosonic Fock space on a 1D chain.

States are occupation tuples ``(n_1, ..., n_L)`` with ``sum(n) == N`` and
``0 <= n_j <= n_max``.  They are stored in descending lexicographic order,
so for two sites and two particles the basis is ``(2,0), (1,1), (0,2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Chain length, total particle number and per-site occupation cap."""

    sites: int
    particles: int
    n_max: int

    def __post_init__(self) -> None:
        if self.sites < 1:
            raise ConfigurationError(f"need at least one site, got {self.sites}")
        if self.particles < 0:
            raise ConfigurationError(f"particle number must be >= 0, got {self.particles}")
        if self.n_max < 1:
            raise ConfigurationError(f"n_max must be >= 1, got {self.n_max}")
        if self.particles > self.sites * self.n_max:
            raise ConfigurationError(
                f"{self.particles} particles do not fit on {self.sites} sites "
                f"with at most {self.n_max} per site"
            )

    def as_dict(self) -> dict:
        return {"sites": self.sites, "particles": self.particles, "n_max": self.n_max}


def _occupations(sites: int, particles: int, n_max: int) -> Iterator[tuple[int, ...]]:
    if sites == 1:
        if particles <= n_max:
            yield (particles,)
        return
    # the remaining sites must be able to absorb what is left
    lo = max(0, particles - (sites - 1) * n_max)
    for n in range(min(n_max, particles), lo - 1, -1):
        for rest in _occupations(sites - 1, particles - n, n_max):
            yield (n,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    spec: LatticeSpec
    states: tuple[tuple[int, ...], ...]
    occupations: np.ndarray = field(repr=False)
    _index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def sites(self) -> int:
        return self.spec.sites

    def index_of(self, occupation: Sequence[int]) -> int:
        try:
            return self._index[tuple(occupation)]
        except KeyError:
            raise KeyError(f"{tuple(occupation)} is not a state of this basis") from None

    def metadata(self) -> dict:
        return {**self.spec.as_dict(), "dimension": self.dim}


def build_basis(spec: LatticeSpec) -> FockBasis:
    """Enumerate every occupation tuple allowed by ``spec``."""
    states = tuple(_occupations(spec.sites, spec.particles, spec.n_max))
    occ = np.array(states, dtype=np.int64).reshape(len(states), spec.sites)
    occ.setflags(write=False)
    index = {s: k for k, s in enumerate(states)}
    return FockBasis(spec=spec, states=states, occupations=occ, _index=index)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized amplitudes over a :class:`FockBasis`."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.basis.dim,):
            raise ValueError(
                f"expected {self.basis.dim} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, basis: FockBasis, amplitudes) -> "QuantumState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(basis, amps / norm)

    @classmethod
    def fock(cls, basis: FockBasis, occupation: Sequence[int]) -> "QuantumState":
        amps = np.zeros(basis.dim, dtype=np.complex128)
        amps[basis.index_of(occupation)] = 1.0
        return cls(basis, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "QuantumState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def density_expectation(state: QuantumState) -> np.ndarray:
    """Site densities <n_j> of a normalized state."""
    return state.probabilities() @ state.basis.occupations


def apply_number_op(state: QuantumState, site: int) -> np.ndarray:
    """Amplitudes of ``n_site |state>`` (not normalized)."""
    basis = state.basis
    if not 0 <= site < basis.sites:
        raise IndexError(f"site {site} out of range for {basis.sites} sites")
    return basis.occupations[:, site] * state.amplitudes
