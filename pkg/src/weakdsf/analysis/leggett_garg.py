"""Three-measurement (Leggett-Garg) correlator

    B_{j1,j2} = C(t1, t2) + C(t2, t3) - C(t1, t3),   C(ta, tb) = mean(n_{j1,ta} n_{j2,tb}).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..trajectory import ThreeMeasurementRecord
from .correlations import sem


@dataclass(frozen=True, eq=False)
class ThreeMeasurementEnsemble:
    """Outcomes of the three-measurement protocol, ``records`` of shape (M, 3, L)."""

    times: np.ndarray
    gamma: float
    records: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[ThreeMeasurementRecord]) -> "ThreeMeasurementEnsemble":
        if not records:
            raise ValueError("empty ensemble")
        return cls(
            times=np.asarray(records[0].times, dtype=float),
            gamma=float(records[0].gamma),
            records=np.stack([r.records for r in records]),
            indices=np.array([r.index for r in records]),
        )

    @property
    def size(self) -> int:
        return self.records.shape[0]


def _as_three(ens) -> ThreeMeasurementEnsemble:
    return ens if isinstance(ens, ThreeMeasurementEnsemble) else ThreeMeasurementEnsemble.from_records(ens)


def pair_samples(ens, a: int, b: int, j1: int, j2: int) -> np.ndarray:
    """Per-trajectory products n_{j1,t_a} n_{j2,t_b} for measurement stages a < b."""
    ens = _as_three(ens)
    if not (0 <= a < b <= 2):
        raise ValueError(f"need measurement stages 0 <= a < b <= 2, got ({a}, {b})")
    return ens.records[:, a, j1] * ens.records[:, b, j2]


def pair_correlator(ens, a: int, b: int, j1: int, j2: int) -> tuple[float, float]:
    p = pair_samples(ens, a, b, j1, j2)
    return float(p.mean()), float(sem(p))


def combine(c12: float, c23: float, c13: float) -> float:
    return c12 + c23 - c13


def leggett_garg(ens, j1: int, j2: int) -> tuple[float, float]:
    """B_{j1,j2} and its standard error, propagated through per-trajectory combinations."""
    ens = _as_three(ens)
    b = combine(pair_samples(ens, 0, 1, j1, j2), pair_samples(ens, 1, 2, j1, j2), pair_samples(ens, 0, 2, j1, j2))
    return float(b.mean()), float(sem(b))
