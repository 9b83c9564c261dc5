"""Statistical and total error of the Van Hove estimate across measurement strengths.

For every gamma an ensemble is run with noise on both measurements.  The
statistical error is the quadratic mean of the per-cell standard errors; the
total error is the quadratic mean of (estimate - exact).  Both averages run
over all delays and displacements |d| <= max_displacement.  The scans are
then fitted by

    statistical:  sqrt((A / gamma)^2 + B^2)
    total:        sqrt((A / gamma)^2 + (C sqrt(gamma))^2)

with residuals measured in log space so that every decade weighs the same.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from ..evolution import Propagator
from ..fockspace import QuantumState
from ..trajectory import ProtocolConfig, run_ensemble
from .correlations import Ensemble, van_hove
from .oracle import Oracle

log = logging.getLogger(__name__)


def statistical_form(gamma, a, b):
    return np.sqrt((a / gamma) ** 2 + b**2)


def total_form(gamma, a, c):
    return np.sqrt((a / gamma) ** 2 + (c * np.sqrt(gamma)) ** 2)


@dataclass
class FitResult:
    form: str
    params: dict
    residual: float
    converged: bool
    residuals: list = field(default_factory=list)


@dataclass
class ErrorScanResult:
    gammas: np.ndarray
    statistical: np.ndarray
    total: np.ndarray
    trajectories: int
    max_displacement: int
    statistical_fit: FitResult | None = None
    total_fit: FitResult | None = None
    total_fit_statistical_form: FitResult | None = None
    notice: str = ""

    def slope(self, values: np.ndarray, which: slice) -> float:
        """Least-squares log-log slope over the selected (sorted) gamma points."""
        g, v = self.gammas[which], values[which]
        return float(np.polyfit(np.log(g), np.log(v), 1)[0])

    @property
    def crossover_gamma(self) -> float | None:
        """Strength where the fitted 1/gamma and sqrt(gamma) terms are equal."""
        if self.total_fit is None:
            return None
        a, c = self.total_fit.params["A"], self.total_fit.params["C"]
        if c == 0:
            return None
        return float((abs(a) / abs(c)) ** (2.0 / 3.0))

    def table(self) -> list[dict]:
        return [
            {"gamma": float(g), "statistical_rms": float(s), "total_rms": float(t)}
            for g, s, t in zip(self.gammas, self.statistical, self.total)
        ]


def fit_form(
    form: Callable, names: tuple[str, str], gammas: np.ndarray, values: np.ndarray, label: str
) -> FitResult:
    """Fit a two-parameter quadratic-mean form by log-space least squares."""
    gammas = np.asarray(gammas, dtype=float)
    values = np.asarray(values, dtype=float)

    def resid(logp):
        a, b = np.exp(logp)
        return np.log(form(gammas, a, b)) - np.log(values)

    a0 = float(np.min(values * gammas))
    b0 = float(np.max(values)) if names[1] == "B" else float(np.max(values / np.sqrt(gammas)))
    sol = least_squares(resid, x0=np.log([max(a0, 1e-12), max(b0, 1e-12)]), method="lm")
    a, b = np.exp(sol.x)
    r = resid(sol.x)
    return FitResult(
        form=label,
        params={names[0]: float(a), names[1]: float(b)},
        residual=float(np.sqrt(np.mean(r**2))),
        converged=bool(sol.success),
        residuals=[float(x) for x in r],
    )


def rms_errors(ens: Ensemble, oracle_grid, max_displacement: int) -> tuple[float, float]:
    """(statistical, total) quadratic-mean errors of the connected Van Hove estimate."""
    est = van_hove(ens, connected=True, include_noise=True, keep_samples=False).restrict(max_displacement)
    exact = oracle_grid.restrict(max_displacement)
    stat = float(np.sqrt(np.mean(est.sem**2)))
    total = float(np.sqrt(np.mean((est.values - exact.values) ** 2)))
    return stat, total


def error_scan(
    psi0: QuantumState,
    propagator: Propagator,
    gammas: Sequence[float],
    cfg: ProtocolConfig,
    max_displacement: int = 10,
    workers: int | None = 1,
) -> ErrorScanResult:
    """Sweep the measurement strength; ``cfg`` supplies everything but gamma.

    Second-measurement noise is always included, since it is part of the
    statistical error being measured.
    """
    gammas = np.sort(np.asarray(gammas, dtype=float))
    sites = psi0.basis.sites
    max_d = min(max_displacement, sites - 1)
    oracle_grid = Oracle(propagator, psi0, cfg.times).van_hove(connected=True)

    stat, total = [], []
    for g in gammas:
        run_cfg = replace(cfg, gamma=float(g), second_noise="include")
        ens = Ensemble.from_records(run_ensemble(psi0, run_cfg, propagator, workers=workers))
        s, t = rms_errors(ens, oracle_grid, max_d)
        log.info("gamma=%g statistical=%.4g total=%.4g", g, s, t)
        stat.append(s)
        total.append(t)

    result = ErrorScanResult(
        gammas=gammas,
        statistical=np.array(stat),
        total=np.array(total),
        trajectories=cfg.trajectories,
        max_displacement=max_d,
    )
    if gammas.size < 2:
        result.notice = "fits skipped: need at least two gamma values"
        return result
    result.statistical_fit = fit_form(statistical_form, ("A", "B"), gammas, result.statistical, "statistical")
    result.total_fit = fit_form(total_form, ("A", "C"), gammas, result.total, "total")
    result.total_fit_statistical_form = fit_form(
        statistical_form, ("A", "B"), gammas, result.total, "statistical"
    )
    return result
