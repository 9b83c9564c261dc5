"""Run configuration: one nested mapping, loadable from YAML, overridable by flags."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .fockspace import LatticeSpec
from .hamiltonian import BoseHubbardParams
from .trajectory import ProtocolConfig, time_grid

DEFAULTS: dict = {
    "lattice": {"sites": 6, "particles": 6, "n_max": 3},
    "hamiltonian": {"J": 1.0, "U": 2.0, "interaction_convention": "standard_nn_minus_1", "periodic": False},
    "protocol": {
        "gamma": 0.1,
        "t_max": 3.0,
        "dt": 0.05,
        "trajectories": 50,
        "second_noise": "omit",
        "mode": "linearized",
        "seed": 0,
        "strict_grid": False,
    },
    "analysis": {
        "window": "hann",
        "k_max": None,
        "max_displacement": 10,
        "omega_max": 10.0,
        "d_omega": 0.05,
        "connected": False,
    },
    "error_scan": {"gammas": [0.02, 0.05, 0.1, 0.2, 0.5]},
    "leggett_garg": {"times": [0.0, 0.5, 1.0]},
    "workers": None,
}

_MODES = {"linearized": "linearized", "kraus": "exact_kraus", "exact_kraus": "exact_kraus"}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in base:
            raise ConfigurationError(f"unknown configuration key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"{path + key!r} must be a mapping")
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    """Everything needed to reproduce a run, apart from the output directory."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_mapping(cls, mapping: dict | None) -> "RunConfig":
        cfg = cls(_merge(DEFAULTS, mapping or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls.from_mapping({})
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: not valid YAML ({exc})") from exc
        if raw is not None and not isinstance(raw, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        return cls.from_mapping(raw)

    def override(self, section: str | None, key: str, value) -> None:
        if value is None:
            return
        target = self.data if section is None else self.data[section]
        target[key] = value

    def validate(self) -> None:
        self.lattice()
        self.hamiltonian()
        self.protocol()
        a = self.data["analysis"]
        if a["window"] not in ("hann", "none"):
            raise ConfigurationError(f"window must be hann or none, not {a['window']!r}")
        if a["k_max"] is not None and not a["k_max"] > 0:
            raise ConfigurationError("k_max must be positive")
        if a["d_omega"] <= 0 or a["omega_max"] < 0:
            raise ConfigurationError("need d_omega > 0 and omega_max >= 0")
        if int(a["max_displacement"]) < 0:
            raise ConfigurationError("max_displacement must be non-negative")

    # -- typed views --------------------------------------------------------------

    def lattice(self) -> LatticeSpec:
        lat = self.data["lattice"]
        return LatticeSpec(int(lat["sites"]), int(lat["particles"]), int(lat["n_max"]))

    def hamiltonian(self) -> BoseHubbardParams:
        h = self.data["hamiltonian"]
        return BoseHubbardParams(
            J=float(h["J"]), U=float(h["U"]),
            interaction_convention=h["interaction_convention"], periodic=bool(h["periodic"]),
        )

    def times(self) -> tuple[float, ...]:
        p = self.data["protocol"]
        return time_grid(float(p["t_max"]), float(p["dt"]))

    def protocol(self, gamma: float | None = None) -> ProtocolConfig:
        p = self.data["protocol"]
        if p["mode"] not in _MODES:
            raise ConfigurationError(f"mode must be linearized or kraus, not {p['mode']!r}")
        return ProtocolConfig(
            gamma=float(p["gamma"] if gamma is None else gamma),
            times=self.times(),
            trajectories=int(p["trajectories"]),
            second_noise=p["second_noise"],
            mode=_MODES[p["mode"]],
            seed=int(p["seed"]),
            strict_grid=bool(p["strict_grid"]),
        )

    def omegas(self) -> np.ndarray:
        a = self.data["analysis"]
        n = int(np.floor(a["omega_max"] / a["d_omega"] + 1e-9))
        return np.round(np.arange(n + 1) * a["d_omega"], 12)

    def provenance(self) -> dict:
        """Serializable record of the run: the full config plus derived protocol fields."""
        return {"config": {**copy.deepcopy(self.data), "protocol": {
            **self.data["protocol"], "times": list(self.times())}}}
