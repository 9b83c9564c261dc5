"""File formats.

Every file carries ``schema_version`` and the full configuration that
produced it.  Floats are written with 17 significant digits so that values
round-trip bit-exactly, and no timestamps are written so reruns are
byte-identical.

Record files (CSV)::

    # weakdsf records
    # {"schema_version": 1, "kind": "two_measurement", ...}
    trajectory,stage,time_index,time,site,outcome,density,noise
    0,0,0,0,0,0.98...,1.00...,-0.12...

``stage`` 0 is the first measurement (one row per site, or one per site and
delay in strict-grid mode), ``stage`` 1 the readouts on the delay grid.  For
the three-measurement protocol (``kind = "three_measurement"``) stages 0, 1, 2
are the three measurements.  ``noise`` is the standard-normal variable m of
that outcome, ``nan`` when the noise was omitted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .analysis.correlations import Ensemble, VanHoveGrid
from .analysis.leggett_garg import ThreeMeasurementEnsemble
from .analysis.spectrum import DsfGrid
from .errors import SchemaError
from .fockspace import FockBasis, QuantumState
from .trajectory import ThreeMeasurementRecord, TrajectoryRecord

SCHEMA_VERSION = 1
RECORD_COLUMNS = ["trajectory", "stage", "time_index", "time", "site", "outcome", "density", "noise"]
_FMT = ["%d", "%d", "%d", "%.17g", "%d", "%.17g", "%.17g", "%.17g"]


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_json(path: Path, payload: dict) -> None:
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def _check_schema(meta: dict, kind: str, path) -> None:
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema_version {meta.get('schema_version')!r} is not supported "
            f"(expected {SCHEMA_VERSION})"
        )
    if meta.get("kind") != kind:
        raise SchemaError(f"{path}: expected a {kind} file, found {meta.get('kind')!r}")


# -- ground state -------------------------------------------------------------------

def write_state(path: Path, state: QuantumState, energy: float, metadata: dict) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "ground_state",
        "energy": energy,
        "basis": state.basis.metadata(),
        "amplitudes_real": state.amplitudes.real,
        "amplitudes_imag": state.amplitudes.imag,
        **metadata,
    }
    write_json(path, payload)


def read_state(path: Path, basis: FockBasis) -> tuple[QuantumState, dict]:
    meta = json.loads(Path(path).read_text())
    _check_schema(meta, "ground_state", path)
    if meta["basis"] != basis.metadata():
        raise SchemaError(f"{path}: basis {meta['basis']} does not match {basis.metadata()}")
    amps = np.asarray(meta.pop("amplitudes_real")) + 1j * np.asarray(meta.pop("amplitudes_imag"))
    return QuantumState(basis, amps), meta


# -- records ------------------------------------------------------------------------

def _write_table(path: Path, title: str, meta: dict, columns: list[str], rows: np.ndarray, fmt) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# weakdsf {title}\n# {_dumps(meta)}\n")
        fh.write(",".join(columns) + "\n")
        if rows.size:
            np.savetxt(fh, rows, fmt=fmt, delimiter=",")


def _read_table(path: Path, columns: list[str], kind: str) -> tuple[dict, np.ndarray]:
    with open(path) as fh:
        first = fh.readline()
        second = fh.readline()
        header = fh.readline().strip()
        if not first.startswith("# weakdsf") or not second.startswith("# "):
            raise SchemaError(f"{path}: missing weakdsf metadata header")
        try:
            meta = json.loads(second[2:])
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: unreadable metadata header") from exc
        _check_schema(meta, kind, path)
        if header.split(",") != columns:
            raise SchemaError(f"{path}: columns {header!r} do not match {','.join(columns)!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, data


def _outcome_rows(traj, stage, tidx, time, outcome, include_noise=True):
    sites = np.arange(outcome.record.size)
    noise = outcome.noise.values if include_noise else np.full(sites.size, np.nan)
    return np.column_stack([
        np.full(sites.size, traj), np.full(sites.size, stage), np.full(sites.size, tidx),
        np.full(sites.size, time), sites, outcome.record, outcome.densities, noise,
    ])


def records_to_rows(records: Iterable[TrajectoryRecord]) -> np.ndarray:
    blocks = []
    for r in records:
        firsts = r.first if isinstance(r.first, tuple) else (r.first,)
        for k, o in enumerate(firsts):
            blocks.append(_outcome_rows(r.index, 0, k, 0.0, o))
        t_count, sites = r.densities.shape
        tt, ss = np.meshgrid(np.arange(t_count), np.arange(sites), indexing="ij")
        noise = np.full(r.densities.shape, np.nan) if r.second_noise is None else r.second_noise
        blocks.append(np.column_stack([
            np.full(tt.size, r.index), np.ones(tt.size), tt.ravel(), r.times[tt.ravel()],
            ss.ravel(), r.second_outcomes.ravel(), r.densities.ravel(), noise.ravel(),
        ]))
    return np.concatenate(blocks) if blocks else np.empty((0, len(RECORD_COLUMNS)))


def write_records(path: Path, records: list[TrajectoryRecord], metadata: dict) -> None:
    meta = {"schema_version": SCHEMA_VERSION, "kind": "two_measurement", **metadata}
    _write_table(Path(path), "records", meta, RECORD_COLUMNS, records_to_rows(records), _FMT)


def read_records(path: Path) -> tuple[Ensemble, dict]:
    meta, data = _read_table(Path(path), RECORD_COLUMNS, "two_measurement")
    protocol = meta["config"]["protocol"]
    times = np.asarray(protocol["times"], dtype=float)
    sites = int(meta["config"]["lattice"]["sites"])
    traj = data[:, 0].astype(int)
    indices = np.unique(traj)
    pos = np.searchsorted(indices, traj)
    m, t = indices.size, times.size

    first_rows = data[data[:, 1] == 0]
    strict = bool(protocol.get("strict_grid", False))
    fshape = (m, t, sites) if strict else (m, sites)
    first, fnoise, fdens = (np.empty(fshape) for _ in range(3))
    fpos = np.searchsorted(indices, first_rows[:, 0].astype(int))
    site = first_rows[:, 4].astype(int)
    key = (fpos, first_rows[:, 2].astype(int), site) if strict else (fpos, site)
    first[key], fdens[key], fnoise[key] = first_rows[:, 5], first_rows[:, 6], first_rows[:, 7]

    sec = data[:, 1] == 1
    dens = np.empty((m, t, sites))
    noise = np.empty((m, t, sites))
    k = (pos[sec], data[sec, 2].astype(int), data[sec, 4].astype(int))
    dens[k] = data[sec, 6]
    noise[k] = data[sec, 7]
    second_noise = None if np.all(np.isnan(noise)) else noise

    ens = Ensemble(
        times=times,
        gamma=float(protocol["gamma"]),
        first=first,
        first_noise=fnoise,
        first_densities=fdens,
        densities=dens,
        second_noise=second_noise,
        indices=indices,
    )
    return ens, meta


def write_three_records(path: Path, records: list[ThreeMeasurementRecord], metadata: dict, final_noise: bool) -> None:
    blocks = []
    for r in records:
        for stage, (t, o) in enumerate(zip(r.times, r.outcomes)):
            blocks.append(_outcome_rows(r.index, stage, 0, t, o, include_noise=stage < 2 or final_noise))
    rows = np.concatenate(blocks) if blocks else np.empty((0, len(RECORD_COLUMNS)))
    meta = {"schema_version": SCHEMA_VERSION, "kind": "three_measurement", **metadata}
    _write_table(Path(path), "records", meta, RECORD_COLUMNS, rows, _FMT)


def read_three_records(path: Path) -> tuple[ThreeMeasurementEnsemble, dict]:
    meta, data = _read_table(Path(path), RECORD_COLUMNS, "three_measurement")
    sites = int(meta["config"]["lattice"]["sites"])
    indices = np.unique(data[:, 0].astype(int))
    recs = np.empty((indices.size, 3, sites))
    recs[np.searchsorted(indices, data[:, 0].astype(int)), data[:, 1].astype(int), data[:, 4].astype(int)] = data[:, 5]
    ens = ThreeMeasurementEnsemble(
        times=np.asarray(meta["leggett_garg_times"], dtype=float),
        gamma=float(meta["config"]["protocol"]["gamma"]),
        records=recs,
        indices=indices,
    )
    return ens, meta


# -- analysis grids -----------------------------------------------------------------

VAN_HOVE_COLUMNS = ["displacement", "time", "value", "sem", "pairs"]
DSF_COLUMNS = ["q", "omega", "re", "im", "sem"]


def write_van_hove(path: Path, grid: VanHoveGrid, metadata: dict, oracle: VanHoveGrid | None = None) -> None:
    dd, tt = np.meshgrid(np.arange(grid.displacements.size), np.arange(grid.times.size), indexing="ij")
    cols = [grid.displacements[dd.ravel()], grid.times[tt.ravel()], grid.values.ravel(),
            grid.sem.ravel(), grid.pairs[dd.ravel()]]
    names = list(VAN_HOVE_COLUMNS)
    fmt = ["%d", "%.17g", "%.17g", "%.17g", "%d"]
    if oracle is not None:
        cols.append(oracle.values.ravel())
        names.append("oracle")
        fmt.append("%.17g")
    meta = {"schema_version": SCHEMA_VERSION, "kind": "van_hove", "connected": grid.connected, **metadata}
    _write_table(Path(path), "van_hove", meta, names, np.column_stack(cols), fmt)
    write_json(Path(path).with_suffix(".json"), meta)


def write_dsf(path: Path, grid: DsfGrid, metadata: dict, oracle: DsfGrid | None = None) -> None:
    qq, ww = np.meshgrid(np.arange(grid.q.size), np.arange(grid.omegas.size), indexing="ij")
    err = np.full(grid.values.shape, np.nan) if grid.sem is None else grid.sem
    cols = [grid.q[qq.ravel()], grid.omegas[ww.ravel()], grid.values.real.ravel(),
            grid.values.imag.ravel(), err.ravel()]
    names = list(DSF_COLUMNS)
    if oracle is not None:
        cols.append(oracle.values.real.ravel())
        names.append("oracle_re")
    meta = {
        "schema_version": SCHEMA_VERSION, "kind": "dsf", "window": grid.window,
        "integration": grid.rule, "q_units": "radians per site", "omega_units": "J", **metadata,
    }
    _write_table(Path(path), "dsf", meta, names, np.column_stack(cols), "%.17g")
    write_json(Path(path).with_suffix(".json"), meta)


def read_table(path: Path) -> tuple[dict, list[str], np.ndarray]:
    """Generic reader for any table written by this module."""
    with open(path) as fh:
        fh.readline()
        meta = json.loads(fh.readline()[2:])
        columns = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, columns, data
