"""Command-line front end.

Subcommands::

    weakdsf ground-state   write the ground state of the configured chain
    weakdsf run            run the two-measurement ensemble and write its records
    weakdsf analyze        Van Hove and DSF grids (plus filtered and oracle variants)
    weakdsf error-scan     statistical and total error versus gamma, with fits
    weakdsf lg-run         run the three-measurement protocol
    weakdsf lg-analyze     pairwise correlators and Leggett-Garg combinations

Settings come from ``--config`` (YAML); flags override it.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    Ensemble,
    Oracle,
    dsf,
    error_scan,
    filter_correlations,
    fourier_cutoff,
    van_hove,
    van_hove_from_correlations,
)
from .analysis.leggett_garg import leggett_garg, pair_correlator
from .config import RunConfig
from .errors import ConfigurationError, NumericalError, SchemaError
from .evolution import Propagator
from .fockspace import build_basis
from .hamiltonian import build_hamiltonian, ground_state
from .trajectory import EnsembleFailure, run_ensemble, run_three_measurement_ensemble

log = logging.getLogger("weakdsf")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_FLAGS = [
    # (flag, section, key, type)
    ("--sites", "lattice", "sites", int),
    ("--particles", "lattice", "particles", int),
    ("--nmax", "lattice", "n_max", int),
    ("--J", "hamiltonian", "J", float),
    ("--U", "hamiltonian", "U", float),
    ("--gamma", "protocol", "gamma", float),
    ("--trajectories", "protocol", "trajectories", int),
    ("--tmax", "protocol", "t_max", float),
    ("--dt", "protocol", "dt", float),
    ("--seed", "protocol", "seed", int),
    ("--kmax", "analysis", "k_max", float),
    ("--max-displacement", "analysis", "max_displacement", int),
    ("--omega-max", "analysis", "omega_max", float),
    ("--domega", "analysis", "d_omega", float),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--workers", type=int, help="worker threads (default: CPU count)")
    common.add_argument("--state", type=Path, help="ground-state file to use instead of recomputing")
    for flag, _, key, typ in _FLAGS:
        common.add_argument(flag, dest=f"{key}", type=typ)
    common.add_argument("--window", choices=["hann", "none"])
    common.add_argument("--second-noise", choices=["include", "omit"])
    common.add_argument("--mode", choices=["linearized", "kraus"])
    common.add_argument("--strict-grid", action="store_true", default=None)
    common.add_argument("--connected", action="store_true", default=None,
                        help="analyze fluctuation correlations instead of raw ones")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="weakdsf", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ground-state", parents=[common], help="compute the ground state")
    sub.add_parser("run", parents=[common], help="run the two-measurement ensemble")
    p = sub.add_parser("analyze", parents=[common], help="Van Hove and DSF grids from a records file")
    p.add_argument("records", type=Path)
    p.add_argument("--oracle", action="store_true", help="add exact-correlator overlay columns")
    p = sub.add_parser("error-scan", parents=[common], help="error versus gamma")
    p.add_argument("--gammas", type=float, nargs="+")
    p = sub.add_parser("lg-run", parents=[common], help="run the three-measurement protocol")
    p.add_argument("--times", type=float, nargs=3, metavar=("T1", "T2", "T3"))
    p = sub.add_parser("lg-analyze", parents=[common], help="Leggett-Garg combinations from records")
    p.add_argument("records", type=Path)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config)
    for _, section, key, _ in _FLAGS:
        cfg.override(section, key, getattr(args, key))
    cfg.override("analysis", "window", args.window)
    cfg.override("analysis", "connected", args.connected)
    cfg.override("protocol", "second_noise", args.second_noise)
    cfg.override("protocol", "mode", args.mode)
    cfg.override("protocol", "strict_grid", args.strict_grid)
    cfg.override(None, "workers", args.workers)
    if getattr(args, "gammas", None):
        cfg.override("error_scan", "gammas", list(args.gammas))
    if getattr(args, "times", None):
        cfg.override("leggett_garg", "times", list(args.times))
    cfg.validate()
    return cfg


def _system(cfg: RunConfig, state_path: Path | None):
    basis = build_basis(cfg.lattice())
    h = build_hamiltonian(basis, cfg.hamiltonian())
    if state_path is not None:
        psi0, meta = io.read_state(state_path, basis)
        energy = float(meta["energy"])
    else:
        psi0, energy = ground_state(h)
    return h, psi0, energy


def _write_partial(out: Path, failure: EnsembleFailure) -> None:
    io.write_json(out / "failures.json", {
        "schema_version": io.SCHEMA_VERSION,
        "kind": "failure_manifest",
        "failed": {str(i): repr(e) for i, e in sorted(failure.failures.items())},
        "completed": [r.index for r in failure.records],
    })


def cmd_ground_state(cfg: RunConfig, args) -> int:
    h, psi0, energy = _system(cfg, None)
    io.write_state(args.out / "ground_state.json", psi0, energy, cfg.provenance())
    print(f"energy {energy!r}  dimension {h.dim}")
    return EXIT_OK


def cmd_run(cfg: RunConfig, args) -> int:
    h, psi0, _ = _system(cfg, args.state)
    pcfg = cfg.protocol()
    try:
        records = run_ensemble(psi0, pcfg, Propagator(h), workers=cfg.data["workers"])
        status = EXIT_OK
    except EnsembleFailure as exc:
        records, status = exc.records, EXIT_NUMERICAL
        _write_partial(args.out, exc)
        log.error("%s; partial records written", exc)
    io.write_records(args.out / "records.csv", records, cfg.provenance())
    print(f"{len(records)} trajectories -> {args.out / 'records.csv'}")
    return status


def _analysis_outputs(ens: Ensemble, cfg: RunConfig, suffix: str, oracle_vh, out: Path, meta: dict) -> None:
    a = cfg.data["analysis"]
    connected = bool(a["connected"])
    g = van_hove(ens, connected=connected)
    s = dsf(g, cfg.omegas(), window=a["window"])
    s_oracle = None if oracle_vh is None else dsf(oracle_vh, cfg.omegas(), window=a["window"])
    io.write_van_hove(out / f"van_hove{suffix}.csv", g, meta, oracle_vh)
    io.write_dsf(out / f"dsf{suffix}.csv", s, meta, s_oracle)


def cmd_analyze(cfg: RunConfig, args) -> int:
    ens, meta = io.read_records(args.records)
    # the records' own configuration defines the physics; analysis options come from here
    run_cfg = RunConfig.from_mapping(meta["config"] | {"protocol": {
        k: v for k, v in meta["config"]["protocol"].items() if k != "times"}})
    run_cfg.data["analysis"] = cfg.data["analysis"]
    connected = bool(cfg.data["analysis"]["connected"])
    out_meta = {"records": meta, "analysis": cfg.data["analysis"]}

    oracle = oracle_f = None
    if args.oracle:
        h, psi0, _ = _system(run_cfg, args.state)
        exact = Oracle(Propagator(h), psi0, ens.times)
        corr = exact.connected if connected else exact.correlations
        oracle = van_hove_from_correlations(ens.times, corr, connected)
        k_max = cfg.data["analysis"]["k_max"]
        if k_max is not None:
            oracle_f = van_hove_from_correlations(ens.times, filter_correlations(corr, k_max), connected)

    _analysis_outputs(ens, run_cfg, "", oracle, args.out, out_meta)
    k_max = cfg.data["analysis"]["k_max"]
    if k_max is not None:
        _analysis_outputs(fourier_cutoff(ens, k_max), run_cfg, "_kmax", oracle_f, args.out, out_meta)
    print(f"analysis of {ens.size} trajectories -> {args.out}")
    return EXIT_OK


def cmd_error_scan(cfg: RunConfig, args) -> int:
    h, psi0, _ = _system(cfg, args.state)
    gammas = cfg.data["error_scan"]["gammas"]
    result = error_scan(
        psi0, Propagator(h), gammas, cfg.protocol(gamma=gammas[0]),
        max_displacement=int(cfg.data["analysis"]["max_displacement"]), workers=cfg.data["workers"],
    )
    rows = np.array([[r["gamma"], r["statistical_rms"], r["total_rms"]] for r in result.table()])
    io._write_table(args.out / "error_scan.csv", "error_scan",
                    {"schema_version": io.SCHEMA_VERSION, "kind": "error_scan", **cfg.provenance()},
                    ["gamma", "statistical_rms", "total_rms"], rows, "%.17g")

    def fit(f):
        return None if f is None else {"form": f.form, "params": f.params, "log_residual": f.residual,
                                       "converged": f.converged, "residuals": f.residuals}

    io.write_json(args.out / "error_scan.json", {
        "schema_version": io.SCHEMA_VERSION,
        "kind": "error_scan",
        "table": result.table(),
        "trajectories": result.trajectories,
        "max_displacement": result.max_displacement,
        "statistical_fit": fit(result.statistical_fit),
        "total_fit": fit(result.total_fit),
        "total_fit_statistical_form": fit(result.total_fit_statistical_form),
        "crossover_gamma": result.crossover_gamma,
        "notice": result.notice,
        **cfg.provenance(),
    })
    if result.notice:
        print(result.notice)
    for f in (result.statistical_fit, result.total_fit):
        if f is not None:
            print(f"{f.form} fit {f.params} log-residual {f.residual:.3g}"
                  + ("" if f.converged else "  (did not converge)"))
    return EXIT_OK


def cmd_lg_run(cfg: RunConfig, args) -> int:
    h, psi0, _ = _system(cfg, args.state)
    times = [float(t) for t in cfg.data["leggett_garg"]["times"]]
    pcfg = cfg.protocol()
    status = EXIT_OK
    try:
        records = run_three_measurement_ensemble(psi0, pcfg, times, Propagator(h), workers=cfg.data["workers"])
    except EnsembleFailure as exc:
        records, status = exc.records, EXIT_NUMERICAL
        _write_partial(args.out, exc)
    meta = {**cfg.provenance(), "leggett_garg_times": times}
    io.write_three_records(args.out / "lg_records.csv", records, meta, final_noise=pcfg.include_noise)
    print(f"{len(records)} trajectories -> {args.out / 'lg_records.csv'}")
    return status


def cmd_lg_analyze(cfg: RunConfig, args) -> int:
    ens, meta = io.read_three_records(args.records)
    sites = ens.records.shape[2]
    rows = []
    for j1 in range(sites):
        for j2 in range(sites):
            c = [pair_correlator(ens, a, b, j1, j2) for a, b in ((0, 1), (1, 2), (0, 2))]
            b_val, b_sem = leggett_garg(ens, j1, j2)
            rows.append([j1, j2, c[0][0], c[0][1], c[1][0], c[1][1], c[2][0], c[2][1], b_val, b_sem])
    io._write_table(
        args.out / "leggett_garg.csv", "leggett_garg",
        {"schema_version": io.SCHEMA_VERSION, "kind": "leggett_garg", "records": meta},
        ["j1", "j2", "c12", "c12_sem", "c23", "c23_sem", "c13", "c13_sem", "B", "B_sem"],
        np.array(rows), ["%d", "%d"] + ["%.17g"] * 8,
    )
    print(f"Leggett-Garg table for {ens.size} trajectories -> {args.out / 'leggett_garg.csv'}")
    return EXIT_OK


COMMANDS = {
    "ground-state": cmd_ground_state,
    "run": cmd_run,
    "analyze": cmd_analyze,
    "error-scan": cmd_error_scan,
    "lg-run": cmd_lg_run,
    "lg-analyze": cmd_lg_analyze,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except SchemaError as exc:
        print(f"file format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
