"""Command-line driver: reproducible experiment recipes and figure data.

Subcommands
-----------
simulate       run a trajectory ensemble, write dipole records
phase-diagram  emission threshold curve + the regular/bistable line
meanfield      stationary-solution sweep over the Doppler phase
spectrum       S(omega), g1(t) and a damped-cosine linewidth fit from records
scaling        linewidth-vs-N power-law fit

Every run writes its outputs plus a ``manifest.json`` (resolved parameters,
tool version, wall clock, sha256 of each output file) into
``<out>/<command>/<param-hash>/``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .params import ParameterError, SimParams, params_from_config
from .dynamics import EnsembleError, IntegratorBlowupError, run_ensemble
from .meanfield import (MeanFieldConvergenceError, frequency_branch_diagram,
                        solve_bistable)
from .stability import compute_C0, sr_boundary, trace_boundary
from .analysis import (FitError, fit_damped_cosine, g1_normalized,
                       phase_trace, scaling_fit, spectrum)
from . import io as srio

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

_NUMERICAL_ERRORS = (EnsembleError, IntegratorBlowupError,
                     MeanFieldConvergenceError, FitError,
                     FloatingPointError, ZeroDivisionError)


@dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    params: dict
    version: str = __version__
    wall_clock_s: float = 0.0
    outputs: dict[str, str] = field(default_factory=dict)

    def add_output(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.outputs[path.name] = digest

    def write(self, directory: Path) -> Path:
        path = directory / "manifest.json"
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")
        return path


def _param_hash(command: str, payload: dict) -> str:
    blob = json.dumps({"command": command, **payload}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _run_dir(base: str, command: str, payload: dict) -> Path:
    d = Path(base) / command / _param_hash(command, payload)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SRBEAM_WORKERS", "1")))
    except ValueError:
        return 1


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    """Flags mirror SimParams field names one-to-one; config file underneath."""
    p.add_argument("--config", type=str, default=None,
                   help="flat key=value file with SimParams field names")
    for name, f in SimParams.__dataclass_fields__.items():
        kind = int if f.type == "int" else float
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind,
                       default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="trajectory parallelism (default: $SRBEAM_WORKERS or 1)")


def _resolve_params(args) -> SimParams:
    overrides = {k: getattr(args, k) for k in SimParams.__dataclass_fields__}
    return params_from_config(args.config, **overrides)


def _parse_grid(text: str) -> np.ndarray:
    """'start:step:stop' (inclusive stop) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError(f"grid spec must be start:step:stop, got {text!r}")
        start, step, stop = (float(s) for s in parts)
        if step <= 0 or stop < start:
            raise ParameterError(f"empty grid: {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    vals = [float(s) for s in text.split(",") if s.strip()]
    if not vals:
        raise ParameterError(f"empty grid: {text!r}")
    return np.asarray(vals)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    params = _resolve_params(args)
    workers = args.workers if args.workers is not None else _default_workers()
    out = _run_dir(args.out, "simulate", params.asdict())
    manifest = RunManifest("simulate", params.asdict())
    t_start = time.perf_counter()
    records = run_ensemble(params, workers=workers)
    fmt = args.format
    rec_path = out / ("records.npz" if fmt == "npz" else "records.ndjson")
    if fmt == "npz":
        srio.write_records_npz(rec_path, params, records)
    else:
        srio.write_records_ndjson(rec_path, params, records)
    manifest.wall_clock_s = time.perf_counter() - t_start
    manifest.add_output(rec_path)
    manifest.write(out)
    print(out)
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    grid = _parse_grid(args.k_vz_grid)
    out = _run_dir(args.out, "phase-diagram",
                   {"k_vz_grid": list(map(float, grid))})
    manifest = RunManifest("phase-diagram", {"k_vz_grid": args.k_vz_grid})
    t_start = time.perf_counter()
    points = trace_boundary(grid)
    boundary = out / "sr_boundary.csv"
    srio.write_csv(
        boundary,
        {"k_vz_tau": [p.k_vz_tau for p in points],
         "n_gamma_tau_critical": [p.n_gamma_tau_critical for p in points],
         "re_nu0_residual": [p.re_nu0_residual for p in points]},
        provenance={"command": "phase-diagram", "version": __version__},
    )
    # vertical regular<->bistable line at the Doppler phase where the slow
    # phase-mode coefficient changes sign, drawn from threshold up
    g_pi = sr_boundary(math.pi)
    g_line = np.linspace(g_pi, max(2.0 * g_pi, 60.0), 25)
    c0_line = [compute_C0(g, math.pi) for g in g_line]
    bistable = out / "bistable_line.csv"
    srio.write_csv(
        bistable,
        {"k_vz_tau": np.full(g_line.size, math.pi),
         "n_gamma_tau": g_line,
         "c0": c0_line},
        provenance={"command": "phase-diagram", "version": __version__},
    )
    manifest.wall_clock_s = time.perf_counter() - t_start
    manifest.add_output(boundary)
    manifest.add_output(bistable)
    manifest.write(out)
    print(out)
    return EXIT_OK


def cmd_meanfield(args) -> int:
    grid = _parse_grid(args.k_vz_grid)
    out = _run_dir(args.out, "meanfield",
                   {"n_gamma_tau": args.n_gamma_tau,
                    "k_vz_grid": list(map(float, grid))})
    manifest = RunManifest("meanfield", {"n_gamma_tau": args.n_gamma_tau,
                                         "k_vz_grid": args.k_vz_grid})
    t_start = time.perf_counter()
    rows = frequency_branch_diagram(args.n_gamma_tau, grid)
    path = out / "meanfield_sweep.csv"
    srio.write_csv(
        path,
        {"k_vz_tau": [r["k_vz_tau"] for r in rows],
         "n_gamma_tau": [args.n_gamma_tau] * len(rows),
         "j_norm": [r["j_norm"] for r in rows],
         "omega_tau": [r["omega"] for r in rows],
         "residual": [r["residual"] for r in rows],
         "converged": [int(r["converged"]) for r in rows]},
        provenance={"command": "meanfield", "version": __version__},
    )
    manifest.wall_clock_s = time.perf_counter() - t_start
    manifest.add_output(path)
    manifest.write(out)
    print(out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    params, records = srio.load_records(args.records)
    t0 = args.t0 if args.t0 is not None else params.t0
    T = args.T if args.T is not None else (params.t_sim - t0) / 2.0
    out = _run_dir(args.out, "spectrum",
                   {"records": str(args.records), "t0": t0, "T": T,
                    "window": args.window})
    manifest = RunManifest("spectrum", {**params.asdict(), "t0": t0, "T": T})
    t_start = time.perf_counter()
    spec = spectrum(records, t0, T, window=args.window, params=params)
    spec_path = out / "spectrum.csv"
    srio.write_csv(spec_path,
                   {"omega_tau": spec.omega_grid, "s_abs": spec.s_values},
                   provenance={"command": "spectrum", "version": __version__,
                               **params.asdict()})
    lags, g1 = g1_normalized(records, t0)
    n = min(g1.size, int(round(T / (lags[1] - lags[0]))) + 1)
    g1_path = out / "g1.csv"
    srio.write_csv(g1_path, {"lag_tau": lags[:n], "g1": g1[:n]},
                   provenance={"command": "spectrum", "version": __version__,
                               **params.asdict()})
    outputs = [spec_path, g1_path]
    if len(records) >= 3:
        fit = fit_damped_cosine(g1[:n], lags[:n])
        fit_path = out / "fit.json"
        fit_path.write_text(json.dumps(
            {"omega_tau": fit.omega, "gamma_tau": fit.gamma,
             "phi0": fit.phi0, "residual_norm": fit.residual_norm}, indent=2)
            + "\n")
        outputs.append(fit_path)
    manifest.wall_clock_s = time.perf_counter() - t_start
    for p in outputs:
        manifest.add_output(p)
    manifest.write(out)
    print(out)
    return EXIT_OK


def cmd_scaling(args) -> int:
    n_list = [int(s) for s in args.n_list.split(",") if s.strip()]
    if len(n_list) < 3:
        raise ParameterError("scaling needs at least 3 atom numbers")
    workers = args.workers if args.workers is not None else _default_workers()
    payload = {"n_list": n_list, "n_gamma_tau": args.n_gamma_tau,
               "k_vz_tau": args.k_vz_tau, "budget": args.budget,
               "t_sim": args.t_sim, "master_seed": args.master_seed}
    out = _run_dir(args.out, "scaling", payload)
    manifest = RunManifest("scaling", payload)
    t_start = time.perf_counter()
    points = []
    for n_atoms in n_list:
        n_traj = max(4, int(round(args.budget / n_atoms)))
        params = SimParams(n_gamma_tau=args.n_gamma_tau,
                           k_vz_tau=args.k_vz_tau, n_atoms=n_atoms,
                           t_sim=args.t_sim, n_traj=n_traj,
                           master_seed=args.master_seed).validate()
        records = run_ensemble(params, workers=workers)
        lags, g1 = g1_normalized(records, params.t0)
        fit = fit_damped_cosine(g1, lags)
        points.append((n_atoms, fit.gamma))
    result = scaling_fit(points)
    path = out / "scaling.csv"
    srio.write_csv(path,
                   {"n_atoms": result.n_values,
                    "gamma_tau": result.gamma_values},
                   provenance={"command": "scaling", "version": __version__,
                               "alpha": f"{result.alpha:.6g}",
                               "stderr_alpha": f"{result.stderr_alpha:.3g}",
                               **payload})
    manifest.wall_clock_s = time.perf_counter() - t_start
    manifest.add_output(path)
    manifest.write(out)
    print(f"{out}  alpha={result.alpha:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="srbeam",
        description="collective-emission beam-laser simulator and analysis")
    top.add_argument("--version", action="version", version=__version__)
    top.add_argument("--out", type=str, default="out",
                     help="root of the output tree (default: ./out)")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a trajectory ensemble")
    _add_sim_flags(p)
    p.add_argument("--format", choices=("ndjson", "npz"), default="ndjson")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phase-diagram", help="emission threshold curve")
    p.add_argument("--k-vz-grid", required=True,
                   help="start:step:stop or comma list, in units of 1/tau")
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("meanfield", help="stationary-solution sweep")
    p.add_argument("--n-gamma-tau", type=float, required=True)
    p.add_argument("--k-vz-grid", required=True)
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("spectrum", help="S(omega), g1, and linewidth fit")
    p.add_argument("--records", required=True,
                   help="records.ndjson or records.npz from `simulate`")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--T", type=float, default=None,
                   help="correlation span (default: half the post-t0 record)")
    p.add_argument("--window", choices=("rect", "hann"), default="rect")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("scaling", help="linewidth-vs-N power law")
    p.add_argument("--n-list", required=True, help="comma list of atom numbers")
    p.add_argument("--n-gamma-tau", type=float, required=True)
    p.add_argument("--k-vz-tau", type=float, required=True)
    p.add_argument("--budget", type=float, default=4.8e5,
                   help="total trajectory budget; each N gets budget/N")
    p.add_argument("--t-sim", type=float, default=100.0)
    p.add_argument("--master-seed", type=int, default=2024)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_scaling)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors and 0 for --help/--version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"srbeam: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"srbeam: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERICAL_ERRORS as exc:
        print(f"srbeam: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
