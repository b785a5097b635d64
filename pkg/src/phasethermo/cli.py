"""Command-line experiment runner.

    phasethermo run CONFIG [--output-dir DIR] [--threads N] [--stride K]
    phasethermo validate CONFIG

Exit status: 0 success, 1 invalid configuration, 2 numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import (NumericalError, PotentialSchedule, evolve, gibbs_state, hamiltonian_at,
                       lindblad_rhs, pure, steady_state)
from .grading import grade, params_digest, sigma_ir, target_state
from .hilbert import build_operators
from .phasespace import balance, build_sphere_grid, entropy_rate_of, entropy_records, husimi_q
from .protocols import run_protocol

logger = logging.getLogger("phasethermo")

CSV_HEADER = "t,S_Q,dS_U_dt,Pi_lc,Pi_th,Phi_th,residual"
CSV_FIELDS = ("t", "S_Q", "dS_U_dt", "Pi_lc", "Pi_th", "Phi_th", "residual")


def atomic_write(path: Path, data: str) -> None:
    """Write via a temp file in the same directory and rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_timeseries(records) -> str:
    if not records:
        raise ValueError("no records to emit")
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join("%.17g" % float(getattr(r, f)) for f in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def emit_timeseries(records, path) -> Path:
    path = Path(path)
    atomic_write(path, format_timeseries(records))
    return path


def read_timeseries(path) -> np.ndarray:
    """Structured array with the CSV columns."""
    return np.genfromtxt(path, delimiter=",", names=True, dtype=float, ndmin=1)


class _Collector(logging.Handler):
    def __init__(self):
        super().__init__(logging.INFO)
        self.messages = []

    def emit(self, record):
        self.messages.append(f"{record.levelname.lower()}: {record.name}: {record.getMessage()}")


def _initial_state(cfg: ExperimentConfig, ops, schedule: PotentialSchedule) -> np.ndarray:
    h0 = hamiltonian_at(cfg.params, schedule, 0.0, ops)
    kind = cfg.thermo.initial
    if kind == "ground":
        return pure(np.linalg.eigh(h0)[1][:, 0])
    if kind == "vacuum":
        return pure(ops.vacuum())
    if kind == "thermal":
        p = cfg.params
        if p.nbar == 0:
            return pure(np.linalg.eigh(h0)[1][:, 0])
        beta = math.log1p(1 / p.nbar) / (p.hbar * p.omega)
        return gibbs_state(h0, beta)
    rng = np.random.default_rng(cfg.seed)
    n = ops.dimension
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def run_thermodynamics(cfg: ExperimentConfig):
    """Evolve through the schedule (then optionally relax at H(tau)) and decompose S_Q."""
    ops = build_operators(cfg.basis, cfg.params, cfg.representation)
    grid = build_sphere_grid(cfg.basis, cfg.n_theta, cfg.n_phi)
    schedule = cfg.thermo.schedule
    rho0 = _initial_state(cfg, ops, schedule)
    traj = evolve(rho0, cfg.params, schedule, ops, cfg.steps, cfg.stride)
    records = entropy_records(traj, grid)
    if cfg.thermo.relax_time > 0:
        dt = schedule.tau / cfg.steps
        steps = int(round(cfg.thermo.relax_time / (dt * cfg.stride))) * cfg.stride
        steps = max(steps, 2 * cfg.stride)
        h_end = hamiltonian_at(cfg.params, schedule, schedule.tau, ops)
        hold = PotentialSchedule(steps * dt, "harmonic")
        relax = evolve(traj.final, cfg.params, hold, ops, steps, cfg.stride,
                       hamiltonian=lambda t: h_end)
        more = entropy_records(relax, grid)
        records = records + [replace(r, t=r.t + schedule.tau) for r in more[1:]]
    h_end = hamiltonian_at(cfg.params, schedule, schedule.tau, ops)
    ness = steady_state(h_end, cfg.params, ops)
    ness_field = husimi_q(ness, grid)
    nb = balance(ness_field, cfg.params)
    nb["dS_U_dt"] = entropy_rate_of(ness, -1j / cfg.params.hbar * (h_end @ ness - ness @ h_end), grid)
    nb["generator_norm"] = float(np.abs(lindblad_rhs(ness, h_end, cfg.params, ops)).max())
    last = records[-1]
    summary = {
        "sigma_ir": sigma_ir(records),
        "final": {"Pi_lc": last.Pi_lc, "Pi_th": last.Pi_th, "Phi_th": last.Phi_th,
                  "dS_U_dt": last.dS_U_dt, "dS_dt": last.dS_dt,
                  "balance": last.Pi_lc + last.Pi_th - last.Phi_th},
        "steady_state": nb,
        "trajectory": traj.stats,
    }
    return records, summary


def _protocol_job(args):
    spec, params, basis, representation, dt, stride, n_theta, n_phi = args
    ops = build_operators(basis, params, representation)
    grid = build_sphere_grid(basis, n_theta, n_phi)
    steps = max(1, int(round(spec.tau / dt)))
    stride = math.gcd(steps, stride)
    run = run_protocol(spec, params, ops, steps, stride)
    records = entropy_records(run.trajectory, grid)
    target = target_state(params, spec.free_schedule(), ops, steps)
    digest = params_digest(params.to_dict(), repr(spec), basis.dimension, representation)
    report = grade(run.trajectory, records, target, kind=spec.kind, digest=digest)
    out = report.to_dict()
    out["amplitude"] = run.amplitude
    out["steps"] = steps
    return out, records


def run_protocols(cfg: ExperimentConfig, threads: int = 1):
    jobs = [(spec, cfg.params, cfg.basis, cfg.representation, cfg.protocol_dt, cfg.stride,
             cfg.n_theta, cfg.n_phi) for spec in cfg.protocols]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_protocol_job, jobs))
    else:
        results = [_protocol_job(j) for j in jobs]
    reports = [r for r, _ in results]
    ranking = sorted(range(len(reports)), key=lambda i: -reports[i]["G"])
    return results, {"reports": reports,
                     "ranking": [f"{reports[i]['kind']}@tau={reports[i]['tau']:g}" for i in ranking]}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


def execute(cfg: ExperimentConfig, output_dir=None, threads: int = 1) -> Path:
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    collector = _Collector()
    logging.getLogger("phasethermo").addHandler(collector)
    start = time.perf_counter()
    files = []
    try:
        if cfg.pipeline == "thermodynamics":
            records, summary = run_thermodynamics(cfg)
            files.append(emit_timeseries(records, out / "entropy_rates.csv"))
            path = out / "summary.json"
            atomic_write(path, _dump(summary))
            files.append(path)
        else:
            results, report = run_protocols(cfg, threads)
            for (rep, records) in results:
                name = f"{rep['kind']}_tau{rep['tau']:g}_rates.csv"
                files.append(emit_timeseries(records, out / name))
            path = out / "grading.json"
            atomic_write(path, _dump(report))
            files.append(path)
    finally:
        logging.getLogger("phasethermo").removeHandler(collector)
    manifest = {
        "config_digest": cfg.digest,
        "code_version": __version__,
        "wall_clock_s": time.perf_counter() - start,
        "warnings": collector.messages,
        "files": {p.name: _sha256(p) for p in files},
    }
    atomic_write(out / "manifest.json", _dump(manifest))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasethermo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a config")
    run.add_argument("config")
    run.add_argument("--output-dir")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--stride", type=int)
    val = sub.add_parser("validate", help="parse and validate a config")
    val.add_argument("config")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run" and args.stride is not None:
            if args.stride < 1 or cfg.steps % args.stride:
                raise ConfigError("--stride", f"must be >= 1 and divide integrator.steps ({cfg.steps})")
            cfg.stride = args.stride
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"ok: {args.config} ({cfg.pipeline})")
        return 0
    try:
        out = execute(cfg, args.output_dir, max(1, args.threads))
    except (NumericalError, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
