"""Command-line front end.

    hybridsqueeze steady config.ini
    hybridsqueeze sweep-ratio config.ini --output ratio.csv
    hybridsqueeze sweep-kappa config.ini --output kappa.csv
    hybridsqueeze fig2 [config.ini] --output fig2.csv
    hybridsqueeze fig3 [config.ini] --output fig3.csv
    hybridsqueeze stability config.ini
    hybridsqueeze dump-matrices config.ini --output matrices.txt

Exit codes: 0 success, 1 validation error, 2 solver non-convergence,
3 instability at a required point.  Fatal errors print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__, kernels
from .analysis import (
    FIG2_GAMMAS,
    FIG3_ENSEMBLES,
    SweepRecord,
    SweepResult,
    _full_model_solve,
    fig2_params,
    fig3_params,
    squeezing_from_steady,
    sweep_kappa,
    sweep_parameter,
    sweep_ratio,
)
from .config import RunConfig, SweepSpec, load_config
from .dynamics import DriftSpec, Variant, drift_matrix, noise_matrix
from .errors import InstabilityError, SqueezeError, ValidationError
from .solver import Method, floquet_stability

COMMANDS = ("steady", "sweep-ratio", "sweep-kappa", "fig2", "fig3", "stability", "dump-matrices")
COLUMNS = ["parameter", "s_db", "s_db_min", "s_db_max", "var_xb", "stable", "method", "periods_used"]
EXTRA_COLUMNS = ["harmonics_used", "best_ratio", "status", "message"]

FIG2_SWEEP = SweepSpec(parameter="ratio", start=0.0, stop=0.98, count=50, scale="linear")
FIG3_SWEEP = SweepSpec(parameter="kappa", start=1.0, stop=1000.0, count=25, scale="log", optimize=True)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, float):
        return "" if x != x else repr(x)
    return str(x)


def record_row(rec: SweepRecord) -> list:
    r = rec.result
    nan = float("nan")
    return [
        _fmt(float(rec.value)),
        _fmt(r.s_db if r else nan),
        _fmt(r.s_db_min if r else nan),
        _fmt(r.s_db_max if r else nan),
        _fmt(r.var_xb if r else nan),
        _fmt(rec.stable),
        rec.method,
        str(rec.periods_used),
        str(rec.harmonics_used),
        _fmt(float(rec.best_ratio)),
        rec.status,
        rec.message,
    ]


def write_csv(fh, curves: dict, meta: dict, curve_column: bool):
    for k, v in meta.items():
        fh.write(f"# {k}={_fmt(v) if not isinstance(v, str) else v}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow((["curve"] if curve_column else []) + COLUMNS + EXTRA_COLUMNS)
    for label, sweep in curves.items():
        for rec in sweep.records:
            w.writerow(([label] if curve_column else []) + record_row(rec))


def read_csv(fh) -> tuple[dict, list[dict]]:
    """Parse a file produced by :func:`write_csv` back into (meta, rows)."""
    meta, body = {}, []
    for line in fh:
        if line.startswith("# "):
            k, _, v = line[2:].rstrip("\n").partition("=")
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("".join(body))))
    return meta, rows


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _meta(command: str, cfg: RunConfig, params=None, extra=None) -> dict:
    meta = {"command": command, "version": __version__, "backend": kernels.BACKEND}
    if params is not None:
        for k, v in params.as_dict().items():
            meta[f"system.{k}"] = v
    for k, v in cfg.describe().items():
        if k.startswith("system.") and params is not None and k != "system.coupling_mode":
            continue
        meta[k] = v
    meta.update(extra or {})
    return meta


# ------------------------------------------------------------------ commands


def cmd_steady(cfg: RunConfig, out):
    p = cfg.system()
    try:
        ss, _ = _full_model_solve(p, cfg.solver)
    except InstabilityError as exc:
        raise InstabilityError(f"steady state does not exist: {exc}", eigenvalues=exc.eigenvalues) from None
    res = squeezing_from_steady(ss)
    rec = SweepRecord(
        p.ratio, res, True, "ok", cfg.solver.method.value, ss.periods_used, ss.harmonics_used,
        float(ss.v_mean.symplectic_eigenvalues().min()),
    )
    with _open_out(out) as fh:
        write_csv(fh, {"steady": SweepResult("ratio", (rec,))}, _meta("steady", cfg, p), False)
    if out not in (None, "-"):
        print(f"S_dB = {res.s_db:.6f} dB  (var_xb = {res.var_xb:.6g})")
    return 0


def cmd_sweep(cfg: RunConfig, out, command: str, jobs: int):
    p = cfg.system()
    if command == "sweep-ratio":
        spec = cfg.sweep_spec(FIG2_SWEEP)
        if spec.parameter != "ratio":
            raise ValidationError("sweep-ratio expects [sweep] parameter = ratio", field="parameter")
        result = sweep_ratio(p, spec.values(), cfg.solver, jobs)
    elif command == "sweep-kappa":
        spec = cfg.sweep_spec(replace(FIG3_SWEEP, optimize=False))
        if spec.parameter != "kappa":
            raise ValidationError("sweep-kappa expects [sweep] parameter = kappa", field="parameter")
        result = sweep_kappa(p, spec.values(), cfg.solver, optimize=spec.optimize, jobs=jobs)
    else:
        spec = cfg.sweep_spec()
        result = sweep_parameter(p, spec.parameter, spec.values(), cfg.solver, spec.optimize, jobs)
    with _open_out(out) as fh:
        write_csv(fh, {command: result}, _meta(command, cfg, p, {"sweep.parameter": spec.parameter}), False)
    return 0


def cmd_fig2(cfg: RunConfig, out, jobs: int):
    spec = cfg.sweep_spec(FIG2_SWEEP)
    curves = {}
    base = None
    for g in FIG2_GAMMAS:
        p = cfg.system(fig2_params(g))
        if "gamma" not in cfg.system_values and "gamma_1" not in cfg.system_values:
            p = p.replace(gamma_1=g, gamma_2=g)
        base = base or p
        curves[f"gamma={p.gamma_1:g}"] = sweep_ratio(p, spec.values(), cfg.solver, jobs)
    meta = _meta("fig2", cfg, base, {"sweep.ratio_grid": f"{spec.start}:{spec.stop}:{spec.count}"})
    with _open_out(out) as fh:
        write_csv(fh, curves, meta, True)
    return 0


def cmd_fig3(cfg: RunConfig, out, jobs: int):
    spec = cfg.sweep_spec(FIG3_SWEEP)
    curves = {}
    base = None
    for label, (ga1, ga2) in FIG3_ENSEMBLES.items():
        p = cfg.system(fig3_params(ga1, ga2)).replace(g_a1=ga1, g_a2=ga2)
        base = base or p
        curves[label] = sweep_kappa(p, spec.values(), cfg.solver, optimize=spec.optimize, jobs=jobs)
    meta = _meta("fig3", cfg, base, {"sweep.kappa_grid": f"{spec.start}:{spec.stop}:{spec.count}:{spec.scale}"})
    with _open_out(out) as fh:
        write_csv(fh, curves, meta, True)
    return 0


def cmd_stability(cfg: RunConfig, out):
    p = cfg.system()
    variant = Variant.FULL
    fl = floquet_stability(DriftSpec(p, variant))
    with _open_out(out) as fh:
        fh.write(f"# stable={_fmt(fl.stable)}\n# substeps={fl.substeps}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "real", "imag", "modulus"])
        for i, z in enumerate(sorted(fl.multipliers, key=abs, reverse=True)):
            w.writerow([i, repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z)))])
    if out not in (None, "-"):
        print(f"stable={_fmt(fl.stable)} max|mu|={np.max(np.abs(fl.multipliers)):.12g}")
    return 0


def cmd_dump(cfg: RunConfig, out):
    p = cfg.system()
    full = DriftSpec(p, Variant.FULL)
    blocks = [
        ("A(t=0)", drift_matrix(full, 0.0)),
        ("A(t=T/4)", drift_matrix(full, full.period / 4)),
        ("A_RWA", drift_matrix(DriftSpec(p, Variant.RWA))),
        ("D", noise_matrix(p)),
    ]
    with _open_out(out) as fh:
        for name, M in blocks:
            fh.write(f"# {name}\n")
            np.savetxt(fh, M, fmt="%.17g")
            fh.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridsqueeze", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", nargs="?", help="sectioned key/value config file")
    ap.add_argument("--output", "-o", help="output path (default: [output] path, else stdout)")
    ap.add_argument("--method", help="harmonic-balance, time-integration or lyapunov")
    ap.add_argument("--harmonics", type=int, help="harmonic-balance truncation order")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--seed", type=int, help="accepted and ignored; every pipeline is deterministic")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _error(exc: SqueezeError) -> int:
    line = {"error": exc.kind, "exit_code": exc.exit_code, "message": str(exc)}
    field = getattr(exc, "field", None)
    if field:
        line["field"] = field
    print(json.dumps(line), file=sys.stderr)
    return exc.exit_code


def run(command: str, cfg: RunConfig, output=None, jobs: int = 1) -> int:
    out = output or cfg.output
    if command == "steady":
        return cmd_steady(cfg, out)
    if command in ("sweep-ratio", "sweep-kappa"):
        return cmd_sweep(cfg, out, command, jobs)
    if command == "fig2":
        return cmd_fig2(cfg, out, jobs)
    if command == "fig3":
        return cmd_fig3(cfg, out, jobs)
    if command == "stability":
        return cmd_stability(cfg, out)
    if command == "dump-matrices":
        return cmd_dump(cfg, out)
    raise ValidationError(f"unknown command {command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            if args.command not in ("fig2", "fig3"):
                raise ValidationError(f"'{args.command}' needs a config file", field="config")
            cfg = RunConfig()
        else:
            try:
                cfg = load_config(args.config)
            except OSError as exc:
                raise ValidationError(f"cannot read config: {exc}", field="config") from None
        solver = cfg.solver
        if args.method:
            solver = replace(solver, method=Method.parse(args.method))
        if args.harmonics is not None:
            solver = replace(solver, harmonics=args.harmonics)
        cfg = replace(cfg, solver=solver)
        return run(args.command, cfg, args.output, args.jobs)
    except SqueezeError as exc:
        return _error(exc)


if __name__ == "__main__":
    sys.exit(main())
