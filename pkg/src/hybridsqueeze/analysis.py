"""Squeezing metric, parameter sweeps and drive-ratio optimization."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .dynamics import IDX_XB, DriftSpec, Variant
from .errors import ConvergenceError, InstabilityError, SqueezeError, ValidationError
from .model import SystemParams, validate_params
from .solver import Method, SolverOptions, SteadyState, floquet_stability, harmonic_balance_steady, integrate_covariance

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

FIG2_GAMMAS = (0.001, 0.005, 0.01)
FIG3_ENSEMBLES = {"one-ensemble": (0.0, 10.0), "two-ensemble": (10.0, 10.0)}


def fig2_ratios() -> np.ndarray:
    return np.round(np.arange(50) * 0.02, 10)


def fig3_kappas(count: int = 25) -> np.ndarray:
    return np.logspace(0.0, 3.0, count)


def fig2_params(gamma: float = 0.001, ratio: float = 0.0) -> SystemParams:
    return SystemParams(
        kappa=1000.0,
        g_minus=1.0,
        g_plus=ratio,
        gamma_m=1e-5,
        gamma_1=gamma,
        gamma_2=gamma,
        g_a1=10.0,
        g_a2=10.0,
        delta_1=2.0,
        delta_2=-2.0,
        n_th=0.0,
    )


def fig3_params(g_a1: float, g_a2: float, kappa: float = 1000.0) -> SystemParams:
    return fig2_params(0.001).replace(g_a1=g_a1, g_a2=g_a2, kappa=kappa)


class SqueezingResult(NamedTuple):
    s_db: float
    var_xb: float
    s_db_min: float
    s_db_max: float
    stable: bool


def s_db_from_variance(var_xb: float) -> float:
    if not var_xb > 0:
        raise ValidationError(f"invalid covariance: X_b variance must be > 0, got {var_xb}", field="var_xb")
    return -10.0 * math.log10(2.0 * var_xb) + 0.0  # no -0.0


def squeezing_db(V) -> SqueezingResult:
    """Squeezing of the mechanical X quadrature relative to the zero-point variance 1/2."""
    var = float(np.asarray(V)[IDX_XB, IDX_XB])
    s = s_db_from_variance(var)
    return SqueezingResult(s, var, s, s, True)


def squeezing_from_steady(ss: SteadyState) -> SqueezingResult:
    var = ss.var_xb
    return SqueezingResult(
        s_db=s_db_from_variance(var),
        var_xb=var,
        s_db_min=s_db_from_variance(ss.v_max_var_xb),
        s_db_max=s_db_from_variance(ss.v_min_var_xb),
        stable=ss.stable,
    )


@dataclass(frozen=True)
class SweepRecord:
    value: float
    result: Optional[SqueezingResult]
    stable: bool
    status: str  # "ok", "unstable" or "failed"
    method: str
    periods_used: int = 0
    harmonics_used: int = 0
    min_symplectic: float = float("nan")
    best_ratio: float = float("nan")
    message: str = ""

    @property
    def s_db(self) -> float:
        return self.result.s_db if self.result is not None else float("nan")


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    records: tuple

    def __post_init__(self):
        vals = [r.value for r in self.records]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError(f"sweep values for {self.parameter} must be strictly increasing")

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    @property
    def s_db(self) -> np.ndarray:
        return np.array([r.s_db for r in self.records])

    @property
    def stable(self) -> np.ndarray:
        return np.array([r.stable for r in self.records])

    def __len__(self):
        return len(self.records)


def _full_model_solve(p: SystemParams, opts: SolverOptions) -> tuple[SteadyState, np.ndarray]:
    spec = DriftSpec(p, Variant.FULL)
    fl = floquet_stability(spec)
    if not fl.stable:
        raise InstabilityError("not Floquet-stable", eigenvalues=fl.multipliers)
    if opts.method is Method.TIME_INTEGRATION:
        return integrate_covariance(spec, opts=opts), fl.multipliers
    return harmonic_balance_steady(spec, opts=opts, check_stability=False), fl.multipliers


def evaluate_point(p: SystemParams, opts: SolverOptions, value: float = float("nan")) -> SweepRecord:
    """Solve the full model at ``p``; failures become records rather than exceptions."""
    method = opts.method.value
    try:
        validate_params(p)
        ss, _ = _full_model_solve(p, opts)
    except InstabilityError as exc:
        return SweepRecord(value, None, False, "unstable", method, message=str(exc))
    except (ConvergenceError, ValidationError, SqueezeError) as exc:
        return SweepRecord(value, None, False, "failed", method, message=str(exc))
    try:
        res = squeezing_from_steady(ss)
    except ValidationError as exc:
        return SweepRecord(value, None, False, "failed", method, message=str(exc))
    return SweepRecord(
        value,
        res,
        True,
        "ok",
        method,
        periods_used=ss.periods_used,
        harmonics_used=ss.harmonics_used,
        min_symplectic=float(ss.v_mean.symplectic_eigenvalues().min()),
    )


def objective(p: SystemParams, opts: SolverOptions) -> float:
    """S_dB at ``p``, or -inf where no stable steady state exists."""
    rec = evaluate_point(p, opts)
    return rec.s_db if rec.stable else -math.inf


def _check_method(opts: SolverOptions):
    if opts.method is Method.ALGEBRAIC_LYAPUNOV:
        raise ValidationError("sweeps solve the full periodic model; choose harmonic-balance or time-integration", field="method")


def _pmap(fn, args, jobs: int):
    if jobs is None or jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*args)))


def sweep_ratio(base: SystemParams, ratios: Sequence[float], opts: SolverOptions | None = None, jobs: int = 1) -> SweepResult:
    opts = opts or SolverOptions()
    _check_method(opts)
    ratios = [float(r) for r in ratios]
    bad = [r for r in ratios if not 0.0 <= r < 1.0]
    if bad:
        raise ValidationError(f"ratios must lie in [0, 1), got {bad}", field="ratio")
    args = [(base.with_ratio(r), opts, r) for r in ratios]
    return SweepResult("ratio", tuple(_pmap(evaluate_point, args, jobs)))


# ------------------------------------------------------------------ optimization


class RatioOptimum(NamedTuple):
    ratio: float
    result: SqueezingResult
    evaluations: int
    unimodal: bool


def is_unimodal(values) -> bool:
    """True when the finite-difference signs rise then fall at most once."""
    v = np.asarray(values, dtype=float)
    # -inf neighbours (unstable points) count as falls, never rises
    signs = []
    for a, b in zip(v[:-1], v[1:]):
        if np.isneginf(b) and np.isneginf(a):
            continue
        if np.isneginf(b):
            signs.append(-1)
        elif np.isneginf(a):
            signs.append(1)
        elif b > a:
            signs.append(1)
        elif b < a:
            signs.append(-1)
    changes = sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)
    if changes == 0:
        return True
    return changes == 1 and signs[0] == 1


def golden_section_max(f, a: float, b: float, xtol: float = 1e-4):
    """Maximize a unimodal ``f`` on (a, b); returns (x, f(x), evaluations)."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
        n += 1
    if fc >= fd:
        return c, fc, n
    return d, fd, n


def optimize_ratio(
    base: SystemParams,
    opts: SolverOptions | None = None,
    coarse_step: float = 0.02,
    xtol: float = 1e-4,
    dense_step: float = 1e-3,
    jobs: int = 1,
) -> RatioOptimum:
    """Maximize S_dB over G+/G- in [0, 1) among Floquet-stable points.

    Coarse grid first; golden-section refinement inside the neighbouring
    cells of the coarse maximum when the grid looks unimodal, else a dense
    grid scan.
    """
    opts = opts or SolverOptions()
    _check_method(opts)
    n_coarse = int(round(1.0 / coarse_step))
    grid = np.round(np.arange(n_coarse) * coarse_step, 12)
    records = sweep_ratio(base, grid, opts, jobs=jobs).records
    vals = np.array([r.s_db if r.stable else -math.inf for r in records])
    evals = len(grid)
    if not np.any(np.isfinite(vals)):
        raise InstabilityError(f"no Floquet-stable ratio found on the coarse grid (step {coarse_step})")

    i = int(np.argmax(vals))
    finite = vals[np.isfinite(vals)]
    if np.all(np.isfinite(vals)) and finite.max() - finite.min() <= 1e-12 * (1.0 + abs(finite.max())):
        return RatioOptimum(0.0, records[0].result, evals, True)

    unimodal = is_unimodal(vals)
    best_r, best_s, best_res = float(grid[i]), float(vals[i]), records[i].result
    cache = {}

    def f(r):
        if r not in cache:
            rec = evaluate_point(base.with_ratio(r), opts, r)
            cache[r] = rec
        rec = cache[r]
        return rec.s_db if rec.stable else -math.inf

    if unimodal:
        lo = float(grid[i - 1]) if i > 0 else 0.0
        hi = float(grid[i + 1]) if i + 1 < len(grid) else 1.0
        r, s, n = golden_section_max(f, lo, hi, xtol)
        evals += n
    else:
        dense = np.round(np.arange(int(round(1.0 / dense_step))) * dense_step, 12)
        ss = [f(float(r)) for r in dense]
        evals += len(dense)
        j = int(np.argmax(ss))
        r, s = float(dense[j]), ss[j]
    if s > best_s:
        best_r, best_s, best_res = r, s, cache[r].result
    return RatioOptimum(best_r, best_res, evals, unimodal)


def _optimized_record(p: SystemParams, opts: SolverOptions, value: float) -> SweepRecord:
    method = opts.method.value
    try:
        validate_params(p)
        opt = optimize_ratio(p, opts)
    except InstabilityError as exc:
        return SweepRecord(value, None, False, "unstable", method, message=str(exc))
    except SqueezeError as exc:
        return SweepRecord(value, None, False, "failed", method, message=str(exc))
    rec = evaluate_point(p.with_ratio(opt.ratio), opts, value)
    return SweepRecord(
        value,
        rec.result,
        rec.stable,
        rec.status,
        method,
        periods_used=rec.periods_used,
        harmonics_used=rec.harmonics_used,
        min_symplectic=rec.min_symplectic,
        best_ratio=opt.ratio,
        message=rec.message,
    )


def sweep_kappa(
    base: SystemParams,
    kappas: Sequence[float],
    opts: SolverOptions | None = None,
    optimize: bool = True,
    jobs: int = 1,
) -> SweepResult:
    opts = opts or SolverOptions()
    _check_method(opts)
    kappas = [float(k) for k in kappas]
    if any(not k > 0 for k in kappas):
        raise ValidationError("kappa values must be > 0", field="kappa")
    fn = _optimized_record if optimize else evaluate_point
    args = [(base.replace(kappa=k), opts, k) for k in kappas]
    return SweepResult("kappa", tuple(_pmap(fn, args, jobs)))


def sweep_parameter(
    base: SystemParams, name: str, values: Sequence[float], opts: SolverOptions | None = None, optimize: bool = False, jobs: int = 1
) -> SweepResult:
    """Generic sweep over any SystemParams field (``ratio`` sweeps G+/G-)."""
    opts = opts or SolverOptions()
    if name == "ratio":
        return sweep_ratio(base, values, opts, jobs)
    if name not in base.as_dict():
        raise ValidationError(f"unknown sweep parameter {name!r}", field="parameter")
    _check_method(opts)
    fn = _optimized_record if optimize else evaluate_point
    args = [(base.replace(**{name: float(v)}), opts, float(v)) for v in values]
    return SweepResult(name, tuple(_pmap(fn, args, jobs)))


def fig2(opts: SolverOptions | None = None, ratios=None, gammas=FIG2_GAMMAS, base: SystemParams | None = None, jobs: int = 1) -> dict:
    ratios = fig2_ratios() if ratios is None else ratios
    out = {}
    for g in gammas:
        p = (base or fig2_params()).replace(gamma_1=g, gamma_2=g)
        out[f"gamma={g:g}"] = sweep_ratio(p, ratios, opts, jobs)
    return out


def fig3(opts: SolverOptions | None = None, kappas=None, ensembles=None, base: SystemParams | None = None, jobs: int = 1) -> dict:
    kappas = fig3_kappas() if kappas is None else kappas
    ensembles = FIG3_ENSEMBLES if ensembles is None else ensembles
    out = {}
    for label, (ga1, ga2) in ensembles.items():
        p = (base or fig3_params(ga1, ga2)).replace(g_a1=ga1, g_a2=ga2)
        out[label] = sweep_kappa(p, kappas, opts, optimize=True, jobs=jobs)
    return out
