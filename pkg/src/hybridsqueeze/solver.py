"""Steady-state covariance solvers and Floquet stability.

Three routes to the periodic steady state of dV/dt = A(t) V + V A(t)^T + D:

* ``lyapunov_steady``: algebraic solve for a constant (RWA) drift matrix.
* ``harmonic_balance_steady``: Fourier expansion of V(t) in harmonics of
  2 omega_m, solved as a block-tridiagonal linear system.  Production path.
* ``integrate_covariance``: propagates V(t) through whole periods with a
  fourth-order Magnus exponential integrator (unconditionally stable for the
  stiff cavity damping) until the period average settles.  Validation path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import expm

from . import kernels
from .dynamics import DIM, IDX_XB, DriftSpec, Variant, drift_harmonics, drift_matrix, drift_stack, noise_matrix, vacuum_thermal_state
from .errors import ConvergenceError, InstabilityError, ValidationError

STABILITY_MARGIN = 1e-9
PHYSICAL_TOL = 1e-8
LYAPUNOV_RESIDUAL_BOUND = 1e-10
PERIODIC_RESIDUAL_BOUND = 1e-8
HB_TAIL_RATIO = 1e-3

_GAUSS_OFFSET = math.sqrt(3.0) / 6.0


class Method(enum.Enum):
    ALGEBRAIC_LYAPUNOV = "lyapunov"
    TIME_INTEGRATION = "time-integration"
    HARMONIC_BALANCE = "harmonic-balance"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "lyapunov": cls.ALGEBRAIC_LYAPUNOV,
            "algebraic-lyapunov": cls.ALGEBRAIC_LYAPUNOV,
            "algebraiclyapunov": cls.ALGEBRAIC_LYAPUNOV,
            "time-integration": cls.TIME_INTEGRATION,
            "timeintegration": cls.TIME_INTEGRATION,
            "time": cls.TIME_INTEGRATION,
            "harmonic-balance": cls.HARMONIC_BALANCE,
            "harmonicbalance": cls.HARMONIC_BALANCE,
            "hb": cls.HARMONIC_BALANCE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValidationError(
                f"unknown solver method {value!r}; expected one of "
                + ", ".join(m.value for m in cls),
                field="method",
            ) from None


@dataclass(frozen=True)
class SolverOptions:
    method: Method = Method.HARMONIC_BALANCE
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    convergence_tol: float = 1e-7
    max_periods: int = 1_000_000
    harmonics: int = 6
    max_harmonics: int = 96
    max_substeps: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        for name in ("rel_tol", "abs_tol", "convergence_tol"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"{name} must be > 0, got {value}", field=name)
        if self.harmonics < 1:
            raise ValidationError(f"harmonics must be >= 1, got {self.harmonics}", field="harmonics")
        if self.max_periods < 1:
            raise ValidationError(f"max_periods must be >= 1, got {self.max_periods}", field="max_periods")


class CovarianceMatrix:
    """Symmetrized second moments V_jk = <u_j u_k + u_k u_j> / 2 of the eight quadratures."""

    __slots__ = ("_m",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.shape != (DIM, DIM):
            raise ValueError(f"covariance matrix must be {DIM}x{DIM}, got {m.shape}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def var_xb(self) -> float:
        return float(self._m[IDX_XB, IDX_XB])

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self._m)

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return bool(np.all(self.symplectic_eigenvalues() >= 0.5 - tol))

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __repr__(self):
        return f"CovarianceMatrix(var_xb={self.var_xb:.6g})"


@dataclass(frozen=True)
class SteadyState:
    v_mean: CovarianceMatrix
    v_min_var_xb: float
    v_max_var_xb: float
    stable: bool
    periods_used: int
    method: Method
    harmonics_used: int = 0
    substeps: int = 0
    residual: float = float("nan")
    multipliers: Optional[np.ndarray] = None
    history: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def var_xb(self) -> float:
        return self.v_mean.var_xb


class FloquetResult(NamedTuple):
    stable: bool
    multipliers: np.ndarray
    substeps: int


def _symplectic_form(n_modes: int = DIM // 2) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(V) -> np.ndarray:
    """Moduli of the eigenvalues of i Omega V, one per mode, ascending."""
    V = np.asarray(V, dtype=float)
    ev = np.abs(np.linalg.eigvals(1j * _symplectic_form(V.shape[0] // 2) @ V))
    return np.sort(ev)[::2]


def _vec(M):
    return np.ascontiguousarray(M).reshape(-1)


def _unvec(v):
    m = np.asarray(v).reshape(DIM, DIM)
    return 0.5 * (m + m.T)


def lyapunov_residual(A, V, D) -> float:
    return float(np.max(np.abs(A @ V + V @ A.T + D)))


def lyapunov_steady(A, D) -> CovarianceMatrix:
    """Solve A V + V A^T + D = 0 through the vectorized 64x64 linear system."""
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    eig = np.linalg.eigvals(A)
    bad = eig[eig.real >= 0]
    if bad.size:
        raise InstabilityError(
            "drift matrix is not Hurwitz; eigenvalues with Re >= 0: "
            + ", ".join(f"{z.real:.3e}{z.imag:+.3e}j" for z in bad),
            eigenvalues=bad,
        )
    n = A.shape[0]
    L = kernels.kron_sum(np.ascontiguousarray(A))
    d = _vec(D)
    x = np.linalg.solve(L, -d)
    V = 0.5 * (x.reshape(n, n) + x.reshape(n, n).T)
    bound = LYAPUNOV_RESIDUAL_BOUND * max(np.max(np.abs(D)), np.finfo(float).tiny)
    for _ in range(3):
        R = A @ V + V @ A.T + D
        if np.max(np.abs(R)) < bound:
            break
        dx = np.linalg.solve(L, -_vec(R))
        V = V + 0.5 * (dx.reshape(n, n) + dx.reshape(n, n).T)
    res = lyapunov_residual(A, V, D)
    if not res < bound:
        raise ConvergenceError(f"Lyapunov residual {res:.3e} above bound {bound:.3e}", last_change=res)
    if n == DIM:
        return CovarianceMatrix(V)
    return V


# ------------------------------------------------------------------ Magnus steps


def _magnus_exponents(spec: DriftSpec, substeps: int):
    """Fourth-order Magnus exponents over ``substeps`` equal slices of one period.

    Returns (Omega, A_lo, A_hi, h) with the drift sampled at the two Gauss
    points of each slice.
    """
    T = spec.period
    h = T / substeps
    starts = h * np.arange(substeps)
    A1 = drift_stack(spec, starts + (0.5 - _GAUSS_OFFSET) * h)
    A2 = drift_stack(spec, starts + (0.5 + _GAUSS_OFFSET) * h)
    comm = A2 @ A1 - A1 @ A2
    omega = 0.5 * h * (A1 + A2) + (math.sqrt(3.0) / 12.0) * h * h * comm
    return omega, A1, A2, h


def _batched_kron_sum(X):
    n = X.shape[-1]
    eye = np.eye(n)
    L = X[:, :, None, :, None] * eye[None, None, :, None, :] + eye[None, :, None, :, None] * X[:, None, :, None, :]
    return L.reshape(X.shape[0], n * n, n * n)


def monodromy(spec: DriftSpec, substeps: int) -> np.ndarray:
    omega, _, _, _ = _magnus_exponents(spec, substeps)
    S = expm(omega)
    Phi, _ = kernels.accumulate_propagators(S, np.zeros_like(S))
    return Phi[-1]


def floquet_stability(spec: DriftSpec, tol: float = 1e-11, max_substeps: int = 1 << 14) -> FloquetResult:
    """Floquet multipliers over one period T = pi / omega_m.

    Stable iff every multiplier has modulus below 1 - 1e-9; marginal cases
    count as unstable.  The RWA variant uses exp(lambda T) of the constant
    drift matrix directly.
    """
    if spec.variant is Variant.RWA:
        mult = np.exp(np.linalg.eigvals(drift_matrix(spec)) * spec.period)
        return FloquetResult(bool(np.all(np.abs(mult) < 1 - STABILITY_MARGIN)), mult, 0)

    threshold = 1 - STABILITY_MARGIN
    m = 64
    prev = np.max(np.abs(np.linalg.eigvals(monodromy(spec, m))))
    while True:
        m *= 2
        mult = np.linalg.eigvals(monodromy(spec, m))
        cur = np.max(np.abs(mult))
        # Richardson estimate for a fourth-order scheme
        err = abs(cur - prev) / 15.0
        # refine only while the verdict is still within reach of the error
        decided = abs(cur - threshold) > 10.0 * err + tol
        if err <= tol or decided or m >= max_substeps:
            break
        prev = cur
    return FloquetResult(bool(np.all(np.abs(mult) < threshold)), mult, m)


def _require_stable(spec: DriftSpec) -> FloquetResult:
    fl = floquet_stability(spec)
    if not fl.stable:
        worst = fl.multipliers[np.argmax(np.abs(fl.multipliers))]
        raise InstabilityError(
            f"system is not Floquet-stable: largest multiplier modulus {abs(worst):.12g}",
            eigenvalues=fl.multipliers,
        )
    return fl


# ------------------------------------------------------------------ time integration


def period_propagators(spec: DriftSpec, D, substeps: int):
    """Phi_k and Q_k at t_k = k T / substeps, k = 0..substeps.

    V(t_k) = Phi_k V(0) Phi_k^T + Q_k for the covariance equation.
    """
    D = np.asarray(D, dtype=float)
    omega, A1, A2, h = _magnus_exponents(spec, substeps)
    dA = A2 - A1
    d_eff = D[None] + (math.sqrt(3.0) / 12.0) * h * (dA @ D + D @ np.swapaxes(dA, 1, 2))
    n2 = DIM * DIM
    aug = np.zeros((substeps, n2 + 1, n2 + 1))
    aug[:, :n2, :n2] = _batched_kron_sum(omega)
    aug[:, :n2, n2] = h * d_eff.reshape(substeps, n2)
    E = expm(aug)
    S = expm(omega)
    C = E[:, :n2, n2].reshape(substeps, DIM, DIM)
    C = 0.5 * (C + np.swapaxes(C, 1, 2))
    return kernels.accumulate_propagators(np.ascontiguousarray(S), np.ascontiguousarray(C))


def _converged_propagators(spec: DriftSpec, D, opts: SolverOptions):
    m = 32 if spec.variant is Variant.RWA else 128
    Phi, Q = period_propagators(spec, D, m)
    if spec.variant is Variant.RWA:
        return Phi, Q, m
    while True:
        m2 = 2 * m
        Phi2, Q2 = period_propagators(spec, D, m2)
        err_phi = float(np.max(np.abs(Phi2[-1] - Phi[-1]))) / 15.0
        err_q = float(np.max(np.abs(Q2[-1] - Q[-1]))) / 15.0
        ok_phi = err_phi <= opts.abs_tol + opts.rel_tol * max(1.0, float(np.max(np.abs(Phi2[-1]))))
        ok_q = err_q <= opts.abs_tol + opts.rel_tol * float(np.max(np.abs(Q2[-1])))
        Phi, Q, m = Phi2, Q2, m2
        if ok_phi and ok_q:
            return Phi, Q, m
        if m >= opts.max_substeps:
            raise ConvergenceError(
                f"period propagator not resolved with {m} substeps "
                f"(error estimates {err_phi:.2e}, {err_q:.2e})",
                last_change=max(err_phi, err_q),
            )


def integrate_covariance(spec: DriftSpec, D=None, V0=None, opts: SolverOptions | None = None) -> SteadyState:
    """Propagate V(t) period by period until the period-averaged V converges."""
    opts = opts or SolverOptions(method=Method.TIME_INTEGRATION)
    p = spec.params
    D = noise_matrix(p) if D is None else np.asarray(D, dtype=float)
    V0 = vacuum_thermal_state(p) if V0 is None else np.asarray(V0, dtype=float)
    fl = _require_stable(spec)

    Phi, Q, m = _converged_propagators(spec, D, opts)
    Phi_T, Q_T = Phi[-1], Q[-1]
    P = np.kron(Phi_T, Phi_T)
    q = _vec(Q_T)
    Pbar = np.einsum("kij,klm->iljm", Phi[:-1], Phi[:-1]).reshape(DIM * DIM, DIM * DIM) / m
    qbar = Q[:-1].reshape(m, -1).mean(axis=0)

    rho = float(np.max(np.abs(np.linalg.eigvals(Phi_T)))) ** 2
    tail = rho / (1.0 - rho) if rho < 1.0 else np.inf
    v, avg, periods, converged, hist = kernels.iterate_periods(
        P, q, np.ascontiguousarray(Pbar), qbar, _vec(V0).copy(), opts.convergence_tol, tail, opts.max_periods, 16
    )
    if not converged:
        raise ConvergenceError(
            f"period average did not converge within {opts.max_periods} periods "
            f"(last relative change {hist[-1]:.3e})",
            last_change=float(hist[-1]),
        )
    V_start = _unvec(v)
    samples = np.einsum("kij,jl,kml->kim", Phi[:-1], V_start, Phi[:-1]) + Q[:-1]
    var = samples[:, IDX_XB, IDX_XB]
    return SteadyState(
        v_mean=CovarianceMatrix(_unvec(avg)),
        v_min_var_xb=float(var.min()),
        v_max_var_xb=float(var.max()),
        stable=True,
        periods_used=int(periods),
        method=Method.TIME_INTEGRATION,
        substeps=m,
        multipliers=fl.multipliers,
        history=hist[~np.isnan(hist)],
    )


# ------------------------------------------------------------------ harmonic balance


class HarmonicSolution(NamedTuple):
    coeffs: np.ndarray  # (2N+1, 8, 8) complex, index n + N
    n_harmonics: int

    def at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = np.arange(-self.n_harmonics, self.n_harmonics + 1)
        phase = np.exp(2j * np.outer(t, n))
        return np.einsum("tn,nij->tij", phase, self.coeffs).real

    def derivative_at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = np.arange(-self.n_harmonics, self.n_harmonics + 1)
        phase = 2j * n[None, :] * np.exp(2j * np.outer(t, n))
        return np.einsum("tn,nij->tij", phase, self.coeffs).real


def harmonic_coefficients(spec: DriftSpec, D, n_harmonics: int) -> HarmonicSolution:
    A0, A1 = drift_harmonics(spec)
    L0 = kernels.kron_sum(np.ascontiguousarray(A0))
    L1 = kernels.kron_sum(np.ascontiguousarray(A1))
    Lm1 = np.ascontiguousarray(L1.conj())
    d = _vec(np.asarray(D, dtype=float)).astype(complex)
    n_harm = 0 if spec.variant is Variant.RWA else n_harmonics
    x = kernels.hb_block_solve(L0, L1, Lm1, d, n_harm, float(spec.params.omega_m))
    coeffs = x.reshape(2 * n_harm + 1, DIM, DIM)
    coeffs = 0.5 * (coeffs + np.swapaxes(coeffs, 1, 2))
    # V real on reconstruction: V_{-n} = conj(V_n)
    coeffs = 0.5 * (coeffs + coeffs[::-1].conj())
    return HarmonicSolution(coeffs, n_harm)


def periodic_residual(spec: DriftSpec, D, sol: HarmonicSolution, samples: int = 64) -> float:
    """max |dV/dt - A V - V A^T - D| over a sample grid, relative to max |D|."""
    ts = spec.period * np.arange(samples) / samples
    V = sol.at(ts)
    dV = sol.derivative_at(ts)
    A = drift_stack(spec, ts)
    R = dV - (A @ V + V @ np.swapaxes(A, 1, 2) + np.asarray(D)[None])
    return float(np.max(np.abs(R))) / float(np.max(np.abs(D)))


def harmonic_balance_steady(spec: DriftSpec, D=None, opts: SolverOptions | None = None, check_stability: bool = True) -> SteadyState:
    """Periodic steady state from a truncated Fourier series in harmonics of 2 omega_m.

    Harmonics are doubled until the outermost coefficient falls below 1e-3 of
    the average and the truncation residual is below ``rel_tol * max|D|``.
    """
    opts = opts or SolverOptions()
    p = spec.params
    D = noise_matrix(p) if D is None else np.asarray(D, dtype=float)
    fl = _require_stable(spec) if check_stability else None

    _, A1 = drift_harmonics(spec)
    L1_norm = float(np.max(np.abs(A1)))
    d_scale = float(np.max(np.abs(D)))
    n = opts.harmonics
    while True:
        sol = harmonic_coefficients(spec, D, n)
        c = sol.coeffs
        if sol.n_harmonics == 0:
            break
        v0 = float(np.max(np.abs(c[sol.n_harmonics])))
        tail = max(float(np.max(np.abs(c[0]))), float(np.max(np.abs(c[-1]))))
        # omitted coupling into harmonic N + 1, bounded entrywise
        trunc = 2 * DIM * L1_norm * tail
        if tail <= HB_TAIL_RATIO * v0 and trunc <= opts.rel_tol * d_scale:
            break
        if 2 * n > opts.max_harmonics:
            raise ConvergenceError(
                f"harmonic balance truncation not converged at N={n}: "
                f"|V_N|/|V_0| = {tail / v0:.3e}; raise max_harmonics",
                last_change=tail / v0,
            )
        n *= 2

    ts = spec.period * np.arange(256) / 256
    var = sol.at(ts)[:, IDX_XB, IDX_XB]
    residual = periodic_residual(spec, D, sol)
    v_mean = CovarianceMatrix(sol.coeffs[sol.n_harmonics].real)
    return SteadyState(
        v_mean=v_mean,
        v_min_var_xb=float(min(var.min(), v_mean.var_xb)),
        v_max_var_xb=float(max(var.max(), v_mean.var_xb)),
        stable=True if fl is None else fl.stable,
        periods_used=0,
        method=Method.HARMONIC_BALANCE,
        harmonics_used=sol.n_harmonics,
        residual=residual,
        multipliers=None if fl is None else fl.multipliers,
    )


# ------------------------------------------------------------------ dispatch


def solve_steady(spec: DriftSpec, opts: SolverOptions | None = None, D=None) -> SteadyState:
    opts = opts or SolverOptions()
    D = noise_matrix(spec.params) if D is None else D
    if opts.method is Method.ALGEBRAIC_LYAPUNOV:
        if spec.variant is not Variant.RWA:
            raise ValidationError("the algebraic Lyapunov method only applies to the RWA variant", field="method")
        A = drift_matrix(spec)
        V = lyapunov_steady(A, D)
        fl = floquet_stability(spec)
        return SteadyState(
            v_mean=V,
            v_min_var_xb=V.var_xb,
            v_max_var_xb=V.var_xb,
            stable=fl.stable,
            periods_used=0,
            method=opts.method,
            residual=lyapunov_residual(A, V.matrix, D) / float(np.max(np.abs(D))),
            multipliers=fl.multipliers,
        )
    if opts.method is Method.TIME_INTEGRATION:
        return integrate_covariance(spec, D, opts=opts)
    return harmonic_balance_steady(spec, D, opts)
