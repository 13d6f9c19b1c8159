"""Physical parameters, classical mean-field amplitudes and Bogoliubov diagnostics.

Every frequency and rate is expressed in units of the mechanical frequency,
so ``omega_m`` is pinned to 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InstabilityError, SingularityError, ValidationError

SINGULARITY_FLOOR = 1e-12
PHASE_WARN_RAD = 1e-3


@dataclass(frozen=True)
class SystemParams:
    kappa: float
    g_minus: float
    g_plus: float = 0.0
    gamma_m: float = 0.0
    gamma_1: float = 0.0
    gamma_2: float = 0.0
    g_a1: float = 0.0
    g_a2: float = 0.0
    delta_1: float = 0.0
    delta_2: float = 0.0
    n_th: float = 0.0
    omega_m: float = 1.0

    @property
    def ratio(self) -> float:
        """G+/G-, or 0 when the mechanics is decoupled."""
        return self.g_plus / self.g_minus if self.g_minus > 0 else 0.0

    def with_ratio(self, ratio: float) -> "SystemParams":
        return replace(self, g_plus=ratio * self.g_minus)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class MeanField(NamedTuple):
    alpha_plus: complex
    alpha_minus: complex
    # xi[j, s]: ensemble j (0, 1), sideband s (0 -> upper, 1 -> lower)
    xi: np.ndarray


class BogoliubovParams(NamedTuple):
    r: float
    g_eff: float


class EffectiveCouplings(NamedTuple):
    g_plus: float
    g_minus: float
    relative_phase: float


class ClassicalTrajectory(NamedTuple):
    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_1: np.ndarray
    alpha_2: np.ndarray


def validate_params(p: SystemParams) -> SystemParams:
    """Return ``p`` unchanged, or raise ValidationError listing every violated bound."""
    problems = []
    for f in fields(p):
        value = getattr(p, f.name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append((f.name, f"{f.name} must be a finite number, got {value!r}"))
    if problems:
        raise ValidationError("; ".join(m for _, m in problems), field=problems[0][0])

    if p.omega_m != 1.0:
        problems.append(("omega_m", "omega_m is the frequency unit and must equal 1"))
    if p.kappa <= 0:
        problems.append(("kappa", f"kappa must be > 0, got {p.kappa}"))
    for name in ("gamma_m", "gamma_1", "gamma_2"):
        if getattr(p, name) < 0:
            problems.append((name, f"{name} must be >= 0, got {getattr(p, name)}"))
    if p.n_th < 0:
        problems.append(("n_th", f"negative thermal occupation: n_th must be >= 0, got {p.n_th}"))
    for name in ("g_minus", "g_plus"):
        if getattr(p, name) < 0:
            problems.append((name, f"{name} must be >= 0, got {getattr(p, name)}"))
    decoupled = p.g_minus == 0 and p.g_plus == 0
    if not decoupled and p.g_plus >= p.g_minus:
        problems.append(
            (
                "g_plus",
                f"Bogoliubov-unstable configuration: need g_minus > g_plus, "
                f"got g_minus={p.g_minus}, g_plus={p.g_plus}",
            )
        )
    if problems:
        raise ValidationError("; ".join(m for _, m in problems), field=problems[0][0])
    return p


def _self_energies(p: SystemParams, floor: float) -> np.ndarray:
    xi = np.zeros((2, 2), dtype=complex)
    for j, (g_a, delta, gamma) in enumerate(
        ((p.g_a1, p.delta_1, p.gamma_1), (p.g_a2, p.delta_2, p.gamma_2))
    ):
        if g_a == 0:
            continue
        for s, sign in enumerate((1.0, -1.0)):
            denom = sign * p.omega_m - delta + 0.5j * gamma
            if abs(denom) < floor:
                raise SingularityError(
                    f"near-singular self-energy denominator for ensemble {j + 1} "
                    f"({'+' if sign > 0 else '-'} tone): |denominator| = {abs(denom):.3e}"
                )
            xi[j, s] = g_a**2 / denom
    return xi


def mean_field(omega_plus_drive, omega_minus_drive, p: SystemParams, floor=SINGULARITY_FLOOR) -> MeanField:
    """Two-tone classical cavity amplitudes and atomic self-energies.

    Uses the closed form alpha'_s = Omega_s / (s + kappa/2 - xi_1s - xi_2s)
    with xi_js = G_Aj^2 / (s - Delta_j + i gamma_j / 2), s = +1 or -1.
    See :func:`steady_tone_amplitudes` for the exact linear response of the
    classical equations, which places ``kappa/2`` on the imaginary axis.
    """
    xi = _self_energies(p, floor)
    alphas = []
    for s, (sign, drive) in enumerate(((1.0, omega_plus_drive), (-1.0, omega_minus_drive))):
        denom = sign * p.omega_m + 0.5 * p.kappa - xi[0, s] - xi[1, s]
        if abs(denom) < floor:
            raise SingularityError(
                f"near-singular mean-field denominator ({'+' if sign > 0 else '-'} tone): "
                f"|denominator| = {abs(denom):.3e}"
            )
        alphas.append(complex(drive) / denom)
    xi.setflags(write=False)
    return MeanField(alphas[0], alphas[1], xi)


def steady_tone_amplitudes(drives, p: SystemParams, floor=SINGULARITY_FLOOR) -> tuple[complex, complex]:
    """Exact steady tone amplitudes of the linear (g = 0) classical equations."""
    xi = _self_energies(p, floor)
    out = []
    for s, sign in enumerate((1.0, -1.0)):
        denom = sign * p.omega_m + 0.5j * p.kappa - xi[0, s] - xi[1, s]
        if abs(denom) < floor:
            raise SingularityError(f"near-singular linear-response denominator: {abs(denom):.3e}")
        out.append(complex(drives[s]) / denom)
    return out[0], out[1]


def effective_couplings(g_single_photon: float, mf: MeanField) -> EffectiveCouplings:
    """G_+- = |g alpha'_+-| after removing the common phase.

    The residual relative phase arg(alpha'_+ / alpha'_-) is returned and a
    warning is emitted when it exceeds 1e-3 rad, because the effective model
    treats both couplings as real.
    """
    a_p = g_single_photon * mf.alpha_plus
    a_m = g_single_photon * mf.alpha_minus
    phase = 0.0
    if a_p != 0 and a_m != 0:
        phase = float(np.angle(a_p / a_m))
    if abs(phase) > PHASE_WARN_RAD:
        warnings.warn(
            f"relative phase between alpha'_+ and alpha'_- is {phase:.3e} rad; "
            "it is dropped when the couplings are taken real",
            RuntimeWarning,
            stacklevel=2,
        )
    return EffectiveCouplings(abs(a_p), abs(a_m), phase)


def params_from_drives(base: SystemParams, g_single_photon: float, drive_plus, drive_minus) -> SystemParams:
    """Physical input mode: derive (g_plus, g_minus) from g and the drive amplitudes."""
    mf = mean_field(drive_plus, drive_minus, base)
    eff = effective_couplings(g_single_photon, mf)
    return replace(base, g_plus=eff.g_plus, g_minus=eff.g_minus)


def bogoliubov(p: SystemParams) -> BogoliubovParams:
    if not p.g_minus > p.g_plus:
        raise ValidationError(
            f"Bogoliubov-unstable configuration: need g_minus > g_plus, got "
            f"g_minus={p.g_minus}, g_plus={p.g_plus}",
            field="g_plus",
        )
    gm, gp = p.g_minus, p.g_plus
    # artanh(x) = ln((1 + x) / (1 - x)) / 2
    r = float(np.arctanh(gp / gm))
    g_eff = math.sqrt((gm - gp) * (gm + gp))
    return BogoliubovParams(r, g_eff)


def _classical_rhs(p: SystemParams, drives, g):
    om_p, om_m = complex(drives[0]), complex(drives[1])
    w = p.omega_m

    def rhs(t, y):
        a = y[0] + 1j * y[1]
        b = y[2] + 1j * y[3]
        a1 = y[4] + 1j * y[5]
        a2 = y[6] + 1j * y[7]
        drive = om_p * np.exp(-1j * w * t) + om_m * np.exp(1j * w * t)
        da = -0.5 * p.kappa * a - 1j * g * a * (2 * b.real) - 1j * (p.g_a1 * a1 + p.g_a2 * a2) - 1j * drive
        db = -(1j * w + 0.5 * p.gamma_m) * b - 1j * g * abs(a) ** 2
        da1 = -(1j * p.delta_1 + 0.5 * p.gamma_1) * a1 - 1j * p.g_a1 * a
        da2 = -(1j * p.delta_2 + 0.5 * p.gamma_2) * a2 - 1j * p.g_a2 * a
        return [da.real, da.imag, db.real, db.imag, da1.real, da1.imag, da2.real, da2.imag]

    return rhs


def classical_mean_field_ode(
    p: SystemParams,
    drives,
    t_final: float,
    g_single_photon: float = 0.0,
    initial=(0, 0, 0, 0),
    t_eval=None,
    divergence_bound: float = 1e12,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ClassicalTrajectory:
    """Integrate the nonlinear classical equations in the frame rotating at the cavity frequency.

    The cavity and atomic amplitudes returned are ``alpha * exp(i w_c t)``; in
    this frame the two drives sit at -omega_m (upper tone) and +omega_m
    (lower tone).  ``initial`` is (alpha, beta, alpha_1, alpha_2).
    """
    if not t_final > 0:
        raise ValidationError(f"t_final must be > 0, got {t_final}", field="t_final")
    y0 = []
    for z in initial:
        z = complex(z)
        y0 += [z.real, z.imag]

    def diverged(t, y):
        return divergence_bound - math.hypot(y[0], y[1])

    diverged.terminal = True

    sol = solve_ivp(
        _classical_rhs(p, drives, g_single_photon),
        (0.0, t_final),
        y0,
        method="Radau",
        t_eval=t_eval,
        events=diverged,
        rtol=rtol,
        atol=atol,
        first_step=min(0.05 / p.kappa, 0.05),
    )
    if sol.status == 1:
        raise InstabilityError(
            f"classical instability: |alpha| exceeded {divergence_bound:g} at t = {sol.t_events[0][0]:.6g}"
        )
    if not sol.success:
        raise RuntimeError(f"classical integration failed: {sol.message}")
    y = sol.y
    return ClassicalTrajectory(
        sol.t, y[0] + 1j * y[1], y[2] + 1j * y[3], y[4] + 1j * y[5], y[6] + 1j * y[7]
    )


def tone_amplitudes(t: np.ndarray, alpha: np.ndarray, omega_m: float = 1.0) -> tuple[complex, complex]:
    """Fourier components of a settled trajectory at the upper and lower drive tones.

    ``t`` must be uniform and span a whole number of mechanical periods
    (endpoint excluded).  Returns (alpha'_+, alpha'_-), matching the
    convention alpha(t) = alpha'_+ e^{-i w_m t} + alpha'_- e^{+i w_m t}.
    """
    n = len(t)
    span = (t[-1] - t[0]) * n / (n - 1)
    cycles = span * omega_m / (2 * np.pi)
    k = int(round(cycles))
    if k < 1 or abs(cycles - k) > 1e-6 * max(1, k):
        raise ValueError("samples must cover an integer number of mechanical periods")
    spec = np.fft.fft(alpha) / n
    phase0 = np.exp(1j * omega_m * t[0])
    # e^{-i w t} lives in bin -k, e^{+i w t} in bin +k
    return complex(spec[-k] * phase0), complex(spec[k] / phase0)
