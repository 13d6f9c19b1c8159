"""Drift and noise matrices of the linearized quadrature dynamics.

Quadrature ordering, used everywhere in the package:

    0: X_a   1: Y_a   2: X_b   3: Y_b   4: X_a1   5: Y_a1   6: X_a2   7: Y_a2

The full drift matrix is periodic with period pi / omega_m; it only contains
the harmonics exp(0) and exp(+-2i omega_m t).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import SystemParams

DIM = 8
IDX_XB = 2
QUADRATURES = ("X_a", "Y_a", "X_b", "Y_b", "X_a1", "Y_a1", "X_a2", "Y_a2")


class Variant(enum.Enum):
    FULL = "full"
    RWA = "rwa"


@dataclass(frozen=True)
class DriftSpec:
    params: SystemParams
    variant: Variant = Variant.FULL

    @property
    def period(self) -> float:
        return np.pi / self.params.omega_m

    @property
    def is_periodic(self) -> bool:
        return self.variant is Variant.FULL


def modulation_values(p: SystemParams, t: float) -> tuple[complex, complex, complex]:
    e = np.exp(2j * p.omega_m * t)
    f1 = -(p.g_plus + p.g_minus * e)
    f2 = -(p.g_minus + p.g_plus / e)
    f3 = -(p.g_minus + p.g_plus * e)
    return complex(f1), complex(f2), complex(f3)


def _assemble(p: SystemParams, f1: complex, f2: complex, f3: complex) -> np.ndarray:
    f12p, f12m = f1 + f2, f1 - f2
    f13p, f13m = f1 + f3, f1 - f3
    A = np.zeros((DIM, DIM))
    A[0, 0] = A[1, 1] = -0.5 * p.kappa
    A[2, 2] = A[3, 3] = -0.5 * p.gamma_m
    A[4, 4] = A[5, 5] = -0.5 * p.gamma_1
    A[6, 6] = A[7, 7] = -0.5 * p.gamma_2

    # cavity <- mechanics
    A[0, 2] = -f12p.imag
    A[0, 3] = f12m.real
    A[1, 2] = f12p.real
    A[1, 3] = f12m.imag
    # mechanics <- cavity
    A[2, 0] = -f13p.imag
    A[2, 1] = f13m.real
    A[3, 0] = f13p.real
    A[3, 1] = f13m.imag

    # cavity <-> ensembles
    A[0, 5], A[0, 7] = p.g_a1, p.g_a2
    A[1, 4], A[1, 6] = -p.g_a1, -p.g_a2
    A[4, 1], A[5, 0] = p.g_a1, -p.g_a1
    A[6, 1], A[7, 0] = p.g_a2, -p.g_a2

    # ensemble detuning rotations
    A[4, 5], A[5, 4] = p.delta_1, -p.delta_1
    A[6, 7], A[7, 6] = p.delta_2, -p.delta_2
    return A


def drift_matrix(spec: DriftSpec, t: float = 0.0) -> np.ndarray:
    """Real 8x8 drift matrix at time ``t`` (``t`` is ignored for the RWA variant)."""
    p = spec.params
    if spec.variant is Variant.RWA:
        return _assemble(p, complex(-p.g_plus), complex(-p.g_minus), complex(-p.g_minus))
    return _assemble(p, *modulation_values(p, t))


def drift_harmonics(spec: DriftSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (A0, A1) with A(t) = A0 + A1 e^{2i w t} + conj(A1) e^{-2i w t}.

    Computed from four samples per period, which is exact because A(t) only
    carries harmonics 0 and +-1 of 2 omega_m.
    """
    if spec.variant is Variant.RWA:
        return drift_matrix(spec), np.zeros((DIM, DIM), dtype=complex)
    n = 4
    ts = spec.period * np.arange(n) / n
    samples = np.array([drift_matrix(spec, t) for t in ts])
    coeffs = np.fft.fft(samples, axis=0) / n
    return coeffs[0].real.copy(), coeffs[1]


def drift_stack(spec: DriftSpec, ts) -> np.ndarray:
    """Drift matrices at many times, shape (len(ts), 8, 8)."""
    ts = np.asarray(ts, dtype=float)
    if spec.variant is Variant.RWA:
        return np.broadcast_to(drift_matrix(spec), (len(ts), DIM, DIM)).copy()
    A0, A1 = drift_harmonics(spec)
    e = np.exp(2j * spec.params.omega_m * ts)[:, None, None]
    return A0[None] + 2.0 * (A1[None] * e).real


def noise_matrix(p: SystemParams) -> np.ndarray:
    mech = 0.5 * p.gamma_m * (2.0 * p.n_th + 1.0)
    return np.diag(
        [
            0.5 * p.kappa,
            0.5 * p.kappa,
            mech,
            mech,
            0.5 * p.gamma_1,
            0.5 * p.gamma_1,
            0.5 * p.gamma_2,
            0.5 * p.gamma_2,
        ]
    )


def vacuum_thermal_state(p: SystemParams) -> np.ndarray:
    """Pre-drive covariance: vacuum cavity and ensembles, thermal mechanics."""
    v = np.full(DIM, 0.5)
    v[2] = v[3] = p.n_th + 0.5
    return np.diag(v)
