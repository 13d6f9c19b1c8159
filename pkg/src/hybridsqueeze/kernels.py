"""Hot numeric loops.

Each kernel exists in a numba-compiled form (``*_nb``) and a numpy form
(``*_np``).  The unsuffixed name is whichever backend ``_accel.USE_NUMBA``
selected at import time.  Vectors use row-major ``vec``: vec(V)[8*i + j] = V[i, j],
so that vec(A V + V A^T) = (A (x) I + I (x) A) vec(V).
"""

import numpy as np

from ._accel import USE_NUMBA, njit

BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- kron sum


def kron_sum_np(A):
    n = A.shape[0]
    eye = np.eye(n, dtype=A.dtype)
    return np.kron(A, eye) + np.kron(eye, A)


def _kron_sum_loops(A):
    n = A.shape[0]
    L = np.zeros((n * n, n * n), dtype=A.dtype)
    for i in range(n):
        for j in range(n):
            row = i * n + j
            for k in range(n):
                L[row, k * n + j] += A[i, k]
                L[row, i * n + k] += A[j, k]
    return L


# ---------------------------------------------------------------- harmonic balance


def _hb_block_solve(L0, L1, Lm1, d, n_harm, omega):
    """Block-tridiagonal elimination for the Fourier coefficients of V(t).

    Row n (n = -N..N) reads
        (L0 - 2 i n omega) v_n + L1 v_{n-1} + Lm1 v_{n+1} = -d delta_{n0}.
    """
    m = L0.shape[0]
    k = 2 * n_harm + 1
    eye = np.eye(m, dtype=np.complex128)
    G = np.zeros((k, m, m), dtype=np.complex128)
    g = np.zeros((k, m), dtype=np.complex128)
    out = np.zeros((k, m), dtype=np.complex128)
    L0c = L0.astype(np.complex128)
    for i in range(k):
        n = i - n_harm
        B = L0c - (2j * n * omega) * eye
        r = np.zeros(m, dtype=np.complex128)
        if n == 0:
            r[:] = -d
        if i > 0:
            B = B - L1 @ G[i - 1]
            r = r - L1 @ g[i - 1]
        rhs = np.zeros((m, m + 1), dtype=np.complex128)
        rhs[:, :m] = Lm1
        rhs[:, m] = r
        sol = np.linalg.solve(B, rhs)
        G[i] = sol[:, :m]
        g[i] = sol[:, m]
    out[k - 1] = g[k - 1]
    for i in range(k - 2, -1, -1):
        out[i] = g[i] - G[i] @ out[i + 1]
    return out


# ---------------------------------------------------------------- propagator chains


def _accumulate_propagators(S, C):
    """Chain one-step maps V -> S_k V S_k^T + C_k from V = 0 and Phi = I.

    Returns Phi_k, Q_k for k = 0..M, with Phi_0 = I and Q_0 = 0.
    """
    M = S.shape[0]
    n = S.shape[1]
    Phi = np.zeros((M + 1, n, n))
    Q = np.zeros((M + 1, n, n))
    for i in range(n):
        Phi[0, i, i] = 1.0
    for k in range(M):
        Phi[k + 1] = S[k] @ Phi[k]
        Q[k + 1] = S[k] @ Q[k] @ S[k].T + C[k]
        Q[k + 1] = 0.5 * (Q[k + 1] + Q[k + 1].T)
    return Phi, Q


# ---------------------------------------------------------------- period iteration


def _iterate_periods(P, q, Pbar, qbar, v0, tol, tail_factor, max_periods, n_hist):
    """Advance vec(V) period by period until the period average settles.

    ``P, q`` is the one-period affine map of vec(V); ``Pbar, qbar`` maps the
    state at the start of a period to the average over that period.
    Converged when the relative change of the average drops below ``tol``
    and the geometric tail estimate ``change * tail_factor`` does too.

    Returns (v, avg, periods, converged, history) with the last ``n_hist``
    relative changes in chronological order (NaN-padded).
    """
    v = v0.copy()
    avg = Pbar @ v + qbar
    hist = np.full(n_hist, np.nan)
    converged = False
    periods = 0
    for it in range(max_periods):
        v = P @ v + q
        new_avg = Pbar @ v + qbar
        scale = np.max(np.abs(new_avg))
        if scale == 0.0:
            scale = 1.0
        change = np.max(np.abs(new_avg - avg)) / scale
        avg = new_avg
        periods = it + 1
        for j in range(n_hist - 1):
            hist[j] = hist[j + 1]
        hist[n_hist - 1] = change
        if change < tol and change * tail_factor < tol:
            converged = True
            break
    return v, avg, periods, converged, hist


# ---------------------------------------------------------------- backend selection

kron_sum_nb = njit(_kron_sum_loops)
hb_block_solve_nb = njit(_hb_block_solve)
accumulate_propagators_nb = njit(_accumulate_propagators)
iterate_periods_nb = njit(_iterate_periods)

hb_block_solve_np = _hb_block_solve
accumulate_propagators_np = _accumulate_propagators
iterate_periods_np = _iterate_periods

if USE_NUMBA:
    kron_sum = kron_sum_nb
    hb_block_solve = hb_block_solve_nb
    accumulate_propagators = accumulate_propagators_nb
    iterate_periods = iterate_periods_nb
else:
    kron_sum = kron_sum_np
    hb_block_solve = hb_block_solve_np
    accumulate_propagators = accumulate_propagators_np
    iterate_periods = iterate_periods_np
