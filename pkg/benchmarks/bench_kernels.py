"""Compare the numba kernels with their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Kernel timings run both variants in one process on inputs taken from a
fig2 reference operating point.  The end-to-end section runs a harmonic-balance
point and a time-integration point in subprocesses with
HYBRIDSQUEEZE_NUMBA set to 1 and 0, so the backend is chosen at import time
exactly as a user would choose it.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from hybridsqueeze import kernels
from hybridsqueeze._accel import HAVE_NUMBA
from hybridsqueeze.analysis import fig2_params
from hybridsqueeze.dynamics import DriftSpec, drift_harmonics, noise_matrix
from hybridsqueeze.solver import _magnus_exponents, period_propagators
from scipy.linalg import expm

END_TO_END = """
import json, time
from hybridsqueeze import kernels
from hybridsqueeze.analysis import fig2_params
from hybridsqueeze.dynamics import DriftSpec
from hybridsqueeze.solver import SolverOptions, harmonic_balance_steady, integrate_covariance
spec = DriftSpec(fig2_params(0.001, 0.92))
harmonic_balance_steady(spec)  # warm-up (and numba compile / cache load)
t = time.perf_counter(); harmonic_balance_steady(spec); hb = time.perf_counter() - t
t = time.perf_counter(); ss = integrate_covariance(spec, opts=SolverOptions(method="time-integration")); ti = time.perf_counter() - t
print(json.dumps({"backend": kernels.BACKEND, "hb": hb, "ti": ti, "periods": ss.periods_used}))
"""


def _inputs():
    spec = DriftSpec(fig2_params(0.001, 0.92))
    D = noise_matrix(spec.params)
    A0, A1 = drift_harmonics(spec)
    L0 = kernels.kron_sum_np(A0)
    L1 = kernels.kron_sum_np(A1)
    d = D.ravel().astype(complex)
    omega, _, _, _ = _magnus_exponents(spec, 1024)
    S = expm(omega)
    C = np.zeros_like(S)
    Phi, Q = period_propagators(spec, D, 256)
    P = np.kron(Phi[-1], Phi[-1])
    q = Q[-1].ravel()
    Pbar = np.einsum("kij,klm->iljm", Phi[:-1], Phi[:-1]).reshape(64, 64) / 256
    qbar = Q[:-1].reshape(256, -1).mean(axis=0)
    v0 = np.eye(8).ravel() * 0.5
    return dict(
        kron_sum=((A0,), ("kron_sum_nb", "kron_sum_np")),
        hb_block_solve=((L0, L1, L1.conj().copy(), d, 12, 1.0), ("hb_block_solve_nb", "hb_block_solve_np")),
        accumulate_propagators=((S, C), ("accumulate_propagators_nb", "accumulate_propagators_np")),
        iterate_periods=(
            (P, q, np.ascontiguousarray(Pbar), qbar, v0, 1e-300, 1.0, 20000, 16),
            ("iterate_periods_nb", "iterate_periods_np"),
        ),
    )


def bench_kernels(repeat: int):
    rows = []
    for name, (args, (nb_name, np_name)) in _inputs().items():
        row = {"kernel": name}
        for label, attr in (("numba", nb_name), ("numpy", np_name)):
            if label == "numba" and not HAVE_NUMBA:
                row[label] = float("nan")
                continue
            fn = getattr(kernels, attr)
            fn(*args)  # compile or warm caches
            row[label] = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        rows.append(row)
    return rows


def bench_end_to_end():
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, HYBRIDSQUEEZE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        out[res["backend"]] = res
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for r in bench_kernels(args.repeat):
        print(f"{r['kernel']:<24}{1e3 * r['numba']:>12.3f}{1e3 * r['numpy']:>12.3f}{r['numpy'] / r['numba']:>9.1f}x")

    if args.skip_end_to_end:
        return
    e2e = bench_end_to_end()
    print()
    print(f"{'solve (fig2 point)':<24}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for key, label in (("hb", "harmonic balance"), ("ti", "time integration")):
        a = e2e.get("numba", {}).get(key, float("nan"))
        b = e2e["numpy"][key]
        print(f"{label:<24}{a:>12.3f}{b:>12.3f}{b / a:>9.1f}x")
    print(f"(time integration ran {e2e['numpy']['periods']} periods)")


if __name__ == "__main__":
    main()
