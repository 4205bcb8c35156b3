"""Compare the compiled kernel path against the pure-numpy fallback.

The dispatch between the two paths is decided once, when fdcrn.kernels is
imported, from the FDCRN_NUMBA environment variable.  A single process can
therefore only ever time one path.  This script runs itself twice as a
child process, once per setting, and the parent merges the two sets of
timings into a table.

Usage:
    python3 benchmarks/bench_kernels.py [--grid-n 200] [--solves 40]
"""

import argparse
import os
import subprocess
import sys
import time


def time_loop(fn, reps):
    # one untimed call absorbs jit compilation and cache warmup
    fn()
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def run_child(args):
    import numpy as np

    from fdcrn import kernels
    from fdcrn.model import Mechanism, SystemParams, gen_channels
    from fdcrn.optimizer import Scenario, SolverConfig, alternating_optimize

    print(f"path={'numba' if kernels.NUMBA_ENABLED else 'numpy'}",
          flush=True)

    ch = gen_channels(seed=0, k=4)
    params = SystemParams(zeta=0.001, i_bar_p=4.0)
    g_sr, g_rd, g_rp, g_rr = ch.gains(0)
    g_sp = abs(ch.h_sp) ** 2
    n = args.grid_n

    def nc_scan():
        kernels.grid_scan_noncoherent(
            0.0, params.p_s_max, 0.0, params.p_rk_max, n,
            g_sr, g_rd, g_rr, g_sp, g_rp,
            params.zeta, params.sigma2_rk, params.sigma2_d, params.i_bar_p)

    def coh_scan():
        kernels.grid_scan_coherent(
            0.0, params.p_s_max ** 0.5, 0.0, params.p_rk_max ** 0.5, n,
            ch.h_sp, ch.h_rp[0], ch.h_sr[0], ch.h_rr[0],
            g_sr, g_rd, g_rr,
            params.zeta, params.sigma2_rk, params.sigma2_d, params.i_bar_p)

    def golden_batch():
        for hi in np.linspace(1.0, params.p_rk_max, 200):
            kernels.golden_max_slice(
                0.0, hi, False, False, True, 10.0,
                g_sr, g_rd, g_rr, params.zeta,
                params.sigma2_rk, params.sigma2_d, 1e-8)

    scenarios = []
    for seed in range(args.solves):
        c = gen_channels(seed=seed, k=4)
        for mech in (Mechanism.NONCOHERENT, Mechanism.COHERENT):
            scenarios.append(Scenario(c, params, mech))
    cfg = SolverConfig()

    def solve_batch():
        for sc in scenarios:
            alternating_optimize(sc, 0, cfg)

    for name, fn, reps in (
        (f"grid_scan_noncoherent[{n}x{n}]", nc_scan, args.reps),
        (f"grid_scan_coherent[{n}x{n}]", coh_scan, args.reps),
        ("golden_max_slice[200 slices]", golden_batch, args.reps),
        (f"alternating_optimize[{len(scenarios)} solves]", solve_batch, 3),
    ):
        per = time_loop(fn, reps)
        print(f"bench\t{name}\t{per:.6e}", flush=True)


def spawn(flag, argv):
    env = dict(os.environ, FDCRN_NUMBA=flag)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--child"] + argv,
        env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(f"child run with FDCRN_NUMBA={flag} failed")
    times = {}
    for line in proc.stdout.splitlines():
        if line.startswith("bench\t"):
            _, name, per = line.split("\t")
            times[name] = float(per)
    return times


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    ap.add_argument("--grid-n", type=int, default=200)
    ap.add_argument("--reps", type=int, default=10,
                    help="timed repetitions per kernel benchmark")
    ap.add_argument("--solves", type=int, default=40,
                    help="random channel draws in the solver batch")
    args = ap.parse_args()

    if args.child:
        run_child(args)
        return

    argv = ["--grid-n", str(args.grid_n), "--reps", str(args.reps),
            "--solves", str(args.solves)]
    print("timing pure-numpy fallback (FDCRN_NUMBA=0) ...")
    numpy_t = spawn("0", argv)
    print("timing compiled path (FDCRN_NUMBA=1) ...")
    numba_t = spawn("1", argv)

    width = max(len(k) for k in numpy_t)
    print()
    print(f"{'benchmark':<{width}}  {'numpy':>12}  {'numba':>12}  "
          f"{'speedup':>8}")
    for name in numpy_t:
        a = numpy_t[name]
        b = numba_t.get(name)
        if b is None:
            continue
        print(f"{name:<{width}}  {a * 1e3:>10.3f}ms  {b * 1e3:>10.3f}ms  "
              f"{a / b:>7.1f}x")


if __name__ == "__main__":
    main()
