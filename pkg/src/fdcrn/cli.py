"""Command-line surface: experiment sweeps and numerical claim checks.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 a numerical
invariant failed.
"""

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from .harness import (
    ConfigError,
    emit_plot_script,
    load_config,
    run_experiment,
    run_fixed_power_sweep,
)
from .model import (
    CoherentComponents,
    Mechanism,
    SystemParams,
    db_to_linear,
    gen_channels,
    interference_coherent_raw,
    optimal_phase,
)
from .optimizer import (
    InvariantViolation,
    Scenario,
    verify_coordinate_concavity,
)

_DEFAULT_ZETAS = (0.0, 0.001, 0.01, 0.4)


def _add_run_flags(sub):
    sub.add_argument("--config", required=True, metavar="PATH")
    sub.add_argument("--out", required=True, metavar="PATH")
    sub.add_argument("--deterministic", action="store_true",
                     help="suppress the timestamp comment for "
                          "byte-identical reruns")
    sub.add_argument("--oracle", action="store_true",
                     help="also run the grid oracle per cell")
    sub.add_argument("--jobs", type=int, default=None, metavar="N",
                     help="worker processes (default: FDCRN_JOBS or 1)")
    sub.add_argument("--plot-script", default=None, metavar="PATH",
                     help="also emit a plotting script for the CSV")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdcrn",
        description="Seeded experiments for full-duplex underlay relay "
                    "networks: power control, relay selection, and "
                    "numerical checks of the solver's structural claims.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte-Carlo cell-grid experiment")
    _add_run_flags(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    fixed = sub.add_parser("fixed-power",
                           help="rate-vs-power curves with one power pinned")
    _add_run_flags(fixed)
    fixed.set_defaults(func=_cmd_fixed_power)

    lemmas = sub.add_parser(
        "verify-lemmas",
        help="curvature audit: concave slices, nonconcave joint surface")
    lemmas.add_argument("--config", default=None, metavar="PATH",
                        help="reuse k/zeta_list/i_bar_p_db_list from a "
                             "config file")
    lemmas.add_argument("--scenarios", type=int, default=100,
                        help="scenarios per mechanism (default 100)")
    lemmas.add_argument("--seed", type=int, default=0)
    lemmas.add_argument("--slices", type=int, default=100)
    lemmas.add_argument("--points", type=int, default=50)
    lemmas.add_argument("--segments", type=int, default=1000)
    lemmas.set_defaults(func=_cmd_verify_lemmas)

    phase = sub.add_parser(
        "phase-check",
        help="dense-grid check of the closed-form interference phase")
    phase.add_argument("--count", type=int, default=1000,
                       help="random component draws (default 1000)")
    phase.add_argument("--grid-points", type=int, default=10_000)
    phase.add_argument("--seed", type=int, default=0)
    phase.set_defaults(func=_cmd_phase_check)

    return parser


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.oracle:
        config = replace(config, oracle=True)
    summary = run_experiment(config, args.out,
                             deterministic=args.deterministic,
                             jobs=args.jobs)
    print(summary)
    if args.plot_script:
        emit_plot_script(args.out, args.plot_script)
    return 0


def _cmd_fixed_power(args) -> int:
    config = load_config(args.config)
    if args.oracle:
        config = replace(config, oracle=True)
    summary = run_fixed_power_sweep(config, args.out,
                                    deterministic=args.deterministic,
                                    jobs=args.jobs)
    print(summary)
    if args.plot_script:
        emit_plot_script(args.out, args.plot_script)
    return 0


def _cmd_verify_lemmas(args) -> int:
    zetas = _DEFAULT_ZETAS
    n_relays = 1
    cap_db = 6.0
    if args.config:
        config = load_config(args.config)
        zetas, n_relays = config.zeta_list, config.k
        cap_db = config.i_bar_p_db_list[0]
    ok = True
    for mech in (Mechanism.NONCOHERENT, Mechanism.COHERENT):
        slice_checks = slice_violations = 0
        pos = pos_witnesses = ideal = ideal_joint = 0
        for i in range(args.scenarios):
            zeta = zetas[i % len(zetas)]
            params = SystemParams(zeta=zeta, i_bar_p=db_to_linear(cap_db))
            sc = Scenario(gen_channels(args.seed + i, n_relays), params,
                          mech)
            rep = verify_coordinate_concavity(
                sc, i % n_relays, n_slices=args.slices,
                n_points=args.points, n_segments=args.segments,
                seed=args.seed + i)
            slice_checks += rep.slice_checks
            slice_violations += rep.slice_violations
            if rep.zeta_hat > 0.0:
                pos += 1
                pos_witnesses += int(rep.joint_violations > 0)
            else:
                ideal += 1
                ideal_joint += rep.joint_violations
        mech_ok = (slice_violations == 0
                   and (pos == 0 or pos_witnesses >= 1)
                   and ideal_joint == 0)
        ok = ok and mech_ok
        print(f"mechanism={mech.value} scenarios={args.scenarios} "
              f"slice_checks={slice_checks} "
              f"slice_violations={slice_violations} "
              f"residual_si_scenarios={pos} "
              f"joint_witnesses={pos_witnesses} "
              f"ideal_scenarios={ideal} "
              f"ideal_joint_violations={ideal_joint} "
              f"{'PASS' if mech_ok else 'FAIL'}")
    if not ok:
        print("curvature audit failed", file=sys.stderr)
        return 3
    return 0


def _cmd_phase_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    phis = np.linspace(0.0, 2.0 * math.pi, args.grid_points)
    worst_floor = -math.inf
    worst_match = 0.0
    failures = 0
    for _ in range(args.count):
        sa, sb = 10.0 ** rng.uniform(-1.0, 1.0, size=2)
        a = complex(rng.normal(), rng.normal()) * sa
        b = complex(rng.normal(), rng.normal()) * sb
        comp = CoherentComponents(a=a, b=b,
                                  phi_a=math.atan2(a.imag, a.real),
                                  phi_b=math.atan2(b.imag, b.real))
        phi_opt, icoh = optimal_phase(comp)
        scale = (abs(a) + abs(b)) ** 2
        grid_min = float(np.min(np.abs(a + b * np.exp(-1j * phis)) ** 2))
        # the closed form must lower-bound the dense grid
        floor_gap = (icoh - grid_min) / scale
        worst_floor = max(worst_floor, floor_gap)
        raw = interference_coherent_raw(comp, phi_opt)
        match_err = abs(raw - icoh)
        worst_match = max(worst_match, match_err / max(icoh, 1e-300))
        if floor_gap > 1e-6 or match_err > 1e-9 * icoh + 1e-12 * scale:
            failures += 1
    print(f"draws={args.count} grid_points={args.grid_points} "
          f"failures={failures} worst_floor_gap={worst_floor:.3e} "
          f"worst_phase_match_rel={worst_match:.3e}")
    if failures:
        print("phase optimality check failed", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; that code is reserved for
        # I/O errors here
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
