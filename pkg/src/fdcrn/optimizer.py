"""Power-control solvers for a single candidate relay.

The joint rate surface is nonconvex once residual self-interference is in
play, but each coordinate slice is a well-behaved 1-D problem (monotone in
the source power, rising-then-falling in the relay power), so the
workhorse is alternating golden-section solves over the feasible slice
intervals, plus a budget-reallocation step that slides the pair along the
tight interference cap, where single-coordinate moves stall.  The coherent
mechanism optimizes in amplitude coordinates (u, v) = (sqrt(P_S),
sqrt(P_Rk)); the non-coherent one directly in powers.

`brute_force` is the reference oracle: an exhaustive feasible grid over the
power box with local refinement, always scoring the exact rate.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .model import (
    ChannelSet,
    Mechanism,
    PowerAllocation,
    SystemParams,
    coherent_components,
    exact_rate,
    optimal_phase,
    residual_si,
)

VAR_PS = "p_s"
VAR_PRK = "p_rk"

# numerical slack on the interference cap for returned solutions
CAP_SLACK_REL = 1e-8

_ENVELOPE_COARSE = 33
_SLICE_SCAN = 96
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class InvariantViolation(RuntimeError):
    """A structural assumption failed (e.g. split feasible interval)."""


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-6
    max_iters: int = 100
    golden_tol: float = 1e-8
    bisect_tol: float = 1e-10
    grid_n: int = 200
    refine_rounds: int = 2

    def __post_init__(self):
        if self.rel_tol <= 0 or self.golden_tol <= 0 or self.bisect_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    channels: ChannelSet
    params: SystemParams
    mechanism: Mechanism

    def __post_init__(self):
        if self.mechanism not in (Mechanism.NONCOHERENT, Mechanism.COHERENT):
            raise ValueError("scenario mechanism must be noncoherent or "
                             "coherent")


@dataclass(frozen=True)
class RelaySolution:
    relay_index: int
    p_s: float
    p_rk: float
    phi_opt: Optional[float]
    rate: float
    interference: float
    iterations: int
    converged: bool
    objective_trace: Optional[tuple] = None


@dataclass(frozen=True)
class ConcavityReport:
    """Numerical curvature audit of the per-relay objective."""

    mechanism: Mechanism
    zeta_hat: float
    uses_exact: bool
    slice_checks: int
    slice_violations: int
    max_slice_second_diff: float
    segment_checks: int
    joint_violations: int
    max_joint_violation: float


def _check_var(label: str, value: str):
    if value not in (VAR_PS, VAR_PRK):
        raise ValueError(f"{label} must be {VAR_PS!r} or {VAR_PRK!r}")


def _other(var: str) -> str:
    return VAR_PRK if var == VAR_PS else VAR_PS


def _relay_gains(scenario: Scenario, k: int):
    ch = scenario.channels
    g_sr, g_rd, g_rp, g_rr = ch.gains(k)
    g_sp = abs(ch.h_sp) ** 2
    return g_sr, g_rd, g_rp, g_rr, g_sp


def _interval_for_free(scenario: Scenario, k: int, free: str,
                       fixed_value: float, cfg: SolverConfig):
    """Feasible range of `free` with the other power pinned, or None."""
    params = scenario.params
    ch = scenario.channels
    g_sr, g_rd, g_rp, g_rr, g_sp = _relay_gains(scenario, k)
    free_max = params.p_s_max if free == VAR_PS else params.p_rk_max
    cap = params.i_bar_p

    if scenario.mechanism is Mechanism.NONCOHERENT:
        if free == VAR_PRK:
            slack = cap - g_sp * fixed_value
            coeff = g_rp * (1.0 + params.zeta)
        else:
            slack = cap - g_rp * fixed_value * (1.0 + params.zeta)
            coeff = g_sp
        if slack < 0.0:
            return None
        if coeff <= 0.0:
            return (0.0, free_max)
        return (0.0, min(free_max, slack / coeff))

    lo, hi, status = kernels.coh_feasible_interval(
        free == VAR_PS, fixed_value, free_max, cap, ch.h_sp, ch.h_rp[k],
        ch.h_sr[k], ch.h_rr[k], params.zeta, params.sigma2_rk,
        cfg.bisect_tol)
    if status == kernels.STATUS_SPLIT:
        raise InvariantViolation(
            f"coherent feasible set along {free} at fixed value "
            f"{fixed_value!r} is not contiguous")
    if status == kernels.STATUS_EMPTY:
        return None
    return (lo, hi)


def feasible_interval(scenario: Scenario, k: int, fixed_var: str,
                      fixed_value: float,
                      config: Optional[SolverConfig] = None):
    """Range of the non-fixed power meeting the interference cap.

    `fixed_var` names the pinned power; the returned (lo, hi) bounds the
    other one.  Returns None when even its zero setting violates the cap.
    Non-coherent caps are linear so the interval is closed-form; the
    coherent residual is unimodal along the slice and gets bracketed by
    bisection.
    """
    _check_var("fixed_var", fixed_var)
    params = scenario.params
    box = params.p_s_max if fixed_var == VAR_PS else params.p_rk_max
    if not 0.0 <= fixed_value <= box * (1.0 + 1e-9):
        raise ValueError("fixed value outside its power box")
    cfg = config or SolverConfig()
    return _interval_for_free(scenario, k, _other(fixed_var), fixed_value,
                              cfg)


def solve_1d(scenario: Scenario, k: int, free_var: str, fixed_value: float,
             interval, config: Optional[SolverConfig] = None):
    """Maximize the exact slice rate over `interval`; returns (argmax, value).

    Golden-section search; monotone slices resolve to the exact corner via
    an endpoint comparison.  Value is in bit/s/Hz.
    """
    _check_var("free_var", free_var)
    if interval is None:
        raise ValueError("slice is infeasible: empty interval")
    lo, hi = interval
    if lo < 0.0 or hi < lo or fixed_value < 0.0:
        raise ValueError("bad interval or fixed value")
    cfg = config or SolverConfig()
    params = scenario.params
    g_sr, g_rd, _, g_rr, _ = _relay_gains(scenario, k)
    amp_space = scenario.mechanism is Mechanism.COHERENT
    arg, frac = kernels.golden_max_slice(
        lo, hi, free_var == VAR_PS, amp_space, True, fixed_value,
        g_sr, g_rd, g_rr, params.zeta, params.sigma2_rk, params.sigma2_d,
        cfg.golden_tol)
    return arg, math.log2(1.0 + frac)


def _best_on_slice(scenario: Scenario, k: int, free: str, fixed_value: float,
                   cfg: SolverConfig):
    """Maximize the exact slice rate; tolerates split coherent slices.

    Returns (argmax power, value in bit/s/Hz) or None when the slice has
    no feasible point at the scan resolution.
    """
    params = scenario.params
    g_sr, g_rd, g_rp, g_rr, g_sp = _relay_gains(scenario, k)
    if scenario.mechanism is Mechanism.NONCOHERENT:
        iv = _interval_for_free(scenario, k, free, fixed_value, cfg)
        if iv is None:
            return None
        arg, frac = kernels.golden_max_slice(
            iv[0], iv[1], free == VAR_PS, False, True, fixed_value,
            g_sr, g_rd, g_rr, params.zeta, params.sigma2_rk,
            params.sigma2_d, cfg.golden_tol)
        return arg, math.log2(1.0 + frac)
    ch = scenario.channels
    free_max = params.p_s_max if free == VAR_PS else params.p_rk_max
    arg, frac, found = kernels.coh_slice_best(
        free == VAR_PS, fixed_value, free_max, params.i_bar_p, ch.h_sp,
        ch.h_rp[k], ch.h_sr[k], ch.h_rr[k], g_sr, g_rd, g_rr, params.zeta,
        params.sigma2_rk, params.sigma2_d, _SLICE_SCAN, cfg.bisect_tol,
        cfg.golden_tol)
    if not found:
        return None
    return arg, math.log2(1.0 + frac)


def _interference(scenario: Scenario, k: int, ps: float, prk: float) -> float:
    ch = scenario.channels
    params = scenario.params
    if scenario.mechanism is Mechanism.NONCOHERENT:
        g_rp = abs(ch.h_rp[k]) ** 2
        g_sp = abs(ch.h_sp) ** 2
        return kernels.interf_noncoherent(ps, prk, g_sp, g_rp, params.zeta)
    return kernels.interf_coherent(ps, prk, ch.h_sp, ch.h_rp[k], ch.h_sr[k],
                                   ch.h_rr[k], params.zeta, params.sigma2_rk)


def _finish_solution(scenario: Scenario, k: int, ps: float, prk: float,
                     iterations: int, converged: bool,
                     trace=None) -> RelaySolution:
    params = scenario.params
    rate = exact_rate(scenario.channels, params, PowerAllocation(ps, prk), k)
    interf = _interference(scenario, k, ps, prk)
    cap = params.i_bar_p
    if interf > cap * (1.0 + CAP_SLACK_REL) + 1e-12:
        raise InvariantViolation(
            f"returned allocation violates the cap: {interf} > {cap}")
    phi = None
    if scenario.mechanism is Mechanism.COHERENT:
        comp = coherent_components(scenario.channels, params,
                                   PowerAllocation(ps, prk), k)
        phi, _ = optimal_phase(comp)
    return RelaySolution(relay_index=k, p_s=ps, p_rk=prk, phi_opt=phi,
                         rate=rate, interference=interf,
                         iterations=iterations, converged=converged,
                         objective_trace=trace)


def alternating_optimize(scenario: Scenario, k: int,
                         config: Optional[SolverConfig] = None,
                         init=None) -> RelaySolution:
    """Block-coordinate ascent on the per-relay power problem.

    Starts from the largest feasible source power with a silent relay and
    the midpoint of the relay's feasible range there.  Each iteration runs
    a budget-reallocation move (1-D search over the relay power with the
    source at its best response, which is its largest feasible level) and
    the two coordinate slice solves, accepting only non-worsening steps,
    until the exact-rate objective stalls.  The reallocation move matters
    when the cap is tight: there the interference budget must be traded
    between the two transmitters and neither coordinate can move alone.
    """
    cfg = config or SolverConfig()
    params = scenario.params
    g_sr, g_rd, g_rp, g_rr, g_sp = _relay_gains(scenario, k)
    amp = scenario.mechanism is Mechanism.COHERENT

    def objective(ps, prk):
        frac = kernels.rate_frac_exact(ps, prk, g_sr, g_rd, g_rr,
                                       params.zeta, params.sigma2_rk,
                                       params.sigma2_d)
        return math.log2(1.0 + frac)

    def cap_ok(ps_c, prk_c):
        return (_interference(scenario, k, ps_c, prk_c)
                <= params.i_bar_p * (1.0 + CAP_SLACK_REL) + 1e-12)

    def envelope_best():
        # fixed, cap-independent grid over the relay-power box, then golden
        # refinement around the best bracket; incumbent kept throughout;
        # each evaluation solves the source-power slice to optimality
        hi_t = math.sqrt(params.p_rk_max) if amp else params.p_rk_max

        def g(t):
            prk = t * t if amp else t
            res = _best_on_slice(scenario, k, VAR_PS, prk, cfg)
            if res is None:
                return -math.inf, 0.0
            return res[1], res[0]

        ts = [hi_t * j / (_ENVELOPE_COARSE - 1)
              for j in range(_ENVELOPE_COARSE)]
        best_val, best_ps = g(ts[0])
        best_t = ts[0]
        idx = 0
        for j in range(1, len(ts)):
            v, ps_j = g(ts[j])
            if v > best_val:
                best_val, best_ps, best_t, idx = v, ps_j, ts[j], j
        if not math.isfinite(best_val):
            return None
        a = ts[max(0, idx - 1)]
        b = ts[min(len(ts) - 1, idx + 1)]
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc, ps_c = g(c)
        fd, ps_d = g(d)
        tol = cfg.golden_tol * max(1.0, hi_t)
        while (b - a) > tol:
            if fc >= fd:
                b, d, fd, ps_d = d, c, fc, ps_c
                c = b - _INVPHI * (b - a)
                fc, ps_c = g(c)
            else:
                a, c, fc, ps_c = c, d, fd, ps_d
                d = a + _INVPHI * (b - a)
                fd, ps_d = g(d)
            if fc > best_val:
                best_val, best_ps, best_t = fc, ps_c, c
            if fd > best_val:
                best_val, best_ps, best_t = fd, ps_d, d
        prk_best = best_t * best_t if amp else best_t
        return best_ps, prk_best, best_val

    if init is not None:
        if isinstance(init, PowerAllocation):
            ps, prk = init.p_s, init.p_rk
        else:
            ps, prk = init
        ps = min(max(ps, 0.0), params.p_s_max)
        prk = min(max(prk, 0.0), params.p_rk_max)
        cap = params.i_bar_p
        if _interference(scenario, k, ps, prk) > cap * (1.0 + CAP_SLACK_REL) + 1e-12:
            raise ValueError("infeasible initialization")
    else:
        # silent relay: the source slice never splits there
        iv_s = _interval_for_free(scenario, k, VAR_PS, 0.0, cfg)
        ps = iv_s[1] if iv_s is not None else 0.0
        prk = 0.0
        if scenario.mechanism is Mechanism.NONCOHERENT:
            iv_r = _interval_for_free(scenario, k, VAR_PRK, ps, cfg)
            if iv_r is not None:
                prk = 0.5 * (iv_r[0] + iv_r[1])
        else:
            ch = scenario.channels
            lo, hi, status = kernels.coh_feasible_interval(
                False, ps, params.p_rk_max, params.i_bar_p, ch.h_sp,
                ch.h_rp[k], ch.h_sr[k], ch.h_rr[k], params.zeta,
                params.sigma2_rk, cfg.bisect_tol)
            # on a split slice keep the relay silent, which is feasible here
            if status == kernels.STATUS_OK:
                prk = 0.5 * (lo + hi)

    trace = [objective(ps, prk)]
    converged = False
    iterations = 0
    for _ in range(cfg.max_iters):
        iterations += 1
        env = envelope_best()
        if env is not None:
            e_ps, e_prk, e_val = env
            if e_val >= objective(ps, prk) and cap_ok(e_ps, e_prk):
                ps, prk = e_ps, e_prk
        for free in (VAR_PS, VAR_PRK):
            fixed = prk if free == VAR_PS else ps
            res = _best_on_slice(scenario, k, free, fixed, cfg)
            if res is None:
                continue
            arg, val = res
            cand = (arg, prk) if free == VAR_PS else (ps, arg)
            # never step to a worse or cap-violating point
            if val >= objective(ps, prk) and cap_ok(*cand):
                ps, prk = cand
        f_new = objective(ps, prk)
        prev = trace[-1]
        trace.append(f_new)
        if (f_new - prev) <= cfg.rel_tol * max(prev, 1e-300):
            converged = True
            break
    return _finish_solution(scenario, k, ps, prk, iterations, converged,
                            trace=tuple(trace))


def solve_ideal(scenario: Scenario, k: int,
                config: Optional[SolverConfig] = None) -> RelaySolution:
    """Alternating solve specialized to ideal self-interference cancellation."""
    if residual_si(scenario.channels, scenario.params, k) != 0.0:
        raise ValueError("solve_ideal requires zero residual "
                         "self-interference")
    return alternating_optimize(scenario, k, config)


def brute_force(scenario: Scenario, k: int,
                config: Optional[SolverConfig] = None) -> RelaySolution:
    """Feasible grid search on the exact rate, with local refinement.

    Ties go to the lexicographically smallest grid point.  Refinement
    keeps the incumbent, so more rounds or a finer grid never lower the
    returned rate.
    """
    cfg = config or SolverConfig()
    params = scenario.params
    ch = scenario.channels
    g_sr, g_rd, g_rp, g_rr, g_sp = _relay_gains(scenario, k)
    n = cfg.grid_n
    cap = params.i_bar_p
    coh = scenario.mechanism is Mechanism.COHERENT
    if coh:
        glo_s, ghi_s = 0.0, math.sqrt(params.p_s_max)
        glo_r, ghi_r = 0.0, math.sqrt(params.p_rk_max)

        def scan(lo_s, hi_s, lo_r, hi_r):
            return kernels.grid_scan_coherent(
                lo_s, hi_s, lo_r, hi_r, n, ch.h_sp, ch.h_rp[k], ch.h_sr[k],
                ch.h_rr[k], g_sr, g_rd, g_rr, params.zeta, params.sigma2_rk,
                params.sigma2_d, cap)
    else:
        glo_s, ghi_s = 0.0, params.p_s_max
        glo_r, ghi_r = 0.0, params.p_rk_max

        def scan(lo_s, hi_s, lo_r, hi_r):
            return kernels.grid_scan_noncoherent(
                lo_s, hi_s, lo_r, hi_r, n, g_sr, g_rd, g_rr, g_sp, g_rp,
                params.zeta, params.sigma2_rk, params.sigma2_d, cap)

    lo_s, hi_s, lo_r, hi_r = glo_s, ghi_s, glo_r, ghi_r
    best_val = -1.0
    best_s = 0.0
    best_r = 0.0
    rounds = 1 + cfg.refine_rounds
    for r in range(rounds):
        bs, br, val = scan(lo_s, hi_s, lo_r, hi_r)
        if val > best_val:
            best_val, best_s, best_r = val, bs, br
        if r == rounds - 1:
            break
        step_s = (hi_s - lo_s) / (n - 1)
        step_r = (hi_r - lo_r) / (n - 1)
        lo_s = max(glo_s, best_s - step_s)
        hi_s = min(ghi_s, best_s + step_s)
        lo_r = max(glo_r, best_r - step_r)
        hi_r = min(ghi_r, best_r + step_r)
    if best_val < 0.0:
        return RelaySolution(relay_index=k, p_s=0.0, p_rk=0.0, phi_opt=None,
                             rate=0.0, interference=0.0, iterations=rounds,
                             converged=False)
    ps = best_s * best_s if coh else best_s
    prk = best_r * best_r if coh else best_r
    return _finish_solution(scenario, k, ps, prk, rounds, True)


def _slice_points(lo_t, hi_t, n_points):
    # open at the lower end: the reciprocal objective diverges where the
    # slice rate is exactly zero
    return [lo_t + (hi_t - lo_t) * (j + 1) / n_points for j in range(n_points)]


def verify_coordinate_concavity(scenario: Scenario, k: int,
                                n_slices: int = 100, n_points: int = 50,
                                n_segments: int = 1000,
                                seed: int = 0) -> ConcavityReport:
    """Finite-difference curvature audit of the per-relay objective.

    Slice checks evaluate the slice problem in its concave form (the
    negated reciprocal of the SINR surrogate when residual
    self-interference is present, the exact rate otherwise) across the
    feasible interval: second differences must stay non-positive up to a
    small scaled tolerance.

    Joint checks sample random 2-D segments over the power box.  With
    residual self-interference the surface is genuinely nonconcave and
    chord-above-midpoint witnesses are expected.  Without it the exact
    rate is monotone with convex superlevel sets but loses plain
    concavity in the deep-fade corner where both received SNR terms are
    small, so the joint check there asserts quasiconcavity instead: the
    midpoint must not dip below the worse endpoint.
    """
    if n_points < 3:
        raise ValueError("n_points must be at least 3")
    params = scenario.params
    g_sr, g_rd, g_rp, g_rr, g_sp = _relay_gains(scenario, k)
    zh = residual_si(scenario.channels, params, k)
    use_exact = zh == 0.0
    amp_space = scenario.mechanism is Mechanism.COHERENT and not use_exact
    cfg = SolverConfig()
    rng = np.random.default_rng(seed)
    tol = 1e-7

    def frac_at(ps, prk):
        if use_exact:
            return kernels.rate_frac_exact(ps, prk, g_sr, g_rd, g_rr,
                                           params.zeta, params.sigma2_rk,
                                           params.sigma2_d)
        return kernels.rate_frac_approx(ps, prk, g_sr, g_rd, g_rr,
                                        params.zeta, params.sigma2_d)

    def slice_objective(t, free, fixed):
        v = t * t if amp_space else t
        ps = v if free == VAR_PS else fixed
        prk = fixed if free == VAR_PS else v
        f = frac_at(ps, prk)
        if use_exact:
            return math.log2(1.0 + f)
        if f <= 0.0:
            return -math.inf
        return -1.0 / f

    slice_checks = 0
    slice_violations = 0
    max_slice_d2 = -math.inf
    for i in range(n_slices):
        free = VAR_PS if i % 2 == 0 else VAR_PRK
        fixed_max = params.p_rk_max if free == VAR_PS else params.p_s_max
        interval = None
        fixed = 0.0
        for _ in range(20):
            fixed = float(rng.uniform(0.0, fixed_max))
            try:
                interval = _interval_for_free(scenario, k, free, fixed, cfg)
            except InvariantViolation:
                # split coherent slice: no single interval to sample, redraw
                interval = None
                continue
            if interval is not None and interval[1] - interval[0] > 1e-9:
                break
            interval = None
        if interval is None:
            continue
        lo, hi = interval
        lo_t = math.sqrt(lo) if amp_space else lo
        hi_t = math.sqrt(hi) if amp_space else hi
        vals = [slice_objective(t, free, fixed)
                for t in _slice_points(lo_t, hi_t, n_points)]
        if not all(map(math.isfinite, vals)):
            continue
        slice_checks += 1
        for j in range(1, len(vals) - 1):
            scale = max(1.0, abs(vals[j - 1]), abs(vals[j]), abs(vals[j + 1]))
            d2 = (vals[j + 1] - 2.0 * vals[j] + vals[j - 1]) / scale
            max_slice_d2 = max(max_slice_d2, d2)
            if d2 > tol:
                slice_violations += 1

    def joint_objective(a, b):
        if amp_space:
            return frac_at(a * a, b * b)
        if use_exact:
            return math.log2(1.0 + frac_at(a, b))
        return frac_at(a, b)

    box_s = math.sqrt(params.p_s_max) if amp_space else params.p_s_max
    box_r = math.sqrt(params.p_rk_max) if amp_space else params.p_rk_max
    joint_violations = 0
    max_joint = -math.inf
    for _ in range(n_segments):
        a = (float(rng.uniform(0, box_s)), float(rng.uniform(0, box_r)))
        b = (float(rng.uniform(0, box_s)), float(rng.uniform(0, box_r)))
        m = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
        fa = joint_objective(*a)
        fb = joint_objective(*b)
        fm = joint_objective(*m)
        scale = max(1.0, abs(fa), abs(fb), abs(fm))
        if use_exact:
            # quasiconcavity: the midpoint may sit below the chord but
            # never below the worse endpoint
            gap = (min(fa, fb) - fm) / scale
        else:
            gap = (0.5 * (fa + fb) - fm) / scale
        max_joint = max(max_joint, gap)
        if gap > tol:
            joint_violations += 1

    return ConcavityReport(
        mechanism=scenario.mechanism, zeta_hat=zh, uses_exact=use_exact,
        slice_checks=slice_checks, slice_violations=slice_violations,
        max_slice_second_diff=max_slice_d2, segment_checks=n_segments,
        joint_violations=joint_violations, max_joint_violation=max_joint)
