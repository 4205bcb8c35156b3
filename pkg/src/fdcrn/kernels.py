"""Scalar and grid kernels for the hot paths.

Everything here works on plain floats/complex scalars (or numpy arrays for
the *_numpy variants) so the same source compiles under numba and runs as
ordinary Python when acceleration is off.  The grid scans exist in two
versions: a nested-loop one meant for numba and a vectorized numpy one used
as the fallback path.  `grid_scan_noncoherent` / `grid_scan_coherent` are
the dispatched names.

Power conventions: `ps`, `prk` are transmit powers in watts.  Coherent
searches run in amplitude space (u = sqrt(ps), v = sqrt(prk)); the scans
for that mechanism take and return amplitude coordinates.
"""

import math

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_njit

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

STATUS_OK = 0
STATUS_EMPTY = 1
STATUS_SPLIT = 2


@maybe_njit
def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@maybe_njit
def rate_frac_exact(ps, prk, g_sr, g_rd, g_rr, zeta, s2_rk, s2_d):
    """End-to-end SINR x*y/(1+x+y) with the relay noise term kept."""
    if ps <= 0.0 or prk <= 0.0:
        return 0.0
    x = g_rd * prk / s2_d
    den = zeta * g_rr * prk + s2_rk
    if den <= 0.0:
        # noiseless relay input: y unbounded, the cascade saturates at x
        return x if g_sr > 0.0 else 0.0
    y = g_sr * ps / den
    return x * y / (1.0 + x + y)


@maybe_njit
def rate_frac_approx(ps, prk, g_sr, g_rd, g_rr, zeta, s2_d):
    """High self-interference SINR; relay noise dropped. Needs zeta*g_rr > 0.

    Written as a*c/(1 + a*prk + c/prk) so prk -> 0 underflows to 0 instead
    of producing inf*0.
    """
    if ps <= 0.0 or prk <= 0.0:
        return 0.0
    a = g_rd / s2_d
    c = g_sr * ps / (zeta * g_rr)
    return a * c / (1.0 + a * prk + c / prk)


@maybe_njit
def interf_noncoherent(ps, prk, g_sp, g_rp, zeta):
    return g_sp * ps + g_rp * prk * (1.0 + zeta)


@maybe_njit
def coh_ab(ps, prk, h_sp, h_rp, h_sr, h_rr, zeta, s2_rk):
    """Direct (A) and relay-path (B) interference terms at the PU receiver."""
    rps = math.sqrt(ps)
    rzr = math.sqrt(zeta * prk)
    a = h_sp * rps + h_rp * rzr
    den = ps * _abs2(h_sr) + zeta * prk * _abs2(h_rr) + s2_rk
    gain = 1.0 / math.sqrt(den)
    noise = (math.sqrt(s2_rk) / math.sqrt(2.0)) * (1.0 + 1j)
    b = (h_sr * rps + h_rr * rzr + noise) * gain * h_rp * math.sqrt(prk)
    return a, b


@maybe_njit
def interf_coherent(ps, prk, h_sp, h_rp, h_sr, h_rr, zeta, s2_rk):
    """Residual PU interference at the optimal relay phase: (|A|-|B|)^2."""
    a, b = coh_ab(ps, prk, h_sp, h_rp, h_sr, h_rr, zeta, s2_rk)
    d = abs(a) - abs(b)
    return d * d


@maybe_njit
def _slice_frac(t, free_is_ps, amp_space, use_exact, fixed,
                g_sr, g_rd, g_rr, zeta, s2_rk, s2_d):
    v = t * t if amp_space else t
    ps = v if free_is_ps else fixed
    prk = fixed if free_is_ps else v
    if use_exact:
        return rate_frac_exact(ps, prk, g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    return rate_frac_approx(ps, prk, g_sr, g_rd, g_rr, zeta, s2_d)


@maybe_njit
def golden_max_slice(lo, hi, free_is_ps, amp_space, use_exact, fixed,
                     g_sr, g_rd, g_rr, zeta, s2_rk, s2_d, tol):
    """Maximize the slice SINR over [lo, hi] (powers).

    Golden-section on a unimodal slice, then an endpoint comparison so
    monotone slices return the exact corner.  Returns (power, frac).
    """
    lo_t = math.sqrt(lo) if amp_space else lo
    hi_t = math.sqrt(hi) if amp_space else hi
    a = lo_t
    b = hi_t
    width = b - a
    if width <= 0.0:
        f = _slice_frac(a, free_is_ps, amp_space, use_exact, fixed,
                        g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
        return (a * a if amp_space else a), f
    c = b - _INVPHI * width
    d = a + _INVPHI * width
    fc = _slice_frac(c, free_is_ps, amp_space, use_exact, fixed,
                     g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    fd = _slice_frac(d, free_is_ps, amp_space, use_exact, fixed,
                     g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    # floor the stopping width at a few ulps of the endpoints so
    # hair-thin intervals cannot trap the loop below representable spacing
    thresh = tol * width + 4.0 * 2.220446049250313e-16 * max(abs(a), abs(b), 1.0)
    iters = 0
    while (b - a) > thresh and iters < 200:
        iters += 1
        if fc >= fd:
            b = d
            d = c
            fd = fc
            c = b - _INVPHI * (b - a)
            fc = _slice_frac(c, free_is_ps, amp_space, use_exact, fixed,
                             g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
        else:
            a = c
            c = d
            fc = fd
            d = a + _INVPHI * (b - a)
            fd = _slice_frac(d, free_is_ps, amp_space, use_exact, fixed,
                             g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    tm = 0.5 * (a + b)
    fm = _slice_frac(tm, free_is_ps, amp_space, use_exact, fixed,
                     g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    fl = _slice_frac(lo_t, free_is_ps, amp_space, use_exact, fixed,
                     g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    fh = _slice_frac(hi_t, free_is_ps, amp_space, use_exact, fixed,
                     g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
    if fh >= fm and fh >= fl:
        best_t = hi_t
        best = fh
    elif fl >= fm:
        best_t = lo_t
        best = fl
    else:
        best_t = tm
        best = fm
    return (best_t * best_t if amp_space else best_t), best


@maybe_njit
def _coh_slice_interf(t, free_is_ps, fixed, h_sp, h_rp, h_sr, h_rr,
                      zeta, s2_rk):
    v = t * t
    ps = v if free_is_ps else fixed
    prk = fixed if free_is_ps else v
    return interf_coherent(ps, prk, h_sp, h_rp, h_sr, h_rr, zeta, s2_rk)


@maybe_njit
def coh_feasible_interval(free_is_ps, fixed, p_free_max, cap,
                          h_sp, h_rp, h_sr, h_rr, zeta, s2_rk, bisect_tol):
    """Feasible range of the free power under the coherent cap.

    The residual interference along a box slice is unimodal in the
    amplitude coordinate, so the sublevel set is a single interval: locate
    its minimum by golden section, then bisect for both crossings.  A
    64-point sweep double-checks contiguity.  Returns
    (lo_power, hi_power, status).
    """
    u_max = math.sqrt(p_free_max)
    if u_max <= 0.0:
        i0 = _coh_slice_interf(0.0, free_is_ps, fixed, h_sp, h_rp, h_sr,
                               h_rr, zeta, s2_rk)
        if i0 <= cap:
            return 0.0, 0.0, STATUS_OK
        return 0.0, 0.0, STATUS_EMPTY
    a = 0.0
    b = u_max
    c = b - _INVPHI * b
    d = _INVPHI * b
    fc = _coh_slice_interf(c, free_is_ps, fixed, h_sp, h_rp, h_sr, h_rr,
                           zeta, s2_rk)
    fd = _coh_slice_interf(d, free_is_ps, fixed, h_sp, h_rp, h_sr, h_rr,
                           zeta, s2_rk)
    thresh = 1e-12 * u_max
    while (b - a) > thresh:
        if fc <= fd:
            b = d
            d = c
            fd = fc
            c = b - _INVPHI * (b - a)
            fc = _coh_slice_interf(c, free_is_ps, fixed, h_sp, h_rp, h_sr,
                                   h_rr, zeta, s2_rk)
        else:
            a = c
            c = d
            fc = fd
            d = a + _INVPHI * (b - a)
            fd = _coh_slice_interf(d, free_is_ps, fixed, h_sp, h_rp, h_sr,
                                   h_rr, zeta, s2_rk)
    u_star = 0.5 * (a + b)
    i_star = _coh_slice_interf(u_star, free_is_ps, fixed, h_sp, h_rp, h_sr,
                               h_rr, zeta, s2_rk)
    i_zero = _coh_slice_interf(0.0, free_is_ps, fixed, h_sp, h_rp, h_sr,
                               h_rr, zeta, s2_rk)
    i_umax = _coh_slice_interf(u_max, free_is_ps, fixed, h_sp, h_rp, h_sr,
                               h_rr, zeta, s2_rk)
    if i_zero < i_star:
        u_star = 0.0
        i_star = i_zero
    if i_umax < i_star:
        u_star = u_max
        i_star = i_umax
    if i_star > cap:
        return 0.0, 0.0, STATUS_EMPTY
    tol_u = bisect_tol * max(1.0, u_max)
    if i_zero <= cap:
        lo_u = 0.0
    else:
        bad = 0.0
        good = u_star
        while good - bad > tol_u:
            mid = 0.5 * (bad + good)
            if _coh_slice_interf(mid, free_is_ps, fixed, h_sp, h_rp, h_sr,
                                 h_rr, zeta, s2_rk) <= cap:
                good = mid
            else:
                bad = mid
        lo_u = good
    if i_umax <= cap:
        hi_u = u_max
    else:
        good = u_star
        bad = u_max
        while bad - good > tol_u:
            mid = 0.5 * (good + bad)
            if _coh_slice_interf(mid, free_is_ps, fixed, h_sp, h_rp, h_sr,
                                 h_rr, zeta, s2_rk) <= cap:
                good = mid
            else:
                bad = mid
        hi_u = good
    runs = 0
    prev = False
    for i in range(64):
        u = u_max * i / 63.0
        feas = _coh_slice_interf(u, free_is_ps, fixed, h_sp, h_rp, h_sr,
                                 h_rr, zeta, s2_rk) <= cap
        if feas and not prev:
            runs += 1
        prev = feas
    if runs > 1:
        return lo_u * lo_u, hi_u * hi_u, STATUS_SPLIT
    return lo_u * lo_u, hi_u * hi_u, STATUS_OK


@maybe_njit
def coh_slice_best(free_is_ps, fixed, p_free_max, cap,
                   h_sp, h_rp, h_sr, h_rr, g_sr, g_rd, g_rr, zeta,
                   s2_rk, s2_d, n_scan, bisect_tol, golden_tol):
    """Best exact-rate point on a coherent box slice under the cap.

    The slice-feasible set can split into disjoint bands (the relay must
    transmit enough to cancel the source at the primary receiver, so
    mid-range settings may violate the cap while both extremes pass), so
    this scans n_scan+1 amplitude points, bisects every band edge, and
    golden-maximizes the exact SINR inside each band.  Requires a finite
    power box.  Returns (best_power, best_frac, found).
    """
    u_max = math.sqrt(p_free_max)
    tol_u = bisect_tol * max(1.0, u_max)
    best_frac = -1.0
    best_power = 0.0
    in_run = False
    run_lo = 0.0
    u_prev = 0.0
    for i in range(n_scan + 1):
        u = u_max * i / n_scan
        feas = _coh_slice_interf(u, free_is_ps, fixed, h_sp, h_rp, h_sr,
                                 h_rr, zeta, s2_rk) <= cap
        if feas and not in_run:
            lo_u = u
            if i > 0:
                a = u_prev
                b = u
                while (b - a) > tol_u:
                    m = 0.5 * (a + b)
                    if _coh_slice_interf(m, free_is_ps, fixed, h_sp, h_rp,
                                         h_sr, h_rr, zeta, s2_rk) <= cap:
                        b = m
                    else:
                        a = m
                lo_u = b
            run_lo = lo_u
            in_run = True
        elif in_run and not feas:
            a = u_prev
            b = u
            while (b - a) > tol_u:
                m = 0.5 * (a + b)
                if _coh_slice_interf(m, free_is_ps, fixed, h_sp, h_rp,
                                     h_sr, h_rr, zeta, s2_rk) <= cap:
                    a = m
                else:
                    b = m
            p, f = golden_max_slice(run_lo * run_lo, a * a, free_is_ps,
                                    True, True, fixed, g_sr, g_rd, g_rr,
                                    zeta, s2_rk, s2_d, golden_tol)
            if f > best_frac:
                best_frac = f
                best_power = p
            in_run = False
        u_prev = u
    if in_run:
        p, f = golden_max_slice(run_lo * run_lo, u_max * u_max, free_is_ps,
                                True, True, fixed, g_sr, g_rd, g_rr,
                                zeta, s2_rk, s2_d, golden_tol)
        if f > best_frac:
            best_frac = f
            best_power = p
    return best_power, best_frac, best_frac >= 0.0


@maybe_njit
def _grid_scan_nc_loop(lo_s, hi_s, lo_r, hi_r, n, g_sr, g_rd, g_rr,
                       g_sp, g_rp, zeta, s2_rk, s2_d, cap):
    best = -1.0
    bps = lo_s
    bprk = lo_r
    step_s = (hi_s - lo_s) / (n - 1)
    step_r = (hi_r - lo_r) / (n - 1)
    for i in range(n):
        ps = lo_s + step_s * i
        base = g_sp * ps
        if base > cap:
            break
        for j in range(n):
            prk = lo_r + step_r * j
            if base + g_rp * prk * (1.0 + zeta) > cap:
                break
            f = rate_frac_exact(ps, prk, g_sr, g_rd, g_rr, zeta, s2_rk, s2_d)
            if f > best:
                best = f
                bps = ps
                bprk = prk
    return bps, bprk, best


def _grid_scan_nc_numpy(lo_s, hi_s, lo_r, hi_r, n, g_sr, g_rd, g_rr,
                        g_sp, g_rp, zeta, s2_rk, s2_d, cap):
    step_s = (hi_s - lo_s) / (n - 1)
    step_r = (hi_r - lo_r) / (n - 1)
    ps = lo_s + step_s * np.arange(n)
    prk = lo_r + step_r * np.arange(n)
    x = g_rd * prk / s2_d
    y = g_sr * ps[:, None] / (zeta * g_rr * prk[None, :] + s2_rk)
    frac = x[None, :] * y / (1.0 + x[None, :] + y)
    feas = (g_sp * ps)[:, None] + (g_rp * prk)[None, :] * (1.0 + zeta) <= cap
    masked = np.where(feas, frac, -1.0)
    idx = int(np.argmax(masked))
    i, j = divmod(idx, n)
    return float(ps[i]), float(prk[j]), float(masked[i, j])


@maybe_njit
def _grid_scan_coh_loop(lo_u, hi_u, lo_v, hi_v, n, h_sp, h_rp, h_sr, h_rr,
                        g_sr, g_rd, g_rr, zeta, s2_rk, s2_d, cap):
    best = -1.0
    bu = lo_u
    bv = lo_v
    step_u = (hi_u - lo_u) / (n - 1)
    step_v = (hi_v - lo_v) / (n - 1)
    for i in range(n):
        u = lo_u + step_u * i
        ps = u * u
        for j in range(n):
            v = lo_v + step_v * j
            prk = v * v
            icoh = interf_coherent(ps, prk, h_sp, h_rp, h_sr, h_rr,
                                   zeta, s2_rk)
            if icoh <= cap:
                f = rate_frac_exact(ps, prk, g_sr, g_rd, g_rr, zeta,
                                    s2_rk, s2_d)
                if f > best:
                    best = f
                    bu = u
                    bv = v
    return bu, bv, best


def _grid_scan_coh_numpy(lo_u, hi_u, lo_v, hi_v, n, h_sp, h_rp, h_sr, h_rr,
                         g_sr, g_rd, g_rr, zeta, s2_rk, s2_d, cap):
    step_u = (hi_u - lo_u) / (n - 1)
    step_v = (hi_v - lo_v) / (n - 1)
    u = lo_u + step_u * np.arange(n)
    v = lo_v + step_v * np.arange(n)
    ps = u * u
    prk = v * v
    rps = np.sqrt(ps)
    rzr = np.sqrt(zeta * prk)
    a = h_sp * rps[:, None] + h_rp * rzr[None, :]
    den = ps[:, None] * g_sr + (zeta * prk)[None, :] * g_rr + s2_rk
    gain = 1.0 / np.sqrt(den)
    noise = (math.sqrt(s2_rk) / math.sqrt(2.0)) * (1.0 + 1.0j)
    b = ((h_sr * rps[:, None] + h_rr * rzr[None, :] + noise)
         * gain * h_rp * np.sqrt(prk)[None, :])
    icoh = (np.abs(a) - np.abs(b)) ** 2
    x = g_rd * prk / s2_d
    y = g_sr * ps[:, None] / (zeta * g_rr * prk[None, :] + s2_rk)
    frac = x[None, :] * y / (1.0 + x[None, :] + y)
    masked = np.where(icoh <= cap, frac, -1.0)
    idx = int(np.argmax(masked))
    i, j = divmod(idx, n)
    return float(u[i]), float(v[j]), float(masked[i, j])


if NUMBA_ENABLED:
    grid_scan_noncoherent = _grid_scan_nc_loop
    grid_scan_coherent = _grid_scan_coh_loop
else:
    grid_scan_noncoherent = _grid_scan_nc_numpy
    grid_scan_coherent = _grid_scan_coh_numpy
