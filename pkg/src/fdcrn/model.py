"""System model for an underlay full-duplex amplify-and-forward relay network.

A secondary source S talks to a destination D through one of K full-duplex
relays while sharing spectrum with a primary receiver P.  The relay
amplifies what it hears (including its own residual loopback, scaled by the
cancellation quality zeta) and forwards it.  All channel coefficients are
complex; noise powers default to one.

Rates are spectral efficiencies in bit/s/Hz.  `exact_rate` keeps the relay
noise term in the end-to-end SINR; `approx_rate` drops it, which upper
bounds the exact value and is the surrogate used by the iterative solver
when residual self-interference is nonzero.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

ComplexCoeff = complex
"""Channel coefficient; magnitude and phase derive from the usual complex ops."""

TWO_PI = 2.0 * math.pi


class Mechanism(enum.Enum):
    """How the network treats interference at the primary receiver."""

    NONCOHERENT = "noncoherent"
    COHERENT = "coherent"
    HALF_DUPLEX = "halfduplex"

    @classmethod
    def parse(cls, text: str) -> "Mechanism":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for mech in cls:
            if mech.value == key:
                return mech
        raise ValueError(f"unknown mechanism {text!r}")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        raise ValueError("dB of a non-positive value")
    return 10.0 * math.log10(value)


def phase_to_delay(phi: float, frequency_hz: float) -> float:
    """Relay delay in seconds implementing a phase shift at the given frequency."""
    if frequency_hz <= 0.0:
        raise ValueError("frequency must be positive")
    return phi / (TWO_PI * frequency_hz)


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization of every link, for K candidate relays.

    Arrays are indexed by relay: h_sr (source->relay), h_rd (relay->dest),
    h_rp (relay->primary), h_rr (relay loopback).  h_sd and h_sp are the
    direct source->dest and source->primary coefficients.
    """

    k: int
    h_sr: np.ndarray
    h_rd: np.ndarray
    h_rp: np.ndarray
    h_rr: np.ndarray
    h_sd: ComplexCoeff
    h_sp: ComplexCoeff

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one relay")
        for name in ("h_sr", "h_rd", "h_rp", "h_rr"):
            arr = getattr(self, name)
            if arr.shape != (self.k,):
                raise ValueError(f"{name} must have shape ({self.k},)")

    def gains(self, k: int) -> tuple:
        """|h|^2 of the four relay-k links: (g_sr, g_rd, g_rp, g_rr)."""
        return (
            abs(self.h_sr[k]) ** 2,
            abs(self.h_rd[k]) ** 2,
            abs(self.h_rp[k]) ** 2,
            abs(self.h_rr[k]) ** 2,
        )


@dataclass(frozen=True)
class SystemParams:
    """Static network parameters: cancellation quality, noise, and caps."""

    zeta: float = 0.001
    sigma2_rk: float = 1.0
    sigma2_d: float = 1.0
    p_s_max: float = 100.0
    p_rk_max: float = 100.0
    i_bar_p: float = 10.0

    def __post_init__(self):
        if self.zeta < 0.0:
            raise ValueError("zeta must be nonnegative")
        # a noiseless relay input is allowed (degenerate but well-defined
        # limits); the destination always has noise
        if self.sigma2_rk < 0.0 or self.sigma2_d <= 0.0:
            raise ValueError("noise powers must be positive")
        if self.p_s_max < 0.0 or self.p_rk_max < 0.0:
            raise ValueError("power caps must be nonnegative")
        if self.i_bar_p < 0.0:
            raise ValueError("interference cap must be nonnegative")


@dataclass(frozen=True)
class PowerAllocation:
    p_s: float
    p_rk: float

    def __post_init__(self):
        if self.p_s < 0.0 or self.p_rk < 0.0:
            raise ValueError("powers must be nonnegative")


@dataclass(frozen=True)
class CoherentComponents:
    """Interference phasors at the primary: direct term a, relayed term b."""

    a: ComplexCoeff
    b: ComplexCoeff
    phi_a: float
    phi_b: float


def residual_si(channels: ChannelSet, params: SystemParams, k: int) -> float:
    """Effective loopback coefficient zeta*|h_rr[k]|^2 (zero means ideal SIC)."""
    return params.zeta * abs(channels.h_rr[k]) ** 2


def gen_channels(seed: int, k: int, var_sr: float = 1.0, var_rd: float = 1.0,
                 var_sd: float = 0.1, var_sp_range: tuple = (0.8, 1.0),
                 var_rp_range: tuple = (0.8, 1.0),
                 var_rr: float = 1.0) -> ChannelSet:
    """Draw a Rayleigh channel set; E|h|^2 equals the requested variance.

    The interference-link variances are themselves drawn uniformly from
    their ranges (once for h_sp, per relay for h_rp).  Each relay uses its
    own child seed stream, so regenerating with a larger k extends the same
    set instead of reshuffling it.
    """
    if k < 1:
        raise ValueError("need at least one relay")
    for name, v in (("var_sr", var_sr), ("var_rd", var_rd),
                    ("var_sd", var_sd), ("var_rr", var_rr)):
        if v < 0.0:
            raise ValueError(f"{name} must be nonnegative")
    for name, rng_pair in (("var_sp_range", var_sp_range),
                           ("var_rp_range", var_rp_range)):
        lo, hi = rng_pair
        if lo < 0.0 or hi < lo:
            raise ValueError(f"{name} must satisfy 0 <= lo <= hi")

    def draw(rng, var):
        re, im = rng.standard_normal(2)
        return complex(re, im) * math.sqrt(var / 2.0)

    children = np.random.SeedSequence(seed).spawn(k + 1)
    rng0 = np.random.default_rng(children[0])
    var_sp = rng0.uniform(var_sp_range[0], var_sp_range[1])
    h_sd = draw(rng0, var_sd)
    h_sp = draw(rng0, var_sp)
    h_sr = np.empty(k, dtype=np.complex128)
    h_rd = np.empty(k, dtype=np.complex128)
    h_rp = np.empty(k, dtype=np.complex128)
    h_rr = np.empty(k, dtype=np.complex128)
    for i in range(k):
        rng = np.random.default_rng(children[i + 1])
        var_rp = rng.uniform(var_rp_range[0], var_rp_range[1])
        h_sr[i] = draw(rng, var_sr)
        h_rd[i] = draw(rng, var_rd)
        h_rp[i] = draw(rng, var_rp)
        h_rr[i] = draw(rng, var_rr)
    return ChannelSet(k=k, h_sr=h_sr, h_rd=h_rd, h_rp=h_rp, h_rr=h_rr,
                      h_sd=h_sd, h_sp=h_sp)


def amplification_gain(channels: ChannelSet, params: SystemParams,
                       alloc: PowerAllocation, k: int) -> float:
    """Relay scaling that normalizes the forwarded signal to power p_rk."""
    g_sr, _, _, g_rr = channels.gains(k)
    den = (alloc.p_s * g_sr + params.zeta * alloc.p_rk * g_rr
           + params.sigma2_rk)
    if den <= 0.0:
        raise ValueError("degenerate relay input: zero received power")
    return 1.0 / math.sqrt(den)


def exact_rate(channels: ChannelSet, params: SystemParams,
               alloc: PowerAllocation, k: int) -> float:
    g_sr, g_rd, _, g_rr = channels.gains(k)
    frac = kernels.rate_frac_exact(alloc.p_s, alloc.p_rk, g_sr, g_rd, g_rr,
                                   params.zeta, params.sigma2_rk,
                                   params.sigma2_d)
    return math.log2(1.0 + frac)


def approx_rate(channels: ChannelSet, params: SystemParams,
                alloc: PowerAllocation, k: int) -> float:
    """Rate with the relay noise dropped; upper bound on exact_rate.

    Only defined for nonzero residual self-interference.
    """
    g_sr, g_rd, _, g_rr = channels.gains(k)
    if params.zeta * g_rr == 0.0:
        raise ValueError("zero residual self-interference: the approximation "
                         "degenerates, use exact_rate")
    frac = kernels.rate_frac_approx(alloc.p_s, alloc.p_rk, g_sr, g_rd, g_rr,
                                    params.zeta, params.sigma2_d)
    return math.log2(1.0 + frac)


def interference_noncoherent(channels: ChannelSet, params: SystemParams,
                             alloc: PowerAllocation, k: int) -> float:
    """Mean interference power at the primary with no phase alignment."""
    _, _, g_rp, _ = channels.gains(k)
    g_sp = abs(channels.h_sp) ** 2
    return kernels.interf_noncoherent(alloc.p_s, alloc.p_rk, g_sp, g_rp,
                                      params.zeta)


def coherent_components(channels: ChannelSet, params: SystemParams,
                        alloc: PowerAllocation, k: int) -> CoherentComponents:
    amplification_gain(channels, params, alloc, k)  # reject degenerate input
    a, b = kernels.coh_ab(alloc.p_s, alloc.p_rk, channels.h_sp,
                          channels.h_rp[k], channels.h_sr[k],
                          channels.h_rr[k], params.zeta, params.sigma2_rk)
    return CoherentComponents(a=a, b=b,
                              phi_a=math.atan2(a.imag, a.real),
                              phi_b=math.atan2(b.imag, b.real))


def interference_coherent_raw(comp: CoherentComponents, phi: float) -> float:
    """|a + b*exp(-j*phi)|^2: primary-side power when the relay rotates by phi."""
    z = comp.a + comp.b * complex(math.cos(phi), -math.sin(phi))
    return abs(z) ** 2


def optimal_phase(comp: CoherentComponents) -> tuple:
    """Relay phase that antialigns b against a.

    Returns (phi_opt, i_coh) with phi_opt in [0, 2*pi) and
    i_coh = (|a| - |b|)^2, the residual interference floor.
    """
    phi_opt = (math.pi + comp.phi_b - comp.phi_a) % TWO_PI
    d = abs(comp.a) - abs(comp.b)
    return phi_opt, d * d


def interference_coherent(channels: ChannelSet, params: SystemParams,
                          alloc: PowerAllocation, k: int) -> float:
    """Residual interference (|a| - |b|)^2 at the optimal relay phase."""
    amplification_gain(channels, params, alloc, k)  # reject degenerate input
    return kernels.interf_coherent(alloc.p_s, alloc.p_rk, channels.h_sp,
                                   channels.h_rp[k], channels.h_sr[k],
                                   channels.h_rr[k], params.zeta,
                                   params.sigma2_rk)


def hd_baseline_rate(channels: ChannelSet, params: SystemParams,
                     alloc: PowerAllocation, k: int) -> float:
    """Two-phase half-duplex rate at the same powers: no loopback, 1/2 prelog."""
    g_sr, g_rd, _, g_rr = channels.gains(k)
    frac = kernels.rate_frac_exact(alloc.p_s, alloc.p_rk, g_sr, g_rd, g_rr,
                                   0.0, params.sigma2_rk, params.sigma2_d)
    return 0.5 * math.log2(1.0 + frac)


def hd_feasible(channels: ChannelSet, params: SystemParams,
                alloc: PowerAllocation, k: int) -> bool:
    """Half-duplex per-phase caps: each transmitter alone respects i_bar_p."""
    _, _, g_rp, _ = channels.gains(k)
    g_sp = abs(channels.h_sp) ** 2
    return (g_sp * alloc.p_s <= params.i_bar_p
            and g_rp * alloc.p_rk <= params.i_bar_p)
