import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcrn.model import (
    ChannelSet,
    PowerAllocation,
    SystemParams,
    amplification_gain,
    approx_rate,
    coherent_components,
    db_to_linear,
    exact_rate,
    gen_channels,
    hd_baseline_rate,
    hd_feasible,
    interference_coherent,
    interference_coherent_raw,
    interference_noncoherent,
    linear_to_db,
    optimal_phase,
    phase_to_delay,
    residual_si,
)

# frozen closed-form oracles
LOG2_4_3 = 0.41503749927884376
LOG2_16_7 = 1.1926450779423958
HD_16_7 = 0.59632253897119791


def manual_channels(h_sr=1.0 + 0j, h_rd=1.0 + 0j, h_rp=1.0 + 0j,
                    h_rr=1.0 + 0j, h_sd=0.0j, h_sp=1.0 + 0j):
    return ChannelSet(
        k=1,
        h_sr=np.array([h_sr], dtype=np.complex128),
        h_rd=np.array([h_rd], dtype=np.complex128),
        h_rp=np.array([h_rp], dtype=np.complex128),
        h_rr=np.array([h_rr], dtype=np.complex128),
        h_sd=h_sd,
        h_sp=h_sp,
    )


class TestGenChannels:
    def test_deterministic(self):
        a = gen_channels(123, 4)
        b = gen_channels(123, 4)
        assert np.array_equal(a.h_sr, b.h_sr)
        assert np.array_equal(a.h_rd, b.h_rd)
        assert np.array_equal(a.h_rp, b.h_rp)
        assert np.array_equal(a.h_rr, b.h_rr)
        assert a.h_sd == b.h_sd and a.h_sp == b.h_sp

    def test_zero_variance_gives_zero_links(self):
        ch = gen_channels(5, 3, var_sr=0.0, var_rd=0.0, var_sd=0.0,
                          var_sp_range=(0.0, 0.0), var_rp_range=(0.0, 0.0),
                          var_rr=0.0)
        assert np.all(ch.h_sr == 0) and np.all(ch.h_rd == 0)
        assert np.all(ch.h_rp == 0) and np.all(ch.h_rr == 0)
        assert ch.h_sd == 0 and ch.h_sp == 0

    def test_mean_square_matches_variance(self):
        # one call with many relays estimates E|h|^2 for the per-relay links
        ch = gen_channels(7, 100_000, var_sd=0.1)
        assert abs(np.mean(np.abs(ch.h_sr) ** 2) - 1.0) < 0.02
        assert abs(np.mean(np.abs(ch.h_rd) ** 2) - 1.0) < 0.02
        assert abs(np.mean(np.abs(ch.h_rr) ** 2) - 1.0) < 0.02
        # h_rp variance is drawn per relay from [0.8, 1.0]: mean 0.9
        assert abs(np.mean(np.abs(ch.h_rp) ** 2) - 0.9) < 0.02

    def test_scalar_links_mean_square(self):
        sds = []
        sps = []
        for seed in range(4000):
            ch = gen_channels(seed, 1, var_sd=0.1)
            sds.append(abs(ch.h_sd) ** 2)
            sps.append(abs(ch.h_sp) ** 2)
        assert abs(np.mean(sds) - 0.1) < 0.01
        assert abs(np.mean(sps) - 0.9) < 0.06

    def test_prefix_extension(self):
        # growing K extends the same channel set
        small = gen_channels(42, 3)
        big = gen_channels(42, 5)
        assert np.array_equal(small.h_sr, big.h_sr[:3])
        assert np.array_equal(small.h_rd, big.h_rd[:3])
        assert np.array_equal(small.h_rp, big.h_rp[:3])
        assert np.array_equal(small.h_rr, big.h_rr[:3])
        assert small.h_sd == big.h_sd and small.h_sp == big.h_sp

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            gen_channels(1, 0)
        with pytest.raises(ValueError):
            gen_channels(1, 2, var_sr=-1.0)
        with pytest.raises(ValueError):
            gen_channels(1, 2, var_sp_range=(1.0, 0.5))


class TestAmplificationGain:
    def test_substitution(self):
        # p_s*g_sr + zeta*p_rk*g_rr + sigma2 = 2 + 0.5*2 + 1 = 4
        ch = manual_channels()
        params = SystemParams(zeta=0.5)
        g = amplification_gain(ch, params, PowerAllocation(2.0, 2.0), 0)
        assert g == pytest.approx(0.5, rel=1e-15)

    def test_degenerate_input(self):
        ch = manual_channels(h_sr=0j, h_rr=0j)
        params = SystemParams(zeta=0.5, sigma2_rk=0.0)
        with pytest.raises(ValueError, match="degenerate"):
            amplification_gain(ch, params, PowerAllocation(0.0, 0.0), 0)


class TestRates:
    def test_exact_rate_x1_y1(self):
        ch = manual_channels()
        params = SystemParams(zeta=0.0)
        rate = exact_rate(ch, params, PowerAllocation(1.0, 1.0), 0)
        assert rate == pytest.approx(LOG2_4_3, rel=1e-14)

    def test_exact_rate_x3_y3(self):
        ch = manual_channels()
        params = SystemParams(zeta=0.0)
        rate = exact_rate(ch, params, PowerAllocation(3.0, 3.0), 0)
        assert rate == pytest.approx(LOG2_16_7, rel=1e-14)

    def test_zero_power_zero_rate(self):
        ch = manual_channels()
        params = SystemParams()
        assert exact_rate(ch, params, PowerAllocation(0.0, 5.0), 0) == 0.0
        assert exact_rate(ch, params, PowerAllocation(5.0, 0.0), 0) == 0.0

    def test_approx_matches_exact_when_si_dominates(self):
        # zeta_hat*p_rk = 1000 >> sigma2_rk = 1
        ch = manual_channels()
        params = SystemParams(zeta=1.0)
        alloc = PowerAllocation(10.0, 1000.0)
        ex = exact_rate(ch, params, alloc, 0)
        ap = approx_rate(ch, params, alloc, 0)
        assert ap >= ex
        assert (ap - ex) / ex < 0.002

    def test_approx_equals_unit_substitution(self):
        # zeta_hat=1, p_s=p_rk=1: x=1, ybar=1
        ch = manual_channels()
        params = SystemParams(zeta=1.0)
        ap = approx_rate(ch, params, PowerAllocation(1.0, 1.0), 0)
        assert ap == pytest.approx(LOG2_4_3, rel=1e-14)

    def test_approx_rejects_ideal_cancellation(self):
        ch = manual_channels()
        with pytest.raises(ValueError, match="exact_rate"):
            approx_rate(ch, SystemParams(zeta=0.0), PowerAllocation(1, 1), 0)
        ch0 = manual_channels(h_rr=0j)
        with pytest.raises(ValueError, match="exact_rate"):
            approx_rate(ch0, SystemParams(zeta=0.5), PowerAllocation(1, 1), 0)

    @settings(max_examples=200, deadline=None)
    @given(ps=st.floats(0.01, 1e4), prk=st.floats(0.01, 1e4),
           zeta=st.floats(1e-4, 1.0), g_rr=st.floats(0.01, 4.0))
    def test_approx_upper_bounds_exact(self, ps, prk, zeta, g_rr):
        ch = manual_channels(h_rr=complex(math.sqrt(g_rr), 0.0))
        params = SystemParams(zeta=zeta)
        alloc = PowerAllocation(ps, prk)
        assert (approx_rate(ch, params, alloc, 0)
                >= exact_rate(ch, params, alloc, 0) - 1e-12)

    @settings(max_examples=100, deadline=None)
    @given(ps1=st.floats(0.0, 1e3), ps2=st.floats(0.0, 1e3),
           prk=st.floats(0.01, 1e3))
    def test_exact_rate_monotone_in_ps(self, ps1, ps2, prk):
        lo, hi = sorted((ps1, ps2))
        ch = manual_channels()
        params = SystemParams(zeta=0.01)
        r_lo = exact_rate(ch, params, PowerAllocation(lo, prk), 0)
        r_hi = exact_rate(ch, params, PowerAllocation(hi, prk), 0)
        assert r_hi >= r_lo - 1e-12


class TestInterferenceNoncoherent:
    def test_substitution(self):
        ch = manual_channels(h_sp=2.0 + 0j, h_rp=1.0 + 0j)
        params = SystemParams(zeta=0.5)
        val = interference_noncoherent(ch, params, PowerAllocation(3.0, 2.0), 0)
        # 4*3 + 1*2*1.5 = 15
        assert val == pytest.approx(15.0, rel=1e-15)

    def test_matches_unsimplified_form(self):
        # oracle: direct leakage + amplified forward power, before the
        # G^2 cancellation
        rng = np.random.default_rng(0)
        for _ in range(1000):
            ch = gen_channels(int(rng.integers(1 << 30)), 1)
            params = SystemParams(zeta=float(rng.uniform(0, 0.5)))
            alloc = PowerAllocation(float(rng.uniform(0.01, 50)),
                                    float(rng.uniform(0.01, 50)))
            g_sr, _, g_rp, g_rr = ch.gains(0)
            g_sp = abs(ch.h_sp) ** 2
            g = amplification_gain(ch, params, alloc, 0)
            forwarded = alloc.p_rk * g * g * (
                alloc.p_s * g_sr + params.zeta * alloc.p_rk * g_rr
                + params.sigma2_rk)
            oracle = (g_sp * alloc.p_s
                      + g_rp * (params.zeta * alloc.p_rk + forwarded))
            val = interference_noncoherent(ch, params, alloc, 0)
            assert val == pytest.approx(oracle, rel=1e-12)

    def test_monotone_in_powers(self):
        ch = gen_channels(3, 1)
        params = SystemParams(zeta=0.1)
        base = interference_noncoherent(ch, params, PowerAllocation(1, 1), 0)
        assert interference_noncoherent(
            ch, params, PowerAllocation(2, 1), 0) >= base
        assert interference_noncoherent(
            ch, params, PowerAllocation(1, 2), 0) >= base


class TestCoherent:
    def test_relay_silent_leaves_direct_term(self):
        ch = manual_channels(h_sp=0.5 + 0.5j)
        params = SystemParams(zeta=0.25)
        comp = coherent_components(ch, params, PowerAllocation(4.0, 0.0), 0)
        assert comp.b == 0
        assert comp.a == pytest.approx((0.5 + 0.5j) * 2.0, rel=1e-15)

    def test_raw_interference_endpoints(self):
        from fdcrn.model import CoherentComponents
        comp = CoherentComponents(a=1 + 0j, b=1 + 0j, phi_a=0.0, phi_b=0.0)
        assert interference_coherent_raw(comp, 0.0) == pytest.approx(4.0)
        assert interference_coherent_raw(comp, math.pi) == pytest.approx(
            0.0, abs=1e-30)

    def test_optimal_phase_aligned_case(self):
        from fdcrn.model import CoherentComponents
        comp = CoherentComponents(a=2 + 0j, b=1 + 0j, phi_a=0.0, phi_b=0.0)
        phi, icoh = optimal_phase(comp)
        assert phi == pytest.approx(math.pi, rel=1e-15)
        assert icoh == pytest.approx(1.0, rel=1e-15)

    def test_equal_magnitudes_cancel(self):
        from fdcrn.model import CoherentComponents
        comp = CoherentComponents(a=1 + 1j, b=math.sqrt(2) + 0j,
                                  phi_a=math.atan2(1, 1), phi_b=0.0)
        _, icoh = optimal_phase(comp)
        assert icoh == pytest.approx(0.0, abs=1e-15)

    def test_phase_grid_oracle(self):
        # dense grid never beats the closed-form minimum, and the optimal
        # phase achieves it
        rng = np.random.default_rng(11)
        phis = np.linspace(0.0, 2 * math.pi, 4001)
        for _ in range(50):
            ch = gen_channels(int(rng.integers(1 << 30)), 1)
            params = SystemParams(zeta=float(rng.uniform(0, 0.4)))
            alloc = PowerAllocation(float(rng.uniform(0.1, 50)),
                                    float(rng.uniform(0.1, 50)))
            comp = coherent_components(ch, params, alloc, 0)
            grid = np.abs(comp.a + comp.b * np.exp(-1j * phis)) ** 2
            phi_opt, icoh = optimal_phase(comp)
            scale = (abs(comp.a) + abs(comp.b)) ** 2
            assert grid.min() >= icoh - 1e-9 * scale
            raw = interference_coherent_raw(comp, phi_opt)
            assert raw == pytest.approx(icoh, rel=1e-12, abs=1e-12 * scale)

    def test_interference_coherent_matches_components(self):
        ch = gen_channels(9, 2)
        params = SystemParams(zeta=0.01)
        alloc = PowerAllocation(12.0, 7.0)
        comp = coherent_components(ch, params, alloc, 1)
        _, icoh = optimal_phase(comp)
        assert interference_coherent(ch, params, alloc, 1) == pytest.approx(
            icoh, rel=1e-14)

    def test_phase_to_delay(self):
        assert phase_to_delay(math.pi, 1e6) == pytest.approx(5e-7)
        with pytest.raises(ValueError):
            phase_to_delay(1.0, 0.0)


class TestHalfDuplex:
    def test_substitution(self):
        ch = manual_channels()
        params = SystemParams(zeta=0.7)  # zeta is irrelevant for HD
        rate = hd_baseline_rate(ch, params, PowerAllocation(3.0, 3.0), 0)
        assert rate == pytest.approx(HD_16_7, rel=1e-14)

    def test_full_duplex_doubles_hd_under_ideal_sic(self):
        rng = np.random.default_rng(21)
        params = SystemParams(zeta=0.0)
        for _ in range(100):
            ch = gen_channels(int(rng.integers(1 << 30)), 1)
            alloc = PowerAllocation(float(rng.uniform(0.1, 100)),
                                    float(rng.uniform(0.1, 100)))
            fd = exact_rate(ch, params, alloc, 0)
            hd = hd_baseline_rate(ch, params, alloc, 0)
            assert fd == pytest.approx(2.0 * hd, rel=1e-13)

    def test_per_phase_caps(self):
        ch = manual_channels(h_sp=1.0 + 0j, h_rp=1.0 + 0j)
        params = SystemParams(i_bar_p=4.0)
        assert hd_feasible(ch, params, PowerAllocation(4.0, 4.0), 0)
        assert not hd_feasible(ch, params, PowerAllocation(4.1, 1.0), 0)
        assert not hd_feasible(ch, params, PowerAllocation(1.0, 4.1), 0)


class TestHelpers:
    def test_db_roundtrip(self):
        assert db_to_linear(20.0) == pytest.approx(100.0)
        assert linear_to_db(db_to_linear(7.3)) == pytest.approx(7.3)
        with pytest.raises(ValueError):
            linear_to_db(0.0)

    def test_residual_si(self):
        ch = manual_channels(h_rr=2.0 + 0j)
        assert residual_si(ch, SystemParams(zeta=0.1), 0) == pytest.approx(0.4)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SystemParams(zeta=-0.1)
        with pytest.raises(ValueError):
            SystemParams(sigma2_d=0.0)
        with pytest.raises(ValueError):
            SystemParams(i_bar_p=-1.0)
        with pytest.raises(ValueError):
            PowerAllocation(-1.0, 0.0)

    def test_channel_shape_validation(self):
        with pytest.raises(ValueError):
            ChannelSet(k=2, h_sr=np.zeros(1, np.complex128),
                       h_rd=np.zeros(2, np.complex128),
                       h_rp=np.zeros(2, np.complex128),
                       h_rr=np.zeros(2, np.complex128), h_sd=0j, h_sp=0j)
