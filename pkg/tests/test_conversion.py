import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants as sc

from oamqi.conversion import (
    ConversionChannel,
    CrystalParams,
    EfficiencyReport,
    beams_for_geometry,
    check_reported_quantum_efficiency,
    efficiency_report,
    heisenberg_evolve,
    normalized_efficiency_curve,
    p_max,
    power_to_quantum_efficiency,
    pump_to_efficiency,
    sfg_power,
)
from oamqi.errors import ContractViolation, EfficiencyDiscrepancyWarning, OverRotationWarning
from oamqi.overlap import FocusGeometry

WL = (795e-9, 1560e-9, 525e-9)
G03 = FocusGeometry(0.3)

# [DERIVED] closed form evaluated with scipy constants and the dblquad value of h(0, 0.3)
P_MAX_DEFAULT = 172.57475822


def test_p_max_reference_value(h_ref):
    n_s, n_f, d, L = 1.816, 1.889, 9.5e-12, 10e-3
    ref = sc.epsilon_0 * sc.c * n_s * n_f * WL[0] * WL[1] * WL[2] / (16 * math.pi**2 * d**2 * L * h_ref(0, 0.3))
    assert ref == pytest.approx(P_MAX_DEFAULT, rel=1e-9)
    assert p_max(CrystalParams(), WL, G03) == pytest.approx(P_MAX_DEFAULT, rel=1e-8)


# ---------------------------------------------------------------- channel


@pytest.mark.parametrize("kl,inp,out", [
    (math.pi / 2, (1, 0), (0, 1)),
    (0.0, (3.0, 5.0), (3.0, 5.0)),
    (math.pi / 4, (1, 0), (0.5, 0.5)),
])
def test_heisenberg_examples(kl, inp, out):
    got = heisenberg_evolve(ConversionChannel(kl), *inp)
    assert got == pytest.approx(out, abs=1e-15)


def test_perfect_swap_exact():
    assert heisenberg_evolve(ConversionChannel(math.pi / 2), 1.0, 0.0) == (0.0, 1.0)
    assert heisenberg_evolve(ConversionChannel(math.pi), 2.0, 3.0) == (2.0, 3.0)
    assert ConversionChannel(math.pi / 2).efficiency == 1.0


@settings(max_examples=200, deadline=None)
@given(kl=st.floats(0, 10), ns=st.floats(0, 1e6), nf=st.floats(0, 1e6))
def test_photon_number_conserved(kl, ns, nf):
    a, b = heisenberg_evolve(ConversionChannel(kl), ns, nf)
    assert a + b == pytest.approx(ns + nf, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(ns=st.floats(0, 1e3), nf=st.floats(0, 1e3))
def test_swap_is_involution(ns, nf):
    ch = ConversionChannel(math.pi / 2)
    once = heisenberg_evolve(ch, ns, nf)
    twice = heisenberg_evolve(ch, *once)
    assert twice == pytest.approx((ns, nf), rel=1e-12, abs=1e-12)


def test_heisenberg_broadcasts_and_validates():
    a, b = heisenberg_evolve(ConversionChannel(0.3), np.array([1.0, 2.0]), 0.0)
    assert a.shape == (2,)
    with pytest.raises(ValueError):
        heisenberg_evolve(ConversionChannel(0.3), -1.0, 0.0)
    with pytest.raises(ValueError):
        ConversionChannel(-0.1)


def test_channel_from_efficiency_round_trip():
    for eta in (0.0, 0.061, 0.5, 1.0):
        assert ConversionChannel.from_efficiency(eta).efficiency == pytest.approx(eta, abs=1e-15)


# ---------------------------------------------------------------- pump power law


def test_pump_to_efficiency_examples():
    assert pump_to_efficiency(177.0, 177.0) == pytest.approx(1.0, abs=1e-15)
    assert pump_to_efficiency(0.0, 177.0) == 0.0
    assert pump_to_efficiency(22.3, 177.0) == pytest.approx(0.280, abs=5e-4)


def test_pump_to_efficiency_monotone():
    p = np.linspace(0, 170, 500)
    eta = [pump_to_efficiency(x, 170.0) for x in p]
    assert np.all(np.diff(eta) >= 0)


def test_over_rotation_warns_and_returns_literal_value():
    with pytest.warns(OverRotationWarning):
        eta = pump_to_efficiency(4 * 100.0, 100.0)
    assert eta == pytest.approx(math.sin(math.pi) ** 2, abs=1e-15)


# ---------------------------------------------------------------- P_max


def test_p_max_published_value():
    # [PUBLISHED] 170 W +/- 20 %
    assert p_max(CrystalParams(), WL, G03) == pytest.approx(170.0, rel=0.20)


def test_p_max_scaling():
    base = p_max(CrystalParams(), WL, h0=0.242)
    assert p_max(CrystalParams(length=20e-3), WL, h0=0.242) == pytest.approx(base / 2, rel=1e-15)
    assert p_max(CrystalParams(d_eff=19e-12), WL, h0=0.242) == pytest.approx(base / 4, rel=1e-15)


def test_p_max_needs_geometry_or_h0():
    with pytest.raises(ValueError):
        p_max(CrystalParams(), WL)


# ---------------------------------------------------------------- SFG power


def _beams(l=0, ps=1e-3, pp=22.3, xi=0.3):
    crystal = CrystalParams()
    g = FocusGeometry(xi)
    pump, sig = beams_for_geometry(g, crystal, pp, ps, l)
    return pump, sig, crystal, g


def test_sfg_zero_signal():
    pump, sig, crystal, g = _beams(ps=0.0)
    assert sfg_power(pump, sig, crystal, g) == 0.0


@pytest.mark.parametrize("l", [0, 1, 2])
def test_sfg_linear_in_signal(l):
    pump, sig, crystal, g = _beams(l)
    assert sfg_power(pump, sig.with_power(2e-3), crystal, g) == 2 * sfg_power(pump, sig, crystal, g)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.01, 100), b=st.floats(0.01, 100))
def test_sfg_bilinear(a, b):
    pump, sig, crystal, g = _beams(1)
    base = sfg_power(pump, sig, crystal, g)
    scaled = sfg_power(pump.with_power(a * pump.power), sig.with_power(b * sig.power), crystal, g)
    assert scaled == pytest.approx(a * b * base, rel=1e-12)


def test_sfg_low_power_matches_p_max_relation():
    # small-signal limit: P_sfg/P_s * lambda_sfg/lambda_s = P_p/P_max (exact for the closed forms)
    pump, sig, crystal, g = _beams(0, pp=1.0)
    lam_sfg = 1 / (1 / WL[0] + 1 / WL[1])
    q = sfg_power(pump, sig, crystal, g) / sig.power * lam_sfg / WL[1]
    pm = p_max(crystal, (WL[0], WL[1], lam_sfg), g)
    assert q == pytest.approx(1.0 / pm, rel=1e-9)


def test_sfg_rejects_mismatched_geometry_and_indices():
    pump, sig, crystal, g = _beams(1)
    with pytest.raises(ValueError):
        sfg_power(pump, sig, crystal, FocusGeometry(0.5))
    with pytest.raises(ValueError):
        sfg_power(pump, sig, crystal.scaled(n_signal=2.0), None)
    with pytest.raises(ValueError):
        sfg_power(pump.with_oam(1), sig, crystal, g)


# ---------------------------------------------------------------- quantum efficiency


def test_power_to_quantum_examples():
    assert power_to_quantum_efficiency(0.66, 1560e-9, 525e-9) == pytest.approx(0.224, rel=0.02)
    assert power_to_quantum_efficiency(0.0, 1560e-9, 525e-9) == 0.0
    assert power_to_quantum_efficiency(0.0893, 1560e-9, 525e-9) == pytest.approx(0.0296, rel=0.05)


def test_power_to_quantum_contract():
    with pytest.raises(ContractViolation):
        power_to_quantum_efficiency(0.9, 525e-9, 1560e-9)
    with pytest.raises(ValueError):
        power_to_quantum_efficiency(1.2, 1560e-9, 525e-9)


def test_reported_efficiency_checks():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ok = check_reported_quantum_efficiency(0.66, 0.224)
        l2 = check_reported_quantum_efficiency(0.0893, 0.0296)
    assert not ok.flagged and ok.accepted
    assert not l2.flagged and l2.accepted
    with pytest.warns(EfficiencyDiscrepancyWarning):
        l1 = check_reported_quantum_efficiency(0.259, 0.0833)
    assert l1.flagged and l1.accepted
    assert l1.relative_discrepancy == pytest.approx(0.0872 / 0.0833 - 1, abs=2e-3)


# ---------------------------------------------------------------- normalized curve


def test_curve_published_ratios():
    curve = dict(normalized_efficiency_curve(2, G03))
    assert curve[0] == 1.0
    assert curve[1] == pytest.approx(0.0833 / 0.224, rel=0.20)
    assert curve[2] == pytest.approx(0.0296 / 0.224, rel=0.25)


def test_curve_ratio_is_oracle_consistent(h_ref):
    # eta(l)/eta(0) = 2^l h(l)/h(0) for fixed powers
    curve = dict(normalized_efficiency_curve(3, G03))
    for l in (1, 2, 3):
        assert curve[l] == pytest.approx(2**l * h_ref(l, 0.3) / h_ref(0, 0.3), rel=1e-7)


@pytest.mark.parametrize("xi", [0.05, 0.1, 0.3, 0.6, 1.0])
def test_curve_strictly_decreasing(xi):
    vals = [v for _, v in normalized_efficiency_curve(10, FocusGeometry(xi))]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert all(v > 0 for v in vals)


def test_curve_range():
    with pytest.raises(Exception):
        normalized_efficiency_curve(11, G03)


# ---------------------------------------------------------------- report


def test_efficiency_report_default_operating_point():
    rep = efficiency_report(22.3, CrystalParams(), G03, WL)
    assert rep.eta_quantum == pytest.approx(pump_to_efficiency(22.3, P_MAX_DEFAULT), rel=1e-9)
    assert rep.eta_power == pytest.approx(rep.eta_quantum * WL[1] / WL[2], rel=1e-12)
    assert not rep.over_rotated


def test_efficiency_report_over_rotation_flag():
    with pytest.warns(OverRotationWarning):
        rep = efficiency_report(300.0, CrystalParams(), G03, WL)
    assert rep.over_rotated


def test_report_invariant():
    with pytest.raises(ContractViolation):
        EfficiencyReport(0.5, 1.5, 100.0, 10.0)


def test_crystal_validation():
    with pytest.raises(ValueError):
        CrystalParams(length=0)
    assert CrystalParams().scaled(length=0.02).length == 0.02
