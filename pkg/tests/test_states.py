import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oamqi.errors import (
    DegenerateStateError,
    NullProjectionError,
    UndefinedVisibilityError,
    UnsupportedStateError,
)
from oamqi.states import (
    H,
    V,
    OamPolState,
    ProjectionOp,
    coincidence_curve,
    fidelity_from_visibility,
    fit_fringe,
    hwp_transform,
    intensity_pattern,
    prepare_sagnac,
    projection_probability,
    simulate_fringe_scan,
    theta_from_hwp_angle,
    upconvert_vertical_projection,
    visibility,
)

S = 1 / math.sqrt(2)


def _close(a: OamPolState, b: OamPolState, tol=1e-12):
    keys = set(a.as_dict()) | set(b.as_dict())
    return all(abs(a.amplitude(*k) - b.amplitude(*k)) < tol for k in keys)


amps = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
keys = st.tuples(st.integers(-10, 10), st.sampled_from([H, V]))
states = st.dictionaries(keys, amps, min_size=1, max_size=6).filter(
    lambda d: sum(abs(a) ** 2 for a in d.values()) > 1e-6).map(lambda d: OamPolState.from_dict(d).normalized())


# ---------------------------------------------------------------- preparation


def test_prepare_l1_theta0():
    st_ = prepare_sagnac(1, 0.0)
    assert st_.as_dict() == pytest.approx({(1, H): S, (-1, V): S})


@given(theta=st.floats(-20, 20), l=st.integers(1, 10))
def test_prepared_norm(theta, l):
    assert prepare_sagnac(l, theta).norm2 == pytest.approx(1.0, abs=1e-14)


def test_prepare_theta_pi():
    assert prepare_sagnac(1, math.pi).amplitude(-1, V) == pytest.approx(-S, abs=1e-15)


def test_prepare_l0_degenerate():
    with pytest.raises(DegenerateStateError):
        prepare_sagnac(0, 0.0)


def test_duplicate_keys_rejected():
    with pytest.raises(ValueError):
        OamPolState((((1, H), 1.0), ((1, H), 0.5)))
    with pytest.raises(ValueError):
        OamPolState.from_dict({(1, "D"): 1.0})


# ---------------------------------------------------------------- HWP


@pytest.mark.parametrize("theta", [0.0, 0.4, math.pi, 2.5])
def test_hwp_maps_prepared_state(theta):
    l = 2
    out = hwp_transform(prepare_sagnac(l, theta))
    e = cmath.exp(1j * theta)
    want = OamPolState.from_dict({(l, H): 0.5, (-l, H): 0.5 * e, (l, V): 0.5, (-l, V): -0.5 * e})
    assert _close(out, want)


def test_hwp_twice():
    for pol in (H, V):
        twice = hwp_transform(hwp_transform(OamPolState.ket(3, pol)))
        assert _close(twice, OamPolState.ket(3, pol))
        assert twice.norm2 == pytest.approx(1.0)


def test_hwp_gaussian_split():
    out = hwp_transform(OamPolState.ket(0, H))
    assert abs(out.amplitude(0, H)) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitude(0, V)) ** 2 == pytest.approx(0.5)


@settings(max_examples=100, deadline=None)
@given(a=states, b=states)
def test_hwp_unitary(a, b):
    ha, hb = hwp_transform(a), hwp_transform(b)
    assert ha.norm2 == pytest.approx(1.0, abs=1e-12)
    assert ha.inner(hb) == pytest.approx(a.inner(b), abs=1e-12)


# ---------------------------------------------------------------- projection


def test_upconversion_projection_of_hwp_output():
    out, p = upconvert_vertical_projection(hwp_transform(prepare_sagnac(1, 0.0)))
    assert p == pytest.approx(0.5)
    assert _close(out, OamPolState.from_dict({(1, V): S, (-1, V): -S}))


def test_projection_of_pure_states():
    out, p = upconvert_vertical_projection(OamPolState.ket(2, V))
    assert p == 1.0 and _close(out, OamPolState.ket(2, V))
    with pytest.raises(NullProjectionError):
        upconvert_vertical_projection(OamPolState.ket(2, H))


@settings(max_examples=100, deadline=None)
@given(s=states)
def test_projection_completeness(s):
    discarded = sum(abs(a) ** 2 for (l, pol), a in s.terms if pol == H)
    try:
        out, p = upconvert_vertical_projection(s)
    except NullProjectionError:
        assert discarded == pytest.approx(1.0)
        return
    assert p == pytest.approx(1.0 - discarded, abs=1e-12)
    assert out.norm2 == pytest.approx(1.0, abs=1e-12)


def test_projection_op_probability_follows_curve():
    # plus-sign convention: theta -> theta + pi absorbs the projection's minus sign
    for theta in np.linspace(0, 2 * np.pi, 9):
        for phi in (0.0, 0.9):
            out, _ = upconvert_vertical_projection(hwp_transform(prepare_sagnac(1, theta - np.pi)))
            p = projection_probability(out, ProjectionOp(1, phi))
            assert p == pytest.approx(float(coincidence_curve(theta, phi)), abs=1e-12)


def test_projection_op_bra_normalized():
    assert ProjectionOp(2, 0.3).bra.norm2 == pytest.approx(1.0)


# ---------------------------------------------------------------- fringes


def test_coincidence_curve_examples():
    assert coincidence_curve(0.7, 0.7) == pytest.approx(1.0)
    assert coincidence_curve(0.7 + math.pi, 0.7) == pytest.approx(0.0, abs=1e-30)
    assert coincidence_curve(math.pi / 2, 0.0) == pytest.approx(0.5)


@given(t=st.floats(-50, 50), p=st.floats(-50, 50))
def test_coincidence_curve_period_and_symmetry(t, p):
    assert coincidence_curve(t + 2 * math.pi, p) == pytest.approx(coincidence_curve(t, p), abs=1e-9)
    assert coincidence_curve(t, p) == pytest.approx(coincidence_curve(p, t), abs=1e-12)


def test_visibility_and_fidelity_examples():
    assert fidelity_from_visibility(0.89) == pytest.approx(0.945)
    assert fidelity_from_visibility(1.0) == 1.0
    assert fidelity_from_visibility(0.0) == 0.5
    assert visibility(3.0, 1.0) == 0.5
    with pytest.raises(UndefinedVisibilityError):
        visibility(0, 0)
    with pytest.raises(ValueError):
        visibility(1, 2)


def test_noiseless_fit_round_trip():
    theta = 2 * np.pi * np.arange(16) / 16
    phi0 = 0.7
    counts = coincidence_curve(theta, phi0)
    fit = fit_fringe(theta, counts, sigma=np.ones_like(theta))
    assert fit.phase == pytest.approx(phi0, abs=1e-6)
    assert fit.visibility == pytest.approx(1.0, abs=1e-9)
    assert fit.fidelity == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(v=st.floats(0.05, 1.0), phi=st.floats(-3, 3), peak=st.floats(10, 1e6))
def test_noiseless_scan_fit_recovers_visibility(v, phi, peak):
    theta = 2 * np.pi * np.arange(16) / 16
    counts = simulate_fringe_scan(theta, v, peak, phi)
    fit = fit_fringe(theta, counts, sigma=np.ones_like(theta))
    assert fit.visibility == pytest.approx(v, abs=1e-9)
    assert math.remainder(fit.phase - phi, 2 * math.pi) == pytest.approx(0.0, abs=1e-7)


def test_noisy_scan_fit_fidelity():
    theta = 2 * np.pi * np.arange(16) / 16
    fits = [fit_fringe(theta, simulate_fringe_scan(theta, 0.89, 2e4, 0.0, seed=s)) for s in range(20)]
    for f in fits:
        assert f.fidelity == pytest.approx(0.945, abs=0.01)
        assert f.visibility_error > 0


def test_fringe_scan_deterministic_and_stream_separated():
    theta = np.linspace(0, 6, 12)
    a = simulate_fringe_scan(theta, 0.9, 1e3, seed=5)
    b = simulate_fringe_scan(theta, 0.9, 1e3, seed=5)
    c = simulate_fringe_scan(theta, 0.9, 1e3, seed=5, stream=1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_theta_convention():
    assert theta_from_hwp_angle(math.pi / 8) == pytest.approx(math.pi / 2)


# ---------------------------------------------------------------- intensity


def test_superposition_maxima_l1():
    sup = OamPolState.from_dict({(1, V): S, (-1, V): S})
    phi = np.linspace(-1.0, 2 * np.pi - 1.0, 3600, endpoint=False)
    I = intensity_pattern(sup, 1.0)(0.7, phi)
    peaks = phi[(I > np.roll(I, 1)) & (I > np.roll(I, -1))]
    assert peaks == pytest.approx([0.0, math.pi], abs=2e-3)


def test_superposition_pattern_shape():
    for l in (1, 2, 3):
        theta = 0.8
        sup = OamPolState.from_dict({(l, V): S, (-l, V): S * cmath.exp(1j * theta)})
        donut = intensity_pattern(OamPolState.ket(l, V), 1.0)
        pat = intensity_pattern(sup, 1.0)
        r, phi = 0.9, np.linspace(0, 2 * np.pi, 50)
        np.testing.assert_allclose(pat(r, phi), 2 * donut(r, phi) * np.cos(l * phi - theta / 2) ** 2, rtol=1e-12)


def test_l2_petal_period():
    sup = OamPolState.from_dict({(2, V): S, (-2, V): S})
    phi = np.linspace(0, 2 * np.pi, 7200, endpoint=False)
    I = intensity_pattern(sup, 1.0)(1.0, phi)
    peaks = phi[(I > np.roll(I, 1)) & (I >= np.roll(I, -1))]
    assert len(peaks) == 4
    assert np.diff(peaks) == pytest.approx([math.pi / 2] * 3, abs=1e-3)


def test_single_l_donut_uniform():
    I = intensity_pattern(OamPolState.ket(1, V), 1.0)(0.7, np.linspace(0, 2 * np.pi, 100))
    assert I.max() / I.min() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("l", [1, 2, 4])
def test_petals_redistribute_energy(l):
    sup = OamPolState.from_dict({(l, V): S, (-l, V): S * cmath.exp(0.3j)})
    pat = intensity_pattern(sup, 1.0)
    donut = intensity_pattern(OamPolState.ket(l, V), 1.0)
    for r in (0.3, 1.0):
        ring, _ = integrate.quad(lambda p: pat(r, p), 0, 2 * math.pi, epsabs=1e-14)
        assert ring == pytest.approx(2 * math.pi * donut(r, 0.0), rel=1e-10)


def test_intensity_normalized():
    pat = intensity_pattern(prepare_sagnac(2, 0.4), 1.5)
    tot, _ = integrate.dblquad(lambda r, p: pat(r, p) * r, 0, 2 * math.pi, 0, 15, epsabs=1e-12)
    assert tot == pytest.approx(1.0, rel=1e-8)


def test_mixed_l_unsupported():
    with pytest.raises(UnsupportedStateError):
        intensity_pattern(OamPolState.from_dict({(1, V): S, (2, V): S}), 1.0)
