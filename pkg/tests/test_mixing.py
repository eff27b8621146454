import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from conftest import ghz
from lhtwpa import line_model as lm
from lhtwpa import mixing as mx
from lhtwpa.errors import InvalidParameterError, OutOfBandError


def pump(f_ghz, ratio=0.5):
    return mx.PumpDrive.from_ghz(f_ghz, ratio)


# -- coefficients ----------------------------------------------------------


def test_mixing_coefficient(left_line, right_line):
    assert mx.mixing_coefficient(left_line, pump(7.5)) == pytest.approx(6.32e-3, abs=5e-5)
    assert mx.mixing_coefficient(left_line, pump(7.5, 0.0)) == 0.0
    r1 = mx.mixing_coefficient(left_line, pump(7.5, 0.2))
    r2 = mx.mixing_coefficient(left_line, pump(7.5, 0.4))
    assert r2 == pytest.approx(4 * r1, rel=1e-14)
    assert mx.mixing_coefficient(right_line, pump(7.5)) == pytest.approx(0.25 / 16, rel=1e-15)


def test_pump_drive_validation(left_line):
    with pytest.raises(InvalidParameterError):
        mx.PumpDrive(ghz(7.5), 1.0)
    with pytest.raises(InvalidParameterError):
        mx.PumpDrive(-1.0, 0.5)
    with pytest.raises(OutOfBandError):
        mx.mixing_coefficient(left_line, pump(45.0))


def test_phase_coefficients_degenerate(left_line):
    p = pump(7.5)
    c = mx.phase_coefficients(left_line, p, 0.0)
    rho = mx.mixing_coefficient(left_line, p)
    q = ghz(7.5) / lm.group_velocity(left_line, ghz(7.5))
    assert c.alpha_s == pytest.approx(2 * rho * q, rel=1e-14)
    assert c.alpha_i == pytest.approx(2 * rho * q, rel=1e-14)
    assert c.beta_s == pytest.approx(rho * q, rel=1e-14)
    assert c.alpha_p == pytest.approx(rho * q, rel=1e-14)


def test_phase_coefficients_signs(left_line):
    p = pump(7.5)
    deltas = np.linspace(-0.95, 0.95, 101)
    c = mx.phase_coefficients(left_line, p, deltas)
    for arr in (c.alpha_s, c.alpha_i, c.beta_s, c.beta_i):
        assert np.all(arr < 0)
    assert np.all(c.alpha_p < 0)
    np.testing.assert_allclose(c.alpha_s / c.beta_s, 2.0, rtol=1e-15)
    assert np.all(2 * c.alpha_p > c.alpha_s + c.alpha_i)


def test_nonlinear_mismatch(left_line, right_line):
    p = pump(7.5)
    rho = mx.mixing_coefficient(left_line, p)
    vg = lm.group_velocity(left_line, ghz(7.5))
    assert mx.nonlinear_mismatch(left_line, p, 0.0) == pytest.approx(-2 * rho * ghz(7.5) / vg, rel=1e-13)
    deltas = np.linspace(0.01, 0.99, 50)
    assert np.all(mx.nonlinear_mismatch(left_line, p, deltas) > 0)
    assert np.all(mx.nonlinear_mismatch(right_line, p, np.linspace(0.01, 0.9, 50)) < 0)
    slow = mx.PumpDrive(0.02 * left_line.plasma_frequency, 0.05)
    exact = mx.nonlinear_mismatch(left_line, slow, 0.2)
    approx = mx.nonlinear_mismatch(left_line, slow, 0.2, approximate=True)
    assert approx == pytest.approx(exact, rel=2e-3)
    with pytest.raises(InvalidParameterError):
        mx.nonlinear_mismatch(right_line, p, 0.1, approximate=True)


def test_coupling_set_identities(left_line):
    c = mx.gain_rate(left_line, pump(7.5), 0.05)
    assert c.dk == c.dk_linear + c.dk_nonlinear
    lhs = c.g**2 + (c.dk / 2) ** 2
    assert lhs.real == pytest.approx(c.beta_s * c.beta_i, rel=1e-12)
    assert abs(lhs.imag) <= 1e-12 * c.beta_s * c.beta_i


def test_gain_rate_special_cases():
    matched = mx.CouplingSet.from_rates(-3.0, -5.0, 1.0, -1.0)
    assert matched.g == pytest.approx(np.sqrt(15.0), rel=1e-15)
    threshold = mx.CouplingSet.from_rates(-2.0, -2.0, 3.0, 1.0)
    assert threshold.g_squared == 0.0
    assert threshold.g == 0


# -- gain at length -------------------------------------------------------


def test_zero_length_is_identity(left_line):
    point = mx.gain_at_length(mx.gain_rate(left_line, pump(7.5), 0.05), 0.0)
    assert point.cis_gain == 1.0
    assert point.trans_gain == 0.0
    assert point.phase == 0.0
    with pytest.raises(InvalidParameterError):
        mx.gain_at_length(mx.gain_rate(left_line, pump(7.5), 0.05), -1e-3)


def test_matched_gain_is_cosh_squared():
    c = mx.CouplingSet.from_rates(-40.0, -60.0, 2.5, -2.5)
    x = 0.02
    g = np.sqrt(2400.0)
    point = mx.gain_at_length(c, x)
    assert point.cis_gain == pytest.approx(np.cosh(g * x) ** 2, rel=1e-14)
    assert point.phase == 0.0


def test_unmatched_regime_oscillates():
    c = mx.CouplingSet.from_rates(-1.0, -1.0, 10.0, 0.0)
    assert c.g_squared < 0
    xs = np.linspace(0, 5, 200)
    point = mx.gain_at_length(c, xs)
    assert np.all(point.cis_gain >= 1 - 1e-15)
    assert point.cis_gain.max() < 1.05


def _ode_reference(c, x, a_s, a_i):
    def rhs(t, y):
        s, i = y[0] + 1j * y[1], y[2] + 1j * y[3]
        ph = np.exp(1j * c.dk * t)
        ds = 1j * c.beta_s * np.conj(i) * ph
        di = 1j * c.beta_i * np.conj(s) * ph
        return [ds.real, ds.imag, di.real, di.imag]

    sol = solve_ivp(rhs, (0, x), [a_s.real, a_s.imag, a_i.real, a_i.imag], rtol=1e-12, atol=1e-14, method="DOP853")
    y = sol.y[:, -1]
    return y[0] + 1j * y[1], y[2] + 1j * y[3]


@pytest.mark.parametrize("delta", [0.0, 0.03, 0.0805, 0.2, 0.6])
def test_output_amplitudes_match_ode(left_line, delta):
    c = mx.gain_rate(left_line, pump(7.5), delta)
    x = 300 * left_line.cell_pitch
    a_s, a_i = 0.3 - 0.2j, -0.1 + 0.4j
    out = mx.output_amplitudes(c, x, a_s, a_i)
    ref = _ode_reference(c, x, a_s, a_i)
    np.testing.assert_allclose(out, ref, rtol=1e-8, atol=1e-10)


def test_output_amplitudes_gain_definitions(left_line):
    c = mx.gain_rate(left_line, pump(7.5), 0.05)
    x = 1000 * left_line.cell_pitch
    point = mx.gain_at_length(c, x)
    s, _ = mx.output_amplitudes(c, x, 1e-3, 0.0)
    assert abs(s) ** 2 == pytest.approx(point.cis_gain * 1e-6, rel=1e-12)
    s, _ = mx.output_amplitudes(c, x, 0.0, 1e-3)
    assert abs(s) ** 2 == pytest.approx(point.trans_gain * 1e-6, rel=1e-12)
    _, i = mx.output_amplitudes(c, x, 1e-3, 0.0)
    assert abs(i) ** 2 == pytest.approx(point.trans_gain_idler * 1e-6, rel=1e-12)


# -- peak predictors -------------------------------------------------------


def test_peak_detuning_examples(left_line):
    peak = mx.peak_detuning(left_line, pump(7.5))
    assert peak.closed_form == pytest.approx(0.080, abs=1e-3)
    assert peak.numeric == pytest.approx(0.0805, abs=1e-3)
    assert peak.diagnostic == ""
    tiny = mx.peak_detuning(left_line, pump(7.5, 1e-4))
    assert tiny.closed_form < 1e-4
    w_p = 0.3 * left_line.omega_0
    ratio = np.sqrt(0.2) * 4 * w_p / left_line.omega_0
    assert mx.peak_detuning(left_line, mx.PumpDrive(w_p, ratio)).closed_form == pytest.approx(0.5, rel=1e-12)


def test_peak_detuning_at_root(left_line):
    p = pump(7.5)
    root = mx.peak_detuning(left_line, p).numeric
    c = mx.gain_rate(left_line, p, root)
    assert abs(c.dk) < 1e-9 * abs(c.dk_linear)
    x = 1000 * left_line.cell_pitch
    point = mx.gain_at_length(c, x)
    assert abs(point.phase) < 1e-9
    assert point.cis_gain == pytest.approx(np.cosh(np.sqrt(c.g_squared) * x) ** 2, rel=1e-8)


def test_peak_detuning_without_root(right_line):
    peak = mx.peak_detuning(right_line, pump(7.5))
    assert peak.numeric is None
    assert "negative" in peak.diagnostic


def test_peak_gain_per_cell(left_line, right_line):
    assert mx.peak_gain_per_cell(left_line, pump(7.0)) == pytest.approx(4.94e-3, abs=1e-5)
    assert mx.peak_gain_per_cell(left_line, pump(9.0)) == pytest.approx(2.32e-3, abs=1e-5)
    assert mx.peak_gain_per_cell(left_line, pump(7.5)) == pytest.approx(4.02e-3, abs=1e-5)
    assert mx.peak_gain_per_cell(left_line, pump(7.5, 0.0)) == 0.0
    with pytest.raises(InvalidParameterError):
        mx.peak_gain_per_cell(right_line, pump(7.5))
    # the small-rho estimate tracks the exact rate at the matched detuning
    root = mx.peak_detuning(left_line, pump(7.5)).numeric
    g_exact = np.sqrt(mx.gain_rate(left_line, pump(7.5), root).g_squared) * left_line.cell_pitch
    assert g_exact == pytest.approx(4.02e-3, rel=0.05)


# -- sweeps ----------------------------------------------------------------


def test_gain_sweep_left(left_line):
    curve = mx.gain_sweep(left_line, pump(7.5), 1000)
    assert curve.delta.shape == (2001,)
    assert curve.valid.all()
    assert curve.peak_gain_db == pytest.approx(30.0, abs=1.5)
    assert curve.peak_delta > 0
    assert abs(curve.delta[-1]) == pytest.approx(1 - mx.DEFAULT_GRID_GUARD, rel=1e-12)


def test_gain_sweep_right(right_line):
    curve = mx.gain_sweep(right_line, pump(7.5), 2000)
    assert curve.peak_gain_db == pytest.approx(11.0, abs=1.5)
    assert curve.peak_delta == pytest.approx(0.0, abs=1e-12)


def test_gain_sweep_pump_off(left_line):
    curve = mx.gain_sweep(left_line, pump(7.5, 0.0), 1000)
    np.testing.assert_array_equal(curve.cis_gain, 1.0)


def test_gain_sweep_marks_invalid_nodes(left_line):
    curve = mx.gain_sweep(left_line, pump(30.0), 100, deltas=np.array([-0.5, 0.0, 0.2, 0.5]))
    np.testing.assert_array_equal(curve.valid, [False, True, True, False])
    assert np.isnan(curve.cis_gain[0]) and np.isnan(curve.cis_gain[-1])


def test_peak_gain_decreases_with_pump_frequency(left_line):
    peaks = [mx.gain_sweep(left_line, pump(f), 800).peak_gain_db for f in (7, 8, 9)]
    assert peaks[0] > peaks[1] > peaks[2]


def test_gain_sweep_is_deterministic(left_line):
    a = mx.gain_sweep(left_line, pump(7.5), 1000)
    b = mx.gain_sweep(left_line, pump(7.5), 1000)
    np.testing.assert_array_equal(a.cis_gain, b.cis_gain)


# -- classification --------------------------------------------------------


def test_classify_quadrants(left_line, right_line):
    q = mx.classify_quadrant(left_line, pump(7.5), 0.05)
    assert (q.sign_linear, q.sign_nonlinear, q.matchable) == (-1, 1, True)
    q = mx.classify_quadrant(right_line, pump(7.5), 0.05)
    assert (q.sign_linear, q.sign_nonlinear, q.verdict) == (-1, -1, "unmatchable")
    assert q.label == "(dk_L<0, dk_NL<0)"
    w_zd = lm.zero_dispersion_frequency(left_line)
    above = mx.PumpDrive(1.05 * w_zd, 0.5)
    q = mx.classify_quadrant(left_line, above, 0.05)
    assert (q.sign_linear, q.sign_nonlinear, q.matchable) == (1, 1, False)
    with pytest.raises(InvalidParameterError):
        mx.classify_quadrant(left_line, pump(7.5), 0.0)


def test_contiguous_bands():
    x = np.arange(10.0)
    y = np.array([0, 2, 2, 0, 0, 3, 3, 3, 0, np.nan])
    bands = mx.contiguous_bands(x, y, 1.0)
    assert [(b.low, b.high) for b in bands] == [(0.5, 2.5), (4 + 1 / 3, 7 + 2 / 3)]
    assert mx.widest_band(x, y, 1.0).width == pytest.approx(10 / 3)
    assert mx.band_around(x, y, 1.0, 1).low == 0.5
    assert mx.widest_band(x, y, 5.0) is None


# -- properties ------------------------------------------------------------

rates = st.floats(-1e3, -1e-3)


@settings(max_examples=2000, deadline=None)
@given(rates, rates, st.floats(-1e3, 1e3), st.floats(0, 1.0))
def test_gain_identity_real_g(beta_s, beta_i, dk, x):
    c = mx.CouplingSet.from_rates(beta_s, beta_i, dk, 0.0)
    assume(c.g_squared >= 0)
    # float64 keeps the excess to ~eps * G_c, so stay below 60 dB
    assume(np.sqrt(c.g_squared) * x < 7.0)
    point = mx.gain_at_length(c, x)
    excess = point.cis_gain - np.sqrt(point.trans_gain * point.trans_gain_idler)
    assert excess == pytest.approx(1.0, rel=1e-9)
    assert point.cis_gain >= 1.0 and point.trans_gain >= 0.0


@settings(max_examples=500, deadline=None)
@given(st.floats(1.0, 100.0), st.floats(1e-10, 1e-3), st.floats(0.001, 0.1))
def test_continuity_across_threshold(beta, eps, x):
    # g^2 = +-eps * beta^2 straddles the g-real / g-imaginary boundary
    half = beta * np.sqrt(1 - eps)
    above = mx.gain_at_length(mx.CouplingSet.from_rates(-beta, -beta, 2 * half, 0.0), x)
    half = beta * np.sqrt(1 + eps)
    below = mx.gain_at_length(mx.CouplingSet.from_rates(-beta, -beta, 2 * half, 0.0), x)
    at = mx.gain_at_length(mx.CouplingSet.from_rates(-beta, -beta, 2 * beta, 0.0), x)
    tol = 1e-9 + 4 * eps * (beta * x) ** 2 * at.cis_gain
    assert abs(above.cis_gain - at.cis_gain) <= tol
    assert abs(below.cis_gain - at.cis_gain) <= tol


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_length_when_matched(beta, x1, x2):
    assume(abs(x1 - x2) > 1e-9)
    assume(beta * max(x1, x2) < 300)
    c = mx.CouplingSet.from_rates(-beta, -beta, 0.0, 0.0)
    lo, hi = sorted((x1, x2))
    assert mx.gain_at_length(c, hi).cis_gain >= mx.gain_at_length(c, lo).cis_gain
    if beta * (hi - lo) > 1e-6:
        assert mx.gain_at_length(c, hi).cis_gain > mx.gain_at_length(c, lo).cis_gain


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.6), st.floats(0.0, 0.9), st.floats(-0.98, 0.98))
def test_coupling_identity_random(y_p, ratio, frac):
    params = lm.LineParameters.from_engineering(1670, 9.6, 667, 10, "left")
    wp = y_p * params.plasma_frequency
    limit = min(1.0, params.plasma_frequency * (1 - 2e-6) / wp - 1)
    c = mx.gain_rate(params, mx.PumpDrive(wp, ratio), frac * limit)
    assert c.dk == c.dk_linear + c.dk_nonlinear
    lhs = c.g**2 + (c.dk / 2) ** 2
    scale = max(abs(c.beta_s * c.beta_i), (c.dk / 2) ** 2)
    assert abs(lhs - c.beta_s * c.beta_i) <= 1e-12 * scale
