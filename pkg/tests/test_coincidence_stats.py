import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairsource.coincidence_stats import (CANONICAL_SETTINGS, Correlation, CorrelationCurve, CountRecord,
                                          CurvePoint, VisibilityFit, accidental_rate, chsh_from_model, chsh_S,
                                          corrected_visibility, correlation_E, efficiency_ratio,
                                          mean_rate_for_correction, model_coincidence_rate, model_joint_rates,
                                          power_slope, sincos_fit)
from pairsource.errors import DomainError, FitError

# mean rates solving V_corr = V R / (R - 943) for the two raw/corrected pairs
R_HV = 943 * 0.982 / (0.982 - 0.960)     # 42092.09
R_45 = 943 * 0.963 / (0.963 - 0.945)     # 50450.5


def model_curve(V, R, phi0, n=12, phi2=0.0, duration=1.0, span=180.0):
    phis = np.arange(n) * span / n
    return CorrelationCurve([CurvePoint(float(p), phi2, float(model_coincidence_rate(p - phi0, phi2, V, R)),
                                        duration) for p in phis])


# --- records, accidentals, efficiency -------------------------------------------

def test_count_record_invariants():
    with pytest.raises(ValueError):
        CountRecord(100, 50, 60)
    with pytest.raises(ValueError):
        CountRecord(-1, 50, 0)
    with pytest.raises(ValueError):
        CountRecord(1, 1, 1, duration=0)


def test_accidental_rate_values():
    # 420e3^2 * 6.8e-9 * 0.786 = 942.82272
    assert accidental_rate(420e3, 420e3, 6.8e-9, 0.214) == pytest.approx(942.82272, rel=1e-12)
    assert accidental_rate(420e3, 420e3, 6.8e-9, 1.0) == 0
    assert accidental_rate(420e3, 420e3, 0.0, 0.2) == 0
    with pytest.raises(ValueError):
        accidental_rate(1, 1, 1e-9, 1.2)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0, 1e6), b=st.floats(0, 1e6), k=st.floats(0, 10), tau=st.floats(1e-10, 1e-7))
def test_accidental_rate_bilinear(a, b, k, tau):
    base = accidental_rate(a, b, tau)
    assert accidental_rate(k * a, b, tau) == pytest.approx(k * base, rel=1e-12, abs=1e-300)
    assert accidental_rate(a, k * b, tau) == pytest.approx(k * base, rel=1e-12, abs=1e-300)
    assert accidental_rate(a, b, 2 * tau) == pytest.approx(2 * base, rel=1e-12, abs=1e-300)


def test_efficiency_ratio():
    rec = CountRecord(420e3, 420e3, 0.286 * 420e3)
    assert efficiency_ratio(rec) == pytest.approx((0.286, 0.286, 0.286), rel=1e-14)
    assert efficiency_ratio(CountRecord(10, 20, 0)) == (0, 0, 0)
    overall, s, i = efficiency_ratio(CountRecord(400, 100, 50))
    assert (overall, s, i) == pytest.approx((0.25, 0.5, 0.125))
    with pytest.raises(DomainError):
        efficiency_ratio(CountRecord(0, 10, 0))


def test_power_slope_exact_and_cutoff():
    recs = [CountRecord(1e6, 1e6, 900.0 * p, pump_power=p) for p in (50, 100, 200, 300)]
    fit = power_slope(recs)
    assert fit.slope == pytest.approx(900.0, rel=1e-12)
    assert fit.n_points == 4
    sat = recs + [CountRecord(1e6, 1e6, 360800, pump_power=465)]
    assert power_slope(sat).slope < 900
    assert power_slope(sat, power_cutoff=300).slope == pytest.approx(900.0, rel=1e-12)
    with pytest.raises(ValueError):
        power_slope(recs[:1])


def test_power_slope_stderr_scales_with_duration():
    recs = [CountRecord(1e6, 1e6, 900.0 * p, pump_power=p) for p in (50, 100, 200)]
    long = [CountRecord(1e6, 1e6, 900.0 * p, pump_power=p, duration=100) for p in (50, 100, 200)]
    assert power_slope(long).stderr == pytest.approx(power_slope(recs).stderr / 10, rel=1e-12)


# --- fringe model and fit ------------------------------------------------------------

def test_model_rate_properties():
    assert model_coincidence_rate(10, 10, 1.0, 5e4) == pytest.approx(0, abs=1e-9)
    assert model_coincidence_rate(22.5, 0, 1.0, 5e4) == pytest.approx(5e4, rel=1e-12)
    phis = np.linspace(0, 90, 7)
    assert np.allclose(model_coincidence_rate(phis, 3, 0.9, 1e3), model_coincidence_rate(phis + 90, 3, 0.9, 1e3))
    with pytest.raises(ValueError):
        model_coincidence_rate(0, 0, 1.1, 1)


def test_fit_exact_recovery():
    fit = sincos_fit(model_curve(0.96, 42e3, 0.0))
    assert fit.visibility == pytest.approx(0.96, abs=1e-10)
    assert fit.mean_rate == pytest.approx(42e3, rel=1e-12)
    assert fit.residual_rms < 1e-8
    assert fit.phase == pytest.approx(0.0, abs=1e-8) or fit.phase == pytest.approx(90.0, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(V=st.floats(0.01, 1.0), R=st.floats(1.0, 1e6), phi0=st.floats(0, 89.999))
def test_fit_recovers_random_parameters(V, R, phi0):
    fit = sincos_fit(model_curve(V, R, phi0, n=6, span=90.0))
    assert fit.visibility == pytest.approx(V, abs=1e-10)
    assert fit.mean_rate == pytest.approx(R, rel=1e-10)
    d = (fit.phase - phi0 + 45) % 90 - 45
    assert abs(d) < 1e-6


def test_fit_constant_curve_has_undefined_phase():
    fit = sincos_fit(model_curve(0.0, 1e3, 0.0))
    assert fit.visibility == pytest.approx(0, abs=1e-12)
    assert not fit.phase_defined
    assert math.isnan(fit.phase)


def test_fit_error_bars_shrink_with_time():
    a = sincos_fit(model_curve(0.96, 42e3, 0.0, duration=1))
    b = sincos_fit(model_curve(0.96, 42e3, 0.0, duration=100))
    assert b.visibility_err == pytest.approx(a.visibility_err / 10, rel=1e-9)
    assert a.visibility_err > 0


def test_fit_errors():
    few = CorrelationCurve([CurvePoint(p, 0, 100) for p in (0, 10, 20)])
    with pytest.raises(FitError, match="four"):
        sincos_fit(few)
    # angles 0, 45 mod 90 repeated: sin 4phi is identically zero
    degenerate = CorrelationCurve([CurvePoint(p, 0, 100 + p) for p in (0, 45, 90, 135, 180, 225, 270.0, 315)])
    with pytest.raises(FitError):
        sincos_fit(degenerate)


def test_fit_rank_deficiency_names_direction():
    # four nominally distinct angles that all sit on the cos 4phi axis
    pts = [CurvePoint(p, 0, 100.0 + p) for p in (0.0, 45.0, 2e-9, 45 + 2e-9)]
    with pytest.raises(FitError, match="sin 4phi"):
        sincos_fit(CorrelationCurve(pts))


def test_fit_independent_of_input_order():
    c = model_curve(0.8, 1e4, 12.0)
    rev = CorrelationCurve(list(reversed(c.points)))
    a, b = sincos_fit(c), sincos_fit(rev)
    assert a.visibility == pytest.approx(b.visibility, abs=1e-14)


# --- accidental correction ------------------------------------------------------------

def _fit(V, R):
    return VisibilityFit(V, R, 0.0, 0.0)


def test_corrected_visibility_pairs():
    assert corrected_visibility(_fit(0.960, R_HV), 943) == pytest.approx(0.982, abs=1e-3)
    assert corrected_visibility(_fit(0.945, R_45), 943) == pytest.approx(0.963, abs=1e-3)
    assert corrected_visibility(_fit(0.960, R_HV), 0) == 0.960
    assert R_HV == pytest.approx(42092.09, rel=1e-6)
    assert mean_rate_for_correction(0.960, 0.982, 943) == pytest.approx(R_HV, rel=1e-14)


def test_corrected_visibility_monotone_in_floor():
    vals = [corrected_visibility(_fit(0.9, 1e4), a) for a in np.linspace(0, 900, 10)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0.9


def test_corrected_visibility_clamps_with_warning():
    with pytest.warns(RuntimeWarning, match="clamped"):
        assert corrected_visibility(_fit(0.96, 1000), 500) == 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        corrected_visibility(_fit(0.96, 1e5), 943)


def test_corrected_visibility_domain():
    with pytest.raises(DomainError):
        corrected_visibility(_fit(0.9, 900), 900)
    with pytest.raises(ValueError):
        corrected_visibility(_fit(0.9, 900), -1)


# --- correlations and CHSH ------------------------------------------------------------

def test_correlation_limits():
    assert correlation_E(0, 5, 5, 0).value == -1
    assert correlation_E(3, 3, 3, 3).value == 0
    assert correlation_E(7, 0, 0, 2).value == 1
    with pytest.raises(DomainError):
        correlation_E(0, 0, 0, 0)


def test_correlation_error():
    c = correlation_E(100, 300, 300, 100)
    assert c.value == pytest.approx(-0.5)
    assert c.stderr == pytest.approx(math.sqrt(0.75 / 800))


@settings(max_examples=40, deadline=None)
@given(n=st.lists(st.floats(0.1, 1e5), min_size=4, max_size=4), k=st.floats(1e-3, 1e3))
def test_correlation_scale_invariant(n, k):
    assert correlation_E(*n).value == pytest.approx(correlation_E(*(k * x for x in n)).value, abs=1e-12)


@pytest.mark.parametrize("delta", [0.0, 10.0, 22.5, 45.0, 67.5, 90.0])
@pytest.mark.parametrize("V", [1.0, 0.954, 0.3])
def test_model_correlation_closed_form(delta, V):
    e = correlation_E(*model_joint_rates(0.0, delta, V, 1e4)).value
    assert e == pytest.approx(-V * math.cos(math.radians(2 * delta)), abs=1e-10)


def test_chsh_ideal_and_measured_visibility():
    assert chsh_from_model(1.0).S == pytest.approx(-2 * math.sqrt(2), abs=1e-10)
    # -2 sqrt2 * 0.954 = -2.69832
    assert chsh_from_model(0.954).S == pytest.approx(-2.6979, abs=0.01)
    assert chsh_S(0.0, 0.0, 0.0, 0.0).S == 0


@settings(max_examples=40, deadline=None)
@given(V=st.floats(0, 1))
def test_chsh_linear_in_visibility(V):
    assert chsh_from_model(V, mean_rate=5e4).S == pytest.approx(-2 * math.sqrt(2) * V, abs=1e-10)


def test_chsh_errors_in_quadrature():
    r = chsh_S(Correlation(-0.7, 0.003, 1e5), Correlation(0.7, 0.004, 1e5),
               Correlation(-0.7, 0.0, 1e5), Correlation(-0.7, 0.0, 1e5))
    assert r.S == pytest.approx(-2.8)
    assert r.sigma_S == pytest.approx(0.005)
    assert r.violation_sigmas == pytest.approx(0.8 / 0.005)
    with pytest.raises(ValueError):
        chsh_S(1.5, 0, 0, 0)


def test_chsh_error_shrinks_with_counts():
    a = chsh_from_model(0.954, mean_rate=1e3, duration=1)
    b = chsh_from_model(0.954, mean_rate=1e3, duration=100)
    assert b.sigma_S == pytest.approx(a.sigma_S / 10, rel=1e-9)
    assert set(a.settings) == set(CANONICAL_SETTINGS)
