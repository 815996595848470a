import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairsource.crystal_optics import Polarization, bbo
from pairsource.errors import DomainError, NoPhaseMatchingError
from pairsource.phasematch import (EmissionQuery, PumpConfig, bracket_scan, conjugate_wavelength,
                                   dtheta_dlambda, emission_cone, intersection_geometry, momentum_mismatch,
                                   solve_emission, sweep_emission)

DEG = math.pi / 180
O, E = Polarization.ORDINARY, Polarization.EXTRAORDINARY


# --- independent oracle: scalar re-derivation with no package code ----------

def _n(wl, a, b, c, d):
    return math.sqrt(a + b / (wl * wl - c) - d * wl * wl)


def _no(wl):
    return _n(wl, 2.7405, 0.0184, 0.0179, 0.0155)


def _ne(wl):
    return _n(wl, 2.3730, 0.0128, 0.0156, 0.0044)


def _n_eff(wl, cos_to_axis):
    c2 = cos_to_axis**2
    return 1 / math.sqrt(c2 / _no(wl) ** 2 + (1 - c2) / _ne(wl) ** 2)


def oracle_external_angle(theta_p, wl_p, wl_i, phi, idler_is_e, n_grid=20000):
    """Dense grid + own bisection on the longitudinal/transverse mismatch."""
    wl_s = 1 / (1 / wl_p - 1 / wl_i)
    ax = (-math.sin(theta_p), 0.0, math.cos(theta_p))
    kp = 2 * math.pi * _n_eff(wl_p, math.cos(theta_p)) / wl_p

    def idx(wl, v, is_e):
        norm = math.sqrt(sum(x * x for x in v))
        return _n_eff(wl, sum(a * b for a, b in zip(v, ax)) / norm) if is_e else _no(wl)

    def f(t):
        u = (math.sin(t) * math.cos(phi), math.sin(t) * math.sin(phi), math.cos(t))
        ki = 2 * math.pi * idx(wl_i, u, idler_is_e) / wl_i
        ks = (-ki * u[0], -ki * u[1], kp - ki * u[2])
        return math.sqrt(sum(x * x for x in ks)) - 2 * math.pi * idx(wl_s, ks, not idler_is_e) / wl_s

    ts = [k * (20 * DEG) / n_grid for k in range(n_grid + 1)]
    prev = f(ts[0])
    for a, b in zip(ts, ts[1:]):
        cur = f(b)
        if prev * cur <= 0:
            lo, hi = a, b
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if f(lo) * f(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            t = 0.5 * (lo + hi)
            u = (math.sin(t) * math.cos(phi), math.sin(t) * math.sin(phi), math.cos(t))
            return t, math.asin(idx(wl_i, u, idler_is_e) * math.sin(t))
        prev = cur
    return None


@pytest.mark.parametrize("phi, pol", [(0.0, O), (0.0, E), (math.pi / 2, E), (math.pi, O), (2.0, E)])
def test_solver_matches_oracle(crystal, pump, phi, pol):
    sol = solve_emission(crystal, pump, EmissionQuery(0.7022, phi, pol))
    t_int, t_ext = oracle_external_angle(pump.theta, 0.3511, 0.7022, phi, pol is E)
    assert sol.theta_i_int == pytest.approx(t_int, abs=1e-9)
    assert sol.theta_i_ext == pytest.approx(t_ext, abs=1e-9)


# --- conjugate wavelength ------------------------------------------------------

def test_conjugate_wavelength():
    assert conjugate_wavelength(0.3511, 0.7022) == pytest.approx(0.7022, rel=1e-15)
    # hand reciprocal: 1/(1/0.3511 - 1/0.690) = 0.71483918560...
    assert conjugate_wavelength(0.3511, 0.690) == pytest.approx(0.714839185600472, rel=1e-13)
    with pytest.raises(DomainError):
        conjugate_wavelength(0.3511, 0.3511)
    with pytest.raises(DomainError):
        conjugate_wavelength(0.3511, 0.2)


# --- mismatch and solver -------------------------------------------------------

def test_mismatch_changes_sign_across_bracket(crystal, pump):
    q = EmissionQuery(0.7022, math.pi / 2, E)
    _, _, brackets = bracket_scan(crystal, pump, q)
    assert brackets
    lo, hi = brackets[0]
    assert momentum_mismatch(crystal, pump, q, lo) * momentum_mismatch(crystal, pump, q, hi) <= 0


@pytest.mark.parametrize("pol", [O, E])
def test_degenerate_crossing_root_near_1_9_deg(crystal, pump, pol):
    sol = solve_emission(crystal, pump, EmissionQuery(0.7022, math.pi / 2, pol))
    assert abs(sol.residual) < 1e-8
    # 3.1 deg external / n ~ 1.6 gives an internal angle near 1.9 deg
    assert 1.7 < math.degrees(sol.theta_i_int) < 2.1
    assert math.degrees(sol.theta_i_ext) == pytest.approx(3.1, abs=0.3)


def test_no_phase_matching_at_small_pump_angle(crystal):
    bad = PumpConfig(0.3511, 5 * DEG)
    grid = np.radians(np.arange(0, 20.05, 0.05))
    res = momentum_mismatch(crystal, bad, EmissionQuery(0.7022), grid)
    assert np.all(res > 0)  # brute-force scan: no sign change
    with pytest.raises(NoPhaseMatchingError) as info:
        solve_emission(crystal, bad, EmissionQuery(0.7022))
    assert info.value.scan_range == (0.0, pytest.approx(20 * DEG))
    assert info.value.residual_min == pytest.approx(res.min())


def test_sweep_continuous_and_monotone(crystal, pump):
    rows = sweep_emission(crystal, pump, 0.69, 0.71, 0.0005)
    assert len(rows) == 41
    th = np.array([r.theta_i_ext for r in rows])
    assert np.all(np.isfinite(th))
    assert np.all(np.diff(th) < 0)  # o-idler at azimuth 0 closes towards longer wavelength
    second = np.abs(np.diff(th, 2))
    assert second.max() < 5 * abs(np.diff(th)).min()


def test_sweep_single_point_matches_solver(crystal, pump):
    (row,) = sweep_emission(crystal, pump, 0.7022, 0.7022, 0.001)
    sol = solve_emission(crystal, pump, EmissionQuery(0.7022))
    assert row.theta_i_ext == sol.theta_i_ext
    assert row.theta_s_ext == sol.theta_s_ext
    assert row.dtheta_dlambda == dtheta_dlambda(crystal, pump, 0.7022)


def test_sweep_flags_failures(crystal, pump):
    rows = sweep_emission(crystal, pump, 1.07, 1.09, 0.01)
    assert [r.status for r in rows] == ["out_of_range"] * 3
    assert all(math.isnan(r.theta_i_ext) for r in rows)
    bad = PumpConfig(0.3511, 5 * DEG)
    rows = sweep_emission(crystal, bad, 0.70, 0.701, 0.001)
    assert {r.status for r in rows} == {"no_phase_matching"}


def test_sweep_usage_errors(crystal, pump):
    with pytest.raises(ValueError):
        sweep_emission(crystal, pump, 0.70, 0.69, 0.001)
    with pytest.raises(ValueError):
        sweep_emission(crystal, pump, 0.69, 0.70, 0.0)


# --- dispersion ----------------------------------------------------------------

def test_dtheta_step_robust(crystal, pump):
    d1 = dtheta_dlambda(crystal, pump, 0.7022, step_nm=0.1)
    d2 = dtheta_dlambda(crystal, pump, 0.7022, step_nm=0.05)
    d4 = dtheta_dlambda(crystal, pump, 0.7022, step_nm=0.025)
    assert abs(d2 - d1) < 0.01 * abs(d1)
    # Richardson: the O(h^2) error shrinks by ~4 per halving
    assert abs(d4 - d2) <= abs(d2 - d1) / 2 + 1e-9


def test_dtheta_agrees_with_sweep_secant(crystal, pump):
    rows = sweep_emission(crystal, pump, 0.7012, 0.7032, 0.001)
    secant = math.degrees(rows[2].theta_i_ext - rows[0].theta_i_ext) / 2.0
    assert rows[1].dtheta_dlambda == pytest.approx(secant, rel=0.02)


def test_dtheta_grows_towards_short_wavelength_for_e_idler(crystal, pump):
    # the extraordinary cone disperses faster at shorter idler wavelength
    for phi in (0.0, math.pi / 2):
        assert abs(dtheta_dlambda(crystal, pump, 0.69, phi, E)) > abs(dtheta_dlambda(crystal, pump, 0.7022, phi, E))
    # the ordinary cone does the opposite
    assert abs(dtheta_dlambda(crystal, pump, 0.69, 0.0, O)) < abs(dtheta_dlambda(crystal, pump, 0.7022, 0.0, O))


def test_dtheta_rejects_bad_step(crystal, pump):
    with pytest.raises(ValueError):
        dtheta_dlambda(crystal, pump, 0.7022, step_nm=0)


# --- cone intersection ---------------------------------------------------------

def test_intersection_geometry(crystal, pump):
    ci = intersection_geometry(crystal, pump)
    assert math.degrees(ci.polar_angle_ext) == pytest.approx(3.1, abs=0.3)
    assert math.degrees(ci.crossing_angle) == pytest.approx(90, abs=5)
    d1, d2 = ci.directions
    assert d1[0] == pytest.approx(d2[0], abs=1e-15)
    assert d1[1] == pytest.approx(-d2[1], abs=1e-15)
    assert d1[2] == pytest.approx(d2[2], abs=1e-15)
    assert np.linalg.norm(d1) == pytest.approx(1.0)


def test_intersection_missing(crystal):
    with pytest.raises(NoPhaseMatchingError):
        intersection_geometry(crystal, PumpConfig(0.3511, 30 * DEG))


def test_emission_cone_closed(crystal, pump):
    phis, th = emission_cone(crystal, pump, 0.7022, E, n_phi=37)
    assert np.all(np.isfinite(th))
    assert th[0] == pytest.approx(th[-1], abs=1e-9)


# --- symmetry and conservation properties ---------------------------------------

@pytest.mark.parametrize("phi", [0.3, 1.0, math.pi / 2, 2.5])
def test_degenerate_polarization_swap_symmetry(crystal, pump, phi):
    e = solve_emission(crystal, pump, EmissionQuery(0.7022, phi, E)).theta_i_ext
    o_swapped = solve_emission(crystal, pump, EmissionQuery(0.7022, math.pi - phi, O)).theta_i_ext
    e_mirror = solve_emission(crystal, pump, EmissionQuery(0.7022, -phi, E)).theta_i_ext
    assert e == pytest.approx(o_swapped, abs=1e-6)
    assert e == pytest.approx(e_mirror, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(wl=st.floats(0.69, 0.715), phi=st.floats(-math.pi, math.pi), pol=st.sampled_from([O, E]))
def test_conservation_on_every_solution(wl, phi, pol):
    crystal, pump = bbo(), PumpConfig.reference()
    sol = solve_emission(crystal, pump, EmissionQuery(wl, phi, pol))
    assert abs(sol.residual) < 1e-8
    assert 1 / sol.lambda_s == pytest.approx(1 / pump.wavelength - 1 / sol.lambda_i, rel=1e-14)
    assert np.all(np.abs(sol.k_idler + sol.k_signal - sol.k_pump) < 1e-8)
