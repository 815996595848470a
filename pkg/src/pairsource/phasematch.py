"""Type-II phase matching: emission directions, external angles and dispersion.

Geometry: the pump travels along +z and enters through a face normal to z.
The optic axis lies in the x-z plane, tilted by the pump angle from +z
towards -x.  Emission azimuths are measured about z from +x, so azimuth 0
and azimuth pi both lie in the plane containing the optic axis, with 0
pointing away from it.  The pump is an extraordinary wave; the idler takes
the polarization given in the query and the signal takes the other one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .crystal_optics import (CrystalSpec, Polarization, index, index_e_theta,
                             refract_external)
from .errors import DomainError, NoPhaseMatchingError

SCAN_MAX_DEG = 20.0
SCAN_STEP_DEG = 0.05
ROOT_XTOL = 1e-12


@dataclass(frozen=True)
class PumpConfig:
    """Plane-wave pump.

    Attributes:
        wavelength: Vacuum wavelength in um.
        theta: Angle between pump wave vector and optic axis, radians.
        power: Pump power in mW.
        waist: Pump waist in um.
    """

    wavelength: float
    theta: float
    power: float = 0.0
    waist: float = 80.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("pump wavelength must be positive")
        if not 0 < self.theta < np.pi / 2:
            raise ValueError("pump angle must lie strictly between 0 and 90 degrees")
        if self.power < 0:
            raise ValueError("pump power must be non-negative")
        if not self.waist > 0:
            raise ValueError("pump waist must be positive")

    @property
    def degenerate_wavelength(self) -> float:
        return 2.0 * self.wavelength

    @classmethod
    def reference(cls, power: float = 400.0, waist: float = 80.0) -> "PumpConfig":
        """Argon-ion line at 351.1 nm, 49.7 deg to the optic axis."""
        return cls(0.3511, math.radians(49.7), power, waist)


@dataclass(frozen=True)
class EmissionQuery:
    wavelength: float
    phi: float = 0.0
    idler_pol: Polarization = Polarization.ORDINARY


@dataclass(frozen=True)
class EmissionSolution:
    """Phase-matched pair for one idler wavelength and azimuth (angles in radians)."""

    lambda_i: float
    lambda_s: float
    phi_i: float
    phi_s: float
    theta_i_int: float
    theta_i_ext: float
    theta_s_int: float
    theta_s_ext: float
    residual: float
    idler_pol: Polarization
    k_pump: np.ndarray = field(repr=False)
    k_idler: np.ndarray = field(repr=False)
    k_signal: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ConeIntersection:
    """Where the degenerate ordinary and extraordinary cones cross (external frame)."""

    directions: tuple
    azimuth: float
    polar_angle_ext: float
    polar_angle_int_e: float
    polar_angle_int_o: float
    crossing_angle: float


@dataclass(frozen=True)
class SweepRow:
    lambda_i: float
    theta_i_ext: float
    theta_s_ext: float
    dtheta_dlambda: float
    status: str = "ok"


def conjugate_wavelength(lambda_p: float, lambda_i: float) -> float:
    """Energy conservation, 1/lambda_s = 1/lambda_p - 1/lambda_i."""
    if not lambda_p > 0:
        raise DomainError("pump wavelength must be positive")
    if not lambda_i > lambda_p:
        raise DomainError(f"idler wavelength {lambda_i} um must exceed pump wavelength {lambda_p} um")
    return 1.0 / (1.0 / lambda_p - 1.0 / lambda_i)


def optic_axis(pump: PumpConfig) -> np.ndarray:
    return np.array([-math.sin(pump.theta), 0.0, math.cos(pump.theta)])


def direction(theta, phi) -> np.ndarray:
    """Unit vectors for polar angle(s) ``theta`` about z at azimuth ``phi``; shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def index_along(crystal: CrystalSpec, pump: PumpConfig, wl, k, pol: Polarization):
    """Refractive index seen by a wave of polarization ``pol`` travelling along ``k``."""
    if pol is Polarization.ORDINARY:
        return index(crystal, wl, Polarization.ORDINARY) * np.ones(np.shape(k)[:-1])
    k = np.asarray(k, dtype=float)
    cosang = (k @ optic_axis(pump)) / np.linalg.norm(k, axis=-1)
    return index_e_theta(crystal, wl, np.arccos(np.clip(cosang, -1.0, 1.0)))


def pump_wavevector(crystal: CrystalSpec, pump: PumpConfig) -> np.ndarray:
    n_p = index_e_theta(crystal, pump.wavelength, pump.theta)
    return np.array([0.0, 0.0, 2 * np.pi * n_p / pump.wavelength])


def momentum_mismatch(crystal: CrystalSpec, pump: PumpConfig, query: EmissionQuery, theta_i_int):
    """|k_p - k_i| - |k_s| for an idler at internal polar angle ``theta_i_int`` (um^-1).

    Vectorized over ``theta_i_int``.  Zero at phase matching.
    """
    pol = Polarization.parse(query.idler_pol)
    lam_s = conjugate_wavelength(pump.wavelength, query.wavelength)
    u = direction(theta_i_int, query.phi)
    n_i = index_along(crystal, pump, query.wavelength, u, pol)
    k_i = (2 * np.pi * n_i / query.wavelength)[..., None] * u
    k_s = pump_wavevector(crystal, pump) - k_i
    n_s = index_along(crystal, pump, lam_s, k_s, pol.other)
    return np.linalg.norm(k_s, axis=-1) - 2 * np.pi * n_s / lam_s


def bracket_scan(crystal, pump, query, max_deg=SCAN_MAX_DEG, step_deg=SCAN_STEP_DEG):
    """Grid of internal idler angles and the mismatch there, plus sign-change brackets."""
    grid = np.radians(np.arange(0.0, max_deg + 0.5 * step_deg, step_deg))
    res = momentum_mismatch(crystal, pump, query, grid)
    sgn = np.sign(res)
    idx = np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]
    brackets = [(grid[k], grid[k + 1]) for k in idx if sgn[k] != 0 or k == 0]
    return grid, res, brackets


def solve_emission(crystal: CrystalSpec, pump: PumpConfig, query: EmissionQuery,
                   branch: int = 0) -> EmissionSolution:
    """Phase-matched idler and signal directions for one idler wavelength and azimuth.

    The internal idler angle is bracketed on a 0.05 deg grid over 0-20 deg and
    refined by bisection.  ``branch`` selects among several roots (ordered by
    angle) when the pump lies outside the cone.
    """
    pol = Polarization.parse(query.idler_pol)
    query = EmissionQuery(query.wavelength, query.phi, pol)
    grid, res, brackets = bracket_scan(crystal, pump, query)
    if len(brackets) <= branch:
        raise NoPhaseMatchingError(
            f"no phase matching for idler {query.wavelength} um at azimuth "
            f"{math.degrees(query.phi):.3f} deg (pump angle {math.degrees(pump.theta):.3f} deg); "
            f"mismatch spans [{res.min():.4g}, {res.max():.4g}] um^-1 over 0-{SCAN_MAX_DEG} deg",
            scan_range=(0.0, math.radians(SCAN_MAX_DEG)),
            residual_min=float(res.min()), residual_max=float(res.max()))
    lo, hi = brackets[branch]

    def f(t):
        return float(momentum_mismatch(crystal, pump, query, t))

    if f(lo) == 0.0:
        theta_i = lo
    else:
        theta_i = optimize.bisect(f, lo, hi, xtol=ROOT_XTOL, maxiter=200)
    residual = f(theta_i)

    lam_s = conjugate_wavelength(pump.wavelength, query.wavelength)
    u_i = direction(theta_i, query.phi)
    n_i = float(index_along(crystal, pump, query.wavelength, u_i, pol))
    k_i = 2 * np.pi * n_i / query.wavelength * u_i
    k_p = pump_wavevector(crystal, pump)
    k_s = k_p - k_i
    n_s = float(index_along(crystal, pump, lam_s, k_s, pol.other))
    theta_s = math.atan2(math.hypot(k_s[0], k_s[1]), k_s[2])
    phi_s = math.atan2(k_s[1], k_s[0])
    return EmissionSolution(
        lambda_i=query.wavelength, lambda_s=lam_s,
        phi_i=query.phi, phi_s=phi_s,
        theta_i_int=float(theta_i), theta_i_ext=float(refract_external(n_i, theta_i)),
        theta_s_int=theta_s, theta_s_ext=float(refract_external(n_s, theta_s)),
        residual=residual, idler_pol=pol,
        k_pump=k_p, k_idler=k_i, k_signal=k_s)


def external_angle(crystal, pump, wavelength, phi=0.0, idler_pol=Polarization.ORDINARY) -> float:
    return solve_emission(crystal, pump, EmissionQuery(wavelength, phi, Polarization.parse(idler_pol))).theta_i_ext


def dtheta_dlambda(crystal: CrystalSpec, pump: PumpConfig, wavelength: float, phi: float = 0.0,
                   idler_pol=Polarization.ORDINARY, step_nm: float = 0.1) -> float:
    """Central difference of the external idler angle in degrees per nm.

    Signed: positive when the idler moves away from the pump axis as its
    wavelength grows.
    """
    if not step_nm > 0:
        raise ValueError("finite-difference step must be positive")
    h = step_nm * 1e-3
    up = external_angle(crystal, pump, wavelength + h, phi, idler_pol)
    down = external_angle(crystal, pump, wavelength - h, phi, idler_pol)
    return math.degrees(up - down) / (2 * step_nm)


def emission_cone(crystal, pump, wavelength, idler_pol=Polarization.ORDINARY, n_phi=181):
    """External polar angle around the full azimuth circle (NaN where no solution)."""
    phis = np.linspace(-np.pi, np.pi, n_phi)
    thetas = np.full(n_phi, np.nan)
    for k, phi in enumerate(phis):
        try:
            thetas[k] = external_angle(crystal, pump, wavelength, phi, idler_pol)
        except NoPhaseMatchingError:
            pass
    return phis, thetas


def _transverse_point(crystal, pump, wl, phi, pol):
    t = external_angle(crystal, pump, wl, phi, pol)
    return np.array([t * math.cos(phi), t * math.sin(phi)])


def intersection_geometry(crystal: CrystalSpec, pump: PumpConfig, n_grid: int = 19) -> ConeIntersection:
    """Crossing of the degenerate ordinary and extraordinary emission cones.

    Searches azimuths in (0, pi) for equal external polar angle on both cones;
    the second crossing is its mirror image at negative azimuth.  The crossing
    angle is the angle between the two cone curves drawn in the transverse
    (angle-space) plane, folded into [0, pi/2].
    """
    wl = pump.degenerate_wavelength
    E, O = Polarization.EXTRAORDINARY, Polarization.ORDINARY

    def gap(phi):
        return external_angle(crystal, pump, wl, phi, E) - external_angle(crystal, pump, wl, phi, O)

    phis = np.linspace(0.0, np.pi, n_grid)[1:-1]
    vals = np.full(phis.shape, np.nan)
    for k, phi in enumerate(phis):
        try:
            vals[k] = gap(phi)
        except NoPhaseMatchingError:
            pass
    root = None
    for k in range(len(phis) - 1):
        a, b = vals[k], vals[k + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0:
            root = optimize.brentq(gap, phis[k], phis[k + 1], xtol=1e-13)
            break
    if root is None:
        raise NoPhaseMatchingError(
            f"degenerate cones do not intersect for pump angle {math.degrees(pump.theta):.3f} deg")

    sol_e = solve_emission(crystal, pump, EmissionQuery(wl, root, E))
    sol_o = solve_emission(crystal, pump, EmissionQuery(wl, root, O))
    theta_ext = 0.5 * (sol_e.theta_i_ext + sol_o.theta_i_ext)

    d = 1e-4
    t_e = _transverse_point(crystal, pump, wl, root + d, E) - _transverse_point(crystal, pump, wl, root - d, E)
    t_o = _transverse_point(crystal, pump, wl, root + d, O) - _transverse_point(crystal, pump, wl, root - d, O)
    cosang = abs(t_e @ t_o) / (np.linalg.norm(t_e) * np.linalg.norm(t_o))
    crossing = math.acos(min(1.0, cosang))

    dirs = (direction(theta_ext, root), direction(theta_ext, -root))
    return ConeIntersection(directions=dirs, azimuth=root, polar_angle_ext=theta_ext,
                            polar_angle_int_e=sol_e.theta_i_int, polar_angle_int_o=sol_o.theta_i_int,
                            crossing_angle=crossing)


def sweep_emission(crystal: CrystalSpec, pump: PumpConfig, lambda_start: float, lambda_stop: float,
                   step: float, phi: float = 0.0, idler_pol=Polarization.ORDINARY,
                   step_nm: float = 0.1) -> list[SweepRow]:
    """Emission angles and dispersion over an idler wavelength range (um).

    Rows where the solver fails are kept with NaN values and a status string.
    """
    if not step > 0:
        raise ValueError("sweep step must be positive")
    if lambda_stop < lambda_start:
        raise ValueError("empty wavelength range")
    n = int(math.floor((lambda_stop - lambda_start) / step + 1e-9)) + 1
    pol = Polarization.parse(idler_pol)
    rows = []
    for k in range(n):
        wl = lambda_start + k * step
        try:
            sol = solve_emission(crystal, pump, EmissionQuery(wl, phi, pol))
            deriv = dtheta_dlambda(crystal, pump, wl, phi, pol, step_nm)
            rows.append(SweepRow(wl, sol.theta_i_ext, sol.theta_s_ext, deriv))
        except NoPhaseMatchingError:
            rows.append(SweepRow(wl, math.nan, math.nan, math.nan, "no_phase_matching"))
        except DomainError:
            rows.append(SweepRow(wl, math.nan, math.nan, math.nan, "out_of_range"))
    return rows
