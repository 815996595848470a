"""Gaussian target-mode design for single-mode fiber collection.

The collected bandwidth sets an angular spread through the emission-angle
dispersion; the target mode gets a matching divergence, and its waist,
Rayleigh length, the pump waist and the fiber imaging follow from that.
Divergences are 1/e^2 intensity half-angles in radians unless a name says
otherwise; waists in um, Rayleigh lengths and distances in mm.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .crystal_optics import CrystalSpec, Polarization, walkoff_displacement
from .phasematch import PumpConfig, dtheta_dlambda

FWHM_FACTOR = math.sqrt(2 * math.log(2))


@dataclass(frozen=True)
class TargetMode:
    divergence: float
    waist: float
    rayleigh_length: float
    wavelength: float


@dataclass(frozen=True)
class FiberCoupler:
    """Thin-lens imaging of the fiber mode onto the target mode.

    ``object_distance`` is fiber-to-lens, ``image_distance`` lens-to-target-waist.
    """

    fiber_waist: float
    focal_length: float
    magnification: float
    object_distance: float
    image_distance: float
    gaussian: bool = False


@dataclass(frozen=True)
class CollectionDesign:
    bandwidth_fwhm: float
    dispersion: float
    divergence_raw: float
    divergence: float
    margin: float
    mode: TargetMode
    pump_waist: float
    walkoff_pump: float
    walkoff_signal: float
    walkoff_ratio: float
    fiber: FiberCoupler

    @property
    def walkoff_warning(self) -> str | None:
        if self.walkoff_ratio <= 1:
            return None
        return (f"transverse walk-off {self.walkoff_pump:.0f} um exceeds the target waist "
                f"{self.mode.waist:.0f} um (ratio {self.walkoff_ratio:.2f}); a narrower bandwidth "
                f"gives a larger waist, cylindrical optics are another option")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["divergence_raw_deg"] = math.degrees(self.divergence_raw)
        d["divergence_deg"] = math.degrees(self.divergence)
        d["walkoff_warning"] = self.walkoff_warning
        return d


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


def _rate(dispersion):
    if not (math.isfinite(dispersion) and dispersion != 0):
        raise ValueError(f"angular dispersion must be non-zero and finite, got {dispersion!r}")
    return abs(dispersion)


def angular_width_from_bandwidth(bandwidth_nm: float, dispersion: float) -> float:
    """Angular spread (rad) covered by ``bandwidth_nm`` at ``dispersion`` deg/nm."""
    if not (bandwidth_nm >= 0 and math.isfinite(bandwidth_nm)):
        raise ValueError("bandwidth must be non-negative")
    return math.radians(_rate(dispersion) * bandwidth_nm)


def divergence_from_bandwidth(bandwidth_fwhm: float, dispersion: float) -> float:
    """Gaussian-mode divergence (rad) matching a Gaussian spectrum of given FWHM (nm)."""
    _positive("bandwidth", bandwidth_fwhm)
    return math.radians(bandwidth_fwhm / FWHM_FACTOR * _rate(dispersion))


def bandwidth_from_divergence(divergence: float, dispersion: float) -> float:
    """Inverse of :func:`divergence_from_bandwidth`; returns FWHM in nm."""
    _positive("divergence", divergence)
    return math.degrees(divergence) * FWHM_FACTOR / _rate(dispersion)


def gaussian_intensity(theta, divergence):
    """Far-field intensity of the target mode, 1 on axis."""
    if not divergence > 0:
        raise ValueError("divergence must be positive")
    theta = np.asarray(theta, dtype=float)
    return np.exp(-2 * theta**2 / divergence**2)


def mode_from_divergence(divergence: float, wavelength: float) -> TargetMode:
    _positive("divergence", divergence)
    _positive("wavelength", wavelength)
    w0 = wavelength / (math.pi * divergence)
    return TargetMode(divergence, w0, math.pi * w0**2 / wavelength * 1e-3, wavelength)


def mode_from_waist(waist: float, wavelength: float) -> TargetMode:
    _positive("waist", waist)
    _positive("wavelength", wavelength)
    return TargetMode(wavelength / (math.pi * waist), waist, math.pi * waist**2 / wavelength * 1e-3, wavelength)


def fiber_conjugation(target_waist: float, fiber_waist: float, focal_length: float,
                      gaussian: bool = False, wavelength: float | None = None) -> FiberCoupler:
    """Place a lens so the fiber mode is imaged onto the target waist.

    The default is geometric imaging with magnification target/fiber.  With
    ``gaussian=True`` the waist-to-waist transformation of a thin lens is used
    instead (needs ``wavelength`` in um); the thin-lens equation then holds
    only approximately.
    """
    _positive("target waist", target_waist)
    _positive("fiber waist", fiber_waist)
    _positive("focal length", focal_length)
    m = target_waist / fiber_waist
    f = focal_length
    if not gaussian:
        return FiberCoupler(fiber_waist, f, m, f * (1 + 1 / m), f * (1 + m))
    if wavelength is None:
        raise ValueError("Gaussian conjugation needs the wavelength")
    zr = math.pi * fiber_waist**2 / wavelength * 1e-3
    disc = 1 / m**2 - (zr / f) ** 2
    if disc < 0:
        raise ValueError("requested magnification is not reachable with this lens")
    d1 = f * (1 + math.sqrt(disc))
    d2 = f + (d1 - f) * f**2 / ((d1 - f) ** 2 + zr**2)
    return FiberCoupler(fiber_waist, f, m, d1, d2, gaussian=True)


def design_collection(crystal: CrystalSpec, pump: PumpConfig, bandwidth_fwhm: float,
                      margin: float = 1.0, fiber_waist: float = 2.3, focal_length: float = 11.0,
                      dispersion: float | None = None, phi: float = 0.0,
                      idler_pol=Polarization.ORDINARY, gaussian_fiber: bool = False) -> CollectionDesign:
    """Full collection prescription for a bandwidth (nm) at the degenerate wavelength.

    ``margin`` scales the bandwidth-matched divergence down to leave room for
    the pump's own angular spread.  ``dispersion`` (deg/nm) overrides the value
    computed from phase matching, e.g. to use a measured number.
    """
    if not 0 < margin <= 1:
        raise ValueError("margin must lie in (0, 1]")
    wl = pump.degenerate_wavelength
    if dispersion is None:
        dispersion = dtheta_dlambda(crystal, pump, wl, phi, idler_pol)
    raw = divergence_from_bandwidth(bandwidth_fwhm, dispersion)
    chosen = margin * raw
    mode = mode_from_divergence(chosen, wl)
    wo_pump = float(walkoff_displacement(crystal, pump.wavelength, pump.theta))
    wo_signal = float(walkoff_displacement(crystal, wl, pump.theta))
    fiber = fiber_conjugation(mode.waist, fiber_waist, focal_length, gaussian_fiber, wl)
    return CollectionDesign(
        bandwidth_fwhm=bandwidth_fwhm, dispersion=abs(dispersion),
        divergence_raw=raw, divergence=chosen, margin=margin, mode=mode,
        pump_waist=mode.waist, walkoff_pump=wo_pump, walkoff_signal=wo_signal,
        walkoff_ratio=wo_pump / mode.waist, fiber=fiber)
