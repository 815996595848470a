"""Refractive index, birefringence and walk-off for negative uniaxial crystals.

Units: wavelengths in micrometers, angles in radians, crystal length in mm,
transverse displacements in micrometers.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError


class Polarization(enum.Enum):
    ORDINARY = "o"
    EXTRAORDINARY = "e"

    @property
    def other(self) -> "Polarization":
        return Polarization.EXTRAORDINARY if self is Polarization.ORDINARY else Polarization.ORDINARY

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("o", "ordinary"):
            return cls.ORDINARY
        if key in ("e", "extraordinary"):
            return cls.EXTRAORDINARY
        raise ValueError(f"unknown polarization {value!r}; use 'o' or 'e'")


@dataclass(frozen=True)
class SellmeierSet:
    """Coefficients of n^2 = a + b/(lambda^2 - c) - d*lambda^2 (lambda in um)."""

    a: float
    b: float
    c: float
    d: float
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not 0 < self.lambda_min < self.lambda_max:
            raise ValueError("validity range must satisfy 0 < lambda_min < lambda_max")
        if self.lambda_min**2 <= self.c:
            raise ValueError("pole of the Sellmeier term lies inside the validity range")
        grid = np.linspace(self.lambda_min, self.lambda_max, 257)
        if np.any(self._n2(grid) <= 1.0):
            raise ValueError("n^2 <= 1 somewhere in the validity range")

    def _n2(self, wl):
        wl2 = wl * wl
        return self.a + self.b / (wl2 - self.c) - self.d * wl2

    def check(self, wl):
        wl = np.asarray(wl, dtype=float)
        if np.any(wl < self.lambda_min):
            raise DomainError(
                f"wavelength {np.min(wl):.6g} um below lambda_min = {self.lambda_min} um")
        if np.any(wl > self.lambda_max):
            raise DomainError(
                f"wavelength {np.max(wl):.6g} um above lambda_max = {self.lambda_max} um")
        return wl

    def n(self, wl):
        wl = self.check(wl)
        return np.sqrt(self._n2(wl))

    @classmethod
    def from_dict(cls, d: dict) -> "SellmeierSet":
        return cls(float(d["a"]), float(d["b"]), float(d["c"]), float(d["d"]),
                   float(d["lambda_min_um"]), float(d["lambda_max_um"]))

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "lambda_min_um": self.lambda_min, "lambda_max_um": self.lambda_max}


@dataclass(frozen=True)
class CrystalSpec:
    """A uniaxial crystal slab cut so the pump enters along the face normal.

    Attributes:
        ordinary: Sellmeier set for the ordinary principal index.
        extraordinary: Sellmeier set for the extraordinary principal index.
        length: Thickness along the pump direction, in mm.
        cut_angle: Angle between face normal (pump direction) and optic axis, radians.
        name: Free-form label.
    """

    ordinary: SellmeierSet
    extraordinary: SellmeierSet
    length: float
    cut_angle: float
    name: str = "crystal"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("crystal length must be positive")
        if not 0 < self.cut_angle < np.pi / 2:
            raise ValueError("cut angle must lie strictly between 0 and 90 degrees")

    def with_length(self, length: float) -> "CrystalSpec":
        return CrystalSpec(self.ordinary, self.extraordinary, length, self.cut_angle, self.name)

    def with_cut_angle(self, cut_angle: float) -> "CrystalSpec":
        return CrystalSpec(self.ordinary, self.extraordinary, self.length, cut_angle, self.name)

    def to_dict(self) -> dict:
        return {"name": self.name, "length_mm": self.length,
                "cut_angle_deg": float(np.degrees(self.cut_angle)),
                "ordinary": self.ordinary.to_dict(),
                "extraordinary": self.extraordinary.to_dict()}


def load_crystal(path: str | Path | None = None) -> CrystalSpec:
    """Read a crystal JSON file; with no path, the shipped BBO data set is used."""
    if path is None:
        text = resources.files("pairsource").joinpath("data/bbo_eimerl.json").read_text()
    else:
        text = Path(path).read_text()
    d = json.loads(text)
    try:
        return CrystalSpec(
            ordinary=SellmeierSet.from_dict(d["ordinary"]),
            extraordinary=SellmeierSet.from_dict(d["extraordinary"]),
            length=float(d["length_mm"]),
            cut_angle=float(np.radians(d["cut_angle_deg"])),
            name=d.get("name", "crystal"),
        )
    except KeyError as exc:
        raise ValueError(f"crystal file is missing field {exc.args[0]!r}") from None


def bbo() -> CrystalSpec:
    return load_crystal()


def index(spec: CrystalSpec, wl, pol: Polarization):
    """Principal refractive index for the given polarization."""
    pol = Polarization.parse(pol)
    sset = spec.ordinary if pol is Polarization.ORDINARY else spec.extraordinary
    return sset.n(wl)


def index_e_theta(spec: CrystalSpec, wl, theta):
    """Extraordinary index for a wave vector at ``theta`` from the optic axis."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > np.pi):
        raise DomainError("theta must lie in [0, pi]")
    no = index(spec, wl, Polarization.ORDINARY)
    ne = index(spec, wl, Polarization.EXTRAORDINARY)
    c, s = np.cos(theta), np.sin(theta)
    return 1.0 / np.sqrt((c / no) ** 2 + (s / ne) ** 2)


def walkoff_angle(spec: CrystalSpec, wl, theta):
    """Magnitude of the Poynting-vector walk-off angle of the e-ray, radians."""
    no = index(spec, wl, Polarization.ORDINARY)
    ne = index(spec, wl, Polarization.EXTRAORDINARY)
    n = index_e_theta(spec, wl, theta)
    tan_rho = 0.5 * n**2 * np.sin(2 * np.asarray(theta, dtype=float)) * (1 / ne**2 - 1 / no**2)
    return np.abs(np.arctan(tan_rho))


def walkoff_displacement(spec: CrystalSpec, wl, theta):
    """Transverse e-ray displacement after one pass through the crystal, um."""
    return spec.length * 1e3 * np.tan(walkoff_angle(spec, wl, theta))


def refract_external(n_internal, theta_int):
    """Snell refraction from inside the crystal into air across a face.

    ``theta_int`` is measured from the face normal. Raises DomainError at or
    beyond total internal reflection.
    """
    s = np.asarray(n_internal, dtype=float) * np.sin(np.asarray(theta_int, dtype=float))
    if np.any(np.abs(s) > 1.0):
        raise DomainError("total internal reflection: n*sin(theta_int) exceeds 1")
    return np.arcsin(s)


def refract_internal(n_internal, theta_ext):
    """Inverse of :func:`refract_external`."""
    return np.arcsin(np.sin(np.asarray(theta_ext, dtype=float)) / np.asarray(n_internal, dtype=float))
