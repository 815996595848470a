"""Count-rate analysis: efficiencies, power slope, accidentals, visibility and CHSH.

Rates are in counts per second and durations in seconds.  Error bars assume
Poisson counting statistics, with counts = rate * duration.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError


@dataclass(frozen=True)
class CountRecord:
    n_s: float
    n_i: float
    n_c: float
    tau_c: float = 0.0
    pump_power: float = 0.0
    duration: float = 1.0

    def __post_init__(self):
        for name in ("n_s", "n_i", "n_c", "tau_c", "pump_power"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.n_c > min(self.n_s, self.n_i):
            raise ValueError("coincidence rate exceeds a singles rate")


@dataclass(frozen=True)
class CurvePoint:
    phi1: float
    phi2: float
    rate: float
    duration: float = 1.0


@dataclass
class CorrelationCurve:
    """Coincidence rates versus half-wave-plate angles (degrees)."""

    points: list[CurvePoint]
    basis: str = ""

    def __post_init__(self):
        for p in self.points:
            if not (math.isfinite(p.phi1) and math.isfinite(p.phi2)):
                raise ValueError("angles must be finite")
            if p.rate < 0 or not p.duration > 0:
                raise ValueError("rates must be non-negative and durations positive")

    @property
    def phi1(self):
        return np.array([p.phi1 for p in self.points])

    @property
    def rate(self):
        return np.array([p.rate for p in self.points])


@dataclass(frozen=True)
class VisibilityFit:
    visibility: float
    mean_rate: float
    phase: float
    residual_rms: float
    visibility_err: float = 0.0
    mean_rate_err: float = 0.0
    phase_defined: bool = True


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    n_points: int


@dataclass(frozen=True)
class Correlation:
    value: float
    stderr: float
    total: float


@dataclass(frozen=True)
class BellResult:
    correlations: tuple
    errors: tuple
    S: float
    sigma_S: float
    settings: dict = field(default_factory=dict)

    @property
    def violation_sigmas(self) -> float:
        return (abs(self.S) - 2) / self.sigma_S if self.sigma_S > 0 else math.inf


def accidental_rate(n_s, n_i, tau_c, eta=0.0):
    """Rate of accidental coincidences, n_s * n_i * tau_c * (1 - eta).

    ``eta`` is the fraction of singles that carry a detected partner; those
    cannot form accidentals.
    """
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    if min(np.min(n_s), np.min(n_i), tau_c) < 0:
        raise ValueError("rates and window must be non-negative")
    return np.asarray(n_s) * np.asarray(n_i) * tau_c * (1 - eta)


def efficiency_ratio(rec: CountRecord):
    """Coincidence-to-singles ratios: (geometric-mean overall, arm s, arm i).

    The arm-s efficiency is n_c / n_i: of the photons seen in arm i, the
    fraction whose partner is also seen in arm s.
    """
    if rec.n_s <= 0 or rec.n_i <= 0:
        raise DomainError("singles rates must be positive to form a ratio")
    return rec.n_c / math.sqrt(rec.n_s * rec.n_i), rec.n_c / rec.n_i, rec.n_c / rec.n_s


def power_slope(records, power_cutoff: float = math.inf) -> SlopeFit:
    """Least-squares line through the origin of coincidence rate versus pump power."""
    sel = [r for r in records if r.pump_power <= power_cutoff]
    if len(sel) < 2:
        raise ValueError("need at least two records at or below the power cutoff")
    p = np.array([r.pump_power for r in sel])
    c = np.array([r.n_c for r in sel])
    var = np.array([r.n_c / r.duration for r in sel])
    spp = p @ p
    if spp == 0:
        raise ValueError("all selected records have zero pump power")
    return SlopeFit(float(p @ c / spp), float(math.sqrt(p**2 @ var) / spp), len(sel))


def model_coincidence_rate(phi1, phi2, visibility, mean_rate):
    """Singlet-state coincidence rate behind two half-wave-plate analyzers (angles in degrees)."""
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    if mean_rate < 0:
        raise ValueError("mean rate must be non-negative")
    delta = np.radians(4 * (np.asarray(phi1, dtype=float) - np.asarray(phi2, dtype=float)))
    return mean_rate * (1 - visibility * np.cos(delta))


def sincos_fit(curve: CorrelationCurve) -> VisibilityFit:
    """Fit R(phi1) = R * (1 - V cos(4 (phi1 - phi0))) by linear least squares.

    Uses the basis {1, cos 4phi1, sin 4phi1}; the returned phase is reduced to
    [0, 90) degrees.  Uncertainties come from Poisson-weighted covariance.
    """
    pts = sorted(curve.points, key=lambda q: (q.phi1, q.phi2))
    phi = np.radians([q.phi1 for q in pts])
    y = np.array([q.rate for q in pts])
    dur = np.array([q.duration for q in pts])
    if len({round(q.phi1 % 90.0, 9) for q in pts}) < 4:
        raise FitError("need at least four distinct analyzer angles (mod 90 deg)")
    A = np.column_stack([np.ones_like(phi), np.cos(4 * phi), np.sin(4 * phi)])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        _, _, vt = np.linalg.svd(A)
        names = ("constant", "cos 4phi", "sin 4phi")
        weakest = names[int(np.argmax(np.abs(vt[-1])))]
        raise FitError(f"design matrix is rank deficient along the {weakest} direction")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c0, c1, c2 = coef
    if c0 <= 0:
        raise FitError("fitted mean rate is not positive")
    amp = math.hypot(c1, c2)
    vis = amp / c0
    resid = y - A @ coef
    rms = float(math.sqrt(np.mean(resid**2)))

    phase_defined = amp > 1e-12 * abs(c0)
    phase = math.degrees(math.atan2(-c2, -c1)) / 4 % 90.0 if phase_defined else math.nan

    # Poisson covariance of the unweighted estimator: (A'A)^-1 A' W A (A'A)^-1
    var_y = np.maximum(y, 0) / dur
    ata_inv = np.linalg.inv(A.T @ A)
    cov = ata_inv @ (A.T * var_y) @ A @ ata_inv
    if amp > 0:
        grad = np.array([-vis / c0, c1 / (amp * c0), c2 / (amp * c0)])
    else:
        grad = np.array([0.0, 1 / c0, 0.0])
    vis_err = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    return VisibilityFit(float(vis), float(c0), phase, rms, vis_err,
                         float(math.sqrt(cov[0, 0])), phase_defined)


def corrected_visibility(fit: VisibilityFit, n_acc: float) -> float:
    """Visibility after removing a flat accidental floor ``n_acc`` from the fitted fringe."""
    if n_acc < 0:
        raise ValueError("accidental rate must be non-negative")
    if fit.mean_rate <= n_acc:
        raise DomainError("accidental rate reaches or exceeds the mean coincidence rate")
    if n_acc == 0:
        return fit.visibility
    v = fit.visibility * fit.mean_rate / (fit.mean_rate - n_acc)
    if v > 1:
        warnings.warn(f"corrected visibility {v:.4f} exceeds 1; clamped (floor over-subtracted)",
                      RuntimeWarning, stacklevel=2)
        v = 1.0
    return v


def mean_rate_for_correction(raw: float, corrected: float, n_acc: float) -> float:
    """Mean rate that turns ``raw`` into ``corrected`` under a floor ``n_acc``."""
    if not corrected > raw:
        raise ValueError("corrected visibility must exceed the raw one")
    return n_acc * corrected / (corrected - raw)


def correlation_E(n_pp, n_pm, n_mp, n_mm, duration: float = 1.0) -> Correlation:
    """Polarization correlation from the four joint outcomes.

    Arguments are rates (or counts with ``duration=1``) at (a, b), (a, b+90),
    (a+90, b) and (a+90, b+90) in analyzer angles.
    """
    counts = np.array([n_pp, n_pm, n_mp, n_mm], dtype=float) * duration
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise DomainError("no coincidences: correlation undefined")
    same = counts[0] + counts[3]
    e = (same - counts[1] - counts[2]) / total
    return Correlation(float(e), float(math.sqrt(max(1 - e * e, 0.0) / total)), float(total))


def chsh_S(e_ab, e_abp, e_apb, e_apbp) -> BellResult:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b') with errors added in quadrature.

    Each argument is a :class:`Correlation` or a plain float (zero error).
    """
    vals, errs = [], []
    for e in (e_ab, e_abp, e_apb, e_apbp):
        if isinstance(e, Correlation):
            vals.append(e.value)
            errs.append(e.stderr)
        else:
            vals.append(float(e))
            errs.append(0.0)
    if any(abs(v) > 1 + 1e-12 for v in vals):
        raise ValueError("correlation values must lie in [-1, 1]")
    s = vals[0] - vals[1] + vals[2] + vals[3]
    return BellResult(tuple(vals), tuple(errs), s, math.sqrt(sum(x * x for x in errs)))


CANONICAL_SETTINGS = {"a": 0.0, "a'": 45.0, "b": 22.5, "b'": 67.5}


def model_joint_rates(alpha, beta, visibility, mean_rate):
    """(++, +-, -+, --) rates for polarizer angles alpha, beta (degrees) under the singlet model."""
    r = lambda x, y: float(model_coincidence_rate(x / 2, y / 2, visibility, mean_rate))
    return (r(alpha, beta), r(alpha, beta + 90), r(alpha + 90, beta), r(alpha + 90, beta + 90))


def chsh_from_model(visibility: float, mean_rate: float = 1.0, duration: float = 1.0,
                    settings: dict | None = None) -> BellResult:
    st = dict(CANONICAL_SETTINGS if settings is None else settings)
    pairs = [("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'")]
    es = [correlation_E(*model_joint_rates(st[x], st[y], visibility, mean_rate), duration=duration)
          for x, y in pairs]
    res = chsh_S(*es)
    return BellResult(res.correlations, res.errors, res.S, res.sigma_S, st)
