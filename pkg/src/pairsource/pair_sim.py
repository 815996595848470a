"""Event-level Monte-Carlo of a two-detector photon-pair counting experiment.

Pairs are born as a Poisson process at ``pair_rate_per_mw * pump_power``;
each photon of a pair reaches its detector with the arm efficiency, and the
two members of a pair arrive at exactly the same time (no timing jitter).
Independent background events are added in each arm.  An optional
non-paralyzable dead time removes events following a registered one.

Coincidences follow start-stop counter logic: every arm-s event opens a
window of total width ``tau_c`` centred on it and registers one coincidence
if any arm-i event falls inside.  An arm-i event may close several windows,
so ``n_c <= n_s`` always, while ``n_c <= n_i`` holds except when two arm-s
events share one window with a single arm-i event (probability of order
(n_s tau_c)^2).  A coincidence is accidental when the nearest arm-i event
is not the partner of the same pair; the accidental rate is then
n_s n_i tau_c (1 - eta) with eta the fraction of arm-s events whose
partner was detected.

Random numbers come from numpy's PCG64 generator seeded with ``rng_seed``;
power sweeps derive per-point seeds through ``numpy.random.SeedSequence``.

The timeline is processed in blocks so that long runs stay within memory.
Windows straddling a block boundary are not matched, which loses a fraction
of about ``tau_c / block_length`` of the accidentals (below 1e-7 for the
default block sizes).  True pairs never straddle a boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coincidence_stats import (CorrelationCurve, CountRecord, CurvePoint, accidental_rate,
                                model_coincidence_rate)

BLOCK_EVENTS = 2_000_000


@dataclass(frozen=True)
class SimConfig:
    pair_rate_per_mw: float
    pump_power: float
    eta_s: float = 1.0
    eta_i: float = 1.0
    background_s: float = 0.0
    background_i: float = 0.0
    tau_c: float = 6.8e-9
    dead_time: float = 0.0
    duration: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("pair_rate_per_mw", "pump_power", "background_s", "background_i",
                     "tau_c", "dead_time"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be non-negative and finite")
        for name in ("eta_s", "eta_i"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError("duration must be positive")
        if not isinstance(self.rng_seed, (int, np.integer)) or not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be an integer in [0, 2**64)")

    @property
    def pair_rate(self) -> float:
        return self.pair_rate_per_mw * self.pump_power

    @property
    def expected_singles(self):
        """Dead-time-free singles rates (s, i)."""
        return (self.pair_rate * self.eta_s + self.background_s,
                self.pair_rate * self.eta_i + self.background_i)

    @property
    def expected_true_coincidences(self) -> float:
        return self.pair_rate * self.eta_s * self.eta_i


@dataclass(frozen=True)
class SimOutput:
    """Observed rates (s^-1) with the raw counts behind them."""

    n_s: float
    n_i: float
    n_c: float
    n_acc_tally: float
    counts_s: int
    counts_i: int
    counts_c: int
    counts_acc: int
    duration: float
    pump_power: float

    def to_record(self, tau_c: float = 0.0) -> CountRecord:
        return CountRecord(self.n_s, self.n_i, self.n_c, tau_c, self.pump_power, self.duration)


def _apply_dead_time(t, dead, last):
    """Non-paralyzable filter on sorted times; ``last`` is the previous registered event."""
    if dead <= 0 or t.size == 0:
        return np.ones(t.size, dtype=bool), last
    keep = np.zeros(t.size, dtype=bool)
    k = int(np.searchsorted(t, last + dead, side="left"))
    n = t.size
    while k < n:
        keep[k] = True
        last = t[k]
        k = int(np.searchsorted(t, last + dead, side="left"))
    return keep, last


def _arm_events(rng, t0, span, pair_t, pair_id, eta, background):
    kept = rng.random(pair_t.size) < eta
    n_bg = rng.poisson(background * span)
    bg_t = np.sort(t0 + rng.random(n_bg) * span)
    ta, ia = pair_t[kept], pair_id[kept]
    # merge two sorted streams; background goes after pair events at equal times
    pos = np.searchsorted(ta, bg_t, side="right") + np.arange(n_bg)
    t = np.empty(ta.size + n_bg)
    ids = np.empty(ta.size + n_bg, dtype=np.int64)
    is_pair = np.ones(t.size, dtype=bool)
    is_pair[pos] = False
    t[pos], ids[pos] = bg_t, -1
    t[is_pair], ids[is_pair] = ta, ia
    return t, ids


def _match(ts, ids_s, ti, ids_i, half_window):
    """Coincidences between sorted arm streams; returns (total, accidental)."""
    if ts.size == 0 or ti.size == 0:
        return 0, 0
    pos = np.searchsorted(ti, ts)
    left = np.clip(pos - 1, 0, ti.size - 1)
    right = np.clip(pos, 0, ti.size - 1)
    dl = np.abs(ts - ti[left])
    dr = np.abs(ti[right] - ts)
    # prefer the exact (zero-delay) partner, then the nearer neighbour
    nearest = np.where(dr < dl, right, left)
    dist = np.minimum(dl, dr)
    hit = dist <= half_window
    partner = nearest[hit]
    s_ids = ids_s[hit]
    true = (s_ids >= 0) & (ids_i[partner] == s_ids)
    return int(partner.size), int(partner.size - np.count_nonzero(true))


def simulate_counts(cfg: SimConfig) -> SimOutput:
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    total_rate = cfg.pair_rate + cfg.background_s + cfg.background_i
    n_blocks = max(1, int(math.ceil(total_rate * cfg.duration / BLOCK_EVENTS)))
    span = cfg.duration / n_blocks
    cs = ci = cc = ca = 0
    last_s = last_i = -math.inf
    next_id = 0
    for b in range(n_blocks):
        t0 = b * span
        n_pairs = rng.poisson(cfg.pair_rate * span)
        pair_t = np.sort(t0 + rng.random(n_pairs) * span)
        pair_id = np.arange(next_id, next_id + n_pairs, dtype=np.int64)
        next_id += n_pairs
        ts, ids_s = _arm_events(rng, t0, span, pair_t, pair_id, cfg.eta_s, cfg.background_s)
        ti, ids_i = _arm_events(rng, t0, span, pair_t, pair_id, cfg.eta_i, cfg.background_i)
        keep_s, last_s = _apply_dead_time(ts, cfg.dead_time, last_s)
        keep_i, last_i = _apply_dead_time(ti, cfg.dead_time, last_i)
        ts, ids_s, ti, ids_i = ts[keep_s], ids_s[keep_s], ti[keep_i], ids_i[keep_i]
        c, a = _match(ts, ids_s, ti, ids_i, cfg.tau_c / 2)
        cs += ts.size
        ci += ti.size
        cc += c
        ca += a
    T = cfg.duration
    return SimOutput(cs / T, ci / T, cc / T, ca / T, cs, ci, cc, ca, T, cfg.pump_power)


def simulate_power_sweep(cfg: SimConfig, powers) -> list[tuple[float, SimOutput]]:
    """One run per pump power; per-point seeds are spawned from ``cfg.rng_seed``."""
    powers = [float(p) for p in powers]
    if not powers:
        raise ValueError("power list is empty")
    if len(powers) == 1:
        return [(powers[0], simulate_counts(replace(cfg, pump_power=powers[0])))]
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(len(powers))
    out = []
    for p, ss in zip(powers, seeds):
        sub = int(ss.generate_state(1, dtype=np.uint64)[0])
        out.append((p, simulate_counts(replace(cfg, pump_power=p, rng_seed=sub))))
    return out


def scan_levels(cfg: SimConfig):
    """Mean fringe rate and accidental floor per analyzer output pair.

    Each analyzer splits its arm over two ports, so a port pair sees a quarter
    of the true coincidences on average and half of each arm's singles.
    """
    s, i = cfg.expected_singles
    true = cfg.expected_true_coincidences
    mean_rate = true / 4
    eta = true / s if s > 0 else 0.0
    floor = float(accidental_rate(s / 2, i / 2, cfg.tau_c, min(eta, 1.0)))
    return mean_rate, floor


def simulate_correlation_scan(cfg: SimConfig, visibility: float, angles, basis: str = "",
                              include_accidentals: bool = True) -> CorrelationCurve:
    """Poisson-drawn coincidence rates for half-wave-plate settings (phi1, phi2) in degrees."""
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    mean_rate, floor = scan_levels(cfg)
    if not include_accidentals:
        floor = 0.0
    pts = []
    for phi1, phi2 in angles:
        mu = cfg.duration * (float(model_coincidence_rate(phi1, phi2, visibility, mean_rate)) + floor)
        pts.append(CurvePoint(float(phi1), float(phi2), rng.poisson(mu) / cfg.duration, cfg.duration))
    return CorrelationCurve(pts, basis)
