"""CSV and JSON file schemas read and written by the command-line tools."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

from .coincidence_stats import CorrelationCurve, CountRecord, CurvePoint

SWEEP_COLUMNS = ["lambda_nm", "theta_i_ext_deg", "theta_s_ext_deg", "dtheta_dlambda_deg_per_nm", "status"]
CURVE_COLUMNS = ["phi1_deg", "phi2_deg", "rate_hz", "duration_s"]
POWER_COLUMNS = ["power_mw", "singles_s", "singles_i", "coincidences"]
POWER_OPTIONAL = ["duration_s"]
BELL_COLUMNS = ["setting_a", "setting_b", "alpha_deg", "beta_deg", "outcome_a", "outcome_b", "counts"]


class FormatError(ValueError):
    pass


def fmt(x) -> str:
    """Fixed six-decimal rendering used in every CSV."""
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.6f}"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def to_json(obj) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if hasattr(o, "tolist"):
            return clean(o.tolist())
        if hasattr(o, "value") and hasattr(o, "name"):  # enums
            return o.value
        return o
    return json.dumps(clean(obj), indent=2) + "\n"


def _read_table(path, required, optional=()):
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: file is empty")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if len(raw) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
        rows.append((lineno, dict(zip(header, (v.strip() for v in raw)))))
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return header, rows


def _num(path, lineno, row, key):
    try:
        v = float(row[key])
    except ValueError:
        raise FormatError(f"{path}:{lineno}: column {key!r} is not a number: {row[key]!r}") from None
    if not math.isfinite(v):
        raise FormatError(f"{path}:{lineno}: column {key!r} is not finite")
    return v


def read_curve_csv(path, basis: str = "") -> CorrelationCurve:
    _, rows = _read_table(path, CURVE_COLUMNS)
    pts = []
    for lineno, r in rows:
        try:
            pts.append(CurvePoint(*(_num(path, lineno, r, c) for c in CURVE_COLUMNS)))
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return CorrelationCurve(pts, basis)


def curve_to_csv(curve: CorrelationCurve) -> str:
    rows = [{"phi1_deg": p.phi1, "phi2_deg": p.phi2, "rate_hz": p.rate, "duration_s": p.duration}
            for p in curve.points]
    return rows_to_csv(CURVE_COLUMNS, rows)


def read_power_csv(path, tau_c: float = 0.0, duration: float | None = None) -> list[CountRecord]:
    """Power-sweep rows as records; values are rates in s^-1.

    An optional ``duration_s`` column gives per-row integration times; otherwise
    ``duration`` (default 1 s) applies to every row.
    """
    header, rows = _read_table(path, POWER_COLUMNS, POWER_OPTIONAL)
    out = []
    for lineno, r in rows:
        p, s, i, c = (_num(path, lineno, r, k) for k in POWER_COLUMNS)
        if "duration_s" in header:
            dur = _num(path, lineno, r, "duration_s")
        else:
            dur = 1.0 if duration is None else duration
        try:
            out.append(CountRecord(s, i, c, tau_c, p, dur))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return out


def power_to_csv(records) -> str:
    rows = [{"power_mw": r.pump_power, "singles_s": r.n_s, "singles_i": r.n_i,
             "coincidences": r.n_c, "duration_s": r.duration} for r in records]
    return rows_to_csv(POWER_COLUMNS + POWER_OPTIONAL, rows)


def read_bell_csv(path):
    """16-row CHSH table -> {(setting_a, setting_b): {"alpha", "beta", counts[(oa, ob)]}}.

    ``setting_a`` is ``a`` or ``a'``, ``setting_b`` is ``b`` or ``b'``; outcomes are
    +1 / -1 (transmitted / reflected port).  Missing combinations raise
    FormatError listing all of them.
    """
    _, rows = _read_table(path, BELL_COLUMNS)
    table = {}
    for lineno, r in rows:
        sa, sb = r["setting_a"], r["setting_b"]
        if sa not in ("a", "a'") or sb not in ("b", "b'"):
            raise FormatError(f"{path}:{lineno}: settings must be a/a' and b/b'")
        try:
            oa, ob = int(r["outcome_a"]), int(r["outcome_b"])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: outcomes must be +1 or -1") from None
        if oa not in (1, -1) or ob not in (1, -1):
            raise FormatError(f"{path}:{lineno}: outcomes must be +1 or -1")
        n = _num(path, lineno, r, "counts")
        if n < 0:
            raise FormatError(f"{path}:{lineno}: counts must be non-negative")
        entry = table.setdefault((sa, sb), {"alpha": _num(path, lineno, r, "alpha_deg"),
                                            "beta": _num(path, lineno, r, "beta_deg"), "counts": {}})
        if (oa, ob) in entry["counts"]:
            raise FormatError(f"{path}:{lineno}: duplicate row for {sa},{sb},{oa:+d},{ob:+d}")
        entry["counts"][(oa, ob)] = n
    missing = [f"{sa},{sb},{oa:+d},{ob:+d}"
               for sa in ("a", "a'") for sb in ("b", "b'")
               for oa in (1, -1) for ob in (1, -1)
               if (oa, ob) not in table.get((sa, sb), {"counts": {}})["counts"]]
    if missing:
        raise FormatError(f"{path}: missing rows: {'; '.join(missing)}")
    return table


def bell_to_csv(table) -> str:
    rows = []
    for (sa, sb), e in table.items():
        for (oa, ob), n in e["counts"].items():
            rows.append({"setting_a": sa, "setting_b": sb, "alpha_deg": e["alpha"], "beta_deg": e["beta"],
                         "outcome_a": f"{oa:+d}", "outcome_b": f"{ob:+d}", "counts": n})
    return rows_to_csv(BELL_COLUMNS, rows)
