"""File formats: channels, counts, correlations, regions and reports.

JSON floats are written with ``repr`` (shortest round-trip form), so a
value read back compares equal to the one written. Every writer checks
its document against the schema and then re-reads the file it produced;
see ``docs/formats.md`` for the layouts.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .channels import D2Channel, Effect, QubitChannel, UnphysicalChannelError, amplitude_damping, dephase, is_cp_explicit
from .geometry import CorrelationData, Region
from .simulate import CountsTable, Setting

COUNTS_FORMAT = "dichannel-counts/1"
CORRELATION_COLUMNS = ("pair_id", "meas_id", "p11", "p12", "s11", "s12")
BOUNDARY_COLUMNS = ("p11", "p12")


class FormatError(ValueError):
    """A file does not match its documented layout."""


def _require(cond, msg):
    if not cond:
        raise FormatError(msg)


def _finite_list(x, length=None, name="value"):
    _require(isinstance(x, list), f"{name} must be a list")
    _require(length is None or len(x) == length, f"{name} must have {length} entries")
    for v in x:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v), f"{name} entries must be finite numbers")
    return x


def _plain(obj):
    """Numpy scalars and arrays to builtin types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(doc) -> str:
    # NaN is not JSON; undefined quantities are written as null
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, list):
            return [clean(x) for x in v]
        return v

    return json.dumps(clean(_plain(doc)), indent=2, allow_nan=False) + "\n"


def _write_checked(path, text, reader):
    """Write ``text``, then re-read with ``reader`` and require an identical re-serialization."""
    path = Path(path)
    path.write_text(text)
    back = path.read_text()
    _require(back == text, f"{path}: file content changed on re-read")
    reader(path)
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


# --- channels --------------------------------------------------------------


def channel_doc(ch) -> dict:
    if isinstance(ch, D2Channel):
        return {"kind": "d2", "d": [ch.d1, ch.d2, ch.d3], "c3": ch.c3, "cp_margin": ch.cp_margin()}
    if isinstance(ch, QubitChannel):
        return {"kind": "affine", "A": ch.A.tolist(), "b": ch.b.tolist(), "cp_margin": ch.cp_margin()}
    raise TypeError(f"not a channel: {ch!r}")


def channel_from_doc(doc, check=True):
    """Build a channel from a JSON object and check complete positivity.

    Accepted kinds: ``d2`` (``d``, ``c3``), ``affine`` (``A``, ``b``), and
    ``ad`` (``lambda``, optional ``visibility``).
    """
    _require(isinstance(doc, dict) and "kind" in doc, "channel document needs a 'kind'")
    kind = doc["kind"]
    if kind == "d2":
        d = _finite_list(doc.get("d"), 3, "d")
        ch = D2Channel(*d, float(doc.get("c3", 0.0)))
        ok = is_cp_explicit(ch)
    elif kind == "affine":
        a = doc.get("A")
        _require(isinstance(a, list) and len(a) == 3, "A must be a 3x3 list")
        for row in a:
            _finite_list(row, 3, "A row")
        ch = QubitChannel(a, _finite_list(doc.get("b"), 3, "b"))
        ok = ch.is_physical()
    elif kind == "ad":
        lam = doc.get("lambda")
        _require(isinstance(lam, (int, float)), "ad channel needs 'lambda'")
        if not 0.0 <= lam <= 1.0:
            raise UnphysicalChannelError(f"lambda={lam} outside [0, 1]")
        ch = amplitude_damping(lam)
        vis = doc.get("visibility")
        if vis is not None:
            if not 0.0 <= vis <= 1.0:
                raise UnphysicalChannelError(f"visibility={vis} outside [0, 1]")
            ch = dephase(ch, vis)
        ok = True
    else:
        raise FormatError(f"unknown channel kind {kind!r}")
    if check and not ok:
        raise UnphysicalChannelError(f"channel {doc} is not completely positive")
    return ch


def read_channel(path, check=True):
    return channel_from_doc(read_json(path), check)


def write_channel(path, ch):
    return _write_checked(path, dumps(channel_doc(ch)), read_channel)


# --- counts ----------------------------------------------------------------


def setting_doc(s: Setting) -> dict:
    return {"input_id": s.input_id, "meas_id": s.meas_id, "state": list(s.state), "effect": {"t": s.effect.t, "s": list(s.effect.s)}}


def setting_from_doc(d) -> Setting:
    _require(isinstance(d, dict), "setting must be an object")
    for key in ("input_id", "meas_id", "state", "effect"):
        _require(key in d, f"setting lacks '{key}'")
    e = d["effect"]
    _require(isinstance(e, dict) and "t" in e and "s" in e, "effect needs 't' and 's'")
    return Setting(int(d["input_id"]), int(d["meas_id"]), _finite_list(d["state"], 3, "state"), Effect(float(e["t"]), _finite_list(e["s"], 3, "effect s")))


def counts_doc(c: CountsTable) -> dict:
    shots = c.shots.tolist()
    return {
        "format": COUNTS_FORMAT,
        "channel": c.channel,
        "shots": shots[0] if shots and all(k == shots[0] for k in shots) else shots,
        "seed": c.seed,
        **{k: v for k, v in c.meta.items() if k not in ("format", "channel", "shots", "seed", "settings", "records")},
        "settings": [setting_doc(s) for s in c.settings],
        "records": [{"input_id": i, "meas_id": m, "outcome": o, "count": n} for i, m, o, n in c.records()],
    }


def counts_from_doc(doc) -> CountsTable:
    _require(isinstance(doc, dict), "counts file must hold an object")
    _require(doc.get("format", COUNTS_FORMAT) == COUNTS_FORMAT, f"unsupported counts format {doc.get('format')!r}")
    _require(isinstance(doc.get("settings"), list) and isinstance(doc.get("records"), list), "counts file needs 'settings' and 'records'")
    settings = [setting_from_doc(s) for s in doc["settings"]]
    index = {}
    for i, s in enumerate(settings):
        key = (s.input_id, s.meas_id)
        _require(key not in index, f"duplicate setting {key}")
        index[key] = i
    ones = np.zeros(len(settings), dtype=np.int64)
    total = np.zeros(len(settings), dtype=np.int64)
    for r in doc["records"]:
        _require(isinstance(r, dict) and {"input_id", "meas_id", "outcome", "count"} <= set(r), "record needs input_id, meas_id, outcome, count")
        key = (int(r["input_id"]), int(r["meas_id"]))
        _require(key in index, f"record for unknown setting {key}")
        _require(r["outcome"] in (1, 2), "outcome must be 1 or 2")
        n = int(r["count"])
        _require(n >= 0, "negative count")
        if r["outcome"] == 1:
            ones[index[key]] += n
        total[index[key]] += n
    meta = {k: v for k, v in doc.items() if k not in ("format", "channel", "shots", "seed", "settings", "records")}
    return CountsTable(settings, ones, total, doc.get("seed"), doc.get("channel"), meta)


def read_counts(path) -> CountsTable:
    return counts_from_doc(read_json(path))


def write_counts(path, c: CountsTable):
    return _write_checked(path, dumps(counts_doc(c)), read_counts)


def counts_csv(c: CountsTable) -> str:
    """CSV export of the records; mirrors the JSON ``records`` array."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("input_id", "meas_id", "outcome", "count"))
    w.writerows(c.records())
    return buf.getvalue()


# --- correlations ----------------------------------------------------------


def correlations_csv(data: CorrelationData) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CORRELATION_COLUMNS)
    for pid, mid, p, s in zip(data.pair_id, data.meas_id, data.p, data.sigma):
        w.writerow((int(pid), int(mid), repr(float(p[0])), repr(float(p[1])), repr(float(s[0])), repr(float(s[1]))))
    return buf.getvalue()


def parse_correlations(text, source="<data>") -> CorrelationData:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        _require(header is None or tuple(h.strip() for h in header[:4]) == CORRELATION_COLUMNS[:4], f"{source}: unexpected header {header}")
        return CorrelationData(np.empty((0, 2)), np.empty((0, 2)), np.empty(0, dtype=int), np.empty(0, dtype=int))
    cols = set(rows[0])
    _require({"p11", "p12"} <= cols, f"{source}: needs columns p11, p12")
    p, s, pid, mid = [], [], [], []
    for n, r in enumerate(rows):
        try:
            p.append((float(r["p11"]), float(r["p12"])))
            s.append((float(r.get("s11") or 0.0), float(r.get("s12") or 0.0)))
            pid.append(int(r.get("pair_id") or n))
            mid.append(int(r.get("meas_id") or 0))
        except ValueError as exc:
            raise FormatError(f"{source}: line {n + 2}: {exc}") from None
    p = np.array(p)
    _require(np.all(np.isfinite(p)), f"{source}: non-finite probability")
    _require(np.all(np.array(s) >= 0.0), f"{source}: negative standard error")
    return CorrelationData(p, np.array(s), np.array(pid), np.array(mid))


def read_correlations(path) -> CorrelationData:
    return parse_correlations(Path(path).read_text(), str(path))


def write_correlations(path, data: CorrelationData):
    return _write_checked(path, correlations_csv(data), read_correlations)


# --- regions ---------------------------------------------------------------


def region_doc(r: Region) -> dict:
    doc = {"directions": r.angles.tolist(), "support_values": r.support_values.tolist(), "vertices": r.vertices.tolist()}
    if r.params is not None:
        doc["params"] = {"d2": r.params[0], "d3": r.params[1], "c3": r.params[2]}
    return doc


def region_from_doc(doc) -> Region:
    _require(isinstance(doc, dict), "region must be an object")
    theta = _finite_list(doc.get("directions"), None, "directions")
    h = _finite_list(doc.get("support_values"), len(theta), "support_values")
    verts = doc.get("vertices")
    _require(isinstance(verts, list), "vertices must be a list")
    for v in verts:
        _finite_list(v, 2, "vertex")
    params = doc.get("params")
    if params is not None:
        params = (float(params["d2"]), float(params["d3"]), float(params["c3"]))
    return Region(np.array(theta), np.array(h), np.array(verts, dtype=float).reshape(-1, 2), params)


def read_region(path) -> Region:
    return region_from_doc(read_json(path))


def write_region(path, r: Region):
    return _write_checked(path, dumps(region_doc(r)), read_region)


def boundary_csv(r: Region) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUNDARY_COLUMNS)
    for x, y in r.polygon:
        w.writerow((repr(float(x)), repr(float(y))))
    return buf.getvalue()


def read_boundary(path) -> np.ndarray:
    rows = list(csv.DictReader(io.StringIO(Path(path).read_text())))
    _require(not rows or set(BOUNDARY_COLUMNS) <= set(rows[0]), f"{path}: needs columns p11, p12")
    return np.array([(float(r["p11"]), float(r["p12"])) for r in rows]).reshape(-1, 2)


def write_boundary(path, r: Region):
    return _write_checked(path, boundary_csv(r), read_boundary)


# --- reports ---------------------------------------------------------------


def _check_report(doc, keys, what):
    _require(isinstance(doc, dict), f"{what} must be an object")
    missing = [k for k in keys if k not in doc]
    _require(not missing, f"{what} lacks {missing}")
    return doc


VERDICT_KEYS = ("kind", "validated", "k_sigma", "delta", "offenders", "ranges", "hypothesis")
CLASS_KEYS = ("kind", "d2", "d3", "c3", "mu", "in_regime", "area", "d1_range", "degenerate")
FIT_KEYS = ("kind", "fits")


def read_report(path) -> dict:
    doc = read_json(path)
    _require(isinstance(doc, dict) and "kind" in doc, f"{path}: report needs a 'kind'")
    keys = {"verdict": VERDICT_KEYS, "class": CLASS_KEYS, "fit": FIT_KEYS}.get(doc["kind"])
    _require(keys is not None, f"{path}: unknown report kind {doc['kind']!r}")
    return _check_report(doc, keys, f"{path} ({doc['kind']})")


def write_report(path, doc: dict):
    keys = {"verdict": VERDICT_KEYS, "class": CLASS_KEYS, "fit": FIT_KEYS}.get(doc.get("kind"))
    _require(keys is not None, f"unknown report kind {doc.get('kind')!r}")
    _check_report(doc, keys, doc["kind"])
    return _write_checked(path, dumps(doc), read_report)


def verdict_doc(v) -> dict:
    return {"kind": "verdict", **v.as_dict()}


def class_doc(result) -> dict:
    """Report of a DI-CC run (:class:`protocols.CharacterizationResult`)."""
    rep = result.report
    return {
        "kind": "class",
        "d2": rep.d2,
        "d3": rep.d3,
        "c3": rep.c3,
        "mu": rep.mu,
        "in_regime": rep.in_regime,
        "area": result.area,
        "d1_range": list(result.d1_range),
        "degenerate": result.degenerate,
        "channel": channel_doc(result.channel),
    }
