"""Event files, fit configuration and fit reports.

Event CSV schema::

    # horizon: 6.0          (optional metadata comments)
    # replicates: 200
    replicate,time          (optional header)
    1,0.53
    1,2.04

Replicate labels are positive integers. With a ``replicates`` comment the
labels are taken as ``1..R`` and replicates without events are kept;
otherwise the distinct labels are relabelled ``1..n`` in sorted order.
The plain format is one event time per line (single replicate).
"""

import csv
import io as _io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import EventSeries
from .errors import ConfigurationError, DataError

REPORT_FIELDS = ("config", "data", "n_bins", "edges", "mean", "bands", "diagnostics",
                 "warnings", "seed", "timing")


def _open_text(path):
    if path is None or path == "-":
        import sys

        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _parse_metadata(line, meta):
    key, sep, value = line.lstrip("#").partition(":")
    if sep:
        meta[key.strip().lower()] = value.strip()


def _detect_format(text):
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            return "csv" if "," in s else "plain"
    return "plain"


def parse_events(text, fmt=None, horizon=None):
    """Parse event text; returns ``(EventSeries, metadata)``."""
    fmt = _detect_format(text) if fmt is None else fmt
    if fmt not in ("csv", "plain"):
        raise ConfigurationError(f"unknown event format {fmt!r}")
    meta = {}
    labels, times = [], []
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            _parse_metadata(line, meta)
            continue
        if fmt == "plain":
            try:
                t = float(line)
            except ValueError:
                raise DataError(f"line {lineno}: cannot parse event time {line!r}") from None
            labels.append(1)
        else:
            parts = [p.strip() for p in next(csv.reader([line]))]
            if not seen_header and not labels and parts[:2] == ["replicate", "time"]:
                seen_header = True
                continue
            if len(parts) != 2:
                raise DataError(f"line {lineno}: expected 'replicate,time', got {line!r}")
            try:
                lab = int(parts[0])
                t = float(parts[1])
            except ValueError:
                raise DataError(f"line {lineno}: malformed row {line!r}") from None
            if lab < 1:
                raise DataError(f"line {lineno}: replicate label must be a positive integer")
            labels.append(lab)
        if not math.isfinite(t) or t < 0:
            raise DataError(f"line {lineno}: event time {t!r} is negative or not finite")
        times.append(t)

    if horizon is None and "horizon" in meta:
        horizon = float(meta["horizon"])
    if horizon is None:
        if times:
            horizon = max(times)
            warnings.warn(f"no horizon given; using the largest event time {horizon!r}")
        else:
            horizon = 1.0
            warnings.warn("no horizon given and no events; using T = 1")
    if not times:
        warnings.warn("event file contains no events")

    labels = np.asarray(labels, dtype=np.int64)
    times = np.asarray(times, dtype=float)
    if "replicates" in meta:
        n = int(meta["replicates"])
        if labels.size and labels.max() > n:
            raise DataError(f"replicate label {labels.max()} exceeds declared count {n}")
        ids = labels - 1
    else:
        uniq = np.unique(labels) if labels.size else np.array([1])
        n = uniq.size
        if labels.size and not np.array_equal(uniq, np.arange(1, n + 1)):
            warnings.warn("replicate labels are not contiguous; relabelled 1..n")
        ids = np.searchsorted(uniq, labels)
    reps = [times[ids == j] for j in range(n)]
    return EventSeries(horizon, reps), meta


def ingest_events(path, fmt=None, horizon=None) -> EventSeries:
    """Read an event file (``'-'`` for stdin); see the module docstring for formats."""
    data, _ = parse_events(_open_text(path), fmt, horizon)
    return data


def format_events(data: EventSeries):
    buf = _io.StringIO()
    buf.write(f"# horizon: {data.horizon!r}\n# replicates: {data.n}\n")
    buf.write("replicate,time\n")
    for j, rep in enumerate(data.replicates, start=1):
        for t in rep:
            buf.write(f"{j},{float(t)!r}\n")
    return buf.getvalue()


def write_events(data: EventSeries, path):
    text = format_events(data)
    if path is None or path == "-":
        import sys

        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# configuration -------------------------------------------------------------

@dataclass
class FitConfig:
    method: str = "gmc"
    bins: str = "rule"
    alpha: float = 0.1
    beta: object = 0.1  # float or "auto"
    alpha1: float = 0.1
    beta1: float = 0.1
    alpha_prior: str = "exponential:0.1"
    fixed_alpha: float = None
    iterations: int = 30000
    burn_in_fraction: float = 0.5
    seed: int = None
    levels: tuple = (0.75, 0.95)
    period: float = None
    horizon: float = None
    model_prior: str = "uniform:50"
    eta: float = 0.45

    def __post_init__(self):
        if self.method not in ("conjugate", "gmc", "rj"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigurationError("burn-in fraction must lie in [0, 1)")
        self.levels = tuple(float(v) for v in self.levels)
        for lv in self.levels:
            if not 0 < lv < 1:
                raise ConfigurationError(f"band level {lv} outside (0, 1)")
        parse_bins(self.bins)

    def to_dict(self):
        d = asdict(self)
        d["levels"] = list(self.levels)
        return d


def parse_bins(spec):
    """``'12'`` -> ('fixed', 12); ``'rule[:cap]'``; ``'ebayes[:lo..hi]'``."""
    spec = str(spec).strip()
    head, _, arg = spec.partition(":")
    if head.isdigit():
        if int(head) < 1 or arg:
            raise ConfigurationError(f"invalid bin specification {spec!r}")
        return "fixed", int(head)
    if head == "rule":
        return "rule", int(arg) if arg else 50
    if head == "ebayes":
        if not arg:
            return "ebayes", None
        lo, sep, hi = arg.partition("..")
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise ConfigurationError(f"invalid candidate range {arg!r}") from None
        if not sep or not 1 <= lo <= hi:
            raise ConfigurationError(f"invalid candidate range {arg!r}")
        return "ebayes", range(lo, hi + 1)
    raise ConfigurationError(f"invalid bin specification {spec!r}")


# reports -------------------------------------------------------------------

@dataclass
class FitReport:
    config: dict
    data: dict
    n_bins: int
    edges: list
    mean: list
    bands: list  # of {"level", "lower", "upper"}
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    seed: int = None
    timing: dict = None

    def to_dict(self):
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in ("config", "data", "n_bins", "edges", "mean", "bands") if k not in d]
        if missing:
            raise DataError(f"report is missing fields {missing}")
        return cls(**{k: d.get(k) for k in REPORT_FIELDS})


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, range):
        return [obj.start, obj.stop - 1]
    return obj


def report_to_json(report: FitReport):
    return json.dumps(_plain(report.to_dict()), indent=2, sort_keys=False) + "\n"


def _band_columns(report):
    cols = []
    for b in report.bands:
        cols += [f"lo_{b['level']!r}", f"hi_{b['level']!r}"]
    return cols


def report_to_csv(report: FitReport):
    meta = _plain(report.to_dict())
    for key in ("edges", "mean", "bands"):
        meta.pop(key)
    meta["levels"] = [b["level"] for b in report.bands]
    buf = _io.StringIO()
    buf.write("# report: " + json.dumps(meta, sort_keys=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_index", "edge_lo", "edge_hi", "mean"] + _band_columns(report))
    for k in range(report.n_bins):
        row = [k + 1, repr(float(report.edges[k])), repr(float(report.edges[k + 1])),
               repr(float(report.mean[k]))]
        for b in report.bands:
            row += [repr(float(b["lower"][k])), repr(float(b["upper"][k]))]
        w.writerow(row)
    return buf.getvalue()


def write_report(report: FitReport, path, fmt="json"):
    """Serialise a report as JSON or long-format CSV (``path`` ``'-'`` is stdout)."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r}")
    if path is None or path == "-":
        import sys

        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def parse_report(text, fmt=None) -> FitReport:
    if fmt is None:
        fmt = "csv" if text.startswith("# report:") else "json"
    if fmt == "json":
        return FitReport.from_dict(json.loads(text))
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# report:"):
        raise DataError("CSV report lacks its metadata line")
    meta = json.loads(lines[0][len("# report:"):])
    levels = meta.pop("levels")
    rows = list(csv.reader(lines[1:]))[1:]
    edges = [float(rows[0][1])] + [float(r[2]) for r in rows] if rows else []
    mean = [float(r[3]) for r in rows]
    bands = []
    for i, lv in enumerate(levels):
        bands.append({"level": lv, "lower": [float(r[4 + 2 * i]) for r in rows],
                      "upper": [float(r[5 + 2 * i]) for r in rows]})
    meta.update(edges=edges, mean=mean, bands=bands)
    return FitReport.from_dict(meta)


def read_report(path, fmt=None) -> FitReport:
    with open(path) as fh:
        return parse_report(fh.read(), fmt)
