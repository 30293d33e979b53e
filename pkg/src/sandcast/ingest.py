"""Well-log / seismic integration.

Parses the text formats (well logs, checkshots, well locations, well tops,
attribute volumes), converts logs from measured depth to two-way time,
removes missing samples and resamples everything onto a common uniform
0.10 ms grid with a not-a-knot cubic spline.

All CSV files are UTF-8, comma separated, with a mandatory header row and
no quoting.
"""
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DataError,
    ExtrapolationError,
    GeometryError,
    InsufficientDataError,
    MissingTraceError,
    NoOverlapError,
    OrderingError,
    ParseError,
    TopsError,
)

NULL = -999.25
DT_OUT = 0.10
ATTRIBUTES = ("impedance", "inst_amp", "inst_freq")
MIN_SPLINE_POINTS = 4

# relative slack on range checks; absorbs the rounding of t_start + k*dt
_RANGE_EPS = 1e-9

LOG_HEADER = ("well_id", "md_m", "sand_fraction")
CHECKSHOT_HEADER = ("well_id", "md_m", "twt_ms")
LOCATION_HEADER = ("well_id", "inline", "xline")
TOPS_HEADER = ("well_id", "top_name", "twt_ms")
VOLUME_HEADER = ("inline", "xline", "t_ms") + ATTRIBUTES
INTEGRATED_HEADER = ("well_id", "t_ms") + ATTRIBUTES + ("sand_fraction",)


@dataclass
class RawWellLog:
    """Depth-domain sand-fraction log; missing samples are NaN."""

    well_id: str
    md: np.ndarray
    sand_fraction: np.ndarray

    def __len__(self):
        return len(self.md)


@dataclass
class Checkshot:
    well_id: str
    md: np.ndarray
    twt: np.ndarray


@dataclass(frozen=True)
class WellLocation:
    well_id: str
    inline: int
    xline: int


@dataclass(frozen=True)
class WellTops:
    well_id: str
    top1_t: float
    top2_t: float


@dataclass
class AttributeVolume:
    """Regular (inline, xline, time) grid of the three predictor attributes.

    ``data`` has shape ``(n_inlines, n_xlines, nt, 3)`` with the last axis
    ordered as :data:`ATTRIBUTES`.
    """

    inlines: np.ndarray
    xlines: np.ndarray
    t0: float
    dt: float
    data: np.ndarray

    @property
    def nt(self):
        return self.data.shape[2]

    @property
    def t(self):
        return self.t0 + np.arange(self.nt) * self.dt

    def index_of(self, inline, xline):
        i = np.searchsorted(self.inlines, inline)
        j = np.searchsorted(self.xlines, xline)
        if (i >= len(self.inlines) or self.inlines[i] != inline
                or j >= len(self.xlines) or self.xlines[j] != xline):
            raise MissingTraceError(f"no trace at inline={inline}, xline={xline}")
        return int(i), int(j)


@dataclass
class WellLog:
    """Integrated time-domain well: three attributes plus sand fraction,
    uniformly sampled every 0.10 ms."""

    well_id: str
    t: np.ndarray
    impedance: np.ndarray
    inst_amp: np.ndarray
    inst_freq: np.ndarray
    sand_fraction: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def x(self):
        """Predictor matrix, shape ``(n, 3)``."""
        return np.column_stack([self.impedance, self.inst_amp, self.inst_freq])


# ---------------------------------------------------------------------------
# CSV plumbing


def _rows(path, header):
    """Yield ``(line_number, fields)`` for every data row of a CSV file."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        got = tuple(f.strip() for f in first.rstrip("\r\n").split(","))
        if got != tuple(header):
            raise ParseError(path, 1, f"expected header {','.join(header)!r}, got {first.strip()!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split(",")
            if len(fields) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} columns, got {len(fields)}")
            yield lineno, fields


def _float(path, lineno, text):
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, lineno, f"non-numeric field {text!r}") from None


def _int(path, lineno, text):
    try:
        return int(text)
    except ValueError:
        raise ParseError(path, lineno, f"non-integer field {text!r}") from None


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _well_id(path, lineno, text):
    text = text.strip()
    if not text:
        raise ParseError(path, lineno, "empty well_id")
    return text


# ---------------------------------------------------------------------------
# loaders


def load_well_logs(path):
    """Read ``well_id,md_m,sand_fraction`` rows into :class:`RawWellLog` objects.

    Rows of one well must have strictly increasing depth. The null sentinel
    ``-999.25`` becomes NaN.
    """
    wells = {}
    for lineno, (wid, md, sf) in _rows(path, LOG_HEADER):
        wid = _well_id(path, lineno, wid)
        md = _float(path, lineno, md)
        sf = _float(path, lineno, sf)
        if sf == NULL:
            sf = math.nan
        elif not 0.0 <= sf <= 1.0:
            raise ParseError(path, lineno, f"sand fraction {sf} outside [0, 1]")
        mds, sfs = wells.setdefault(wid, ([], []))
        if mds and md <= mds[-1]:
            raise OrderingError(path, lineno, f"md {md} not increasing for well {wid}")
        mds.append(md)
        sfs.append(sf)
    return [RawWellLog(wid, np.array(m), np.array(s)) for wid, (m, s) in wells.items()]


def load_checkshots(path):
    shots = {}
    for lineno, (wid, md, twt) in _rows(path, CHECKSHOT_HEADER):
        wid = _well_id(path, lineno, wid)
        md, twt = _float(path, lineno, md), _float(path, lineno, twt)
        mds, twts = shots.setdefault(wid, ([], []))
        if mds and (md <= mds[-1] or twt <= twts[-1]):
            raise OrderingError(path, lineno, f"checkshot for {wid} not strictly increasing")
        mds.append(md)
        twts.append(twt)
    out = {}
    for wid, (m, t) in shots.items():
        if len(m) < 2:
            raise InsufficientDataError(f"checkshot for {wid} needs at least 2 pairs")
        out[wid] = Checkshot(wid, np.array(m), np.array(t))
    return out


def load_locations(path):
    out = {}
    for lineno, (wid, il, xl) in _rows(path, LOCATION_HEADER):
        wid = _well_id(path, lineno, wid)
        if wid in out:
            raise ParseError(path, lineno, f"duplicate location for {wid}")
        out[wid] = WellLocation(wid, _int(path, lineno, il), _int(path, lineno, xl))
    return out


def load_tops(path):
    picks = {}
    for lineno, (wid, name, twt) in _rows(path, TOPS_HEADER):
        wid = _well_id(path, lineno, wid)
        name = name.strip()
        if name not in ("Top1", "Top2"):
            raise ParseError(path, lineno, f"unknown top name {name!r}")
        d = picks.setdefault(wid, {})
        if name in d:
            raise ParseError(path, lineno, f"duplicate {name} for {wid}")
        d[name] = _float(path, lineno, twt)
    out = {}
    for wid, d in picks.items():
        if set(d) != {"Top1", "Top2"}:
            raise TopsError(f"well {wid} needs both Top1 and Top2")
        if not d["Top1"] < d["Top2"]:
            raise TopsError(f"well {wid}: Top1 must lie above Top2")
        out[wid] = WellTops(wid, d["Top1"], d["Top2"])
    return out


def load_volume(path):
    """Read an attribute volume and check that it forms a complete regular grid."""
    coords, values = [], []
    for lineno, fields in _rows(path, VOLUME_HEADER):
        coords.append((_int(path, lineno, fields[0]), _int(path, lineno, fields[1]),
                       _float(path, lineno, fields[2])))
        values.append([_float(path, lineno, f) for f in fields[3:]])
    if not coords:
        raise GeometryError(f"{path}: empty volume")
    return volume_from_rows(np.array([c[0] for c in coords]), np.array([c[1] for c in coords]),
                            np.array([c[2] for c in coords]), np.array(values))


def volume_from_rows(il, xl, t, values):
    """Assemble an :class:`AttributeVolume` from flat coordinate columns."""
    inlines = np.unique(il)
    xlines = np.unique(xl)
    times = np.unique(t)
    ni, nx, nt = len(inlines), len(xlines), len(times)
    if len(il) != ni * nx * nt:
        raise GeometryError(f"irregular grid: {len(il)} rows for {ni}x{nx}x{nt} nodes")
    if nt < 2:
        raise GeometryError("volume needs at least 2 time samples")
    t0 = float(times[0])
    dt = float(times[1] - times[0])
    if dt <= 0 or not np.allclose(np.diff(times), dt, rtol=0, atol=1e-6 * dt):
        raise GeometryError("time samples are not uniformly spaced")
    ii = np.searchsorted(inlines, il)
    jj = np.searchsorted(xlines, xl)
    kk = np.rint((t - t0) / dt).astype(int)
    flat = (ii * nx + jj) * nt + kk
    if len(np.unique(flat)) != len(flat):
        raise GeometryError("duplicate grid nodes in volume")
    data = np.empty((ni * nx * nt, values.shape[1]))
    data[flat] = values
    return AttributeVolume(inlines, xlines, t0, dt, data.reshape(ni, nx, nt, values.shape[1]))


def write_volume(path, vol):
    t = vol.t
    rows = ((il, xl, t[k], *vol.data[i, j, k])
            for i, il in enumerate(vol.inlines)
            for j, xl in enumerate(vol.xlines)
            for k in range(vol.nt))
    write_csv(path, VOLUME_HEADER, rows)


def write_well_logs(path, logs):
    rows = ((w.well_id, md, NULL if math.isnan(sf) else sf)
            for w in logs for md, sf in zip(w.md, w.sand_fraction))
    write_csv(path, LOG_HEADER, rows)


def write_checkshots(path, shots):
    rows = ((c.well_id, md, twt) for c in shots for md, twt in zip(c.md, c.twt))
    write_csv(path, CHECKSHOT_HEADER, rows)


def write_locations(path, locations):
    write_csv(path, LOCATION_HEADER, ((loc.well_id, loc.inline, loc.xline) for loc in locations))


def write_tops(path, tops):
    rows = []
    for tp in tops:
        rows.append((tp.well_id, "Top1", float(tp.top1_t)))
        rows.append((tp.well_id, "Top2", float(tp.top2_t)))
    write_csv(path, TOPS_HEADER, rows)


def write_integrated(path, wells):
    rows = ((w.well_id, *r) for w in wells
            for r in zip(w.t, w.impedance, w.inst_amp, w.inst_freq, w.sand_fraction))
    write_csv(path, INTEGRATED_HEADER, rows)


def load_integrated(path):
    cols = {}
    for lineno, fields in _rows(path, INTEGRATED_HEADER):
        wid = _well_id(path, lineno, fields[0])
        cols.setdefault(wid, []).append([_float(path, lineno, f) for f in fields[1:]])
    wells = []
    for wid, rows in cols.items():
        a = np.array(rows)
        wells.append(WellLog(wid, a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4]))
    return wells


# ---------------------------------------------------------------------------
# operations


def drop_missing(log):
    """Remove null samples, keeping the original order."""
    keep = ~np.isnan(log.sand_fraction)
    if keep.sum() < MIN_SPLINE_POINTS:
        raise InsufficientDataError(
            f"well {log.well_id}: {int(keep.sum())} valid samples, need {MIN_SPLINE_POINTS}")
    return RawWellLog(log.well_id, log.md[keep], log.sand_fraction[keep])


def depth_to_time(log, cs):
    """Map measured depth to two-way time through the checkshot (piecewise linear).

    Returns ``(twt, sand_fraction)``. Extrapolation beyond the checkshot is
    refused.
    """
    md = np.asarray(log.md, dtype=float)
    lo, hi = cs.md[0], cs.md[-1]
    if md.size and (md.min() < lo or md.max() > hi):
        raise ExtrapolationError(
            f"well {log.well_id}: depths [{md.min()}, {md.max()}] m exceed checkshot [{lo}, {hi}] m")
    twt = np.interp(md, cs.md, cs.twt)
    if np.any(np.diff(twt) <= 0):
        raise DataError(f"well {log.well_id}: converted times are not strictly increasing")
    return twt, np.asarray(log.sand_fraction, dtype=float).copy()


def uniform_grid(t_start, t_end, dt):
    n = int(math.floor((t_end - t_start) / dt + 1e-9)) + 1
    return t_start + np.arange(n) * dt


def resample_uniform(t, values, t_start, t_end, dt=DT_OUT):
    """Not-a-knot cubic spline resampling onto ``t_start + k*dt <= t_end``.

    ``values`` may be 1-D or 2-D (samples along the first axis). Returns
    ``(t_grid, resampled)``.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(t) < MIN_SPLINE_POINTS:
        raise InsufficientDataError(f"need at least {MIN_SPLINE_POINTS} points, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise DataError("sample times must be strictly increasing")
    if dt <= 0 or t_end < t_start:
        raise DataError("invalid resampling grid")
    slack = _RANGE_EPS * max(1.0, abs(t[0]), abs(t[-1]))
    if t_start < t[0] - slack or t_end > t[-1] + slack:
        raise ExtrapolationError(
            f"requested [{t_start}, {t_end}] exceeds data range [{t[0]}, {t[-1]}]")
    grid = uniform_grid(t_start, t_end, dt)
    spline = CubicSpline(t, values, axis=0, bc_type="not-a-knot")
    return grid, spline(grid)


def extract_trace(vol, loc):
    """Attribute trace at a well location: ``(t, values)`` with values ``(nt, 3)``."""
    i, j = vol.index_of(loc.inline, loc.xline)
    return vol.t, vol.data[i, j].copy()


def integrate(well_id, twt, sand_fraction, trace_t, trace_values, dt=DT_OUT):
    """Fuse a time-domain log with the attribute trace at its location.

    Both are resampled on the intersection of their time spans; the target
    is clamped to [0, 1] against spline overshoot.
    """
    t_start = max(twt[0], trace_t[0])
    t_end = min(twt[-1], trace_t[-1])
    if t_end - t_start < 1.0:
        raise NoOverlapError(
            f"well {well_id}: log [{twt[0]}, {twt[-1]}] and trace [{trace_t[0]}, {trace_t[-1]}] ms "
            "overlap by less than 1 ms")
    grid, attrs = resample_uniform(trace_t, trace_values, t_start, t_end, dt)
    _, sf = resample_uniform(twt, sand_fraction, t_start, t_end, dt)
    return WellLog(well_id, grid, attrs[:, 0].copy(), attrs[:, 1].copy(), attrs[:, 2].copy(),
                   np.clip(sf, 0.0, 1.0))


def integrate_well(raw, checkshot, location, vol, dt=DT_OUT):
    """Full chain for one well: drop nulls, depth to time, extract, integrate."""
    clean = drop_missing(raw)
    twt, sf = depth_to_time(clean, checkshot)
    trace_t, trace = extract_trace(vol, location)
    return integrate(raw.well_id, twt, sf, trace_t, trace, dt)


def integrate_all(logs, checkshots, locations, vol, dt=DT_OUT):
    out = []
    for raw in logs:
        if raw.well_id not in checkshots:
            raise DataError(f"no checkshot for well {raw.well_id}")
        if raw.well_id not in locations:
            raise DataError(f"no location for well {raw.well_id}")
        out.append(integrate_well(raw, checkshots[raw.well_id], locations[raw.well_id], vol, dt))
    return out


def check_tops(log, tops):
    """Raise :class:`TopsError` unless ``first_t < top1 < top2 < last_t``."""
    if not (log.t[0] < tops.top1_t < tops.top2_t < log.t[-1]):
        raise TopsError(
            f"well {log.well_id}: tops ({tops.top1_t}, {tops.top2_t}) ms must lie strictly "
            f"inside the log span [{log.t[0]}, {log.t[-1]}] ms")
