"""Volumetric prediction, moving-average post-filter and inline sections."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError, MissingTraceError
from .ingest import NULL, _float, _int, _rows, volume_from_rows, write_csv
from .nn import forward
from .preprocess import apply_zscore, invert_minmax, zone_index

HORIZON_HEADER = ("inline", "xline", "top1_t_ms", "top2_t_ms")
SAND_HEADER = ("inline", "xline", "t_ms", "sand_fraction")


@dataclass
class HorizonGrid:
    """Top1/Top2 times per trace, shape ``(n_inlines, n_xlines)``; NaN = unpicked."""

    inlines: np.ndarray
    xlines: np.ndarray
    top1: np.ndarray
    top2: np.ndarray


@dataclass
class SandFractionVolume:
    inlines: np.ndarray
    xlines: np.ndarray
    t0: float
    dt: float
    values: np.ndarray  # (n_inlines, n_xlines, nt)

    @property
    def nt(self):
        return self.values.shape[2]

    @property
    def t(self):
        return self.t0 + np.arange(self.nt) * self.dt

    def same_geometry(self, other):
        return (np.array_equal(self.inlines, other.inlines)
                and np.array_equal(self.xlines, other.xlines)
                and self.t0 == other.t0 and self.dt == other.dt and self.nt == other.nt)


@dataclass
class Section:
    inline: int
    xlines: np.ndarray
    t: np.ndarray
    values: np.ndarray  # (n_xlines, nt)


# ---------------------------------------------------------------------------
# prediction


def _predict_inline(model, data, top1, top2, t):
    # data (nx, nt, 3); top1/top2 (nx,)
    nx, nt, _ = data.shape
    out = np.full((nx, nt), np.nan)
    picked = ~(np.isnan(top1) | np.isnan(top2))
    if not picked.any():
        return out
    zone = zone_index(t[None, :], top1[:, None], top2[:, None])
    for z, zm in enumerate(model.zones):
        mask = (zone == z) & picked[:, None]
        if not mask.any():
            continue
        x = apply_zscore(zm.zscore, data[mask])
        out[mask] = invert_minmax(zm.minmax, forward(zm.mlp, x), clip=True)
    return out


def predict_volume(model, vol, hz, workers=1):
    """Zone-routed prediction of every voxel on the volume's native sampling.

    Traces without both horizons are left as NaN. The result does not depend
    on ``workers``.
    """
    if not (np.array_equal(vol.inlines, hz.inlines) and np.array_equal(vol.xlines, hz.xlines)):
        raise GeometryError("horizon grid does not match volume geometry")
    if hz.top1.shape != (len(vol.inlines), len(vol.xlines)):
        raise GeometryError("horizon arrays have the wrong shape")
    t = vol.t
    args = [(vol.data[i], hz.top1[i], hz.top2[i]) for i in range(len(vol.inlines))]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slabs = list(pool.map(lambda a: _predict_inline(model, *a, t), args))
    else:
        slabs = [_predict_inline(model, *a, t) for a in args]
    return SandFractionVolume(vol.inlines.copy(), vol.xlines.copy(), vol.t0, vol.dt, np.stack(slabs))


# ---------------------------------------------------------------------------
# filtering


def _check_window(w):
    if int(w) != w or w < 1 or w % 2 == 0:
        raise ConfigError(f"window size must be a positive odd integer, got {w}")
    return int(w)


def moving_average_filter(grid, w=3):
    """NaN-aware ``w x w`` moving average of a 2-D grid.

    Each output cell is the mean of the non-NaN input cells in the window
    centred on it; cells beyond the edge count as missing. A cell whose
    whole window is missing stays NaN. Reads only the original input.
    """
    w = _check_window(w)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2:
        raise ValueError("moving_average_filter expects a 2-D grid")
    r = w // 2
    nj, nk = grid.shape
    padded = np.full((nj + 2 * r, nk + 2 * r), np.nan)
    padded[r:r + nj, r:r + nk] = grid
    valid = ~np.isnan(padded)
    vals = np.where(valid, padded, 0.0)
    total = np.zeros(grid.shape)
    count = np.zeros(grid.shape)
    # row-major accumulation over window offsets
    for dj in range(w):
        for dk in range(w):
            total += vals[dj:dj + nj, dk:dk + nk]
            count += valid[dj:dj + nj, dk:dk + nk]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = total / count
    out[count == 0] = np.nan
    return out


def filter_volume(vol, w=3, workers=1):
    """Apply :func:`moving_average_filter` to every inline section independently."""
    w = _check_window(w)
    sections = [vol.values[i] for i in range(len(vol.inlines))]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda g: moving_average_filter(g, w), sections))
    else:
        out = [moving_average_filter(g, w) for g in sections]
    return SandFractionVolume(vol.inlines.copy(), vol.xlines.copy(), vol.t0, vol.dt, np.stack(out))


def roughness(section):
    """Mean absolute second difference along time, ignoring NaN."""
    d2 = np.abs(np.diff(np.asarray(section, dtype=float), n=2, axis=-1))
    return float(np.nanmean(d2))


# ---------------------------------------------------------------------------
# sections


def extract_section(vol, inline):
    idx = np.flatnonzero(vol.inlines == inline)
    if idx.size == 0:
        raise MissingTraceError(f"inline {inline} not in volume")
    i = int(idx[0])
    return Section(int(inline), vol.xlines.copy(), vol.t, vol.values[i].copy())


def write_section(section, path, fmt="csv"):
    """Write a section as a CSV grid (one row per xline) or an 8-bit P2 PGM.

    PGM maps [0, 1] linearly to [0, 255] with NaN drawn as 0; the mapping is
    recorded in ``<path>.meta.txt``.
    """
    path = Path(path)
    if fmt == "csv":
        header = ["xline"] + [repr(float(t)) for t in section.t]
        write_csv(path, header, ([int(xl), *row] for xl, row in zip(section.xlines, section.values)))
    elif fmt == "pgm":
        v = section.values
        finite = ~np.isnan(v)
        img = np.zeros(v.shape, dtype=int)
        img[finite] = np.rint(np.clip(v[finite], 0.0, 1.0) * 255).astype(int)
        img = img.T  # rows = time, columns = xline
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(f"P2\n{img.shape[1]} {img.shape[0]}\n255\n")
            for row in img:
                fh.write(" ".join(str(p) for p in row) + "\n")
        lines = [
            f"inline: {section.inline}",
            "mapping: pixel = round(255 * clip(sand_fraction, 0, 1))",
            "nan: 0",
            f"columns: xline {int(section.xlines[0])}..{int(section.xlines[-1])}",
            f"rows: t_ms {float(section.t[0])!r}..{float(section.t[-1])!r}",
            f"nan_cells: {int((~finite).sum())}",
        ]
        if not finite.any():
            lines.append("range: degenerate (no finite values; image is all zero)")
        else:
            lines.append(f"range: data min {float(v[finite].min())!r}, max {float(v[finite].max())!r}")
        Path(str(path) + ".meta.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ConfigError(f"unknown section format {fmt!r}; use csv or pgm")


def read_section_csv(path, inline=None):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
    if not header or header[0] != "xline":
        raise GeometryError(f"{path}: not a section grid")
    t = np.array([float(h) for h in header[1:]])
    xl, rows = [], []
    for lineno, fields in _rows(path, header):
        xl.append(_int(path, lineno, fields[0]))
        rows.append([_float(path, lineno, f) for f in fields[1:]])
    return Section(inline, np.array(xl), t, np.array(rows))


# ---------------------------------------------------------------------------
# volume / horizon files


def load_horizons(path):
    rows = []
    for lineno, (il, xl, t1, t2) in _rows(path, HORIZON_HEADER):
        t1, t2 = _float(path, lineno, t1), _float(path, lineno, t2)
        t1 = math.nan if t1 == NULL else t1
        t2 = math.nan if t2 == NULL else t2
        if not (math.isnan(t1) or math.isnan(t2)) and not t1 < t2:
            raise GeometryError(f"{path}:{lineno}: top1 must be above top2")
        rows.append((_int(path, lineno, il), _int(path, lineno, xl), t1, t2))
    a = np.array(rows, dtype=float)
    inlines = np.unique(a[:, 0]).astype(int)
    xlines = np.unique(a[:, 1]).astype(int)
    if len(a) != len(inlines) * len(xlines):
        raise GeometryError(f"{path}: horizon grid is incomplete")
    ii = np.searchsorted(inlines, a[:, 0])
    jj = np.searchsorted(xlines, a[:, 1])
    if len(np.unique(ii * len(xlines) + jj)) != len(a):
        raise GeometryError(f"{path}: duplicate horizon nodes")
    top1 = np.full((len(inlines), len(xlines)), np.nan)
    top2 = top1.copy()
    top1[ii, jj] = a[:, 2]
    top2[ii, jj] = a[:, 3]
    return HorizonGrid(inlines, xlines, top1, top2)


def write_horizons(path, hz):
    def v(x):
        return NULL if math.isnan(x) else float(x)

    rows = ((il, xl, v(hz.top1[i, j]), v(hz.top2[i, j]))
            for i, il in enumerate(hz.inlines) for j, xl in enumerate(hz.xlines))
    write_csv(path, HORIZON_HEADER, rows)


def write_sand_volume(path, vol):
    t = vol.t
    rows = ((il, xl, t[k], vol.values[i, j, k])
            for i, il in enumerate(vol.inlines)
            for j, xl in enumerate(vol.xlines)
            for k in range(vol.nt))
    write_csv(path, SAND_HEADER, rows)


def load_sand_volume(path):
    il, xl, t, v = [], [], [], []
    for lineno, fields in _rows(path, SAND_HEADER):
        il.append(_int(path, lineno, fields[0]))
        xl.append(_int(path, lineno, fields[1]))
        t.append(_float(path, lineno, fields[2]))
        v.append(_float(path, lineno, fields[3]))
    if not il:
        raise GeometryError(f"{path}: empty volume")
    grid = volume_from_rows(np.array(il), np.array(xl), np.array(t), np.array(v)[:, None])
    return SandFractionVolume(grid.inlines, grid.xlines, grid.t0, grid.dt, grid.data[..., 0])
