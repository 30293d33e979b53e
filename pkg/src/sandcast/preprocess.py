"""Normalization, well-top zonation and leave-one-well-out partitioning."""
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateError, EmptyZoneError, InsufficientDataError, UnknownWellError
from .ingest import check_tops

ZONES = ("Z1", "Z2", "Z3")
TARGET_LOW = 0.2
TARGET_HIGH = 0.8


@dataclass(frozen=True, eq=False)
class ZScoreStats:
    mean: np.ndarray
    std: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, ZScoreStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std)


@dataclass(frozen=True)
class MinMaxStats:
    y_min: float
    y_max: float
    a: float = TARGET_LOW
    b: float = TARGET_HIGH


def zone_index(t, top1_t, top2_t):
    """Zone number (0, 1, 2) of each time; a sample sitting on a top belongs to
    the deeper zone."""
    t = np.asarray(t)
    return (t >= top1_t).astype(np.int8) + (t >= top2_t).astype(np.int8)


def segment_zones(log, tops):
    """Split a well into three contiguous index ranges (Z1, Z2, Z3)."""
    check_tops(log, tops)
    i1 = int(np.searchsorted(log.t, tops.top1_t, side="left"))
    i2 = int(np.searchsorted(log.t, tops.top2_t, side="left"))
    ranges = (range(0, i1), range(i1, i2), range(i2, len(log.t)))
    for name, r in zip(ZONES, ranges):
        if len(r) == 0:
            raise EmptyZoneError(f"well {log.well_id}: zone {name} has no samples")
    return ranges


def fit_zscore(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) < 2:
        raise InsufficientDataError("z-score fit needs at least 2 rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    if np.any(std == 0):
        raise DegenerateError(f"zero-variance predictor column(s): {np.flatnonzero(std == 0).tolist()}")
    return ZScoreStats(mean, std)


def apply_zscore(stats, x):
    return (np.asarray(x, dtype=float) - stats.mean) / stats.std


def fit_minmax(y, a=TARGET_LOW, b=TARGET_HIGH):
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise InsufficientDataError("min-max fit on empty target")
    y_min, y_max = float(y.min()), float(y.max())
    if not y_max > y_min:
        raise DegenerateError("constant target cannot be min-max normalized")
    return MinMaxStats(y_min, y_max, a, b)


def apply_minmax(stats, y):
    span = stats.y_max - stats.y_min
    return stats.a + (stats.b - stats.a) * (np.asarray(y, dtype=float) - stats.y_min) / span


def invert_minmax(stats, y_norm, clip=False):
    """Exact inverse of :func:`apply_minmax`; ``clip=True`` additionally bounds
    the result to the physical range [0, 1] (used on network outputs)."""
    span = stats.y_max - stats.y_min
    y = stats.y_min + (np.asarray(y_norm, dtype=float) - stats.a) * span / (stats.b - stats.a)
    return np.clip(y, 0.0, 1.0) if clip else y


@dataclass
class PatternSet:
    """Patterns of one zone: raw and normalized predictors/targets plus provenance."""

    x_raw: np.ndarray
    y_raw: np.ndarray
    well_id: np.ndarray
    t: np.ndarray
    x: np.ndarray = None
    y: np.ndarray = None

    def __len__(self):
        return len(self.y_raw)

    def normalized(self, zstats, mstats):
        return PatternSet(self.x_raw, self.y_raw, self.well_id, self.t,
                          apply_zscore(zstats, self.x_raw), apply_minmax(mstats, self.y_raw))


def _concat(parts):
    if not parts:
        return PatternSet(np.empty((0, 3)), np.empty(0), np.empty(0, dtype=object), np.empty(0))
    return PatternSet(np.concatenate([p.x_raw for p in parts]),
                      np.concatenate([p.y_raw for p in parts]),
                      np.concatenate([p.well_id for p in parts]),
                      np.concatenate([p.t for p in parts]))


def _zone_slices(log, tops):
    x = log.x
    out = []
    for r in segment_zones(log, tops):
        s = slice(r.start, r.stop)
        out.append(PatternSet(x[s], log.sand_fraction[s],
                              np.full(len(r), log.well_id, dtype=object), log.t[s]))
    return out


@dataclass
class ZoneData:
    name: str
    train: PatternSet
    test: PatternSet
    zscore: ZScoreStats
    minmax: MinMaxStats


@dataclass
class ZonedDataset:
    blind_well_id: str
    train_wells: list
    zones: list


def partition_lowo(wells, blind_id):
    """Leave-one-well-out split into per-zone training and blind-test patterns.

    ``wells`` is a sequence of ``(WellLog, WellTops)`` pairs. Normalizers are
    fitted per zone on the training wells only and applied to both sides.
    """
    wells = list(wells)
    if len(wells) < 2:
        raise DataError("leave-one-well-out needs at least 2 wells")
    ids = [log.well_id for log, _ in wells]
    if blind_id not in ids:
        raise UnknownWellError(f"unknown blind well {blind_id!r}; available: {', '.join(ids)}")
    for log, tops in wells:
        if tops.well_id != log.well_id:
            raise DataError(f"tops for {tops.well_id} paired with log {log.well_id}")

    train_parts = [[], [], []]
    test_parts = None
    for log, tops in wells:
        parts = _zone_slices(log, tops)
        if log.well_id == blind_id:
            test_parts = parts
        else:
            for z in range(3):
                train_parts[z].append(parts[z])

    zones = []
    for z, name in enumerate(ZONES):
        train = _concat(train_parts[z])
        if len(train) == 0:
            raise EmptyZoneError(f"zone {name} has no training patterns")
        zs = fit_zscore(train.x_raw)
        mm = fit_minmax(train.y_raw)
        zones.append(ZoneData(name, train.normalized(zs, mm), test_parts[z].normalized(zs, mm), zs, mm))
    train_ids = [i for i in ids if i != blind_id]
    return ZonedDataset(blind_id, train_ids, zones)
