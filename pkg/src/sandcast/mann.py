"""Zone-modular networks: one MLP per well-top zone, concatenated predictions,
comparison against a single pooled network, and model persistence.
"""
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import metrics
from .errors import (
    ConfigError,
    DataError,
    EmptyZoneError,
    InconsistentComparisonError,
    ModelFormatError,
)
from .nn import (
    DEFAULT_CANDIDATES,
    MlpModel,
    TrainConfig,
    TrainTrace,
    fit_candidates,
    forward,
    init_weights,
    pick_hidden,
    train_scg,
)
from .preprocess import (
    ZONES,
    MinMaxStats,
    ZScoreStats,
    apply_zscore,
    fit_minmax,
    fit_zscore,
    invert_minmax,
    apply_minmax,
    segment_zones,
)

MANN_FORMAT = "sandcast-mann-v1"
SINGLE_FORMAT = "sandcast-single-v1"
REPORT_HEADER = ("scope", "cc", "rmse", "aem", "n", "time_s")


@dataclass
class ZoneModel:
    name: str
    mlp: MlpModel
    zscore: ZScoreStats
    minmax: MinMaxStats
    trace: TrainTrace

    def predict(self, x_raw):
        y = forward(self.mlp, apply_zscore(self.zscore, x_raw))
        return invert_minmax(self.minmax, y, clip=True)


@dataclass
class MannModel:
    zones: list
    blind_well_id: str
    config: TrainConfig
    train_wells: list = field(default_factory=list)
    created: str = ""

    @property
    def hidden(self):
        return [z.mlp.H for z in self.zones]

    @property
    def total_time(self):
        return sum(z.trace.wall_time for z in self.zones)


@dataclass
class SingleAnn:
    """Baseline: one network for the whole depth range, pooled normalizers."""

    model: ZoneModel
    blind_well_id: str
    config: TrainConfig
    train_wells: list = field(default_factory=list)
    created: str = ""


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _resolve_hidden(hidden):
    """Normalize the ``hidden`` argument to a list of three ints or None (auto)."""
    if hidden is None or hidden == "auto":
        return None
    if isinstance(hidden, (int, np.integer)):
        return [int(hidden)] * 3
    hidden = [int(h) for h in hidden]
    if len(hidden) != 3:
        raise ConfigError(f"need one hidden size per zone, got {hidden}")
    return hidden


def _fit(x, y, H, config, candidates):
    if H is None:
        fits = fit_candidates(x, y, candidates, config)
        H = pick_hidden(fits)
        return fits[H]
    return train_scg(init_weights(H, config.seed), x, y, config)


def train_mann(zoned, config, hidden="auto", candidates=DEFAULT_CANDIDATES):
    """Train the three zone networks; zone ``i`` (1-based) uses seed ``config.seed + i``.

    ``hidden`` is ``"auto"``, one size for all zones, or three sizes.
    """
    sizes = _resolve_hidden(hidden)
    zones = []
    for i, zd in enumerate(zoned.zones):
        if len(zd.train) == 0:
            raise EmptyZoneError(f"zone {zd.name} has no training patterns")
        zcfg = TrainConfig(config.max_epoch, config.err_min, config.seed + i + 1,
                           config.scg_sigma, config.scg_lambda0)
        H = None if sizes is None else sizes[i]
        mlp, trace = _fit(zd.train.x, zd.train.y, H, zcfg, candidates)
        zones.append(ZoneModel(zd.name, mlp, zd.zscore, zd.minmax, trace))
    return MannModel(zones, zoned.blind_well_id, config, list(zoned.train_wells), _now())


def pooled_training_set(zoned):
    x = np.concatenate([zd.train.x_raw for zd in zoned.zones])
    y = np.concatenate([zd.train.y_raw for zd in zoned.zones])
    return x, y


def train_single_ann(zoned, config, hidden="auto", candidates=DEFAULT_CANDIDATES):
    """Baseline network trained on all zones pooled, with pooled normalizers."""
    x_raw, y_raw = pooled_training_set(zoned)
    if len(y_raw) == 0:
        raise EmptyZoneError("pooled training set is empty")
    zs, mm = fit_zscore(x_raw), fit_minmax(y_raw)
    x, y = apply_zscore(zs, x_raw), apply_minmax(mm, y_raw)
    H = None if hidden is None or hidden == "auto" else int(hidden)
    mlp, trace = _fit(x, y, H, config, candidates)
    return SingleAnn(ZoneModel("single", mlp, zs, mm, trace), zoned.blind_well_id, config,
                     list(zoned.train_wells), _now())


# ---------------------------------------------------------------------------
# prediction


def predict_well(model, log, tops, return_zone=False):
    """Predicted sand fraction along a whole well, each sample from its zone's network.

    With ``return_zone=True`` also returns the zone index (0, 1, 2) used for
    every sample.
    """
    ranges = segment_zones(log, tops)
    x = log.x
    out = np.empty(len(log))
    zone = np.empty(len(log), dtype=np.int8)
    for z, r in enumerate(ranges):
        s = slice(r.start, r.stop)
        out[s] = model.zones[z].predict(x[s])
        zone[s] = z
    return (out, zone) if return_zone else out


def predict_single(single, log):
    return single.model.predict(log.x)


# ---------------------------------------------------------------------------
# comparison


@dataclass
class ReportRow:
    scope: str
    cc: float
    rmse: float
    aem: float
    n: int
    time_s: float


@dataclass
class BlindReport:
    blind_well_id: str
    rows: list

    def row(self, scope):
        for r in self.rows:
            if r.scope == scope:
                return r
        raise KeyError(scope)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(REPORT_HEADER) + "\n")
            for r in self.rows:
                fh.write(f"{r.scope},{r.cc!r},{r.rmse!r},{r.aem!r},{r.n},{r.time_s!r}\n")

    @classmethod
    def from_csv(cls, path, blind_well_id=""):
        rows = []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != REPORT_HEADER:
                raise DataError(f"{path}: not a blind-test report")
            for line in fh:
                s, c, r, a, n, t = line.strip().split(",")
                rows.append(ReportRow(s, float(c), float(r), float(a), int(n), float(t)))
        return cls(blind_well_id, rows)


def _metrics_row(scope, target, pred, time_s):
    c, r, a = metrics.evaluate(target, pred)
    return ReportRow(scope, c, r, a, len(target), time_s)


def compare(mann, single, log, tops):
    """Blind-well report: per-zone, averaged and single-network metrics in raw units."""
    if mann.blind_well_id != single.blind_well_id or log.well_id != mann.blind_well_id:
        raise InconsistentComparisonError(
            f"blind wells differ: mann={mann.blind_well_id}, single={single.blind_well_id}, "
            f"well={log.well_id}")
    if mann.train_wells and single.train_wells and sorted(mann.train_wells) != sorted(single.train_wells):
        raise InconsistentComparisonError("models were trained on different wells")
    pred = predict_well(mann, log, tops)
    y = log.sand_fraction
    zrows = []
    for zm, r in zip(mann.zones, segment_zones(log, tops)):
        s = slice(r.start, r.stop)
        zrows.append(_metrics_row(zm.name, y[s], pred[s], zm.trace.wall_time))
    n_tot = sum(r.n for r in zrows)
    t_tot = sum(r.time_s for r in zrows)
    avg = ReportRow("average", *(float(np.mean([getattr(r, k) for r in zrows]))
                                 for k in ("cc", "rmse", "aem")), n_tot, t_tot)
    wts = np.array([r.n for r in zrows], dtype=float) / n_tot
    wavg = ReportRow("weighted_average", *(float(np.dot(wts, [getattr(r, k) for r in zrows]))
                                           for k in ("cc", "rmse", "aem")), n_tot, t_tot)
    srow = _metrics_row("single_ann", y, predict_single(single, log), single.model.trace.wall_time)
    return BlindReport(log.well_id, zrows + [avg, wavg, srow])


# ---------------------------------------------------------------------------
# persistence


def _zone_to_dict(zm):
    m = zm.mlp
    return {
        "name": zm.name,
        "H": m.H,
        "W1": m.W1.ravel().tolist(),
        "b1": m.b1.tolist(),
        "W2": m.W2.tolist(),
        "b2": float(m.b2),
        "zscore": {"mean": zm.zscore.mean.tolist(), "std": zm.zscore.std.tolist()},
        "minmax": {"y_min": zm.minmax.y_min, "y_max": zm.minmax.y_max,
                   "a": zm.minmax.a, "b": zm.minmax.b},
        "trace": {"epochs_run": zm.trace.epochs_run, "stop_reason": zm.trace.stop_reason,
                  "final_rmse": zm.trace.final_rmse, "history": list(zm.trace.history)},
    }


def _zone_from_dict(d, wall_time):
    try:
        H = int(d["H"])
        mlp = MlpModel(np.array(d["W1"], dtype=float).reshape(H, 3), np.array(d["b1"], dtype=float),
                       np.array(d["W2"], dtype=float), float(d["b2"]))
        if mlp.b1.shape != (H,) or mlp.W2.shape != (H,):
            raise ModelFormatError(f"zone {d['name']}: parameter shapes do not match H={H}")
        zs = ZScoreStats(np.array(d["zscore"]["mean"], dtype=float), np.array(d["zscore"]["std"], dtype=float))
        mm = MinMaxStats(float(d["minmax"]["y_min"]), float(d["minmax"]["y_max"]),
                         float(d["minmax"]["a"]), float(d["minmax"]["b"]))
        tr = d.get("trace", {})
        trace = TrainTrace([float(v) for v in tr.get("history", [])], tr.get("stop_reason", ""), wall_time)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed zone entry: {exc}") from None
    if not np.all(np.isfinite(mlp.flat())):
        raise ModelFormatError(f"zone {d.get('name')}: non-finite parameters")
    return ZoneModel(str(d["name"]), mlp, zs, mm, trace)


def _config_dict(c):
    return {"max_epoch": c.max_epoch, "err_min": c.err_min, "seed": c.seed,
            "scg_sigma": c.scg_sigma, "scg_lambda0": c.scg_lambda0}


def run_info_path(path):
    """Sidecar holding the run-dependent fields (creation time, wall times)."""
    return Path(str(path) + ".run.json")


def save_model(model, path):
    """Write a MANN or single-network model as JSON.

    Floats are written in shortest round-trip form, so loading is
    bit-exact. Creation time and wall times go to a sidecar so the model
    file itself is reproducible byte for byte.
    """
    if isinstance(model, MannModel):
        doc = {"format": MANN_FORMAT, "zones": [_zone_to_dict(z) for z in model.zones]}
        times = [z.trace.wall_time for z in model.zones]
    elif isinstance(model, SingleAnn):
        doc = {"format": SINGLE_FORMAT, "zones": [_zone_to_dict(model.model)]}
        times = [model.model.trace.wall_time]
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    doc.update({
        "blind_well_id": model.blind_well_id,
        "train_wells": list(model.train_wells),
        "config": _config_dict(model.config),
        "zone_rule": "Z1: t < top1; Z2: top1 <= t < top2; Z3: t >= top2",
        "normalizer_scope": "per zone, training wells only" if isinstance(model, MannModel)
        else "pooled, training wells only",
    })
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    run_info_path(path).write_text(
        json.dumps({"created": model.created, "wall_time_s": times}) + "\n", encoding="utf-8")


def load_model(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: cannot read model: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: not a model document")
    fmt = doc.get("format")
    if fmt not in (MANN_FORMAT, SINGLE_FORMAT):
        raise ModelFormatError(f"{path}: unsupported format {fmt!r}")
    zones = doc.get("zones")
    expected = 3 if fmt == MANN_FORMAT else 1
    if not isinstance(zones, list) or len(zones) != expected:
        raise ModelFormatError(f"{path}: expected {expected} zone entries, found "
                               f"{len(zones) if isinstance(zones, list) else 'none'}")
    created, times = "", [0.0] * expected
    sidecar = run_info_path(path)
    if sidecar.exists():
        info = json.loads(sidecar.read_text(encoding="utf-8"))
        created = info.get("created", "")
        times = [float(t) for t in info.get("wall_time_s", times)]
        if len(times) != expected:
            raise ModelFormatError(f"{sidecar}: wrong number of wall times")
    try:
        config = TrainConfig(**doc["config"])
        blind = str(doc["blind_well_id"])
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from None
    zms = [_zone_from_dict(z, t) for z, t in zip(zones, times)]
    train_wells = list(doc.get("train_wells", []))
    if fmt == MANN_FORMAT:
        if [z.name for z in zms] != list(ZONES):
            raise ModelFormatError(f"{path}: zones must be {', '.join(ZONES)} in order")
        return MannModel(zms, blind, config, train_wells, created)
    return SingleAnn(zms[0], blind, config, train_wells, created)
