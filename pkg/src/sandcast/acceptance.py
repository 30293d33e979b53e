"""Acceptance checks, runnable from ``sandcast selftest`` and from pytest.

Each ``check_*`` function returns a :class:`Result`; tolerances are fixed
constants below. Heavy fixtures (synthetic field, trained models) are cached
on a :class:`Context` so the checks can share them.
"""
import hashlib
import os
import statistics
import tempfile
import time
from contextlib import redirect_stdout
from dataclasses import dataclass, field
from functools import cached_property
from io import StringIO
from pathlib import Path

import numpy as np

from . import cli, metrics
from .errors import CapacityError
from .ingest import integrate_all, resample_uniform
from .mann import compare, predict_well, train_mann, train_single_ann
from .nn import TrainConfig, check_capacity, gradient, init_weights, train_scg
from .preprocess import apply_minmax, apply_zscore, fit_minmax, invert_minmax, partition_lowo, segment_zones
from .synth import SynthConfig, generate
from .volume import filter_volume, moving_average_filter, predict_volume, roughness

WELLS = tuple(f"W{i}" for i in range(1, 9))

BLIND_CC_MIN = 0.90
BLIND_RMSE_MAX = 0.08
BLIND_RUNTIME_MAX_S = 120.0
BLIND_CONFIG = TrainConfig(max_epoch=300, err_min=1e-4, seed=7)

COMPARE_SEEDS = (1, 2, 3, 4, 5)
COMPARE_WIN_FRACTION = 0.80
COMPARE_ZONE_HIDDEN = 4
COMPARE_MAX_EPOCH = 200

GRAD_DRAWS = 20
GRAD_STEP = 1e-5
GRAD_REL_MAX = 1e-6
MONOTONE_TOL = 1e-15
SPLINE_ABS_MAX = 1e-9
SPLINE_QUERIES = 200
FILTER_GRIDS = 100
FILTER_NAN_FRACTION = 0.2
MINMAX_TOL = 1e-12
ZSCORE_TOL = 1e-10


@dataclass
class Result:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class Context:
    quick: bool = False
    traces: list = field(default_factory=list)

    @cached_property
    def field(self):
        return generate(SynthConfig(seed=42))

    @cached_property
    def pairs(self):
        f = self.field
        wells = integrate_all(f.logs, f.checkshots, f.locations, f.volume)
        return [(w, f.tops[w.well_id]) for w in wells]

    @cached_property
    def blind_runs(self):
        """LOWO over all eight wells: ``{well: (model, per-zone cc, rmse)}`` and runtime."""
        start = time.perf_counter()
        runs = {}
        for wid in WELLS:
            zoned = partition_lowo(self.pairs, wid)
            model = train_mann(zoned, BLIND_CONFIG, hidden="auto")
            self.traces += [z.trace for z in model.zones]
            log, tops = next(p for p in self.pairs if p[0].well_id == wid)
            pred = predict_well(model, log, tops)
            ccs = [metrics.cc(log.sand_fraction[r.start:r.stop], pred[r.start:r.stop])
                   for r in segment_zones(log, tops)]
            runs[wid] = (model, ccs, metrics.rmse(log.sand_fraction, pred))
        return runs, time.perf_counter() - start


def check_blind_quality(ctx):
    runs, elapsed = ctx.blind_runs
    med_cc = [statistics.median(r[1][z] for r in runs.values()) for z in range(3)]
    med_rmse = statistics.median(r[2] for r in runs.values())
    ok = all(c >= BLIND_CC_MIN for c in med_cc) and med_rmse <= BLIND_RMSE_MAX and elapsed <= BLIND_RUNTIME_MAX_S
    return Result("1 blind-test quality", ok,
                  f"median CC Z1/Z2/Z3 = {med_cc[0]:.4f}/{med_cc[1]:.4f}/{med_cc[2]:.4f} "
                  f"(>= {BLIND_CC_MIN}), median RMSE = {med_rmse:.4f} (<= {BLIND_RMSE_MAX}), "
                  f"{elapsed:.1f} s (<= {BLIND_RUNTIME_MAX_S:.0f} s)")


def check_mann_beats_single(ctx):
    seeds = COMPARE_SEEDS[:2] if ctx.quick else COMPARE_SEEDS
    wells = WELLS[:3] if ctx.quick else WELLS
    wins, runs, t_mann, t_single = 0, 0, [], []
    h_single = 3 * COMPARE_ZONE_HIDDEN
    for seed in seeds:
        f = generate(SynthConfig(seed=seed))
        pairs = [(w, f.tops[w.well_id]) for w in integrate_all(f.logs, f.checkshots, f.locations, f.volume)]
        cfg = TrainConfig(max_epoch=COMPARE_MAX_EPOCH, err_min=1e-4, seed=seed)
        for wid in wells:
            zoned = partition_lowo(pairs, wid)
            model = train_mann(zoned, cfg, hidden=COMPARE_ZONE_HIDDEN)
            single = train_single_ann(zoned, cfg, hidden=h_single)
            ctx.traces += [z.trace for z in model.zones] + [single.model.trace]
            log, tops = next(p for p in pairs if p[0].well_id == wid)
            report = compare(model, single, log, tops)
            wins += report.row("average").cc > report.row("single_ann").cc
            runs += 1
            t_mann.append(report.row("average").time_s)
            t_single.append(report.row("single_ann").time_s)
    frac = wins / runs
    mt, st = statistics.median(t_mann), statistics.median(t_single)
    ok = frac >= COMPARE_WIN_FRACTION and mt <= st
    return Result("2 MANN beats single ANN", ok,
                  f"average CC higher in {wins}/{runs} runs ({frac:.0%} >= {COMPARE_WIN_FRACTION:.0%}); "
                  f"median training time {mt:.2f} s vs {st:.2f} s (H_single = {h_single})")


def reference_loss(x, y, w, H):
    """Independent ``E = (1/2N) sum (o - y)^2`` in extended precision."""
    w = np.asarray(w, dtype=np.longdouble)
    W1, b1, W2, b2 = w[:3 * H].reshape(H, 3), w[3 * H:4 * H], w[4 * H:5 * H], w[-1]
    o = 1 / (1 + np.exp(-(np.tanh(np.asarray(x, dtype=np.longdouble) @ W1.T + b1) @ W2 + b2)))
    e = o - np.asarray(y, dtype=np.longdouble)
    return (e * e).sum() / (2 * len(e))


def finite_difference_gradient(x, y, w, H, h=GRAD_STEP):
    """Central differences of :func:`reference_loss`; extended precision keeps
    cancellation well below the tolerance on near-zero components."""
    w = np.asarray(w, dtype=np.longdouble)
    g = np.empty(len(w))
    for k in range(len(w)):
        e = np.zeros(len(w), dtype=np.longdouble)
        e[k] = h
        g[k] = float((reference_loss(x, y, w + e, H) - reference_loss(x, y, w - e, H)) / (2 * h))
    return g


def check_gradient(ctx):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(GRAD_DRAWS):
        H = int(rng.integers(1, 9))
        model = init_weights(H, int(rng.integers(0, 2**31)))
        x = rng.normal(size=(10, 3))
        y = rng.uniform(0.2, 0.8, size=10)
        a = gradient(model, x, y).flat()
        n = finite_difference_gradient(x, y, model.flat(), H)
        rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), np.finfo(float).tiny)
        worst = max(worst, float(rel.max()))
    return Result("3 gradient correctness", worst < GRAD_REL_MAX,
                  f"max relative error {worst:.2e} over {GRAD_DRAWS} draws (< {GRAD_REL_MAX:.0e})")


def check_monotone(ctx):
    rng = np.random.default_rng(5)
    x = rng.normal(size=(400, 3))
    y = 0.2 + 0.6 * rng.random(400)
    for H in (1, 2, 4):
        ctx.traces.append(train_scg(init_weights(H, H), x, y, TrainConfig(max_epoch=100, err_min=0))[1])
    worst = 0.0
    for tr in ctx.traces:
        if len(tr.history) > 1:
            worst = max(worst, float(np.max(np.diff(tr.history))))
    return Result("4 SCG monotonicity", worst <= MONOTONE_TOL,
                  f"{len(ctx.traces)} training runs, largest per-epoch RMSE increase {worst:.2e} "
                  f"(<= {MONOTONE_TOL:.0e})")


def check_spline(ctx):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(5, 12))
        t = np.sort(rng.uniform(0, 10, n))
        t[0], t[-1] = 0.0, 10.0
        c = rng.uniform(-2, 2, 4)
        p = np.polynomial.Polynomial(c)
        grid, v = resample_uniform(t, p(t), 0.0, 10.0, 10.0 / (SPLINE_QUERIES - 1))
        if len(grid) != SPLINE_QUERIES:
            return Result("5 spline exactness", False, f"expected {SPLINE_QUERIES} queries, got {len(grid)}")
        worst = max(worst, float(np.max(np.abs(v - p(grid)))))
    return Result("5 spline exactness", worst <= SPLINE_ABS_MAX,
                  f"max abs error {worst:.2e} on 50 random cubics x {SPLINE_QUERIES} points (<= {SPLINE_ABS_MAX:.0e})")


def brute_force_filter(grid, w):
    """Reference moving average: explicit window enumeration, row-major sums."""
    nj, nk = grid.shape
    r = w // 2
    out = np.empty_like(grid)
    for j in range(nj):
        for k in range(nk):
            s, c = 0.0, 0
            for jj in range(j - r, j + r + 1):
                for kk in range(k - r, k + r + 1):
                    if 0 <= jj < nj and 0 <= kk < nk and not np.isnan(grid[jj, kk]):
                        s += grid[jj, kk]
                        c += 1
            out[j, k] = s / c if c else np.nan
    return out


def check_filter(ctx):
    rng = np.random.default_rng(99)
    mismatches = 0
    for _ in range(FILTER_GRIDS):
        g = rng.random((10, 10))
        g[rng.random((10, 10)) < FILTER_NAN_FRACTION] = np.nan
        for w in (1, 3, 5):
            a, b = moving_average_filter(g, w), brute_force_filter(g, w)
            if not np.array_equal(a, b, equal_nan=True):
                mismatches += 1
    spike = moving_average_filter(np.array([[0, 0, 0], [0, 9.0, 0], [0, 0, 0]]), 3)
    fixed = spike[1, 1] == 1.0 and spike[0, 0] == 2.25
    return Result("6 filter oracle equivalence", mismatches == 0 and fixed,
                  f"{mismatches} mismatches in {3 * FILTER_GRIDS} grid/window cases; "
                  f"spike example centre={spike[1, 1]} corner={spike[0, 0]}")


def check_normalization(ctx):
    rng = np.random.default_rng(3)
    y = rng.uniform(0.05, 0.95, 1000)
    stats = fit_minmax(y)
    rt = float(np.max(np.abs(invert_minmax(stats, apply_minmax(stats, y)) - y)))
    zoned = partition_lowo(ctx.pairs, "W6")
    worst_mean = worst_std = 0.0
    for zd in zoned.zones:
        z = apply_zscore(zd.zscore, zd.train.x_raw)
        worst_mean = max(worst_mean, float(np.max(np.abs(z.mean(axis=0)))))
        worst_std = max(worst_std, float(np.max(np.abs(z.std(axis=0) - 1.0))))
    ok = rt <= MINMAX_TOL and worst_mean < ZSCORE_TOL and worst_std <= ZSCORE_TOL
    return Result("7 normalization round trips", ok,
                  f"min-max round trip {rt:.1e} (<= {MINMAX_TOL:.0e}); z-scored |mean| {worst_mean:.1e}, "
                  f"|std-1| {worst_std:.1e} (<= {ZSCORE_TOL:.0e})")


def check_capacity_guard(ctx):
    a, b = check_capacity(8, 1000), check_capacity(8, 500)
    rng = np.random.default_rng(0)
    try:
        train_scg(init_weights(8, 0), rng.normal(size=(500, 3)), np.full(500, 0.5), TrainConfig(max_epoch=5))
        refused = False
    except CapacityError:
        refused = True
    return Result("8 capacity guard", a and not b and refused,
                  f"check(8, 1000)={a}, check(8, 500)={b}, training on 500 patterns refused={refused}")


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def check_determinism(ctx):
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        env_log = os.environ.get("SANDCAST_LOG")
        os.environ["SANDCAST_LOG"] = str(tmp / "runs.log")
        try:
            with redirect_stdout(StringIO()):
                codes = [cli.main(["synth", "--seed", "5", "--out", str(tmp / "data"), "--inlines", "20",
                                   "--xlines", "20"])]
                for k in (1, 2):
                    codes.append(cli.main(["train", "--data", str(tmp / "data"), "--blind", "W3",
                                           "--hidden", "4", "--max-epoch", "60", "--seed", "7",
                                           "--out", str(tmp / f"model{k}.json")]))
                for k in (1, 2):
                    codes.append(cli.main(["volume-predict", "--model", str(tmp / "model1.json"),
                                           "--data", str(tmp / "data"), "--threads", str(k),
                                           "--out", str(tmp / f"pred{k}.csv")]))
        finally:
            if env_log is None:
                os.environ.pop("SANDCAST_LOG", None)
            else:
                os.environ["SANDCAST_LOG"] = env_log
        if any(codes):
            return Result("9 determinism", False, f"command exit codes {codes}")
        same_model = _digest(tmp / "model1.json") == _digest(tmp / "model2.json")
        same_pred = _digest(tmp / "pred1.csv") == _digest(tmp / "pred2.csv")
    model = ctx.blind_runs[0]["W6"][0]
    f = ctx.field
    serial = predict_volume(model, f.volume, f.horizons, workers=1)
    parallel = predict_volume(model, f.volume, f.horizons, workers=4)
    bitwise = np.array_equal(serial.values.view(np.uint64), parallel.values.view(np.uint64))
    ok = same_model and same_pred and bitwise
    return Result("9 determinism", ok,
                  f"model files identical={same_model}, prediction volumes identical={same_pred}, "
                  f"serial vs parallel bitwise={bitwise}")


def check_smoothing(ctx):
    model = ctx.blind_runs[0]["W6"][0]
    f = ctx.field
    pred = predict_volume(model, f.volume, f.horizons)
    filt = filter_volume(pred, 3)
    before = np.array([roughness(s) for s in pred.values])
    after = np.array([roughness(s) for s in filt.values])
    n_ok = int(np.sum(after < before))
    return Result("10 post-filter smoothing", n_ok == len(before),
                  f"roughness decreased on {n_ok}/{len(before)} inline sections "
                  f"(mean {before.mean():.4g} -> {after.mean():.4g})")


CHECKS = (
    check_blind_quality,
    check_mann_beats_single,
    check_gradient,
    check_spline,
    check_filter,
    check_normalization,
    check_capacity_guard,
    check_determinism,
    check_smoothing,
    check_monotone,  # last: covers every training run above
)


def run_all(quick=False, echo=False):
    ctx = Context(quick=quick)
    results = []
    for check in CHECKS:
        r = check(ctx)
        results.append(r)
        if echo:
            print(r.line(), flush=True)
    return results
