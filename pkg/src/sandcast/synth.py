"""Deterministic synthetic field: attribute volume, horizons, wells and ground truth.

Attributes are smooth random fields (sums of cosines over inline, xline and
time). Sand fraction follows a different nonlinear function of the
attributes in each of the three zones, so a single pooled network has to
compromise while per-zone networks do not. Noise is drawn from a
counter-based generator keyed by (seed, inline, xline, time), which makes
every voxel independent of evaluation order and lets the well logs
reproduce the volume exactly at coincident samples.
"""
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .ingest import (
    ATTRIBUTES,
    AttributeVolume,
    Checkshot,
    RawWellLog,
    WellLocation,
    WellTops,
    write_checkshots,
    write_locations,
    write_tops,
    write_volume,
    write_well_logs,
)
from .volume import HorizonGrid, SandFractionVolume, write_horizons, write_sand_volume

ATTRIBUTE_RANGES = {
    "impedance": (4.0e6, 1.2e7),
    "inst_amp": (0.0, 1.0),
    "inst_freq": (5.0, 60.0),
}
VELOCITY = 0.75  # md = VELOCITY * twt, metres per millisecond

FILES = {
    "logs": "well_logs.csv",
    "checkshots": "checkshots.csv",
    "locations": "locations.csv",
    "tops": "tops.csv",
    "volume": "volume.csv",
    "horizons": "horizons.csv",
    "truth": "ground_truth.csv",
}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_wells: int = 8
    n_inlines: int = 40
    n_xlines: int = 40
    nt: int = 300
    dt: float = 2.0
    t0: float = 800.0
    noise_sigma: float = 0.02
    n_harmonics: int = 8
    top1_frac: float = 0.30
    top2_frac: float = 0.65
    horizon_relief: float = 0.04  # fraction of the time span
    log_dt: float = 0.125
    missing_fraction: float = 0.02
    min_well_spacing: float = 5.0
    first_inline: int = 100
    first_xline: int = 500

    def validate(self):
        if self.n_wells < 2:
            raise ConfigError("need at least 2 wells")
        if min(self.n_inlines, self.n_xlines) < 2 or self.nt < 16:
            raise ConfigError("grid too small")
        if self.dt <= 0 or self.log_dt <= 0 or self.n_harmonics < 1:
            raise ConfigError("dt, log_dt and n_harmonics must be positive")
        for v in (self.t0, self.dt, self.log_dt):
            if abs(v * 1000 - round(v * 1000)) > 1e-9:
                raise ConfigError("t0, dt and log_dt must be whole microseconds")
        if not 0 < self.top1_frac - self.horizon_relief < self.top1_frac + self.horizon_relief \
                < self.top2_frac - self.horizon_relief < self.top2_frac + self.horizon_relief < 1:
            raise ConfigError("horizon fractions overlap or leave the volume")
        if self.noise_sigma < 0 or not 0 <= self.missing_fraction < 0.5:
            raise ConfigError("noise_sigma must be >= 0 and missing_fraction in [0, 0.5)")


@dataclass
class _Harmonics:
    amp: np.ndarray
    k_il: np.ndarray
    k_xl: np.ndarray
    k_t: np.ndarray
    phase: np.ndarray
    raw_min: float = 0.0
    raw_max: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    def raw(self, i, x, t):
        acc = 0.0
        for k in range(len(self.amp)):
            acc = acc + self.amp[k] * np.cos(self.k_il[k] * i + self.k_xl[k] * x + self.k_t[k] * t
                                             + self.phase[k])
        return acc

    def __call__(self, i, x, t):
        return self.lo + (self.raw(i, x, t) - self.raw_min) * ((self.hi - self.lo)
                                                               / (self.raw_max - self.raw_min))


@dataclass
class SynthField:
    config: SynthConfig
    volume: AttributeVolume
    horizons: HorizonGrid
    truth: SandFractionVolume
    logs: list
    checkshots: dict
    locations: dict
    tops: dict
    harmonics: dict
    zone_stats: list  # per zone (mean, std) arrays over the three attributes

    def attributes_at(self, i, x, t):
        """Closed-form attributes at grid indices ``(i, x)`` and time(s) ``t``."""
        return np.stack(np.broadcast_arrays(*(self.harmonics[a](i, x, t) for a in ATTRIBUTES)),
                        axis=-1)


# ---------------------------------------------------------------------------
# counter-based noise


def _splitmix(z):
    with np.errstate(over="ignore"):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def counter_normal(seed, i, x, tick):
    """Standard normal deviates that depend only on ``(seed, i, x, tick)``."""
    i, x, tick = np.broadcast_arrays(np.asarray(i, dtype=np.uint64), np.asarray(x, dtype=np.uint64),
                                     np.asarray(tick, dtype=np.uint64))
    h = _splitmix(np.full(i.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    h = _splitmix(h ^ i)
    h = _splitmix(h ^ x)
    h = _splitmix(h ^ tick)
    a = _splitmix(h ^ np.uint64(1))
    b = _splitmix(h ^ np.uint64(2))
    u1 = ((a >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53
    u2 = (b >> np.uint64(11)).astype(np.float64) / 2.0**53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


# ---------------------------------------------------------------------------
# zone functions


def zone_sand(zone, u):
    """Noise-free sand fraction from per-zone standardized attributes ``u`` (..., 3)."""
    u1, u2, u3 = u[..., 0], u[..., 1], u[..., 2]
    if zone == 0:
        return expit(1.2 * u1 - 0.8 * u2 + 0.5 * u3)
    if zone == 1:
        return expit(0.9 * u1 * u1 - 0.6 * u1 * u2 + 0.4 * u3 - 0.3)
    return expit(0.7 * np.sin(2.0 * u1) + 0.8 * u3 - 0.5 * u2)


def _sand(attrs, zone, zone_stats, seed, i, x, ticks, sigma):
    out = np.empty(zone.shape)
    for z in range(3):
        m = zone == z
        mean, std = zone_stats[z]
        out[m] = zone_sand(z, (attrs[m] - mean) / std)
    if sigma > 0:
        out = out + sigma * counter_normal(seed, i, x, ticks)
    return np.clip(out, 0.0, 1.0)


def _zone_of(t, top1, top2):
    return (t >= top1).astype(np.int8) + (t >= top2).astype(np.int8)


# ---------------------------------------------------------------------------


def _harmonics(rng, K, lo, hi):
    amp = rng.uniform(0.5, 1.0, K)
    k_il = rng.uniform(-2 * np.pi / 14, 2 * np.pi / 14, K)
    k_xl = rng.uniform(-2 * np.pi / 14, 2 * np.pi / 14, K)
    k_t = rng.uniform(2 * np.pi / 160, 2 * np.pi / 40, K) * rng.choice([-1.0, 1.0], K)
    phase = rng.uniform(0, 2 * np.pi, K)
    return _Harmonics(amp, k_il, k_xl, k_t, phase, lo=lo, hi=hi)


def _surface(rng, I, X):
    s = 0.0
    for _ in range(3):
        ki, kx = rng.uniform(-2 * np.pi / 30, 2 * np.pi / 30, 2)
        s = s + np.cos(ki * I + kx * X + rng.uniform(0, 2 * np.pi))
    return s / 3.0


def _place_wells(rng, cfg):
    nodes = [(i, x) for i in range(cfg.n_inlines) for x in range(cfg.n_xlines)]
    for _ in range(200):
        order = rng.permutation(len(nodes))
        chosen = []
        for idx in order:
            i, x = nodes[idx]
            if all((i - a) ** 2 + (x - b) ** 2 >= cfg.min_well_spacing ** 2 for a, b in chosen):
                chosen.append((i, x))
                if len(chosen) == cfg.n_wells:
                    return chosen
    raise ConfigError(f"cannot place {cfg.n_wells} wells {cfg.min_well_spacing} cells apart "
                      f"on a {cfg.n_inlines}x{cfg.n_xlines} grid")


def generate(config=SynthConfig()):
    """Build a :class:`SynthField`; a pure function of ``config``."""
    cfg = config
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    t0_us, dt_us, log_dt_us = (int(round(v * 1000)) for v in (cfg.t0, cfg.dt, cfg.log_dt))
    ticks = t0_us + dt_us * np.arange(cfg.nt)
    t = ticks / 1000.0
    span = t[-1] - t[0]

    harmonics = {a: _harmonics(rng, cfg.n_harmonics, *ATTRIBUTE_RANGES[a]) for a in ATTRIBUTES}
    I = np.arange(cfg.n_inlines, dtype=float)[:, None, None]
    X = np.arange(cfg.n_xlines, dtype=float)[None, :, None]
    T = t[None, None, :]
    for h in harmonics.values():
        raw = h.raw(I, X, T)
        h.raw_min, h.raw_max = float(raw.min()), float(raw.max())
    data = np.stack([np.broadcast_to(harmonics[a](I, X, T), (cfg.n_inlines, cfg.n_xlines, cfg.nt))
                     for a in ATTRIBUTES], axis=-1)

    Ig, Xg = I[:, :, 0], X[:, :, 0]
    relief = cfg.horizon_relief * span
    top1 = t[0] + cfg.top1_frac * span + relief * _surface(rng, Ig, Xg)
    top2 = t[0] + cfg.top2_frac * span + relief * _surface(rng, Ig, Xg)
    top1 = np.broadcast_to(top1, (cfg.n_inlines, cfg.n_xlines)).copy()
    top2 = np.broadcast_to(top2, (cfg.n_inlines, cfg.n_xlines)).copy()

    zone = _zone_of(T, top1[:, :, None], top2[:, :, None])
    zone_stats = []
    for z in range(3):
        a = data[zone == z]
        zone_stats.append((a.mean(axis=0), a.std(axis=0)))
    ii, xx, kk = np.meshgrid(np.arange(cfg.n_inlines), np.arange(cfg.n_xlines), ticks, indexing="ij")
    truth = _sand(data, zone, zone_stats, cfg.seed, ii, xx, kk, cfg.noise_sigma)

    inlines = cfg.first_inline + np.arange(cfg.n_inlines)
    xlines = cfg.first_xline + np.arange(cfg.n_xlines)
    volume = AttributeVolume(inlines, xlines, float(t[0]), cfg.dt, data)
    horizons = HorizonGrid(inlines.copy(), xlines.copy(), top1, top2)
    truth_vol = SandFractionVolume(inlines.copy(), xlines.copy(), float(t[0]), cfg.dt, truth)

    logs, shots, locs, tops = [], {}, {}, {}
    cs_twt = np.arange(t[0] - 100.0, t[-1] + 100.0 + 1e-9, 50.0)
    for n, (i, x) in enumerate(_place_wells(rng, cfg), start=1):
        wid = f"W{n}"
        start = ticks[0] + log_dt_us * int(rng.integers(64, 320))
        stop = ticks[-1] - log_dt_us * int(rng.integers(64, 320))
        lt = np.arange(start, stop + 1, log_dt_us)
        tl = lt / 1000.0
        attrs = np.stack([np.broadcast_to(harmonics[a](float(i), float(x), tl), tl.shape)
                          for a in ATTRIBUTES], axis=-1)
        lz = _zone_of(tl, top1[i, x], top2[i, x])
        sf = _sand(attrs, lz, zone_stats, cfg.seed, np.full(lt.shape, i), np.full(lt.shape, x), lt,
                   cfg.noise_sigma)
        missing = rng.random(len(sf)) < cfg.missing_fraction
        missing[[0, -1]] = False
        sf[missing] = np.nan
        logs.append(RawWellLog(wid, VELOCITY * tl, sf))
        shots[wid] = Checkshot(wid, VELOCITY * cs_twt, cs_twt.copy())
        locs[wid] = WellLocation(wid, int(inlines[i]), int(xlines[x]))
        tops[wid] = WellTops(wid, float(top1[i, x]), float(top2[i, x]))

    return SynthField(cfg, volume, horizons, truth_vol, logs, shots, locs, tops, harmonics, zone_stats)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def export(field, out_dir):
    """Write every ingest-format CSV plus ``ground_truth.csv`` and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_well_logs(out / FILES["logs"], field.logs)
    write_checkshots(out / FILES["checkshots"], list(field.checkshots.values()))
    write_locations(out / FILES["locations"], list(field.locations.values()))
    write_tops(out / FILES["tops"], list(field.tops.values()))
    write_volume(out / FILES["volume"], field.volume)
    write_horizons(out / FILES["horizons"], field.horizons)
    write_sand_volume(out / FILES["truth"], field.truth)
    manifest = {
        "generator": "sandcast.synth",
        "config": asdict(field.config),
        "files": {name: _sha256(out / name) for name in sorted(FILES.values())},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return {k: out / v for k, v in FILES.items()}
