import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandcast.errors import (
    ExtrapolationError,
    GeometryError,
    InsufficientDataError,
    MissingTraceError,
    NoOverlapError,
    OrderingError,
    ParseError,
    TopsError,
)
from sandcast.ingest import (
    AttributeVolume,
    Checkshot,
    RawWellLog,
    WellLocation,
    depth_to_time,
    drop_missing,
    extract_trace,
    integrate,
    integrate_all,
    load_checkshots,
    load_integrated,
    load_tops,
    load_volume,
    load_well_logs,
    resample_uniform,
    write_integrated,
    write_volume,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadWellLogs:
    def test_two_wells(self, tmp_path):
        lines = ["well_id,md_m,sand_fraction"]
        for w in ("W1", "W2"):
            lines += [f"{w},{1000 + k * 0.5},{0.01 * (k % 50)}" for k in range(100)]
        logs = load_well_logs(write(tmp_path / "logs.csv", "\n".join(lines) + "\n"))
        assert [lg.well_id for lg in logs] == ["W1", "W2"]
        assert all(len(lg) == 100 for lg in logs)

    def test_sentinel_is_missing(self, tmp_path):
        p = write(tmp_path / "l.csv", "well_id,md_m,sand_fraction\nW1,1499.5,0.3\nW1,1500.0,-999.25\n")
        (log,) = load_well_logs(p)
        assert log.sand_fraction[0] == 0.3
        assert np.isnan(log.sand_fraction[1])

    def test_ordering_error_reports_line(self, tmp_path):
        p = write(tmp_path / "l.csv", "well_id,md_m,sand_fraction\nW1,1500.0,0.2\nW1,1499.9,0.2\n")
        with pytest.raises(OrderingError) as e:
            load_well_logs(p)
        assert e.value.line == 3

    @pytest.mark.parametrize("row,line", [("W1,1500.0", 2), ("W1,abc,0.2", 2), ("W1,1500,1.5", 2)])
    def test_malformed_rows(self, tmp_path, row, line):
        p = write(tmp_path / "l.csv", f"well_id,md_m,sand_fraction\n{row}\n")
        with pytest.raises(ParseError) as e:
            load_well_logs(p)
        assert e.value.line == line

    def test_wrong_header(self, tmp_path):
        with pytest.raises(ParseError):
            load_well_logs(write(tmp_path / "l.csv", "id,md,sf\nW1,1,0.2\n"))


class TestDropMissing:
    def make(self, n_null):
        sf = np.linspace(0.1, 0.9, 100)
        idx = np.random.default_rng(0).choice(100, n_null, replace=False)
        sf[idx] = np.nan
        return RawWellLog("W1", np.arange(100.0), sf)

    def test_no_nulls_is_identity(self):
        log = self.make(0)
        out = drop_missing(log)
        assert np.array_equal(out.md, log.md) and np.array_equal(out.sand_fraction, log.sand_fraction)

    def test_order_kept(self):
        out = drop_missing(self.make(7))
        assert len(out) == 93
        assert np.all(np.diff(out.md) > 0)
        assert np.all(np.diff(out.sand_fraction) > 0)

    def test_too_few(self):
        with pytest.raises(InsufficientDataError):
            drop_missing(self.make(98))


class TestDepthToTime:
    cs = Checkshot("W1", np.array([1000.0, 2000.0]), np.array([800.0, 1200.0]))

    def test_midpoint(self):
        twt, _ = depth_to_time(RawWellLog("W1", np.array([1500.0]), np.array([0.5])), self.cs)
        assert twt[0] == 1000.0

    def test_knot_exact(self):
        twt, _ = depth_to_time(RawWellLog("W1", np.array([1000.0, 2000.0]), np.array([0.1, 0.2])), self.cs)
        assert twt.tolist() == [800.0, 1200.0]

    def test_extrapolation(self):
        with pytest.raises(ExtrapolationError):
            depth_to_time(RawWellLog("W1", np.array([1500.0, 2500.0]), np.array([0.1, 0.2])), self.cs)

    @given(st.lists(st.floats(1000, 2000), min_size=2, max_size=30, unique=True))
    def test_monotone(self, md):
        md = np.sort(np.array(md))
        if np.any(np.diff(md) < 1e-6):
            return
        twt, _ = depth_to_time(RawWellLog("W1", md, np.zeros_like(md)), self.cs)
        assert np.all(np.diff(twt) > 0)


class TestResample:
    def test_constant(self):
        t = np.array([0.0, 1.3, 2.0, 4.4, 5.0])
        _, v = resample_uniform(t, np.full(5, 3.7), 0.0, 5.0, 0.1)
        assert np.allclose(v, 3.7, rtol=0, atol=1e-12)

    def test_cubic_reproduced(self):
        t = np.arange(0.0, 9.0, 2.0)
        p = lambda s: s ** 3 - 2 * s
        grid, v = resample_uniform(t, p(t), 0.0, 8.0, 0.1)
        assert len(grid) == 81
        assert np.max(np.abs(v - p(grid))) <= 1e-9

    @pytest.mark.parametrize("n", [5, 50, 301])
    def test_upsampling_length(self, n):
        t = 800.0 + 2.0 * np.arange(n)
        grid, _ = resample_uniform(t, np.sin(t / 30), t[0], t[-1], 0.1)
        assert len(grid) == 20 * (n - 1) + 1
        assert np.all(np.abs(np.diff(grid) - 0.1) < 1e-12)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            resample_uniform([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], 0.0, 2.0)

    def test_range_exceeded(self):
        with pytest.raises(ExtrapolationError):
            resample_uniform(np.arange(5.0), np.arange(5.0), 0.0, 4.5)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(5, 12), st.integers(0, 2**32 - 1))
    def test_cubic_exactness_property(self, n, seed):
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(0, 10, n))
        if np.min(np.diff(t)) < 1e-3:
            return
        c = rng.uniform(-2, 2, 4)
        p = np.polynomial.Polynomial(c)
        grid, v = resample_uniform(t, p(t), t[0], t[-1], (t[-1] - t[0]) / 199)
        assert np.max(np.abs(v - p(grid))) <= 1e-9


class TestTraces:
    def vol(self, nt=500):
        data = np.random.default_rng(0).random((3, 4, nt, 3))
        return AttributeVolume(np.array([10, 11, 12]), np.array([20, 21, 22, 23]), 0.0, 2.0, data)

    def test_shape(self):
        t, v = extract_trace(self.vol(), WellLocation("W1", 11, 22))
        assert t.shape == (500,) and v.shape == (500, 3)

    def test_off_grid(self):
        with pytest.raises(MissingTraceError):
            extract_trace(self.vol(), WellLocation("W1", 13, 22))

    def test_closed_form(self, small_field):
        f = small_field
        loc = f.locations["W3"]
        _, v = extract_trace(f.volume, loc)
        i = loc.inline - f.volume.inlines[0]
        x = loc.xline - f.volume.xlines[0]
        assert np.array_equal(v, f.attributes_at(float(i), float(x), f.volume.t))


class TestIntegrate:
    def test_window(self):
        twt = np.linspace(1000, 1200, 41)
        tt = np.arange(0.0, 2001.0, 2.0)
        w = integrate("W1", twt, np.full(41, 0.4), tt, np.ones((len(tt), 3)))
        assert w.t[0] == 1000.0 and abs(w.t[-1] - 1200.0) < 1e-9
        assert len(w) == 2001

    def test_constant(self):
        twt = np.linspace(1000, 1200, 41)
        tt = np.arange(900.0, 1301.0, 2.0)
        vals = np.tile([5e6, 0.3, 25.0], (len(tt), 1))
        w = integrate("W1", twt, np.full(41, 0.4), tt, vals)
        assert np.allclose(w.x, [5e6, 0.3, 25.0], rtol=1e-12)
        assert np.allclose(w.sand_fraction, 0.4, atol=1e-12)

    def test_no_overlap(self):
        with pytest.raises(NoOverlapError):
            integrate("W1", np.linspace(0, 10, 5), np.zeros(5), np.linspace(20, 40, 11), np.zeros((11, 3)))

    def test_target_clamped(self):
        twt = np.arange(0.0, 20.0, 1.0)
        sf = np.where(np.arange(20) % 2, 1.0, 0.0)
        w = integrate("W1", twt, sf, np.arange(0.0, 20.0, 2.0), np.zeros((10, 3)))
        assert w.sand_fraction.min() >= 0.0 and w.sand_fraction.max() <= 1.0

    def test_synthetic_matches_closed_form(self, small_field, small_pairs):
        f = small_field
        for log, _ in small_pairs:
            loc = f.locations[log.well_id]
            i = loc.inline - f.volume.inlines[0]
            x = loc.xline - f.volume.xlines[0]
            exact = f.attributes_at(float(i), float(x), log.t)
            scale = np.ptp(f.volume.data.reshape(-1, 3), axis=0)
            assert np.max(np.abs(log.x - exact) / scale) < 1e-3

    def test_uniform_step(self, small_pairs):
        for log, _ in small_pairs:
            assert np.all(np.abs(np.diff(log.t) - 0.1) < 1e-12)
            assert len(log.impedance) == len(log.sand_fraction) == len(log.t)


class TestFiles:
    def test_volume_round_trip(self, tmp_path):
        data = np.random.default_rng(1).random((2, 3, 5, 3))
        vol = AttributeVolume(np.array([1, 2]), np.array([7, 8, 9]), 800.0, 2.0, data)
        write_volume(tmp_path / "v.csv", vol)
        back = load_volume(tmp_path / "v.csv")
        assert np.array_equal(back.data, vol.data) and back.t0 == 800.0 and back.dt == 2.0

    def test_irregular_volume(self, tmp_path):
        p = write(tmp_path / "v.csv", "inline,xline,t_ms,impedance,inst_amp,inst_freq\n"
                                       "1,1,0,1,1,1\n1,1,2,1,1,1\n1,2,0,1,1,1\n")
        with pytest.raises(GeometryError):
            load_volume(p)

    def test_tops(self, tmp_path):
        p = write(tmp_path / "t.csv", "well_id,top_name,twt_ms\nW1,Top1,900\nW1,Top2,1000\n")
        assert load_tops(p)["W1"].top2_t == 1000.0
        p = write(tmp_path / "t2.csv", "well_id,top_name,twt_ms\nW1,Top1,900\n")
        with pytest.raises(TopsError):
            load_tops(p)

    def test_checkshot_needs_two(self, tmp_path):
        p = write(tmp_path / "c.csv", "well_id,md_m,twt_ms\nW1,1000,800\n")
        with pytest.raises(InsufficientDataError):
            load_checkshots(p)

    def test_integrated_round_trip(self, tmp_path, small_pairs):
        wells = [w for w, _ in small_pairs[:2]]
        write_integrated(tmp_path / "i.csv", wells)
        back = load_integrated(tmp_path / "i.csv")
        for a, b in zip(wells, back):
            assert a.well_id == b.well_id
            assert np.array_equal(a.x, b.x) and np.array_equal(a.t, b.t)

    def test_export_reingest(self, tmp_path, small_field, small_pairs):
        from sandcast.synth import FILES, export

        export(small_field, tmp_path)
        again = integrate_all(load_well_logs(tmp_path / FILES["logs"]),
                              load_checkshots(tmp_path / FILES["checkshots"]),
                              {w: loc for w, loc in small_field.locations.items()},
                              load_volume(tmp_path / FILES["volume"]))
        for (a, _), b in zip(small_pairs, again):
            assert np.array_equal(a.x, b.x) and np.array_equal(a.sand_fraction, b.sand_fraction)
