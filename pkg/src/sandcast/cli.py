"""``sandcast`` command line.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numeric
failure. Every invocation that parses appends one JSON line to the run log
(``$SANDCAST_LOG``, default ``./sandcast-runs.log``).
"""
import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import ingest, mann, synth, volume
from .errors import ConfigError, DataError, SandcastError
from .nn import DEFAULT_CANDIDATES, TrainConfig
from .preprocess import partition_lowo

INTEGRATED = "wells_integrated.csv"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _need(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing input file: {path}")
    return path


def _out(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _hidden_arg(text):
    if text == "auto":
        return "auto"
    try:
        sizes = [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"--hidden must be 'auto', N or N1,N2,N3; got {text!r}") from None
    if len(sizes) == 1:
        return sizes[0]
    if len(sizes) == 3:
        return sizes
    raise ConfigError(f"--hidden needs one or three sizes, got {text!r}")


def _candidates_arg(text):
    try:
        return tuple(sorted(int(v) for v in text.split(",")))
    except ValueError:
        raise ConfigError(f"bad --candidates {text!r}") from None


# ---------------------------------------------------------------------------
# data loading


def _raw_paths(args):
    d = Path(args.data)
    return {
        "logs": _need(getattr(args, "logs", None) or d / synth.FILES["logs"]),
        "checkshots": _need(getattr(args, "checkshots", None) or d / synth.FILES["checkshots"]),
        "locations": _need(getattr(args, "locations", None) or d / synth.FILES["locations"]),
        "volume": _need(getattr(args, "volume", None) or d / synth.FILES["volume"]),
    }


def _integrate_from(paths):
    vol = ingest.load_volume(paths["volume"])
    return ingest.integrate_all(ingest.load_well_logs(paths["logs"]),
                                ingest.load_checkshots(paths["checkshots"]),
                                ingest.load_locations(paths["locations"]), vol)


def _load_wells(args, run):
    """Integrated wells paired with their tops, from ``--data``."""
    d = Path(args.data)
    tops_path = _need(d / synth.FILES["tops"])
    integrated = d / INTEGRATED
    if integrated.is_file():
        run.inputs(integrated)
        wells = ingest.load_integrated(integrated)
    else:
        paths = _raw_paths(args)
        run.inputs(*paths.values())
        wells = _integrate_from(paths)
    run.inputs(tops_path)
    tops = ingest.load_tops(tops_path)
    pairs = []
    for w in wells:
        if w.well_id not in tops:
            raise DataError(f"no tops for well {w.well_id}")
        pairs.append((w, tops[w.well_id]))
    return pairs


def _blind_pair(pairs, blind_id):
    for log, tops in pairs:
        if log.well_id == blind_id:
            return log, tops
    raise DataError(f"blind well {blind_id} not in data")


# ---------------------------------------------------------------------------
# run log


class _Run:
    def __init__(self, command, argv):
        self.record = {"command": command, "argv": list(argv), "seed": None,
                       "inputs": {}, "outputs": {}, "metrics": {}}

    def inputs(self, *paths):
        for p in paths:
            self.record["inputs"][str(p)] = _sha256(p)

    def outputs(self, *paths):
        for p in paths:
            self.record["outputs"][str(p)] = _sha256(p)

    def write(self, exit_code):
        self.record["exit_code"] = exit_code
        self.record["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        path = Path(os.environ.get("SANDCAST_LOG", "sandcast-runs.log"))
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(self.record, sort_keys=True) + "\n")
        except OSError as exc:
            print(f"sandcast: warning: cannot write run log {path}: {exc}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args, run):
    run.record["seed"] = args.seed
    cfg = synth.SynthConfig(seed=args.seed, n_wells=args.n_wells, noise_sigma=args.noise_sigma,
                            n_inlines=args.inlines, n_xlines=args.xlines, nt=args.nt)
    files = synth.export(synth.generate(cfg), args.out)
    run.outputs(*files.values())
    print(f"wrote synthetic field to {args.out}")


def cmd_ingest(args, run):
    paths = _raw_paths(args)
    run.inputs(*paths.values())
    wells = _integrate_from(paths)
    out = _out(args.out or Path(args.data) / INTEGRATED)
    ingest.write_integrated(out, wells)
    run.outputs(out)
    run.record["metrics"] = {"wells": len(wells), "samples": sum(len(w) for w in wells)}
    print(f"integrated {len(wells)} wells ({sum(len(w) for w in wells)} samples) -> {out}")


def _train_config(args):
    return TrainConfig(max_epoch=args.max_epoch, err_min=args.err_min, seed=args.seed)


def cmd_train(args, run):
    run.record["seed"] = args.seed
    hidden = _hidden_arg(args.hidden)
    cfg = _train_config(args)
    zoned = partition_lowo(_load_wells(args, run), args.blind)
    model = mann.train_mann(zoned, cfg, hidden, args.candidates)
    out = _out(args.out)
    mann.save_model(model, out)
    run.outputs(out)
    run.record["metrics"] = {
        z.name: {"H": z.mlp.H, "train_rmse": z.trace.final_rmse, "epochs": z.trace.epochs_run,
                 "stop_reason": z.trace.stop_reason} for z in model.zones}
    for z in model.zones:
        print(f"{z.name}: H={z.mlp.H} epochs={z.trace.epochs_run} rmse={z.trace.final_rmse:.6g} "
              f"({z.trace.stop_reason}, {z.trace.wall_time:.2f} s)")
    print(f"model -> {out}")


def _single_hidden(text, model_path):
    if text == "match":
        if not model_path:
            raise ConfigError("--hidden match requires --match-model")
        m = mann.load_model(_need(model_path))
        if not isinstance(m, mann.MannModel):
            raise ConfigError(f"{model_path} is not a zone-modular model")
        return sum(m.hidden)
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"--hidden must be auto, match or an integer; got {text!r}") from None


def cmd_train_single(args, run):
    run.record["seed"] = args.seed
    hidden = _single_hidden(args.hidden, args.match_model)
    zoned = partition_lowo(_load_wells(args, run), args.blind)
    single = mann.train_single_ann(zoned, _train_config(args), hidden, args.candidates)
    out = _out(args.out)
    mann.save_model(single, out)
    run.outputs(out)
    tr = single.model.trace
    run.record["metrics"] = {"H": single.model.mlp.H, "train_rmse": tr.final_rmse, "epochs": tr.epochs_run}
    print(f"single: H={single.model.mlp.H} epochs={tr.epochs_run} rmse={tr.final_rmse:.6g} "
          f"({tr.stop_reason}, {tr.wall_time:.2f} s)")
    print(f"model -> {out}")


def _load_mann(path, run):
    run.inputs(_need(path))
    model = mann.load_model(path)
    if not isinstance(model, mann.MannModel):
        raise DataError(f"{path} is not a zone-modular model")
    return model


def _report(model, single, pairs, out, run):
    log, tops = _blind_pair(pairs, model.blind_well_id)
    report = mann.compare(model, single, log, tops)
    out = _out(out)
    report.to_csv(out)
    run.outputs(out)
    run.record["metrics"] = {r.scope: {"cc": r.cc, "rmse": r.rmse, "aem": r.aem} for r in report.rows}
    print(f"blind well {report.blind_well_id}")
    print(f"{'scope':<17}{'cc':>9}{'rmse':>9}{'aem':>9}{'n':>8}{'time_s':>9}")
    for r in report.rows:
        print(f"{r.scope:<17}{r.cc:9.4f}{r.rmse:9.4f}{r.aem:9.4f}{r.n:8d}{r.time_s:9.2f}")
    print(f"report -> {out}")


def cmd_blind_test(args, run):
    model = _load_mann(args.model, run)
    run.record["seed"] = model.config.seed
    pairs = _load_wells(args, run)
    if args.single:
        run.inputs(_need(args.single))
        single = mann.load_model(args.single)
    else:
        if args.single_hidden == "match":
            hidden = sum(model.hidden)
        elif args.single_hidden == "auto":
            hidden = "auto"
        else:
            try:
                hidden = int(args.single_hidden)
            except ValueError:
                raise ConfigError(f"bad --single-hidden {args.single_hidden!r}") from None
        zoned = partition_lowo(pairs, model.blind_well_id)
        single = mann.train_single_ann(zoned, model.config, hidden)
    _report(model, single, pairs, args.out, run)


def cmd_compare(args, run):
    model = _load_mann(args.model, run)
    run.inputs(_need(args.single))
    single = mann.load_model(args.single)
    if not isinstance(single, mann.SingleAnn):
        raise DataError(f"{args.single} is not a single-network model")
    run.record["seed"] = model.config.seed
    _report(model, single, _load_wells(args, run), args.out, run)


def cmd_volume_predict(args, run):
    model = _load_mann(args.model, run)
    d = Path(args.data) if args.data else None
    vpath = _need(args.volume or d / synth.FILES["volume"])
    hpath = _need(args.horizons or d / synth.FILES["horizons"])
    run.inputs(vpath, hpath)
    vol = volume.predict_volume(model, ingest.load_volume(vpath), volume.load_horizons(hpath),
                                workers=args.threads)
    out = _out(args.out)
    volume.write_sand_volume(out, vol)
    run.outputs(out)
    print(f"predicted {vol.values.size} voxels -> {out}")


def cmd_filter(args, run):
    run.inputs(_need(args.input))
    vol = volume.filter_volume(volume.load_sand_volume(args.input), args.window, workers=args.threads)
    out = _out(args.out)
    volume.write_sand_volume(out, vol)
    run.outputs(out)
    print(f"filtered with {args.window}x{args.window} window -> {out}")


def cmd_section(args, run):
    run.inputs(_need(args.input))
    sec = volume.extract_section(volume.load_sand_volume(args.input), args.inline)
    out = _out(args.out)
    volume.write_section(sec, out, args.format)
    run.outputs(out)
    print(f"inline {args.inline} ({len(sec.xlines)} x {len(sec.t)}) -> {out}")


def cmd_selftest(args, run):
    from . import acceptance

    results = acceptance.run_all(quick=args.quick, echo=True)
    run.record["metrics"] = {r.name: r.passed for r in results}
    failed = [r for r in results if not r.passed]
    if failed:
        raise DataError(f"{len(failed)} acceptance criteria failed: {', '.join(r.name for r in failed)}")


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="sandcast", description="Well-tops guided zone-modular sand fraction prediction.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    threads = os.cpu_count() or 1

    s = sub.add_parser("synth", help="generate a synthetic field")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.add_argument("--n-wells", type=int, default=8)
    s.add_argument("--noise-sigma", type=float, default=0.02)
    s.add_argument("--inlines", type=int, default=40)
    s.add_argument("--xlines", type=int, default=40)
    s.add_argument("--nt", type=int, default=300)
    s.set_defaults(func=cmd_synth)

    def raw_inputs(sp):
        sp.add_argument("--logs")
        sp.add_argument("--checkshots")
        sp.add_argument("--locations")
        sp.add_argument("--volume")

    s = sub.add_parser("ingest", help="integrate raw logs with the attribute volume")
    s.add_argument("--data", required=True)
    raw_inputs(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ingest)

    def training(sp, hidden_default):
        sp.add_argument("--data", required=True)
        sp.add_argument("--blind", required=True)
        sp.add_argument("--hidden", default=hidden_default)
        sp.add_argument("--candidates", type=_candidates_arg, default=DEFAULT_CANDIDATES)
        sp.add_argument("--max-epoch", type=int, default=2000)
        sp.add_argument("--err-min", type=float, default=1e-4)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=True)
        raw_inputs(sp)

    s = sub.add_parser("train", help="train the three zone networks")
    training(s, "auto")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("train-single", help="train the single-network baseline")
    training(s, "auto")
    s.add_argument("--match-model", help="zone model whose total hidden units to match (--hidden match)")
    s.set_defaults(func=cmd_train_single)

    s = sub.add_parser("blind-test", help="evaluate a zone model on its blind well")
    s.add_argument("--data", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--single", help="baseline model; trained on the fly when omitted")
    s.add_argument("--single-hidden", default="match", help="match | auto | N (when training on the fly)")
    s.add_argument("--out", required=True)
    raw_inputs(s)
    s.set_defaults(func=cmd_blind_test)

    s = sub.add_parser("compare", help="compare a zone model with a saved baseline")
    s.add_argument("--data", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--single", required=True)
    s.add_argument("--out", required=True)
    raw_inputs(s)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("volume-predict", help="predict sand fraction over the attribute volume")
    s.add_argument("--model", required=True)
    s.add_argument("--data")
    s.add_argument("--volume")
    s.add_argument("--horizons")
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=threads)
    s.set_defaults(func=cmd_volume_predict)

    s = sub.add_parser("filter", help="NaN-aware moving-average filter per inline section")
    s.add_argument("--input", required=True)
    s.add_argument("--window", type=int, default=3)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=threads)
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("section", help="extract one inline section")
    s.add_argument("--input", required=True)
    s.add_argument("--inline", type=int, required=True)
    s.add_argument("--format", choices=("csv", "pgm"), default="csv")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_section)

    s = sub.add_parser("selftest", help="run the acceptance suite")
    s.add_argument("--quick", action="store_true", help="reduced repetitions for a fast smoke run")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("sandcast: --threads must be >= 1", file=sys.stderr)
        return 1
    if args.command in ("volume-predict",) and not args.data and not (args.volume and args.horizons):
        print("sandcast: volume-predict needs --data or both --volume and --horizons", file=sys.stderr)
        return 1
    run = _Run(args.command, argv)
    try:
        args.func(args, run)
        code = 0
    except SandcastError as exc:
        print(f"sandcast {args.command}: {exc}", file=sys.stderr)
        code = exc.exit_code
    except OSError as exc:
        print(f"sandcast {args.command}: {exc}", file=sys.stderr)
        code = 2
    run.write(code)
    return code


if __name__ == "__main__":
    sys.exit(main())
