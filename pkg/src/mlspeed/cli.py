"""Command-line entry point.

Subcommands: synth, estimate, bgmodel, bench, compare.  Exit status is 0
on success, 1 for configuration errors, 2 for I/O errors and 3 when
estimation fails.  Lines starting with ``RESULT`` are machine-readable
``key=value`` records.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .background import Template, estimate_background, gmm_init, gmm_update, train
from .config import CliConfig, ConfigError, describe_options
from .evaluation import measure_speedup, noise_sweep, normalized_rmse, write_report
from .ingest import load_sequence, read_frame, read_manifest, write_csv, write_pgm
from .pipeline import METHODS, run_pipeline
from . import synth as synth_mod

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ESTIMATION = 0, 1, 2, 3

log = logging.getLogger("mlspeed")


class EstimationFailure(RuntimeError):
    pass


def _image_option(conf: CliConfig, key: str):
    value = conf[key]
    if value == "builtin":
        return None if key == "synth.sprite" else value
    if value == "black":
        return 0.0
    try:
        return float(value)
    except ValueError:
        pass
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{key}: file not found: {path}")
    return read_frame(path)


def synth_config(conf: CliConfig, seed: int, v_true=None) -> synth_mod.SynthConfig:
    preset = synth_mod.PRESETS[conf["synth.preset"]]
    sprite = _image_option(conf, "synth.sprite")
    if isinstance(sprite, float):
        raise ConfigError("synth.sprite must be an image path or builtin")
    mask = None
    if conf["synth.sprite_mask"] != "auto":
        path = Path(conf["synth.sprite_mask"])
        if not path.exists():
            raise ConfigError(f"synth.sprite_mask: file not found: {path}")
        mask = read_frame(path) > 0.5
    v_true = v_true or (conf["synth.v1"], conf["synth.v2"])
    try:
        return preset(background=_image_option(conf, "synth.background"), sprite=sprite, sprite_mask=mask,
                      v_true=v_true, start_position=conf["synth.start"], sigma2=conf["synth.sigma2"],
                      clip=conf["synth.clip"], wrap_mode=conf["synth.wrap_mode"], seed=seed)
    except ValueError as exc:
        raise ConfigError(f"invalid synthetic setup: {exc}") from None


def _known_template(directory) -> Template:
    truth = synth_mod.read_ground_truth(directory)
    image = read_frame(truth["template"])
    support = read_frame(truth["template_mask"]) > 0.5
    return Template.from_image(image, support)


def _load(directory):
    manifest = read_manifest(directory)
    return manifest, load_sequence(manifest)


def _result_line(**fields) -> str:
    return "RESULT " + " ".join(f"{k}={v}" for k, v in fields.items())


# -- subcommands --------------------------------------------------------------

def cmd_synth(conf: CliConfig, output_dir) -> int:
    cfg = synth_config(conf, conf["run.seed"])
    seq, truth = synth_mod.generate(cfg)
    synth_mod.write_sequence(output_dir, seq, truth, cfg.background_frame_count, conf["synth.bit_depth"])
    print(f"wrote {len(seq)} frames ({cfg.background_frame_count} background) to {output_dir}, "
          f"v_true = ({cfg.v_true.v1}, {cfg.v_true.v2})")
    print(_result_line(frames=len(seq), background_frames=cfg.background_frame_count,
                       v1_true=cfg.v_true.v1, v2_true=cfg.v_true.v2, output=output_dir))
    return EXIT_OK


def _run(conf: CliConfig, sequence_dir, methods):
    manifest, seq = _load(sequence_dir)
    pcfg = conf.pipeline_config()
    known = _known_template(sequence_dir) if pcfg.template == "known" else None
    try:
        result = run_pipeline(seq, manifest.background_frame_count, pcfg, known_template=known, methods=methods)
    except ValueError as exc:
        raise EstimationFailure(str(exc)) from None
    return manifest, seq, result


def cmd_estimate(conf: CliConfig, sequence_dir, out_dir=None) -> int:
    method = f"ml_{conf['estimator.mode']}"
    _, _, result = _run(conf, sequence_dir, (method,))
    if method in result.errors:
        msg = result.errors[method]
        if "flat" in msg:
            msg = f"degenerate flat objective: {msg}"
        raise EstimationFailure(msg)
    est = result.estimates[method]
    v = est.speed
    print(f"estimated speed: v1 = {v.v1}, v2 = {v.v2} pixel/frame ({est.mode} background)")
    print(f"objective score: {est.score:.9g}" + ("  [surface is flat]" if est.degenerate_flat else ""))
    print(_result_line(v1_hat=v.v1, v2_hat=v.v2, score=format(est.score, ".12g"), mode=est.mode,
                       degenerate_flat=int(est.degenerate_flat)))
    if conf["estimator.keep_surface"]:
        out = Path(out_dir or sequence_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"surface_{est.mode}.csv"
        write_csv(est.surface.rows(), path, fieldnames=("v1", "v2", "score"))
        print(f"surface written to {path}")
    return EXIT_OK


def cmd_compare(conf: CliConfig, sequence_dir) -> int:
    _, _, result = _run(conf, sequence_dir, METHODS)
    truth = None
    try:
        truth = synth_mod.read_ground_truth(sequence_dir)["v_true"]
    except FileNotFoundError:
        pass
    for method in METHODS:
        if method in result.errors:
            print(f"{method:>15}: failed ({result.errors[method]})")
            print(_result_line(method=method, failed=1))
            continue
        v = result.speed(method)
        fields = dict(method=method, v1_hat=v.v1, v2_hat=v.v2, failed=0)
        line = f"{method:>15}: v = ({v.v1}, {v.v2})"
        if truth is not None and (truth.v1 or truth.v2):
            err = normalized_rmse([v], truth)
            fields["norm_err"] = format(err, ".9g")
            line += f"   normalized error {err:.4f}"
        print(line)
        print(_result_line(**fields))
    return EXIT_OK


def cmd_bgmodel(conf: CliConfig, sequence_dir, out_dir) -> int:
    manifest, seq = _load(sequence_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = gmm_init(seq.shape, conf.gmm_params())
    n_bg = manifest.background_frame_count
    train(model, seq.frames[:n_bg])
    write_pgm(out / "background.pgm", estimate_background(model), 16)
    for n, f in enumerate(seq.frames[n_bg:]):
        _, mask = gmm_update(model, f)
        write_pgm(out / f"mask_{n:04d}.pgm", mask.astype(float), 8)
    print(f"background and {len(seq) - n_bg} masks written to {out}")
    return EXIT_OK


def cmd_bench(conf: CliConfig, out_dir) -> int:
    seed = conf["run.seed"]
    videos = [(f"v{v[0]:+d}{v[1]:+d}", synth_config(conf, seed, v_true=v)) for v in conf["eval.speeds"]]
    methods = conf["eval.methods"]
    report = noise_sweep(videos, conf["eval.sigma2_grid"], conf["eval.trials"], methods,
                         conf.pipeline_config(), seed_base=seed, workers=conf["run.threads"])
    speedup = measure_speedup(v_max=conf["estimator.v_max"]) if conf["eval.speedup"] else None
    paths = write_report(report, out_dir, methods, speedup)
    print(f"{'method':>15} {'sigma2':>7} {'mean_rmse':>10} {'failed':>7}")
    for row in report.summary:
        print(f"{row['method']:>15} {row['sigma2']:>7g} {row['mean_rmse']:>10.4f} {row['n_failed']:>3}/{row['n_trials']}")
    if speedup is not None:
        print(f"fast objective speedup over direct evaluation: {speedup['speedup']:.1f}x")
    print(_result_line(trials=paths["trials"], summary=paths["summary"], timing=paths["timing"]))
    return EXIT_OK


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--seed", type=int, help="base seed (run.seed)")
    common.add_argument("--threads", type=int, help="worker processes (run.threads)")
    common.add_argument("--template", choices=("known", "gmm"), help="template source (template.source)")
    common.add_argument("--mode", choices=("included", "omitted"), help="estimator.mode")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="mlspeed", description="Maximum-likelihood speed estimation of a moving foreground object.",
        epilog=describe_options(), formatter_class=argparse.RawDescriptionHelpFormatter, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    kw = dict(parents=[common], epilog=describe_options(), formatter_class=argparse.RawDescriptionHelpFormatter)

    p = sub.add_parser("synth", help="write a synthetic sequence with ground truth", **kw)
    p.add_argument("output_dir")
    p = sub.add_parser("estimate", help="estimate the object speed in a sequence", **kw)
    p.add_argument("sequence_dir")
    p.add_argument("--out", help="directory for the surface CSV (default: the sequence directory)")
    p = sub.add_parser("bgmodel", help="dump the estimated background and foreground masks", **kw)
    p.add_argument("sequence_dir")
    p.add_argument("--out", required=True)
    p = sub.add_parser("bench", help="Monte-Carlo RMSE sweep over noise variance", **kw)
    p.add_argument("--out", default="bench_out")
    p = sub.add_parser("compare", help="ML estimators vs block matching on one sequence", **kw)
    p.add_argument("sequence_dir")
    return parser


def _split_overrides(argv):
    """Pull ``--section.key=value`` (or ``--section.key value``) out of argv."""
    rest, overrides = [], {}
    it = iter(argv)
    for arg in it:
        if arg.startswith("--") and "." in arg.split("=", 1)[0]:
            key, sep, value = arg[2:].partition("=")
            if not sep:
                value = next(it, None)
                if value is None:
                    raise ConfigError(f"missing value for --{key}")
            overrides[key] = value
        else:
            rest.append(arg)
    return rest, overrides


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        argv, overrides = _split_overrides(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    flags = {"run.seed": args.seed, "run.threads": args.threads, "template.source": args.template,
             "estimator.mode": args.mode}
    overrides.update({k: v for k, v in flags.items() if v is not None})
    try:
        conf = CliConfig.load(args.config, overrides)
        if args.command == "synth":
            return cmd_synth(conf, args.output_dir)
        if args.command == "estimate":
            return cmd_estimate(conf, args.sequence_dir, args.out)
        if args.command == "bgmodel":
            return cmd_bgmodel(conf, args.sequence_dir, args.out)
        if args.command == "bench":
            return cmd_bench(conf, args.out)
        if args.command == "compare":
            return cmd_compare(conf, args.sequence_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationFailure as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (OSError, ValueError) as exc:
        # decode errors from ingest are ValueErrors tied to a file
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
