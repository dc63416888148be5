"""Monte-Carlo evaluation: normalized RMSE versus noise variance.

For every (video, noise variance, trial) the noise is regenerated with
seed ``seed_base + trial``, the full pipeline runs, and one record per
method is kept.  Per method and noise level, the normalized RMSE of each
video (over its trials) is averaged across videos.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimator import SpeedGrid, build_context, objective_surface_direct, objective_surface_fast
from .ingest import write_csv
from .pipeline import METHODS, PipelineConfig, StageTimer, run_pipeline
from .synth import SynthConfig, desk_preset, generate

log = logging.getLogger(__name__)

DEFAULT_SIGMA2_GRID = (0.0, 0.01, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
TRIAL_COLUMNS = ("method", "sigma2", "video", "trial", "v1_hat", "v2_hat", "v1_true", "v2_true",
                 "norm_err", "failed")
SUMMARY_COLUMNS = ("method", "sigma2", "mean_rmse", "n_trials", "n_failed")
TIMING_COLUMNS = ("stage", "calls", "seconds", "speedup")


@dataclass(frozen=True)
class TrialRecord:
    method: str
    sigma2: float
    video: str
    trial: int
    v1_hat: float
    v2_hat: float
    v1_true: int
    v2_true: int
    norm_err: float
    failed: bool


@dataclass
class SweepReport:
    trials: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    timer: StageTimer = field(default_factory=StageTimer)

    def mean_rmse(self, method: str, sigma2: float) -> float:
        for row in self.summary:
            if row["method"] == method and row["sigma2"] == sigma2:
                return row["mean_rmse"]
        raise KeyError((method, sigma2))


def _scales(truth) -> np.ndarray:
    v = np.asarray(truth, dtype=float)
    norm = float(np.hypot(*v))
    if norm == 0.0:
        raise ValueError("normalized RMSE is undefined for a zero true speed")
    # zero components are normalized by |v_true| instead
    return np.where(v != 0, np.abs(v), norm)


def normalized_rmse(estimates, truth, allow_absolute: bool = False) -> float:
    """``sqrt(mean over trials and components of ((v_hat_i - v_i) / d_i)^2)``.

    ``d_i = |v_i|``, or ``|v_true|`` for a zero component.  With a zero true
    speed the metric is undefined; ``allow_absolute`` falls back to the
    plain RMSE.
    """
    est = np.asarray([tuple(e) for e in estimates], dtype=float).reshape(-1, 2)
    if est.size == 0:
        raise ValueError("need at least one estimate")
    err = est - np.asarray(truth, dtype=float)
    try:
        err = err / _scales(truth)
    except ValueError:
        if not allow_absolute:
            raise
        log.warning("zero true speed: reporting absolute RMSE")
    return float(np.sqrt(np.mean(err ** 2)))


def _run_trial(job):
    video_id, cfg, sigma2, trial, seed, methods, pcfg = job
    seq, truth = generate(cfg.with_noise(sigma2, seed))
    timer = StageTimer()
    result = run_pipeline(seq, cfg.background_frame_count, pcfg, known_template=truth.template,
                          methods=methods, timer=timer)
    records = []
    for method in methods:
        failed = method in result.errors
        if failed:
            v_hat, err = (math.nan, math.nan), math.nan
        else:
            v_hat = result.speed(method)
            err = normalized_rmse([v_hat], cfg.v_true, allow_absolute=True)
        records.append(TrialRecord(method, sigma2, video_id, trial, float(v_hat[0]), float(v_hat[1]),
                                   cfg.v_true.v1, cfg.v_true.v2, err, failed))
    return records, timer


def summarize(trials, methods, sigma2_grid) -> list[dict]:
    rows = []
    for method in methods:
        for s2 in sigma2_grid:
            sel = [t for t in trials if t.method == method and t.sigma2 == s2]
            per_video = {}
            for t in sel:
                per_video.setdefault(t.video, []).append(t)
            video_rmse = []
            for vid in sorted(per_video):
                ok = [t for t in per_video[vid] if not t.failed]
                if ok:
                    truth = (ok[0].v1_true, ok[0].v2_true)
                    video_rmse.append(normalized_rmse([(t.v1_hat, t.v2_hat) for t in ok], truth,
                                                      allow_absolute=True))
            rows.append({
                "method": method,
                "sigma2": s2,
                "mean_rmse": float(np.mean(video_rmse)) if video_rmse else math.nan,
                "n_trials": len(sel),
                "n_failed": sum(t.failed for t in sel),
            })
    return rows


def noise_sweep(videos, sigma2_grid=DEFAULT_SIGMA2_GRID, trials_per_point: int = 10, methods=METHODS,
                pipeline: PipelineConfig | None = None, seed_base: int = 0, workers: int = 1) -> SweepReport:
    """``videos`` is a list of ``(video_id, SynthConfig)`` pairs (or bare configs)."""
    if trials_per_point < 1:
        raise ValueError("trials_per_point must be at least 1")
    videos = [v if isinstance(v, tuple) else (f"video{i}", v) for i, v in enumerate(videos)]
    for _, cfg in videos:
        if not isinstance(cfg, SynthConfig):
            raise TypeError("videos must be SynthConfig instances")
    pcfg = pipeline or PipelineConfig()
    jobs = [(vid, cfg, float(s2), trial, seed_base + trial, tuple(methods), pcfg)
            for vid, cfg in videos for s2 in sigma2_grid for trial in range(trials_per_point)]
    report = SweepReport()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outputs = [_run_trial(job) for job in jobs]
    for records, timer in outputs:
        report.trials.extend(records)
        report.timer.merge(timer)
    report.summary = summarize(report.trials, methods, [float(s) for s in sigma2_grid])
    return report


# -- timing -------------------------------------------------------------------

def measure_speedup(shape=(64, 64), n_frames: int = 20, v_max: int = 8, seed: int = 0, repeats: int = 3):
    """Wall time of the direct and the correlation-stack objective on one instance."""
    rng = np.random.default_rng(seed)
    frames = rng.random((n_frames,) + tuple(shape))
    ctx = build_context(frames, rng.random(shape), rng.random(shape))
    grid = SpeedGrid(v_max)

    def best_of(fn):
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn(ctx, grid)
            times.append(time.perf_counter() - t0)
        return min(times)

    t_direct = best_of(objective_surface_direct)
    t_fast = best_of(objective_surface_fast)
    return {"direct_s": t_direct, "fast_s": t_fast, "speedup": t_direct / t_fast}


def timing_report(timer: StageTimer, speedup: dict | None = None) -> list[dict]:
    """Per-stage call counts and wall time, plus the direct/fast comparison if given."""
    rows = [{"stage": name, "calls": calls, "seconds": secs, "speedup": ""}
            for name, (calls, secs) in sorted(timer.records.items())]
    if speedup is not None:
        rows.append({"stage": "objective_direct", "calls": 1, "seconds": speedup["direct_s"], "speedup": 1.0})
        rows.append({"stage": "objective_fast", "calls": 1, "seconds": speedup["fast_s"],
                     "speedup": speedup["speedup"]})
    return rows


# -- output -------------------------------------------------------------------

GNUPLOT_TEMPLATE = """\
# mean normalized RMSE versus noise variance, one curve per method
set datafile separator ","
set key top left
set xlabel "noise variance"
set ylabel "mean normalized RMSE"
set terminal pngcairo size 800,500
set output "{stem}.png"
plot {plots}
"""


def write_report(report: SweepReport, directory, methods=METHODS, speedup: dict | None = None) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "trials": directory / "trials.csv",
        "summary": directory / "summary.csv",
        "timing": directory / "timing.csv",
        "gnuplot": directory / "summary.gp",
    }
    write_csv(report.trials, paths["trials"], fieldnames=TRIAL_COLUMNS)
    write_csv(report.summary, paths["summary"], fieldnames=SUMMARY_COLUMNS)
    write_csv(timing_report(report.timer, speedup), paths["timing"], fieldnames=TIMING_COLUMNS)
    plots = ", ".join(
        f"'< grep ^{m}, summary.csv' using 2:3 with linespoints title '{m}'" for m in methods)
    paths["gnuplot"].write_text(GNUPLOT_TEMPLATE.format(stem="summary", plots=plots), encoding="utf-8")
    return paths


def desk_suite(speeds=((1, 2), (2, -1), (-1, 1), (2, 2), (-2, 1)), **kwargs) -> list[tuple[str, SynthConfig]]:
    """One desk-scale video per speed, sharing background and sprite."""
    return [(f"v{v[0]:+d}{v[1]:+d}", desk_preset(v_true=v, **kwargs)) for v in speeds]

