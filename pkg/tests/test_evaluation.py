import math
import random

import pytest

from mlspeed.evaluation import (TrialRecord, desk_suite, measure_speedup, noise_sweep, normalized_rmse,
                                summarize, timing_report, write_report)
from mlspeed.ingest import read_csv
from mlspeed.pipeline import PipelineConfig, StageTimer


def test_normalized_rmse_examples():
    assert normalized_rmse([(2, 2)] * 3, (2, 2)) == 0
    assert normalized_rmse([(3, 2)], (2, 2)) == pytest.approx(0.3536, abs=1e-4)
    assert normalized_rmse([(3, 3)], (3, 0)) == pytest.approx(0.7071, abs=1e-4)
    with pytest.raises(ValueError):
        normalized_rmse([(1, 1)], (0, 0))
    assert normalized_rmse([(1, 1)], (0, 0), allow_absolute=True) == 1.0
    with pytest.raises(ValueError):
        normalized_rmse([], (1, 1))


def test_bookkeeping_and_single_trial():
    videos = desk_suite(speeds=((1, 2),))
    report = noise_sweep(videos, [0.05], trials_per_point=10)
    for m in ("ml_included", "ml_omitted", "block_matching"):
        assert sum(t.method == m for t in report.trials) == 10
    one = noise_sweep(videos, [0.1], trials_per_point=1, seed_base=4)
    for row in one.summary:
        t = next(t for t in one.trials if t.method == row["method"])
        assert row["mean_rmse"] == pytest.approx(t.norm_err)
    with pytest.raises(ValueError):
        noise_sweep(videos, [0.0], trials_per_point=0)


def test_zero_noise_ml_is_exact():
    report = noise_sweep(desk_suite(), [0.0], trials_per_point=1, methods=("ml_included", "ml_omitted"),
                         pipeline=PipelineConfig(template="known"))
    assert all(row["mean_rmse"] == 0 for row in report.summary)


def test_permutation_invariance():
    rng = random.Random(1)
    trials = [TrialRecord("ml_omitted", 0.1, f"v{i % 3}", i, rng.randint(-2, 3), rng.randint(-2, 3),
                          1 + i % 3, 2, 0.0, False) for i in range(30)]
    trials.append(TrialRecord("ml_omitted", 0.1, "v0", 99, math.nan, math.nan, 1, 2, math.nan, True))
    a = summarize(trials, ["ml_omitted"], [0.1])
    rng.shuffle(trials)
    b = summarize(trials, ["ml_omitted"], [0.1])
    assert a[0]["mean_rmse"] == pytest.approx(b[0]["mean_rmse"], rel=1e-12)
    assert a[0]["n_failed"] == 1 and a[0]["n_trials"] == 31


def test_timing_report():
    assert timing_report(StageTimer()) == []
    t = StageTimer()
    with t.stage("fft"):
        pass
    rows = timing_report(t, {"direct_s": 2.0, "fast_s": 0.5, "speedup": 4.0})
    assert rows[0]["stage"] == "fft" and rows[0]["calls"] == 1
    assert rows[-1]["speedup"] == 4.0


def test_speedup():
    assert measure_speedup()["speedup"] > 5


def test_report_files(tmp_path):
    report = noise_sweep(desk_suite(speeds=((2, -1),)), [0.0, 0.1], trials_per_point=2)
    paths = write_report(report, tmp_path)
    rows = read_csv(paths["trials"])
    assert list(rows[0])[:3] == ["method", "sigma2", "video"] and len(rows) == 12
    assert len(read_csv(paths["summary"])) == 6
    assert "summary.csv" in paths["gnuplot"].read_text()
    calls = {r["stage"]: r["calls"] for r in read_csv(paths["timing"])}
    assert calls["gmm"] == "4"
