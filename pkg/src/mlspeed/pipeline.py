"""End-to-end estimation on one sequence.

The first ``background_frames`` frames train the mixture model; the rest
form the observation window.  Frame 0 of the window supplies the template
(or the known ground-truth template is used), so estimated displacements
are measured from it.
"""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .background import (EmptyForegroundError, GmmParams, Template, estimate_background,
                         extract_template, gmm_init, gmm_update, train)
from .baseline import BlockMatchConfig, aggregate_speed, block_match_pair, scaled_block_size
from .core import FrameSequence, SpeedVector
from .estimator import EstimationResult, SpeedGrid, build_context, estimate_speed

METHODS = ("ml_included", "ml_omitted", "block_matching")


class StageTimer:
    """Accumulates wall time and call counts per named stage."""

    def __init__(self):
        self.records: dict[str, list] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            rec = self.records.setdefault(name, [0, 0.0])
            rec[0] += 1
            rec[1] += time.perf_counter() - t0

    def merge(self, other: "StageTimer") -> None:
        for name, (calls, secs) in other.records.items():
            rec = self.records.setdefault(name, [0, 0.0])
            rec[0] += calls
            rec[1] += secs


@contextmanager
def _maybe(timer, name):
    if timer is None:
        yield
    else:
        with timer.stage(name):
            yield


@dataclass(frozen=True)
class PipelineConfig:
    gmm: GmmParams = field(default_factory=GmmParams)
    min_area: int = 9
    v_max: int = 8
    taper: float = 0.0
    template: str = "gmm"
    block_size: int | None = None
    search_range: int | None = None
    backend: str | None = None

    def __post_init__(self):
        if self.template not in ("gmm", "known"):
            raise ValueError(f"template source must be 'gmm' or 'known', got {self.template!r}")

    def block_config(self, shape) -> BlockMatchConfig:
        size = self.block_size or scaled_block_size(shape)
        return BlockMatchConfig(block_size=size, search_range=self.search_range or self.v_max)


@dataclass
class PipelineResult:
    estimates: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    background: np.ndarray | None = None
    masks: list = field(default_factory=list)
    template: Template | None = None

    def speed(self, method: str) -> SpeedVector:
        est = self.estimates[method]
        return est.speed if isinstance(est, EstimationResult) else est


def run_pipeline(seq: FrameSequence, background_frames: int, cfg: PipelineConfig | None = None,
                 known_template: Template | None = None, methods=METHODS,
                 timer: StageTimer | None = None) -> PipelineResult:
    """Run the requested estimators; per-method failures land in ``errors``."""
    cfg = cfg or PipelineConfig()
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown method(s): {sorted(unknown)}")
    if not 0 <= background_frames < len(seq):
        raise ValueError(f"background_frames={background_frames} leaves no observation frames "
                         f"in a {len(seq)}-frame sequence")
    out = PipelineResult()
    observations = seq.frames[background_frames:]

    with _maybe(timer, "gmm"):
        model = gmm_init(seq.shape, cfg.gmm)
        train(model, seq.frames[:background_frames], cfg.backend)
        out.background = estimate_background(model)
        out.masks = [gmm_update(model, f, cfg.backend)[1] for f in observations]

    ml = [m for m in methods if m.startswith("ml_")]
    if ml:
        try:
            if cfg.template == "known":
                if known_template is None:
                    raise ValueError("template source 'known' needs a ground-truth template")
                out.template = known_template
            else:
                out.template = extract_template(observations[0], out.background, out.masks[0], cfg.min_area)
        except EmptyForegroundError as exc:
            for m in ml:
                out.errors[m] = f"foreground extraction failed: {exc}"
            ml = []

    grid = SpeedGrid(cfg.v_max)
    for method in ml:
        with _maybe(timer, "fft"):
            if method == "ml_included":
                ctx = build_context(observations, out.background, out.template, cfg.taper, seq.frame_rate)
            else:
                foreground = observations * np.stack(out.masks)
                ctx = build_context(foreground, None, out.template, cfg.taper, seq.frame_rate)
        with _maybe(timer, "search"):
            try:
                out.estimates[method] = estimate_speed(ctx, grid)
            except ValueError as exc:
                out.errors[method] = str(exc)

    if "block_matching" in methods:
        with _maybe(timer, "block_matching"):
            try:
                out.estimates["block_matching"] = block_matching_speed(observations, out.masks,
                                                                       cfg.block_config(seq.shape), cfg.backend)
            except ValueError as exc:
                out.errors["block_matching"] = str(exc)
    return out


def block_matching_speed(observations, masks, bm_cfg: BlockMatchConfig, backend=None) -> SpeedVector:
    if len(observations) < 2:
        raise ValueError("block matching needs at least two observation frames")
    fields = [block_match_pair(observations[n], observations[n + 1], bm_cfg, backend)
              for n in range(len(observations) - 1)]
    return aggregate_speed(fields, None if masks is None else masks[:-1])
