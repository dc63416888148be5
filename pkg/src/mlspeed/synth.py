"""Ground-truth synthetic sequences: static background, one sprite moving
at constant integer speed, additive white Gaussian noise.

Background-only frames come first; observation frame ``n`` (counted from
the first frame that contains the sprite) shows it at ``start + v*n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .background import Template
from .core import FrameSequence, PixelIndex, SpeedVector, as_frame, make_rng
from .ingest import read_kv_file, save_sequence, write_kv_file, write_pgm

GROUND_TRUTH_NAME = "ground_truth.txt"
WRAP_MODES = ("circular", "clipped")


@dataclass(frozen=True)
class SynthConfig:
    background: np.ndarray
    sprite: np.ndarray
    sprite_mask: np.ndarray
    start_position: PixelIndex
    v_true: SpeedVector
    frame_count: int
    background_frame_count: int
    sigma2: float = 0.0
    clip: bool = True
    wrap_mode: str = "circular"
    seed: int = 0
    frame_rate: float = 15.0

    def __post_init__(self):
        bg, sprite = as_frame(self.background), as_frame(self.sprite)
        mask = np.asarray(self.sprite_mask, dtype=bool)
        if mask.shape != sprite.shape:
            raise ValueError(f"sprite mask is {mask.shape}, sprite is {sprite.shape}")
        if sprite.shape[0] > bg.shape[0] or sprite.shape[1] > bg.shape[1]:
            raise ValueError(f"sprite {sprite.shape} does not fit the {bg.shape} frame")
        if not 0 <= self.background_frame_count < self.frame_count:
            raise ValueError("background_frame_count must be in [0, frame_count)")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be non-negative, got {self.sigma2}")
        if self.wrap_mode not in WRAP_MODES:
            raise ValueError(f"wrap_mode must be one of {WRAP_MODES}, got {self.wrap_mode!r}")
        v = SpeedVector(*self.v_true)
        if v.v1 != int(v.v1) or v.v2 != int(v.v2):
            raise ValueError(f"v_true must be integer, got {tuple(v)}")
        object.__setattr__(self, "background", bg)
        object.__setattr__(self, "sprite", sprite)
        object.__setattr__(self, "sprite_mask", mask)
        object.__setattr__(self, "start_position", PixelIndex(*(int(p) for p in self.start_position)))
        object.__setattr__(self, "v_true", SpeedVector(int(v.v1), int(v.v2)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.background.shape

    @property
    def observation_count(self) -> int:
        return self.frame_count - self.background_frame_count

    def with_noise(self, sigma2: float, seed: int) -> "SynthConfig":
        return replace(self, sigma2=sigma2, seed=seed)


@dataclass(frozen=True)
class GroundTruth:
    v_true: SpeedVector
    positions: np.ndarray
    clean_frames: np.ndarray
    template: Template
    wrap_mode: str
    start_position: PixelIndex
    sigma2: float
    seed: int
    extra: dict = field(default_factory=dict)


def sprite_position(cfg: SynthConfig, n: int) -> tuple[int, int]:
    p1 = cfg.start_position.m1 + cfg.v_true.v1 * n
    p2 = cfg.start_position.m2 + cfg.v_true.v2 * n
    if cfg.wrap_mode == "circular":
        return p1 % cfg.shape[0], p2 % cfg.shape[1]
    return p1, p2


def place_sprite(canvas, sprite, mask, position, wrap_mode: str) -> np.ndarray:
    """Overwrite ``canvas`` with the masked sprite whose top-left is ``position``."""
    out = np.array(canvas, dtype=np.float64, copy=True)
    m1, m2 = out.shape
    h, w = sprite.shape
    rows = np.arange(h) + position[0]
    cols = np.arange(w) + position[1]
    if wrap_mode == "circular":
        rows, cols = rows % m1, cols % m2
        keep_r = np.ones(h, dtype=bool)
        keep_c = np.ones(w, dtype=bool)
    else:
        keep_r = (rows >= 0) & (rows < m1)
        keep_c = (cols >= 0) & (cols < m2)
    if not keep_r.any() or not keep_c.any():
        return out
    sub_mask = mask[np.ix_(keep_r, keep_c)]
    region = np.ix_(rows[keep_r], cols[keep_c])
    out[region] = np.where(sub_mask, sprite[np.ix_(keep_r, keep_c)], out[region])
    return out


def render_clean_frame(cfg: SynthConfig, n: int) -> np.ndarray:
    """Noise-free observation frame ``n``: sprite pasted over the background."""
    return place_sprite(cfg.background, cfg.sprite, cfg.sprite_mask, sprite_position(cfg, n), cfg.wrap_mode)


def generate(cfg: SynthConfig) -> tuple[FrameSequence, GroundTruth]:
    n_bg = cfg.background_frame_count
    clean = np.empty((cfg.frame_count,) + cfg.shape)
    clean[:n_bg] = cfg.background
    for n in range(cfg.observation_count):
        clean[n_bg + n] = render_clean_frame(cfg, n)

    frames = clean.copy()
    if cfg.sigma2 > 0:
        sigma = np.sqrt(cfg.sigma2)
        for i in range(cfg.frame_count):
            frames[i] += sigma * make_rng(cfg.seed, i).standard_normal(cfg.shape)
    if cfg.clip:
        np.clip(frames, 0.0, 1.0, out=frames)

    zeros = np.zeros(cfg.shape)
    s0 = place_sprite(zeros, cfg.sprite, cfg.sprite_mask, sprite_position(cfg, 0), cfg.wrap_mode)
    support = place_sprite(zeros, cfg.sprite_mask.astype(float), cfg.sprite_mask,
                           sprite_position(cfg, 0), cfg.wrap_mode) > 0
    truth = GroundTruth(
        v_true=cfg.v_true,
        positions=np.array([sprite_position(cfg, n) for n in range(cfg.observation_count)], dtype=np.int64),
        clean_frames=clean,
        template=Template.from_image(s0, support),
        wrap_mode=cfg.wrap_mode,
        start_position=cfg.start_position,
        sigma2=cfg.sigma2,
        seed=cfg.seed,
    )
    return FrameSequence(frames, cfg.frame_rate), truth


# -- built-in content ---------------------------------------------------------

def _smooth_random(shape, seed: int, sigma: float, lo: float, hi: float) -> np.ndarray:
    raw = ndimage.gaussian_filter(make_rng(seed).standard_normal(shape), sigma, mode="wrap")
    raw -= raw.min()
    peak = raw.max()
    return lo + (hi - lo) * (raw / peak if peak > 0 else raw)


def textured_sprite(shape=(12, 12), seed: int = 7) -> np.ndarray:
    """Bright, mildly smoothed random texture standing in for an object photo."""
    return _smooth_random(shape, seed, sigma=0.8, lo=0.55, hi=1.0)


def textured_background(shape=(64, 64), seed: int = 11) -> np.ndarray:
    """Dark, smooth random backdrop."""
    return _smooth_random(shape, seed, sigma=max(shape) / 16.0, lo=0.1, hi=0.45)


def centered_start(shape, sprite_shape, v, observation_count: int) -> PixelIndex:
    """Start so the sprite trajectory is centred in the frame."""
    travel = np.array(v, dtype=float) * (observation_count - 1)
    centre = (np.array(shape) - np.array(sprite_shape)) / 2.0
    return PixelIndex(*(int(round(c)) for c in centre - travel / 2.0))


def _preset(shape, frame_count, background_frames, background, sprite, sprite_mask, v_true,
            start_position, **kwargs) -> SynthConfig:
    if background is None:
        background = 0.0
    if isinstance(background, str):
        if background != "builtin":
            raise ValueError(f"unknown background {background!r}")
        background = textured_background(shape)
    elif np.isscalar(background):
        background = np.full(shape, float(background))
    if sprite is None:
        sprite = textured_sprite()
    sprite = as_frame(sprite)
    if sprite_mask is None:
        sprite_mask = sprite > 0
    if start_position is None:
        start_position = centered_start(shape, sprite.shape, v_true, frame_count - background_frames)
    return SynthConfig(background=background, sprite=sprite, sprite_mask=sprite_mask,
                       start_position=start_position, v_true=v_true, frame_count=frame_count,
                       background_frame_count=background_frames, **kwargs)


def desk_preset(background=None, sprite=None, sprite_mask=None, v_true=(1, 2), start_position=None,
                **kwargs) -> SynthConfig:
    """64x64 frames, 30 in total of which 10 are background-only (N = 20).

    The background defaults to black; ``"builtin"`` selects a smooth random
    texture and a scalar gives a constant frame.
    """
    return _preset((64, 64), 30, 10, background, sprite, sprite_mask, v_true, start_position, **kwargs)


def paper_synthetic_preset(background=None, sprite=None, sprite_mask=None, v_true=(1, 2),
                           start_position=None, **kwargs) -> SynthConfig:
    """361x616 frames at 15 Hz, 85 in total of which 40 are background-only (N = 45)."""
    kwargs.setdefault("frame_rate", 15.0)
    return _preset((361, 616), 85, 40, background, sprite, sprite_mask, v_true, start_position, **kwargs)


PRESETS = {"desk": desk_preset, "paper": paper_synthetic_preset}


# -- on-disk output -----------------------------------------------------------

def write_sequence(directory, seq: FrameSequence, truth: GroundTruth, background_frames: int,
                   bit_depth: int = 16) -> Path:
    """Frames + manifest + ground-truth sidecar (with the n = 0 template)."""
    directory = Path(directory)
    save_sequence(directory, seq, background_frames, bit_depth)
    write_pgm(directory / "template.pgm", truth.template.image, bit_depth)
    write_pgm(directory / "template_mask.pgm", truth.template.support.astype(float), 8)
    write_kv_file(directory / GROUND_TRUTH_NAME, {
        "v1": truth.v_true.v1,
        "v2": truth.v_true.v2,
        "start": f"{truth.start_position.m1},{truth.start_position.m2}",
        "wrap_mode": truth.wrap_mode,
        "sigma2": truth.sigma2,
        "seed": truth.seed,
        "template": "template.pgm",
        "template_mask": "template_mask.pgm",
    }, header="ground truth of a synthetic sequence")
    return directory


def read_ground_truth(directory) -> dict:
    path = Path(directory) / GROUND_TRUTH_NAME
    if not path.exists():
        raise FileNotFoundError(f"ground-truth sidecar not found: {path}")
    values = read_kv_file(path)
    start = tuple(int(p) for p in values["start"].split(","))
    return {
        "v_true": SpeedVector(int(values["v1"]), int(values["v2"])),
        "start": PixelIndex(*start),
        "wrap_mode": values["wrap_mode"],
        "sigma2": float(values["sigma2"]),
        "seed": int(values["seed"]),
        "template": path.parent / values.get("template", "template.pgm"),
        "template_mask": path.parent / values.get("template_mask", "template_mask.pgm"),
    }
