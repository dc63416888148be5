"""Shared domain types, pixel geometry and seeded randomness.

Frames are plain 2-D ``float64`` numpy arrays indexed ``[m1, m2]`` (row,
column), with ``m1`` running over the frame height.  Sequences stack them
along a leading time axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class PixelIndex(NamedTuple):
    m1: int
    m2: int


class SpeedVector(NamedTuple):
    """Constant speed in pixel/frame; ``v1`` is vertical, ``v2`` horizontal."""

    v1: float
    v2: float

    def displacement(self, n: int) -> tuple[float, float]:
        return (self.v1 * n, self.v2 * n)

    def norm(self) -> float:
        return float(np.hypot(self.v1, self.v2))


@dataclass(frozen=True)
class FrameSequence:
    """Ordered, equally sized grayscale frames sampled at ``frame_rate`` Hz."""

    frames: np.ndarray
    frame_rate: float = 15.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise ValueError(f"frames must be a (N, M1, M2) stack, got shape {frames.shape}")
        if frames.shape[0] < 1:
            raise ValueError("a frame sequence needs at least one frame")
        if not self.frame_rate > 0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def sample_time(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1:]

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, item):
        if isinstance(item, slice):
            return FrameSequence(self.frames[item], self.frame_rate)
        return self.frames[item]


def as_frame(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2 or f.size == 0:
        raise ValueError(f"a frame must be a non-empty 2-D array, got shape {f.shape}")
    return f


def wrap(p, dims) -> PixelIndex:
    """Map a signed pixel position onto the torus of size ``dims``."""
    m1, m2 = int(dims[0]), int(dims[1])
    if m1 <= 0 or m2 <= 0:
        raise ValueError(f"frame dimensions must be positive, got {dims}")
    # Python's % is already non-negative for positive moduli
    return PixelIndex(int(p[0]) % m1, int(p[1]) % m2)


def frame_stats(f) -> tuple[float, float, float, float]:
    """Population mean, variance, min and max of all pixels."""
    f = as_frame(f)
    return float(f.mean()), float(f.var()), float(f.min()), float(f.max())


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for ``seed``, optionally forked into a substream.

    ``make_rng(seed, n)`` gives frame ``n`` its own independent stream, so
    frames can be rendered in any order with identical output.
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream)))
