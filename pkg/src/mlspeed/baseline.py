"""Exhaustive-search block matching, aggregated to one global speed."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import SpeedVector, as_frame


@dataclass(frozen=True)
class BlockMatchConfig:
    block_size: int = 35
    search_range: int = 8

    def __post_init__(self):
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ValueError(f"baseline.block_size must be a positive integer, got {self.block_size}")
        if int(self.search_range) != self.search_range or self.search_range < 1:
            raise ValueError(f"baseline.search_range must be a positive integer, got {self.search_range}")


@dataclass(frozen=True)
class MotionField:
    """Per-block displacement ``(nb1, nb2, 2)`` and best SAD ``(nb1, nb2)``."""

    displacements: np.ndarray
    sad: np.ndarray
    block_size: int

    def block_overlaps(self, mask) -> np.ndarray:
        """Which blocks contain at least one pixel of ``mask``."""
        b = self.block_size
        nb1, nb2 = self.sad.shape
        m = np.asarray(mask, dtype=bool)[:nb1 * b, :nb2 * b]
        return m.reshape(nb1, b, nb2, b).any(axis=(1, 3))


def scaled_block_size(shape, reference: int = 35, reference_height: int = 361) -> int:
    """Block size scaled from the full-resolution choice to a smaller frame."""
    return max(2, int(round(reference * min(shape) / reference_height)))


def candidate_displacements(search_range: int) -> np.ndarray:
    """All ``|d_i| <= search_range``, ordered by |d| then lexicographically."""
    r = np.arange(-search_range, search_range + 1)
    d = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
    order = np.lexsort((d[:, 1], d[:, 0], (d ** 2).sum(axis=1)))
    return np.ascontiguousarray(d[order], dtype=np.int64)


def block_match_pair(f_prev, f_next, cfg: BlockMatchConfig, backend: str | None = None) -> MotionField:
    """SAD block matching of ``f_prev`` against ``f_next``.

    Full blocks only; a candidate whose window leaves the frame is skipped.
    Ties go to the smaller displacement, then lexicographic order.
    """
    f_prev = np.ascontiguousarray(as_frame(f_prev))
    f_next = np.ascontiguousarray(as_frame(f_next))
    if f_prev.shape != f_next.shape:
        raise ValueError(f"frame shapes differ: {f_prev.shape} vs {f_next.shape}")
    if cfg.block_size > min(f_prev.shape):
        raise ValueError(f"block_size {cfg.block_size} exceeds frame {f_prev.shape}")
    disp, sad = kernels.get_backend(backend).block_match(
        f_prev, f_next, int(cfg.block_size), candidate_displacements(cfg.search_range))
    return MotionField(np.asarray(disp), np.asarray(sad), int(cfg.block_size))


def aggregate_speed(fields, masks=None, gaps=None) -> SpeedVector:
    """Median speed over the reliable foreground blocks of all frame pairs.

    Per pair, blocks touching the mask (all blocks without one) are kept
    if their SAD is at or below the median SAD of those blocks.  ``gaps``
    gives the frame distance of each pair (1 for adjacent frames).
    """
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one motion field")
    if masks is not None and len(masks) != len(fields):
        raise ValueError("one mask per motion field is required")
    gaps = [1] * len(fields) if gaps is None else list(gaps)
    kept = []
    for i, field in enumerate(fields):
        sel = np.isfinite(field.sad)
        if masks is not None and masks[i] is not None:
            sel &= field.block_overlaps(masks[i])
        if not sel.any():
            continue
        sel &= field.sad <= np.median(field.sad[sel])
        kept.append(field.displacements[sel] / gaps[i])
    if not kept:
        raise ValueError("no qualifying blocks")
    v = np.median(np.concatenate(kept), axis=0)
    v1, v2 = np.floor(v + 0.5)
    return SpeedVector(int(v1), int(v2))
