"""Static-background estimation, foreground masks and object templates.

The adaptive model keeps ``K`` Gaussians per pixel (Stauffer-Grimson
style).  Component state is stored pixel-major, ``(M1, M2, K)``, with the
components of every pixel sorted by ``weight / sigma`` in descending order,
so ``means[..., 0]`` is always the current background estimate.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from . import kernels
from .core import FrameSequence, as_frame
from .spectral import dft2

#: initial component variance for synthetic and for real, outdoor footage
INITIAL_VARIANCE_PRESETS = {"synthetic": 0.0025, "real": 0.81}


class EmptyForegroundError(ValueError):
    """No usable foreground pixels were found."""


@dataclass(frozen=True)
class GmmParams:
    k: int = 5
    alpha: float = 0.05
    threshold: float = 0.7
    match_sigma: float = 2.5
    initial_variance: float = INITIAL_VARIANCE_PRESETS["synthetic"]
    variance_floor: float = 1e-6
    rho: str = "clamped"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"gmm.k must be a positive integer, got {self.k}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"gmm.alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"gmm.t must lie in (0, 1), got {self.threshold}")
        if not self.match_sigma > 0:
            raise ValueError(f"gmm.match_sigma must be positive, got {self.match_sigma}")
        if not self.initial_variance > 0:
            raise ValueError(f"gmm.initial_variance must be positive, got {self.initial_variance}")
        if not 0.0 < self.variance_floor <= self.initial_variance:
            raise ValueError("gmm.variance_floor must lie in (0, initial_variance]")
        if self.rho not in ("clamped", "density"):
            raise ValueError(f"gmm.rho must be 'clamped' or 'density', got {self.rho!r}")


@dataclass
class GmmModel:
    params: GmmParams
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape[:2]

    def copy(self) -> "GmmModel":
        return GmmModel(self.params, self.weights.copy(), self.means.copy(), self.variances.copy())


@dataclass(frozen=True)
class Template:
    """Object image ``s`` (zero off-support), its support and cached DFT."""

    image: np.ndarray
    support: np.ndarray
    spectrum: np.ndarray

    @classmethod
    def from_image(cls, image, support=None) -> "Template":
        image = as_frame(image)
        support = image != 0 if support is None else np.asarray(support, dtype=bool)
        image = np.where(support, image, 0.0)
        return cls(image, support, dft2(image))


def gmm_init(dims, params: GmmParams | None = None, **overrides) -> GmmModel:
    """Fresh model: one unit-weight component at mean 0.5 per pixel.

    The remaining ``K - 1`` slots are zero-weight placeholders that the
    first unmatched observations take over.
    """
    params = replace(params or GmmParams(), **overrides)
    m1, m2 = int(dims[0]), int(dims[1])
    if m1 <= 0 or m2 <= 0:
        raise ValueError(f"frame dimensions must be positive, got {dims}")
    weights = np.zeros((m1, m2, params.k))
    weights[..., 0] = 1.0
    means = np.zeros((m1, m2, params.k))
    means[..., 0] = 0.5
    variances = np.full((m1, m2, params.k), params.initial_variance)
    return GmmModel(params, weights, means, variances)


def gmm_update(model: GmmModel, f, backend: str | None = None):
    """Feed one frame into the model in place; return ``(model, foreground_mask)``.

    A pixel is foreground when no component matches it, or when the
    components ranked above its match already hold at least ``threshold``
    of the weight.
    """
    f = np.ascontiguousarray(as_frame(f))
    if f.shape != model.shape:
        raise ValueError(f"frame is {f.shape}, model is {model.shape}")
    p = model.params
    fg = np.zeros(f.shape, dtype=np.uint8)
    kernels.get_backend(backend).gmm_update(
        model.weights, model.means, model.variances, f, fg,
        float(p.alpha), float(p.threshold), float(p.match_sigma),
        float(p.initial_variance), float(p.variance_floor), p.rho == "density",
    )
    return model, fg.astype(bool)


def train(model: GmmModel, frames, backend: str | None = None) -> list[np.ndarray]:
    """Run :func:`gmm_update` over ``frames`` and collect the masks."""
    return [gmm_update(model, f, backend)[1] for f in frames]


def estimate_background(model: GmmModel) -> np.ndarray:
    return model.means[..., 0].copy()


def clean_mask(mask, min_area: int = 9) -> np.ndarray:
    """Drop 8-connected blobs smaller than ``min_area``; keep the largest one left."""
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        raise EmptyForegroundError("foreground mask is empty")
    areas = np.bincount(labels.ravel())[1:]
    areas[areas < min_area] = 0
    if not areas.any():
        raise EmptyForegroundError(f"no foreground component reaches min_area={min_area}")
    return labels == (int(np.argmax(areas)) + 1)


def extract_template(f, b, mask, min_area: int = 9, cleanup: bool = True) -> Template:
    """Cut the object out of frame ``f``: ``s = f * mask`` after mask cleanup.

    ``b`` is the background estimate belonging to ``f``; only its shape is
    checked, the object pixels themselves come straight from ``f``.
    """
    f = as_frame(f)
    mask = np.asarray(mask, dtype=bool)
    if b is not None and np.shape(b) != f.shape:
        raise ValueError(f"background is {np.shape(b)}, frame is {f.shape}")
    if mask.shape != f.shape:
        raise ValueError(f"mask is {mask.shape}, frame is {f.shape}")
    if not mask.any():
        raise EmptyForegroundError("foreground mask is empty")
    support = clean_mask(mask, min_area) if cleanup else mask
    return Template.from_image(np.where(support, f, 0.0), support)


def median_background(seq) -> np.ndarray:
    frames = seq.frames if isinstance(seq, FrameSequence) else np.asarray(seq, dtype=np.float64)
    if frames.shape[0] < 3:
        raise ValueError(f"median background needs at least 3 frames, got {frames.shape[0]}")
    return np.median(frames, axis=0)
