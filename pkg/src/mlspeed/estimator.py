"""Maximum-likelihood estimation of a constant integer speed.

With observation spectra ``X[k, n]``, background ``B[k]`` and object
template ``S[k]``, the speed-dependent part of the log-likelihood is

    J(v) = sum_n sum_k Re{ (X[k, n] - B[k]) S*[k] exp(+2j*pi*u_k . v n) }

and ``v_hat = argmax J``.  Dropping ``B`` (all zeros) gives the
omitted-background estimator.  The additive term
``sum_k Re{N Xbar[k] B*[k]}`` does not depend on ``v`` and is reported
separately by :func:`included_constant_term`.

For integer ``v`` the inner sum over ``k`` is ``M1*M2`` times the circular
cross-correlation of frame ``n`` (background removed) with the template,
sampled at ``v*n``; :func:`objective_surface_fast` evaluates the whole
grid that way, :func:`objective_direct` is the literal double sum.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .background import Template
from .core import FrameSequence, SpeedVector, as_frame
from .spectral import correlate_spectra, dft2, raised_cosine_taper, spatial_frequencies


class DegenerateObjectiveError(ValueError):
    """The objective cannot discriminate between speeds (e.g. a single frame)."""


@dataclass(frozen=True)
class EstimatorContext:
    spectra: np.ndarray
    background_spectrum: np.ndarray
    template_spectrum: np.ndarray
    temporal_mean: np.ndarray
    sample_time: float
    included: bool

    @property
    def n_frames(self) -> int:
        return self.spectra.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.spectra.shape[1:]

    @property
    def mode(self) -> str:
        return "included" if self.included else "omitted"


def build_context(seq, b=None, t=None, taper: float = 0.0, frame_rate: float | None = None) -> EstimatorContext:
    """Transform the observation window, background and template.

    ``seq`` is a :class:`FrameSequence` or an ``(N, M1, M2)`` array; ``b``
    is the background frame, ``None`` for the omitted-background estimator;
    ``t`` is a :class:`Template` or a plain object image.  A non-zero
    ``taper`` multiplies frames, background and template by the same
    raised-cosine border window before transforming.
    """
    if isinstance(seq, FrameSequence):
        frames, rate = seq.frames, seq.frame_rate
    else:
        frames, rate = np.asarray(seq, dtype=np.float64), 15.0
    if frame_rate is not None:
        rate = frame_rate
    if frames.ndim != 3 or frames.shape[0] < 1:
        raise ValueError(f"need a non-empty (N, M1, M2) frame stack, got shape {frames.shape}")
    if t is None:
        raise ValueError("a template is required")
    s = t.image if isinstance(t, Template) else as_frame(t)
    shape = frames.shape[1:]
    if s.shape != shape:
        raise ValueError(f"template is {s.shape}, frames are {shape}")
    if b is not None and np.shape(b) != shape:
        raise ValueError(f"background is {np.shape(b)}, frames are {shape}")

    window = raised_cosine_taper(shape, taper) if taper else None
    if window is not None:
        frames = frames * window
        s = s * window
        b = None if b is None else np.asarray(b) * window
    spectra = dft2(frames)
    if isinstance(t, Template) and window is None:
        template_spectrum = t.spectrum
    else:
        template_spectrum = dft2(s)
    included = b is not None
    background_spectrum = dft2(np.asarray(b, dtype=np.float64)) if included else np.zeros(shape, dtype=complex)
    return EstimatorContext(
        spectra=spectra,
        background_spectrum=background_spectrum,
        template_spectrum=template_spectrum,
        temporal_mean=spectra.mean(axis=0),
        sample_time=1.0 / rate,
        included=included,
    )


@dataclass(frozen=True)
class SpeedGrid:
    """All integer speeds with ``|v1|, |v2| <= v_max``, in lexicographic order."""

    v_max: int = 8

    def __post_init__(self):
        if int(self.v_max) != self.v_max or self.v_max < 0:
            raise ValueError(f"v_max must be a non-negative integer, got {self.v_max}")

    @property
    def axis(self) -> np.ndarray:
        return np.arange(-self.v_max, self.v_max + 1)

    @property
    def hypotheses(self) -> np.ndarray:
        a = self.axis
        return np.array(list(product(a, a)), dtype=np.int64).reshape(-1, 2)

    def __len__(self) -> int:
        return (2 * self.v_max + 1) ** 2


@dataclass(frozen=True)
class ObjectiveSurface:
    """Scores on a :class:`SpeedGrid`; ``scores[v1 + v_max, v2 + v_max]``."""

    grid: SpeedGrid
    scores: np.ndarray

    def score(self, v) -> float:
        vm = self.grid.v_max
        return float(self.scores[int(v[0]) + vm, int(v[1]) + vm])

    @property
    def is_flat(self) -> bool:
        hi, lo = float(self.scores.max()), float(self.scores.min())
        return hi - lo <= 1e-12 * abs(hi)

    def shifted(self, offset: float) -> "ObjectiveSurface":
        return ObjectiveSurface(self.grid, self.scores + offset)

    def argmax(self) -> SpeedVector:
        """Best hypothesis; exact ties go to the smallest |v|, then lexicographic."""
        hyp = self.grid.hypotheses
        flat = self.scores.ravel()
        best = hyp[flat == flat.max()]
        order = np.lexsort((best[:, 1], best[:, 0], (best ** 2).sum(axis=1)))
        v1, v2 = best[order[0]]
        return SpeedVector(int(v1), int(v2))

    def rows(self):
        for (v1, v2), s in zip(self.grid.hypotheses, self.scores.ravel()):
            yield {"v1": int(v1), "v2": int(v2), "score": float(s)}


@dataclass(frozen=True)
class EstimationResult:
    speed: SpeedVector
    score: float
    mode: str
    degenerate_flat: bool
    constant_term: float = 0.0
    surface: ObjectiveSurface | None = None


def _residuals(ctx: EstimatorContext) -> np.ndarray:
    return ctx.spectra - ctx.background_spectrum if ctx.included else ctx.spectra


def objective_direct(ctx: EstimatorContext, v) -> float:
    """Literal evaluation of ``J(v)``; ``v`` may be non-integer.

    Sums over bins ``k`` for each frame, then over frames in order.
    """
    u1, u2 = spatial_frequencies(ctx.shape)
    v1, v2 = float(v[0]), float(v[1])
    cross = _residuals(ctx) * np.conj(ctx.template_spectrum)
    total = 0.0
    for n in range(ctx.n_frames):
        phase = np.mod(u1 * (v1 * n), 1.0) + np.mod(u2 * (v2 * n), 1.0)
        total += float(np.sum(np.real(cross[n] * np.exp(2j * np.pi * phase))))
    return total


def objective_surface_direct(ctx: EstimatorContext, grid: SpeedGrid) -> ObjectiveSurface:
    scores = np.array([objective_direct(ctx, v) for v in grid.hypotheses])
    side = 2 * grid.v_max + 1
    return ObjectiveSurface(grid, scores.reshape(side, side))


def correlation_stack(ctx: EstimatorContext, chunk: int = 8) -> np.ndarray:
    """Per-frame circular correlation of the residual frames with the template."""
    n_frames = ctx.n_frames
    out = np.empty((n_frames,) + ctx.shape)
    for start in range(0, n_frames, chunk):
        stop = min(start + chunk, n_frames)
        res = ctx.spectra[start:stop]
        if ctx.included:
            res = res - ctx.background_spectrum
        out[start:stop] = correlate_spectra(res, ctx.template_spectrum)
    return out


def objective_surface_fast(ctx: EstimatorContext, grid: SpeedGrid, stack=None) -> ObjectiveSurface:
    """``J`` on the whole integer grid from one correlation map per frame."""
    m1, m2 = ctx.shape
    c = correlation_stack(ctx) if stack is None else stack
    n = np.arange(ctx.n_frames)
    hyp = grid.hypotheses
    rows = (hyp[:, :1] * n) % m1
    cols = (hyp[:, 1:] * n) % m2
    samples = c[n[None, :], rows, cols]
    scores = (m1 * m2) * samples.sum(axis=1)
    side = 2 * grid.v_max + 1
    return ObjectiveSurface(grid, scores.reshape(side, side))


def included_constant_term(ctx: EstimatorContext) -> float:
    """``sum_k Re{N Xbar[k] B*[k]}``, the speed-independent part of the objective."""
    return float(np.sum(np.real(ctx.n_frames * ctx.temporal_mean * np.conj(ctx.background_spectrum))))


def estimate_speed(ctx: EstimatorContext, grid: SpeedGrid | None = None, keep_surface: bool = True,
                   add_constant: bool = False) -> EstimationResult:
    grid = SpeedGrid() if grid is None else grid
    if ctx.n_frames < 2:
        raise DegenerateObjectiveError(
            f"objective is flat in v with {ctx.n_frames} observation frame(s); need at least 2")
    if len(grid) == 0:
        raise ValueError("empty speed grid")
    surface = objective_surface_fast(ctx, grid)
    constant = included_constant_term(ctx) if ctx.included else 0.0
    if add_constant:
        surface = surface.shifted(constant)
    v_hat = surface.argmax()
    return EstimationResult(
        speed=v_hat,
        score=surface.score(v_hat),
        mode=ctx.mode,
        degenerate_flat=surface.is_flat,
        constant_term=constant,
        surface=surface if keep_surface else None,
    )
