import cmath
import math

import numpy as np
import pytest

from mlspeed.background import Template
from mlspeed.estimator import (DegenerateObjectiveError, SpeedGrid, build_context, estimate_speed,
                               included_constant_term, objective_direct, objective_surface_direct,
                               objective_surface_fast)
from mlspeed.synth import desk_preset, generate, textured_sprite

from conftest import direct_dft2


def circular_instance(shape, sprite, v, n_frames, start=(0, 0)):
    s = np.zeros(shape)
    s[start[0]:start[0] + sprite.shape[0], start[1]:start[1] + sprite.shape[1]] = sprite
    frames = np.stack([np.roll(s, (v[0] * n, v[1] * n), axis=(0, 1)) for n in range(n_frames)])
    return frames, s


def scalar_objective(frames, b, s, v):
    """Loop-level restatement of the objective with matrix DFTs."""
    m1, m2 = s.shape
    S = direct_dft2(s)
    B = direct_dft2(b) if b is not None else np.zeros_like(S)
    total = 0.0
    for n, x in enumerate(frames):
        X = direct_dft2(x)
        for k1 in range(m1):
            for k2 in range(m2):
                ph = 2 * math.pi * (k1 * v[0] * n / m1 + k2 * v[1] * n / m2)
                total += ((X[k1, k2] - B[k1, k2]) * S[k1, k2].conjugate() * cmath.exp(1j * ph)).real
    return total


def test_context(rng):
    x = rng.random((4, 8, 8))
    ctx = build_context(x, None, rng.random((8, 8)))
    np.testing.assert_allclose(ctx.temporal_mean, np.fft.fft2(x).mean(axis=0), atol=1e-12)
    assert not ctx.background_spectrum.any() and ctx.mode == "omitted"
    one = build_context(np.full((1, 5, 5), 0.4), np.zeros((5, 5)), np.ones((5, 5)))
    np.testing.assert_array_equal(one.temporal_mean, one.spectra[0])
    with pytest.raises(ValueError):
        build_context(x, None, np.ones((7, 8)))
    with pytest.raises(ValueError):
        build_context(x, np.ones((8, 7)), np.ones((8, 8)))


def test_grid():
    g = SpeedGrid(3)
    assert len(g) == 49 == len(g.hypotheses)
    assert (0, 0) in {tuple(h) for h in g.hypotheses}


@pytest.mark.parametrize("v", [(0, 0), (1, -2), (0.5, 1.25), (-3.7, 2.2)])
@pytest.mark.parametrize("included", [False, True])
def test_direct_matches_scalar_oracle(rng, v, included):
    x = rng.random((3, 8, 8))
    b = rng.random((8, 8)) if included else None
    s = rng.random((8, 8))
    ctx = build_context(x, b, s)
    assert objective_direct(ctx, v) == pytest.approx(scalar_objective(x, b, s, v), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("included", [False, True])
def test_fast_matches_direct(rng, included):
    for _ in range(3):
        x = rng.random((8, 16, 16))
        ctx = build_context(x, rng.random((16, 16)) if included else None, rng.random((16, 16)))
        grid = SpeedGrid(4)
        fast = objective_surface_fast(ctx, grid).scores
        direct = objective_surface_direct(ctx, grid).scores
        scale = np.abs(direct).max()
        np.testing.assert_allclose(fast, direct, rtol=1e-6, atol=1e-9 * scale)


def test_truth_score_and_upper_bound():
    sprite = textured_sprite((5, 4))
    frames, s = circular_instance((16, 16), sprite, (1, 2), 6)
    ctx = build_context(frames, None, s)
    S = np.fft.fft2(s)
    want = 6 * np.sum(np.abs(S) ** 2)
    assert objective_direct(ctx, (1, 2)) == pytest.approx(want, rel=1e-6)
    surface = objective_surface_fast(ctx, SpeedGrid(4))
    assert surface.scores.max() <= want * (1 + 1e-9)
    assert surface.argmax() == (1, 2)


def test_zero_speed_reduction(rng):
    x = rng.random((5, 6, 7))
    b, s = rng.random((6, 7)), rng.random((6, 7))
    ctx = build_context(x, b, s)
    want = 5 * np.sum(np.real((ctx.temporal_mean - ctx.background_spectrum) * np.conj(ctx.template_spectrum)))
    assert objective_direct(ctx, (0, 0)) == pytest.approx(want, rel=1e-9)


def test_single_frame_is_flat_and_rejected(rng):
    ctx = build_context(rng.random((1, 8, 8)), None, rng.random((8, 8)))
    assert objective_surface_fast(ctx, SpeedGrid(2)).is_flat
    with pytest.raises(DegenerateObjectiveError):
        estimate_speed(ctx, SpeedGrid(2))


def test_all_zero_frames():
    ctx = build_context(np.zeros((4, 8, 8)), None, np.ones((8, 8)))
    surface = objective_surface_fast(ctx, SpeedGrid(2))
    assert np.all(surface.scores == 0)
    result = estimate_speed(ctx, SpeedGrid(2))
    assert result.degenerate_flat and result.speed == (0, 0)


def test_tie_break():
    from mlspeed.estimator import ObjectiveSurface
    g = SpeedGrid(1)
    scores = np.zeros((3, 3))
    scores[0, 2] = scores[2, 0] = scores[1, 2] = 1.0   # (-1,1), (1,-1), (0,1)
    assert ObjectiveSurface(g, scores).argmax() == (0, 1)
    scores[1, 2] = 0
    assert ObjectiveSurface(g, scores).argmax() == (-1, 1)


def test_constant_term(rng):
    ctx = build_context(rng.random((4, 8, 8)), None, rng.random((8, 8)))
    assert included_constant_term(ctx) == 0.0
    b = rng.random((8, 8))
    ctx = build_context(np.stack([b] * 3), b, rng.random((8, 8)))
    assert included_constant_term(ctx) == pytest.approx(3 * np.sum(np.abs(np.fft.fft2(b)) ** 2), rel=1e-12)
    for _ in range(5):
        ctx = build_context(rng.random((6, 12, 12)), rng.random((12, 12)), rng.random((12, 12)))
        a = estimate_speed(ctx, SpeedGrid(3))
        c = estimate_speed(ctx, SpeedGrid(3), add_constant=True)
        assert a.speed == c.speed


def test_scale_equivariance(rng):
    frames, s = circular_instance((16, 16), textured_sprite((4, 4)), (-1, 1), 6)
    frames = frames + 0.2 * rng.standard_normal(frames.shape)
    base = objective_surface_fast(build_context(frames, None, s), SpeedGrid(3))
    scaled = objective_surface_fast(build_context(2.5 * frames, None, s), SpeedGrid(3))
    np.testing.assert_allclose(scaled.scores, 2.5 * base.scores, rtol=1e-10, atol=1e-9)
    assert scaled.argmax() == base.argmax()


def test_exact_recovery_small():
    for v in [(1, 2), (0, 0), (-3, 4), (4, -4)]:
        frames, s = circular_instance((20, 24), textured_sprite((5, 6)), v, 8)
        assert estimate_speed(build_context(frames, None, s), SpeedGrid(4)).speed == v


def test_noisy_recovery():
    hits = 0
    cfg = desk_preset(background=0.0, v_true=(1, 2), clip=False)
    for seed in range(20):
        seq, truth = generate(cfg.with_noise(0.01, seed))
        ctx = build_context(seq.frames[cfg.background_frame_count:], None, truth.template)
        hits += estimate_speed(ctx, SpeedGrid(8)).speed == (1, 2)
    assert hits >= 18


def test_template_object_and_taper(rng):
    frames, s = circular_instance((16, 16), textured_sprite((4, 4)), (1, 1), 5, start=(6, 6))
    t = Template.from_image(s)
    assert estimate_speed(build_context(frames, None, t, taper=0.1), SpeedGrid(2)).speed == (1, 1)
