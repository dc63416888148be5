import numpy as np
import pytest

from mlspeed.synth import (SynthConfig, desk_preset, generate, paper_synthetic_preset, read_ground_truth,
                           render_clean_frame, sprite_position, write_sequence)


def tiny(v=(1, 0), wrap_mode="circular", start=(0, 0), **kw):
    return SynthConfig(background=np.zeros((4, 4)), sprite=np.ones((1, 1)), sprite_mask=np.ones((1, 1), bool),
                       start_position=start, v_true=v, frame_count=8, background_frame_count=2,
                       wrap_mode=wrap_mode, **kw)


def test_render_positions():
    cfg = tiny()
    assert render_clean_frame(cfg, 0)[0, 0] == 1
    assert sprite_position(cfg, 5) == (1, 0)
    assert render_clean_frame(cfg, 5)[1, 0] == 1
    off = tiny(wrap_mode="clipped", start=(10, 10))
    assert not render_clean_frame(off, 0).any()


def test_config_validation():
    with pytest.raises(ValueError):
        tiny(v=(0.5, 0))
    with pytest.raises(ValueError):
        tiny(sigma2=-1)
    with pytest.raises(ValueError):
        tiny(wrap_mode="mirror")
    with pytest.raises(ValueError):
        SynthConfig(np.zeros((4, 4)), np.ones((5, 1)), np.ones((5, 1), bool), (0, 0), (0, 0), 4, 1)


def test_noise_free_and_deterministic():
    cfg = desk_preset()
    seq, truth = generate(cfg)
    np.testing.assert_array_equal(seq.frames, truth.clean_frames)
    noisy = cfg.with_noise(0.05, 3)
    a, _ = generate(noisy)
    b, _ = generate(noisy)
    assert a.frames.tobytes() == b.frames.tobytes()
    c, _ = generate(cfg.with_noise(0.05, 4))
    assert not np.array_equal(a.frames, c.frames)
    assert a.frames.min() >= 0 and a.frames.max() <= 1


def test_noise_statistics():
    cfg = desk_preset(clip=False).with_noise(0.01, 9)
    seq, truth = generate(cfg)
    r = seq.frames - truth.clean_frames
    assert abs(r.mean()) < 3 * np.sqrt(0.01 / r.size)
    assert abs(r.var() - 0.01) < 0.05 * 0.01


def test_positions_follow_speed():
    cfg = desk_preset(v_true=(2, -1), wrap_mode="clipped")
    _, truth = generate(cfg)
    n = np.arange(cfg.observation_count)[:, None]
    np.testing.assert_array_equal(truth.positions, np.array(cfg.start_position) + n * np.array([2, -1]))


def test_circular_spectral_identity():
    cfg = desk_preset(background=0.0, v_true=(3, -2), clip=False, start_position=(60, 58))
    seq, truth = generate(cfg)
    S = np.fft.fft2(truth.template.image)
    m1, m2 = cfg.shape
    u1 = np.arange(m1)[:, None] / m1
    u2 = np.arange(m2)[None, :] / m2
    for n in range(cfg.observation_count):
        X = np.fft.fft2(seq.frames[cfg.background_frame_count + n])
        want = S * np.exp(-2j * np.pi * (u1 * 3 * n + u2 * -2 * n))
        assert np.max(np.abs(X - want)) < 1e-9


def test_presets():
    p = paper_synthetic_preset()
    assert (p.frame_rate, p.frame_count, p.background_frame_count) == (15.0, 85, 40)
    assert p.observation_count == 45 and p.shape == (361, 616)
    d = desk_preset()
    assert d.shape == (64, 64) and d.observation_count == 20 and d.frame_count == 30


def test_write_and_read_truth(tmp_path):
    cfg = desk_preset(v_true=(-1, 2))
    seq, truth = generate(cfg)
    write_sequence(tmp_path, seq, truth, cfg.background_frame_count)
    gt = read_ground_truth(tmp_path)
    assert gt["v_true"] == (-1, 2) and gt["start"] == cfg.start_position
    assert gt["wrap_mode"] == "circular" and gt["template"].exists()
    assert len(list(tmp_path.glob("frame_*.pgm"))) == 30
