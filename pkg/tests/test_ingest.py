import numpy as np
import pytest
from PIL import Image

from mlspeed.ingest import (FrameFormatError, load_sequence, parse_kv, read_csv, read_frame, read_manifest,
                            read_pgm, save_sequence, write_csv, write_manifest, write_pgm)
from mlspeed.core import FrameSequence


def _raw_pgm(path, pixels, maxval, comment=False):
    h, w = pixels.shape
    header = b"P5\n" + (b"# made by hand\n" if comment else b"") + f"{w} {h}\n{maxval}\n".encode()
    dtype = ">u2" if maxval > 255 else "u1"
    path.write_bytes(header + pixels.astype(dtype).tobytes())


def test_full_scale_white_and_black(tmp_path):
    _raw_pgm(tmp_path / "w.pgm", np.full((3, 4), 255), 255)
    _raw_pgm(tmp_path / "b.pgm", np.zeros((3, 4)), 255, comment=True)
    assert np.array_equal(read_pgm(tmp_path / "w.pgm"), np.ones((3, 4)))
    assert np.array_equal(read_pgm(tmp_path / "b.pgm"), np.zeros((3, 4)))


def test_16bit_big_endian(tmp_path):
    px = np.array([[0, 1, 256, 65535]])
    _raw_pgm(tmp_path / "a.pgm", px, 65535)
    assert tmp_path.joinpath("a.pgm").read_bytes()[-8:] == bytes([0, 0, 0, 1, 1, 0, 255, 255])
    np.testing.assert_array_equal(read_pgm(tmp_path / "a.pgm"), px / 65535)


def test_rgb_png_luma(tmp_path):
    Image.fromarray(np.array([[[255, 0, 0], [0, 255, 0]]], dtype=np.uint8), "RGB").save(tmp_path / "c.png")
    out = read_frame(tmp_path / "c.png")
    np.testing.assert_allclose(out, [[0.299, 0.587]], atol=1e-12)


def test_gray_png(tmp_path):
    Image.fromarray(np.array([[0, 51, 255]], dtype=np.uint8), "L").save(tmp_path / "g.png")
    np.testing.assert_allclose(read_frame(tmp_path / "g.png"), [[0.0, 0.2, 1.0]])


@pytest.mark.parametrize("value, byte", [(1.0, 255), (0.0, 0), (0.5, 128), (1.7, 255), (-0.2, 0)])
def test_save_rounding(tmp_path, value, byte):
    write_pgm(tmp_path / "f.pgm", np.full((2, 3), value), 8)
    data = (tmp_path / "f.pgm").read_bytes()
    assert data.startswith(b"P5\n3 2\n255\n")
    assert set(data[-6:]) == {byte}


@pytest.mark.parametrize("bits, step", [(8, 1 / 510), (16, 1 / 131070)])
def test_round_trip_within_half_step(tmp_path, rng, bits, step):
    f = rng.random((17, 23))
    write_pgm(tmp_path / "r.pgm", f, bits)
    assert np.max(np.abs(read_pgm(tmp_path / "r.pgm") - f)) <= step + 1e-15


def test_bad_files(tmp_path):
    (tmp_path / "p2.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(FrameFormatError, match="p2.pgm"):
        read_pgm(tmp_path / "p2.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n4 4\n255\n\x00\x00")
    with pytest.raises(FrameFormatError, match="short.pgm"):
        read_pgm(tmp_path / "short.pgm")
    with pytest.raises(FileNotFoundError, match="nope.pgm"):
        read_frame(tmp_path / "nope.pgm")
    (tmp_path / "x.bmp").write_bytes(b"")
    with pytest.raises(FrameFormatError, match="x.bmp"):
        read_frame(tmp_path / "x.bmp")


def test_manifest_order_and_mismatch(tmp_path, rng):
    frames = rng.random((3, 5, 6))
    for name, f in zip(["f10.pgm", "f02.pgm", "f01.pgm"], frames):
        write_pgm(tmp_path / name, f, 16)
    (tmp_path / "manifest.txt").write_text("# test\nfs = 30\nbackground_frames = 1\nfiles = f*.pgm\n")
    man = read_manifest(tmp_path)
    assert man.files == ("f01.pgm", "f02.pgm", "f10.pgm")
    seq = load_sequence(man)
    np.testing.assert_allclose(seq.frames[0], frames[2], atol=1e-5)
    assert seq.frame_rate == 30 and man.background_frame_count == 1

    write_pgm(tmp_path / "f99.pgm", np.zeros((4, 6)))
    with pytest.raises(FrameFormatError, match="f99.pgm"):
        load_sequence(read_manifest(tmp_path))


def test_manifest_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_manifest(tmp_path)
    (tmp_path / "manifest.txt").write_text("fs = 15\n")
    with pytest.raises(ValueError, match="background_frames"):
        read_manifest(tmp_path)
    write_manifest(tmp_path, 15, 0)
    with pytest.raises(FileNotFoundError, match=r"\*\.pgm"):
        read_manifest(tmp_path)


def test_save_sequence_round_trip(tmp_path, rng):
    seq = FrameSequence(rng.random((12, 4, 4)), 15.0)
    man = save_sequence(tmp_path, seq, background_frames=2)
    assert len(man.files) == 12 and man.files[0] == "frame_0000.pgm"
    np.testing.assert_allclose(load_sequence(man).frames, seq.frames, atol=1 / 131070)


def test_parse_kv():
    assert parse_kv("a = 1 # note\n\n# c\nb.c=x y\n") == {"a": "1", "b.c": "x y"}
    with pytest.raises(ValueError, match="line 1|:1:"):
        parse_kv("junk")


def test_csv(tmp_path):
    write_csv([], tmp_path / "e.csv", fieldnames=["a", "b"])
    assert (tmp_path / "e.csv").read_bytes() == b"a,b\r\n"
    write_csv([{"a": 0.05, "b": 0.0}], tmp_path / "one.csv")
    assert (tmp_path / "one.csv").read_text().splitlines()[1] == "0.05,0"
    vals = [np.pi, 1 / 3, 1e-17, 123456789.123, -2.5e10]
    write_csv([{"x": v, "flag": True} for v in vals], tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    for v, row in zip(vals, back):
        assert f"{float(row['x']):.9g}" == f"{v:.9g}"
        assert row["flag"] == "1"
    with pytest.raises(ValueError):
        write_csv([{"a": 1}, {"b": 2}], tmp_path / "h.csv")
