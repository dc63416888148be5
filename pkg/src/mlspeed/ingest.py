"""Frame-sequence and result I/O.

A sequence on disk is a directory of numbered grayscale frames (PGM P5, or
PNG) plus a ``manifest.txt`` made of ``key = value`` lines::

    fs = 15
    background_frames = 10
    files = frame_*.pgm

Files are taken in lexicographic order of the glob matches, never in
filesystem order.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, fields, is_dataclass
from pathlib import Path

import numpy as np

from .core import FrameSequence, as_frame

MANIFEST_NAME = "manifest.txt"
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class FrameFormatError(ValueError):
    """A frame file could not be decoded or does not fit the sequence."""


@dataclass(frozen=True)
class SequenceManifest:
    directory: Path
    files: tuple[str, ...]
    frame_rate: float
    background_frame_count: int

    def __post_init__(self):
        if not self.files:
            raise ValueError(f"manifest in {self.directory} lists no frame files")
        if not self.frame_rate > 0:
            raise ValueError(f"fs must be positive, got {self.frame_rate}")
        if self.background_frame_count < 0:
            raise ValueError("background_frames must be non-negative")

    @property
    def paths(self) -> list[Path]:
        return [Path(self.directory) / name for name in self.files]


# -- key = value text files ---------------------------------------------------

def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_kv_file(path) -> dict[str, str]:
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), source=str(path))


def write_kv_file(path, values: dict, header: str | None = None) -> None:
    lines = [f"# {header}"] if header else []
    lines += [f"{key} = {_format_value(value)}" for key, value in values.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> SequenceManifest:
    """Read a manifest file, or ``manifest.txt`` inside a directory."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    values = read_kv_file(path)
    for key in ("fs", "background_frames"):
        if key not in values:
            raise ValueError(f"{path}: missing required key '{key}'")
    pattern = values.get("files", "*.pgm")
    names = sorted(p.name for p in path.parent.glob(pattern) if p.is_file())
    if not names:
        raise FileNotFoundError(f"{path}: no files match '{pattern}'")
    return SequenceManifest(
        directory=path.parent,
        files=tuple(names),
        frame_rate=float(values["fs"]),
        background_frame_count=int(values["background_frames"]),
    )


def write_manifest(directory, frame_rate: float, background_frames: int, files: str = "*.pgm") -> Path:
    path = Path(directory) / MANIFEST_NAME
    write_kv_file(path, {"fs": frame_rate, "background_frames": background_frames, "files": files})
    return path


# -- frame codecs -------------------------------------------------------------

def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FrameFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Decode a binary (P5) PGM into [0, 1] floats."""
    path = Path(path)
    data = path.read_bytes()
    try:
        tokens, offset = _pgm_tokens(data, 4)
    except FrameFormatError as exc:
        raise FrameFormatError(f"{path}: {exc}") from None
    if tokens[0] != b"P5":
        raise FrameFormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 65536:
        raise FrameFormatError(f"{path}: unsupported maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = data[offset:offset + expected]
    if len(raster) != expected:
        raise FrameFormatError(f"{path}: raster has {len(raster)} bytes, expected {expected}")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def write_pgm(path, f, bit_depth: int = 8) -> None:
    """Write ``f`` as a binary PGM, clipping to [0, 1] and rounding half up."""
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    f = np.clip(as_frame(f), 0.0, 1.0)
    maxval = 255 if bit_depth == 8 else 65535
    dtype = np.dtype("u1") if bit_depth == 8 else np.dtype(">u2")
    q = np.floor(f * maxval + 0.5).astype(dtype)
    header = f"P5\n{f.shape[1]} {f.shape[0]}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(q.tobytes())


save_frame = write_pgm


def read_png(path) -> np.ndarray:
    from PIL import Image

    path = Path(path)
    with Image.open(path) as img:
        mode = img.mode
        if mode == "P":
            img = img.convert("RGBA")
            mode = "RGBA"
        arr = np.asarray(img)
    if mode in ("1", "L", "LA"):
        scale = 1.0 if mode == "1" else 255.0
        gray = arr[..., 0] if arr.ndim == 3 else arr
        return gray.astype(np.float64) / scale
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        # Pillow widens 16-bit PNGs to mode I
        return arr.astype(np.float64) / 65535.0
    if mode in ("RGB", "RGBA"):
        peak = 65535.0 if arr.dtype == np.uint16 else 255.0
        rgb = arr[..., :3].astype(np.float64) / peak
        return rgb @ np.array(LUMA_WEIGHTS)
    raise FrameFormatError(f"{path}: unsupported PNG mode {mode}")


def read_frame(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"frame file not found: {path}")
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return read_pgm(path)
    if suffix == ".png":
        return read_png(path)
    raise FrameFormatError(f"{path}: unsupported frame format '{suffix}'")


def load_sequence(manifest: SequenceManifest) -> FrameSequence:
    frames, shape = [], None
    for path in manifest.paths:
        f = read_frame(path)
        if shape is None:
            shape = f.shape
        elif f.shape != shape:
            raise FrameFormatError(f"{path}: frame is {f.shape[0]}x{f.shape[1]}, sequence is {shape[0]}x{shape[1]}")
        frames.append(f)
    return FrameSequence(np.stack(frames), manifest.frame_rate)


def save_sequence(directory, seq: FrameSequence, background_frames: int, bit_depth: int = 16,
                  prefix: str = "frame_") -> SequenceManifest:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    digits = max(4, len(str(len(seq) - 1)))
    for n, f in enumerate(seq.frames):
        write_pgm(directory / f"{prefix}{n:0{digits}d}.pgm", f, bit_depth)
    write_manifest(directory, seq.frame_rate, background_frames, files=f"{prefix}*.pgm")
    return read_manifest(directory)


# -- CSV ----------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return format(value, ".12g")
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _as_dict(row) -> dict:
    if is_dataclass(row):
        return {f.name: getattr(row, f.name) for f in fields(row)}
    if hasattr(row, "_asdict"):
        return row._asdict()
    return dict(row)


def write_csv(rows, path, fieldnames=None) -> None:
    """Write records (dicts, dataclasses or namedtuples) with a header row.

    Reals keep 12 significant digits, so parsing the file back reproduces
    every value to at least 9.
    """
    rows = [_as_dict(r) for r in rows]
    if fieldnames is None:
        if not rows:
            raise ValueError("fieldnames are required to write an empty table")
        fieldnames = list(rows[0])
    for r in rows:
        if list(r) != list(fieldnames):
            raise ValueError(f"heterogeneous record: {sorted(r)} vs {list(fieldnames)}")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(fieldnames)
        for r in rows:
            writer.writerow([_format_value(r[k]) for k in fieldnames])
    os.replace(tmp, path)


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
