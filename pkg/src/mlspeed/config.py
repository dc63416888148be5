"""Plain-text run configuration: dotted ``section.key = value`` lines.

Every recognized key, with its default, is listed in :data:`OPTIONS`;
anything else is rejected by name.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .background import INITIAL_VARIANCE_PRESETS, GmmParams
from .ingest import parse_kv
from .pipeline import METHODS, PipelineConfig


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _variance(text: str) -> float:
    t = str(text).strip()
    return INITIAL_VARIANCE_PRESETS[t] if t in INITIAL_VARIANCE_PRESETS else float(t)


def _taper(text: str) -> float:
    t = str(text).strip().lower()
    return 0.0 if t in ("off", "none", "false") else float(t)


def _choice(*allowed):
    def parse(text):
        t = str(text).strip()
        if t not in allowed:
            raise ValueError(f"expected one of {'|'.join(allowed)}, got {t!r}")
        return t
    return parse


def _floats(text) -> tuple[float, ...]:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _methods(text) -> tuple[str, ...]:
    out = tuple(m.strip() for m in str(text).split(",") if m.strip())
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise ValueError(f"methods must be drawn from {','.join(METHODS)}, got {text!r}")
    return out


def _speeds(text) -> tuple[tuple[int, int], ...]:
    out = []
    for item in str(text).split(","):
        if item.strip():
            a, b = item.split(":")
            out.append((int(a), int(b)))
    if not out:
        raise ValueError("need at least one speed")
    return tuple(out)


def _start(text):
    t = str(text).strip()
    if t == "auto":
        return None
    a, b = t.split(",")
    return (int(a), int(b))


def _u64(text) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise ValueError("must be a 64-bit unsigned integer")
    return v


@dataclass(frozen=True)
class Option:
    key: str
    default: str
    parse: Callable[[str], Any]
    help: str


OPTIONS = [
    Option("gmm.k", "5", int, "Gaussian components per pixel"),
    Option("gmm.alpha", "0.05", float, "learning rate in (0, 1]"),
    Option("gmm.t", "0.7", float, "background weight threshold in (0, 1)"),
    Option("gmm.match_sigma", "2.5", float, "match window in standard deviations"),
    Option("gmm.initial_variance", "synthetic", _variance,
           "variance of new components: a number, 'synthetic' (0.0025) or 'real' (0.81)"),
    Option("gmm.variance_floor", "1e-6", float, "lower bound on component variance"),
    Option("gmm.rho", "clamped", _choice("clamped", "density"),
           "mean/variance rate: alpha/weight clamped to [alpha, 1], or alpha*density"),
    Option("template.source", "gmm", _choice("gmm", "known"),
           "object template: extracted by the GMM, or the ground-truth sidecar"),
    Option("template.min_area", "9", int, "smallest foreground blob kept, in pixels"),
    Option("estimator.v_max", "8", int, "search |v1|, |v2| <= v_max pixel/frame"),
    Option("estimator.mode", "omitted", _choice("included", "omitted"), "background handling"),
    Option("estimator.taper", "off", _taper, "raised-cosine border fraction in [0, 0.5], or off"),
    Option("estimator.keep_surface", "false", _bool, "write the objective surface as CSV"),
    Option("baseline.block_size", "auto", lambda t: None if t == "auto" else int(t),
           "block side in pixels; auto scales 35 px at 361 rows to the frame"),
    Option("baseline.search_range", "auto", lambda t: None if t == "auto" else int(t),
           "max displacement per axis; auto uses estimator.v_max"),
    Option("synth.preset", "desk", _choice("desk", "paper"),
           "desk: 64x64, 30 frames, 10 background; paper: 361x616, 85 frames, 40 background"),
    Option("synth.sprite", "builtin", str, "sprite image path (PGM/PNG) or builtin"),
    Option("synth.sprite_mask", "auto", str, "sprite mask path, or auto (non-zero sprite pixels)"),
    Option("synth.background", "black", str, "background image path, black, a constant, or builtin (smooth texture)"),
    Option("synth.v1", "1", int, "true vertical speed, pixel/frame"),
    Option("synth.v2", "2", int, "true horizontal speed, pixel/frame"),
    Option("synth.start", "auto", _start, "sprite top-left at n = 0 as m1,m2, or auto (centred path)"),
    Option("synth.sigma2", "0", float, "noise variance"),
    Option("synth.clip", "true", _bool, "clamp noisy frames to [0, 1]"),
    Option("synth.wrap_mode", "circular", _choice("circular", "clipped"), "sprite motion at the frame border"),
    Option("synth.bit_depth", "16", lambda t: int(_choice("8", "16")(t)), "PGM bit depth"),
    Option("eval.sigma2_grid", "0,0.01,0.05,0.1,0.15,0.2,0.25,0.3", _floats, "noise variances swept"),
    Option("eval.trials", "10", int, "noise realizations per video and variance"),
    Option("eval.methods", ",".join(METHODS), _methods, "methods evaluated"),
    Option("eval.speeds", "1:2,2:-1,-1:1,2:2,-2:1", _speeds, "one video per v1:v2 speed"),
    Option("eval.speedup", "true", _bool, "also time direct vs fast objective on a 64x64 instance"),
    Option("run.seed", "0", _u64, "base seed (trial i uses seed + i)"),
    Option("run.threads", "1", int, "worker processes"),
]
OPTION_INDEX = {o.key: o for o in OPTIONS}


class CliConfig:
    """Merged configuration: defaults < config file < command-line overrides."""

    def __init__(self, overrides: dict | None = None):
        self.raw = {o.key: o.default for o in OPTIONS}
        self.values = {}
        if overrides:
            self.update(overrides)
        else:
            self._parse_all()

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "CliConfig":
        merged = {}
        if path is not None:
            path = Path(path)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise OSError(f"cannot read config file {path}: {exc}") from exc
            merged.update(parse_kv(text, source=str(path)))
        merged.update(overrides or {})
        return cls(merged)

    def update(self, values: dict) -> None:
        for key, value in values.items():
            if key not in OPTION_INDEX:
                raise ConfigError(f"unknown config key '{key}'")
            self.raw[key] = str(value)
        self._parse_all()

    def _parse_all(self) -> None:
        for key, text in self.raw.items():
            try:
                self.values[key] = OPTION_INDEX[key].parse(text)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"invalid value for '{key}': {text!r} ({exc})") from None

    def __getitem__(self, key):
        return self.values[key]

    def gmm_params(self) -> GmmParams:
        try:
            return GmmParams(k=self["gmm.k"], alpha=self["gmm.alpha"], threshold=self["gmm.t"],
                             match_sigma=self["gmm.match_sigma"], initial_variance=self["gmm.initial_variance"],
                             variance_floor=self["gmm.variance_floor"], rho=self["gmm.rho"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def pipeline_config(self) -> PipelineConfig:
        try:
            return PipelineConfig(gmm=self.gmm_params(), min_area=self["template.min_area"],
                                  v_max=self["estimator.v_max"], taper=self["estimator.taper"],
                                  template=self["template.source"], block_size=self["baseline.block_size"],
                                  search_range=self["baseline.search_range"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def describe_options() -> str:
    width = max(len(o.key) for o in OPTIONS)
    lines = ["config keys (set in --config FILE or as --KEY=VALUE):"]
    for o in OPTIONS:
        lines.append(f"  {o.key:<{width}}  default {o.default!s:<10} {o.help}")
    return "\n".join(lines)
