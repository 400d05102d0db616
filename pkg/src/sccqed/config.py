"""Run configuration: a flat ``section.key = value`` text grammar.

Grammar (one assignment per line)::

    # comment            whole-line or trailing comment
    model.omega = 1.0    dotted key, scalar value
    model.drive_freqs = 0.7, 0.01
                         comma-separated list
    [simulate]           optional header; later bare keys get this prefix

Values are parsed as int, float, bool (true/false) or bare strings.
Errors are collected and reported together, each with its key path and line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bosonic import FockTruncation
from .model import ModelParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "dump_config", "apply_overrides",
           "SCHEMA_KEYS"]


class ConfigError(ValueError):
    """Carries a list of (key path, line, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(_fmt(e) for e in self.errors))

    def records(self):
        return [{"key": k, "line": ln, "message": msg} for k, ln, msg in self.errors]


def _fmt(e):
    key, line, msg = e
    where = f" (line {line})" if line else ""
    return f"{key}{where}: {msg}"


# key -> (kind, default); kind is float, int, str, bool, "floats", "ints"
_REQUIRED = object()
SCHEMA_KEYS = {
    "model.omega": (float, _REQUIRED),
    "model.g1": (float, _REQUIRED),
    "model.delta": (float, _REQUIRED),
    "model.g2": (float, 0.0),
    "model.m": (int, 2),
    "model.drive_freqs": ("floats", None),
    "model.drive_phases": ("floats", None),
    "model.strong_ratio": (float, 10.0),
    "truncation.dim": (int, 48),
    "truncation.buffer": (int, None),
    "resonance.n": (int, 0),
    "resonance.alphas": ("ints", (1,)),
    "resonance.omega2_min": (float, None),
    "resonance.omega2_max": (float, None),
    "resonance.channel": (str, "mu-mu"),
    "resonance.gamma_max": (float, 1.0e4),
    "resonance.select": (str, "strongest"),
    "simulate.initial": (str, "cat:1"),
    "simulate.t_start": (float, 0.0),
    "simulate.t_end": (float, 10.0),
    "simulate.samples": (int, 101),
    "simulate.tol": (float, 1e-9),
    "simulate.frame": (str, "lab"),
    "gate.times": ("floats", (0.0,)),
    "gate.compare": (bool, False),
    "gate.periods": (int, 1),
    "gate.samples": (int, 401),
    "gate.n_keep": (int, None),
    "gate.max_wall_time": (float, None),
    "gate.omega2": (float, None),
    "sweep.param": (str, "model.g2"),
    "sweep.start": (float, None),
    "sweep.stop": (float, None),
    "sweep.steps": (int, 10),
    "sweep.scale": (str, "linear"),
    "output.path": (str, "-"),
    "output.format": (str, "csv"),
}

_SECTIONS = sorted({k.split(".")[0] for k in SCHEMA_KEYS})


@dataclass(frozen=True)
class ResonanceBlock:
    n: int = 0
    alphas: tuple = (1,)
    omega2_min: float = None
    omega2_max: float = None
    channel: tuple = ("mu", "mu")
    gamma_max: float = 1.0e4
    select: str = "strongest"


@dataclass(frozen=True)
class SimulateBlock:
    initial: str = "cat:1"
    t_start: float = 0.0
    t_end: float = 10.0
    samples: int = 101
    tol: float = 1e-9
    frame: str = "lab"


@dataclass(frozen=True)
class GateBlock:
    times: tuple = (0.0,)
    compare: bool = False
    periods: int = 1
    samples: int = 401
    n_keep: int = None
    max_wall_time: float = None
    omega2: float = None


@dataclass(frozen=True)
class SweepBlock:
    param: str = "model.g2"
    start: float = None
    stop: float = None
    steps: int = 10
    scale: str = "linear"

    def values(self):
        if self.scale == "log":
            return [float(v) for v in np.geomspace(self.start, self.stop, self.steps)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class OutputBlock:
    path: str = "-"
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    truncation: FockTruncation
    resonance: ResonanceBlock = field(default_factory=ResonanceBlock)
    simulate: SimulateBlock = field(default_factory=SimulateBlock)
    gate: GateBlock = field(default_factory=GateBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    raw: dict = field(default_factory=dict, compare=False)   # key -> value as parsed


def _strip_comment(line):
    return line.split("#", 1)[0].strip()


def _scalar(kind, text):
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if kind is int:
        v = float(text)
        if v != int(v):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(v)
    if kind is float:
        v = float(text)
        if not math.isfinite(v):
            raise ValueError(f"expected a finite number, got {text!r}")
        return v
    return text


def _convert(key, kind, text, line, errors):
    if kind in ("floats", "ints"):
        base = float if kind == "floats" else int
        items = [s.strip() for s in text.split(",")]
        out = []
        for i, s in enumerate(items):
            try:
                out.append(_scalar(base, s))
            except ValueError as exc:
                errors.append((f"{key}[{i}]", line, str(exc)))
        return tuple(out)
    try:
        return _scalar(kind, text)
    except ValueError as exc:
        errors.append((key, line, str(exc)))
        return None


def _tokenize(text, errors):
    """Yield (key, value text, line) assignments."""
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                errors.append((section, ln, "unknown section"))
            continue
        if "=" not in line:
            errors.append(("<syntax>", ln, f"expected 'key = value', got {line!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key and section:
            key = f"{section}.{key}"
        yield key, value, ln


def _collect(assignments, errors):
    values, lines = {}, {}
    for key, text, ln in assignments:
        if key not in SCHEMA_KEYS:
            errors.append((key, ln, "unknown key"))
            continue
        if key in values:
            errors.append((key, ln, f"duplicate key (first set on line {lines[key]})"))
            continue
        v = _convert(key, SCHEMA_KEYS[key][0], text, ln, errors)
        if v is not None:
            values[key], lines[key] = v, ln
    return values, lines


def _check_range(values, lines, errors):
    def bad(key, msg):
        errors.append((key, lines.get(key.split("[")[0]), msg))

    def positive(key):
        if key in values and not values[key] > 0:
            bad(key, f"must be > 0, got {values[key]!r}")

    for k in ("model.omega", "simulate.tol", "gate.max_wall_time", "resonance.gamma_max"):
        positive(k)
    for k in ("model.g1", "model.g2"):
        if k in values and values[k] < 0:
            bad(k, f"must be >= 0, got {values[k]!r}")
    for i, w in enumerate(values.get("model.drive_freqs", ())):
        if not w > 0:
            bad(f"model.drive_freqs[{i}]", f"drive frequency must be > 0, got {w!r}")
    m = values.get("model.m", 2)
    if not 1 <= m <= 6:
        bad("model.m", f"must be in 1..6, got {m}")
    for k in ("model.drive_freqs", "model.drive_phases"):
        if k in values and len(values[k]) != m:
            bad(k, f"needs {m} entries (model.m), got {len(values[k])}")
    dim = values.get("truncation.dim", 48)
    if dim < 2:
        bad("truncation.dim", f"must be >= 2, got {dim}")
    buf = values.get("truncation.buffer")
    if buf is not None and not 0 <= buf < max(dim, 1):
        bad("truncation.buffer", f"must satisfy 0 <= buffer < dim, got {buf}")
    if values.get("resonance.n", 0) < 0:
        bad("resonance.n", "must be >= 0")
    for i, a in enumerate(values.get("resonance.alphas", ())):
        if a == 0:
            bad(f"resonance.alphas[{i}]", "harmonic must be nonzero")
    for k in ("resonance.omega2_min", "resonance.omega2_max", "gate.omega2"):
        positive(k)
    lo, hi = values.get("resonance.omega2_min"), values.get("resonance.omega2_max")
    if lo is not None and hi is not None and not lo < hi:
        bad("resonance.omega2_max", "must exceed resonance.omega2_min")
    ch = values.get("resonance.channel", "mu-mu").split("-")
    if len(ch) != 2 or any(c not in ("mu", "nu") for c in ch):
        bad("resonance.channel", "must be one of mu-mu, mu-nu, nu-mu, nu-nu")
    sel = values.get("resonance.select", "strongest")
    if sel not in ("strongest", "lowest", "highest") and not sel.lstrip("-").isdigit():
        bad("resonance.select", "must be strongest, lowest, highest or an index")
    if "simulate.t_end" in values or "simulate.t_start" in values:
        if not values.get("simulate.t_end", 10.0) > values.get("simulate.t_start", 0.0):
            bad("simulate.t_end", "t_span is degenerate: need t_end > t_start")
    if values.get("simulate.samples", 101) < 2:
        bad("simulate.samples", "must be >= 2")
    tol = values.get("simulate.tol")
    if tol is not None and not 1e-12 <= tol <= 1e-6:
        bad("simulate.tol", "must lie in [1e-12, 1e-6]")
    if values.get("simulate.frame", "lab") not in ("lab", "interaction"):
        bad("simulate.frame", "must be lab or interaction")
    init = values.get("simulate.initial", default_initial(m))
    if not _valid_initial(init, m):
        bad("simulate.initial", "expected cat:<1..4>[:n] or dressed:<label index>:<n>")
    for i, t in enumerate(values.get("gate.times", ())):
        if t < 0:
            bad(f"gate.times[{i}]", "must be >= 0")
    for k in ("gate.periods", "gate.samples", "gate.n_keep"):
        if k in values and values[k] < 1:
            bad(k, "must be >= 1")
    if values.get("sweep.steps", 10) < 2:
        bad("sweep.steps", "must be >= 2")
    param = values.get("sweep.param", "model.g2")
    if param not in SCHEMA_KEYS or SCHEMA_KEYS[param][0] is not float:
        bad("sweep.param", f"must name a scalar real key, got {param!r}")
    if values.get("sweep.scale", "linear") not in ("linear", "log"):
        bad("sweep.scale", "must be linear or log")
    if values.get("sweep.scale") == "log":
        for k in ("sweep.start", "sweep.stop"):
            positive(k)
    if values.get("output.format", "csv") not in ("csv", "json"):
        bad("output.format", "must be csv or json")


def default_initial(m):
    """Cat states exist only for two atoms; otherwise start in the lowest dressed state."""
    return "cat:1" if m == 2 else "dressed:0:0"


def _valid_initial(spec, m):
    parts = spec.split(":")
    try:
        if parts[0] == "cat" and len(parts) in (2, 3):
            return m == 2 and 1 <= int(parts[1]) <= 4 and (len(parts) == 2 or int(parts[2]) >= 0)
        if parts[0] == "dressed" and len(parts) == 3:
            return 0 <= int(parts[1]) < 2 ** m and int(parts[2]) >= 0
    except ValueError:
        return False
    return False


def _get(values, key):
    default = SCHEMA_KEYS[key][1]
    return values.get(key, None if default is _REQUIRED else default)


def _build(values, lines, errors):
    for key, (_, default) in SCHEMA_KEYS.items():
        if default is _REQUIRED and key not in values:
            errors.append((key, None, "missing required key"))
    if errors:
        raise ConfigError(errors)
    m = values.get("model.m", 2)
    freqs = values.get("model.drive_freqs", (0.7,) * m)
    try:
        model = ModelParams(values["model.omega"], values["model.g1"], _get(values, "model.g2"),
                            values["model.delta"], freqs, values.get("model.drive_phases"), m,
                            strong_ratio=_get(values, "model.strong_ratio"))
    except ValueError as exc:
        raise ConfigError([("model", lines.get("model.omega"), str(exc))]) from None
    dim = _get(values, "truncation.dim")
    buf = values.get("truncation.buffer", dim // 4)
    trunc = FockTruncation(dim, buf)
    sweep = SweepBlock(*(_get(values, f"sweep.{k}") for k in ("param", "start", "stop", "steps",
                                                               "scale")))
    return RunConfig(
        model=model, truncation=trunc,
        resonance=ResonanceBlock(
            _get(values, "resonance.n"), tuple(_get(values, "resonance.alphas")),
            _get(values, "resonance.omega2_min"), _get(values, "resonance.omega2_max"),
            tuple(_get(values, "resonance.channel").split("-")),
            _get(values, "resonance.gamma_max"), _get(values, "resonance.select")),
        simulate=SimulateBlock(values.get("simulate.initial", default_initial(m)),
                               *(_get(values, f"simulate.{k}") for k in
                                 ("t_start", "t_end", "samples", "tol", "frame"))),
        gate=GateBlock(tuple(_get(values, "gate.times")), *(_get(values, f"gate.{k}") for k in
                       ("compare", "periods", "samples", "n_keep", "max_wall_time", "omega2"))),
        sweep=sweep,
        output=OutputBlock(_get(values, "output.path"), _get(values, "output.format")),
        raw=dict(values),
    )


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate; ``overrides`` are 'key=value' strings that win over the file."""
    errors = []
    values, lines = _collect(_tokenize(text, errors), errors)
    over_errors = []
    over, _ = _collect(_override_assignments(overrides, over_errors), over_errors)
    errors.extend(over_errors)
    values.update(over)
    for k in over:
        lines[k] = None
    _check_range(values, lines, errors)
    return _build(values, lines, errors)


def _override_assignments(overrides, errors):
    for i, item in enumerate(overrides):
        if "=" not in item:
            errors.append(("<override>", None, f"expected key=value, got {item!r}"))
            continue
        key, value = (s.strip() for s in item.split("=", 1))
        yield key, value, None


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    return parse_config(dump_config(cfg), overrides)


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_render(x) for x in v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Serialise every key (defaults included) so parse_config(dump_config(c)) == c."""
    p, tr = cfg.model, cfg.truncation
    values = {
        "model.omega": p.omega, "model.g1": p.g1, "model.g2": p.g2, "model.delta": p.delta,
        "model.m": p.m, "model.drive_freqs": p.drive_freqs, "model.drive_phases": p.drive_phases,
        "model.strong_ratio": p.strong_ratio,
        "truncation.dim": tr.dim, "truncation.buffer": tr.buffer,
        "resonance.channel": "-".join(cfg.resonance.channel),
    }
    for block in ("resonance", "simulate", "gate", "sweep", "output"):
        obj = getattr(cfg, block)
        for name in obj.__dataclass_fields__:
            key = f"{block}.{name}"
            if key not in values:
                values[key] = getattr(obj, name)
    lines = []
    for key in SCHEMA_KEYS:
        v = values.get(key)
        if v is None:
            continue
        lines.append(f"{key} = {_render(v)}")
    return "\n".join(lines) + "\n"
