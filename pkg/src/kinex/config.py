"""Run configuration: a sectioned key = value file with typed, validated keys.

Example::

    [model]
    n = 10
    delta_r = 10
    s_unit = 0.1

    [sde]
    sqrt_gamma = 1e-3
    noise_kind = conserving
    seed = 7

Unknown sections or keys are errors. Every error names the offending key and,
when read from a file, its line.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .kinetic import ClassSystem, check_state, vertex
from .noise import NoiseKind
from .sde import SdeConfig

FORMATS = ("csv", "json", "txt")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.message = message
        self.key = key
        self.line = line
        where = ""
        if key:
            where = f"{key}: "
        if line is not None:
            where = f"line {line}: {where}"
        super().__init__(where + message)


@dataclass
class ModelConfig:
    n: int = 10
    delta_r: float = 10.0
    s_unit: float = 0.1


@dataclass
class SdeSection:
    dt: float = 1.0
    sqrt_gamma: float = 1e-4
    steps: int = 20000
    noise_kind: str = "additive"
    seed: int = 0
    sample_every: int = 100
    realizations: int = 24
    max_retries: int = 100


@dataclass
class InitConfig:
    initial_class: int = 3
    x0: list[float] | None = None
    equilibrate: bool = True


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list[str] = field(default_factory=lambda: list(FORMATS))
    # None: histogram of the initial class
    histogram_classes: list[int] | None = None
    bin_width: float = 0.005


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    sde: SdeSection = field(default_factory=SdeSection)
    init: InitConfig = field(default_factory=InitConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def system(self) -> ClassSystem:
        m = self.model
        return ClassSystem.build(m.n, m.delta_r, m.s_unit)

    def sde_config(self) -> SdeConfig:
        s = self.sde
        return SdeConfig(dt=s.dt, sqrt_gamma=s.sqrt_gamma, steps=s.steps,
                         noise_kind=NoiseKind(s.noise_kind), seed=s.seed,
                         sample_every=s.sample_every, max_retries=s.max_retries)

    def initial_state(self):
        if self.init.x0 is not None:
            return check_state(self.init.x0, self.model.n)
        return vertex(self.init.initial_class, self.model.n)

    def histogram_classes(self) -> list[int]:
        if self.output.histogram_classes is not None:
            return list(self.output.histogram_classes)
        return [self.init.initial_class]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, section: str, **changes) -> "RunConfig":
        new = dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})
        validate(new)
        return new


SECTIONS = {"model": ModelConfig, "sde": SdeSection, "init": InitConfig, "output": OutputConfig}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    return int(text.strip().replace("_", ""), 0)


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


_PARSERS = {
    "int": _parse_int,
    "float": float,
    "str": lambda t: t.strip(),
    "bool": _parse_bool,
    "list[float] | None": lambda t: [float(v) for v in _split(t)] if t.strip() else None,
    "list[str]": lambda t: [v.lower() for v in _split(t)],
    "list[int] | None": lambda t: [_parse_int(v) for v in _split(t)] if t.strip() else None,
}


def _line_numbers(text: str) -> dict[tuple[str, str | None], int]:
    lines: dict[tuple[str, str | None], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            lines.setdefault((section, None), no)
        elif section is not None:
            key = s.split("=", 1)[0].split(":", 1)[0].strip().lower()
            lines.setdefault((section, key), no)
    return lines


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text on top of ``base`` (defaults if omitted)."""
    lines = _line_numbers(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None

    cfg = base if base is not None else RunConfig()
    for section in parser.sections():
        name = section.lower()
        if name not in SECTIONS:
            raise ConfigError("unknown section", key=f"[{section}]", line=lines.get((name, None)))
        fields = {f.name: f for f in dataclasses.fields(SECTIONS[name])}
        changes = {}
        for key, raw in parser.items(section):
            dotted = f"{name}.{key}"
            line = lines.get((name, key))
            if key not in fields:
                raise ConfigError("unknown key", key=dotted, line=line)
            try:
                changes[key] = _PARSERS[fields[key].type](raw)
            except ValueError as exc:
                raise ConfigError(f"cannot parse {raw!r} ({exc})", key=dotted, line=line) from None
        cfg = dataclasses.replace(cfg, **{name: dataclasses.replace(getattr(cfg, name), **changes)})
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.key and exc.line is None:
            section, _, key = exc.key.partition(".")
            raise ConfigError(exc.message, key=exc.key,
                              line=lines.get((section, key))) from None
        raise
    return cfg


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(text, base)


def _check(cond: bool, key: str, message: str):
    if not cond:
        raise ConfigError(message, key=key)


def validate(cfg: RunConfig) -> None:
    m, s, i, o = cfg.model, cfg.sde, cfg.init, cfg.output
    _check(m.n >= 2, "model.n", f"must be >= 2, got {m.n}")
    _check(m.delta_r > 0, "model.delta_r", f"must be > 0, got {m.delta_r}")
    _check(0 < m.s_unit <= m.delta_r, "model.s_unit",
           f"must satisfy 0 < s_unit <= delta_r, got {m.s_unit}")
    _check(s.dt > 0, "sde.dt", f"must be > 0, got {s.dt}")
    _check(s.sqrt_gamma >= 0, "sde.sqrt_gamma", f"must be >= 0, got {s.sqrt_gamma}")
    _check(s.steps >= 1, "sde.steps", f"must be >= 1, got {s.steps}")
    _check(s.noise_kind in {k.value for k in NoiseKind}, "sde.noise_kind",
           f"must be one of {', '.join(k.value for k in NoiseKind)}, got {s.noise_kind!r}")
    _check(0 <= s.seed < 2**64, "sde.seed", f"must be an unsigned 64-bit integer, got {s.seed}")
    _check(s.sample_every >= 1, "sde.sample_every", f"must be >= 1, got {s.sample_every}")
    _check(s.realizations >= 1, "sde.realizations", f"must be >= 1, got {s.realizations}")
    _check(s.max_retries >= 0, "sde.max_retries", f"must be >= 0, got {s.max_retries}")
    _check(1 <= i.initial_class <= m.n, "init.initial_class",
           f"must lie in 1..{m.n}, got {i.initial_class}")
    if i.x0 is not None:
        try:
            check_state(i.x0, m.n)
        except ValueError as exc:
            raise ConfigError(str(exc), key="init.x0") from None
    bad = [f for f in o.formats if f not in FORMATS]
    _check(not bad, "output.formats", f"unknown format(s) {bad}; choose from {list(FORMATS)}")
    _check(all(1 <= c <= m.n for c in o.histogram_classes or []), "output.histogram_classes",
           f"classes must lie in 1..{m.n}")
    _check(o.bin_width > 0, "output.bin_width", f"must be > 0, got {o.bin_width}")
