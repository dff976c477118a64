"""Run configuration: INI-style sections of ``key = value`` pairs.

Layout::

    [run]
    command = attractor
    system = sierpinski          # catalog name, or "custom"
    res = 512
    eta = 0.0
    support = domain             # domain | disc | q<eps> | attractor | file:<path>
    seed = 0
    threads = 0                  # 0: machine parallelism
    out = out

    [params]                     # catalog parameters, e.g. s = 1.9
    [custom]                     # only for system = custom
    domain = box 0 0 1 1         # interval a b | box x0 y0 x1 y1 | triangle x1 y1 x2 y2 x3 y3
    map1 = affine2d 0.5 0 0 0.5 0 0
    [attractor] / [chaingraph] / [hutchinson] / [bifurcation] / [chaosgame] / [verify-trap]

``dump`` writes every field, defaults included, in a fixed order with
floats in ``repr`` form, so ``dump(parse(dump(cfg))) == dump(cfg)``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from .catalog import CATALOG, build_system
from .errors import ConfigurationError
from .maps import Domain, IfsSystem, MapSpec

COMMANDS = ("attractor", "chaingraph", "hutchinson", "bifurcation", "chaosgame", "verify-trap")


@dataclass(frozen=True)
class AttractorOptions:
    max_iters: int = 200
    tol: float = 0.0  # 0: one cell diameter
    patience: int = 3


@dataclass(frozen=True)
class ChainOptions:
    view: str = "reduction"
    explicit: str = "auto"  # auto | yes | no


@dataclass(frozen=True)
class HutchinsonOptions:
    panel: str = "tent2"  # tent2 | attractor | none
    chains: tuple[str, ...] = ("zero_to_zeroA", "zeroA_to_A")
    epsilons: tuple[float, ...] = (0.05, 0.02)


@dataclass(frozen=True)
class SweepOptions:
    family: str = "logistic2_fixed_second"
    lo: float = 0.0
    hi: float = 4.0
    steps: int = 512
    second: float = 3.0
    start: float = 0.3
    total: int = 20_000
    burn: int = 1_000
    bins: int = 1000
    threshold: int = 2


@dataclass(frozen=True)
class OrbitOptions:
    start: tuple[float, ...] = ()  # empty: domain center
    total: int = 1_000_000
    burn: int = 1_000


@dataclass(frozen=True)
class TrapOptions:
    budget: int = 50


SECTIONS = {
    "attractor": AttractorOptions,
    "chaingraph": ChainOptions,
    "hutchinson": HutchinsonOptions,
    "bifurcation": SweepOptions,
    "chaosgame": OrbitOptions,
    "verify-trap": TrapOptions,
}
_SECTION_FIELD = {
    "attractor": "attractor",
    "chaingraph": "chaingraph",
    "hutchinson": "hutchinson",
    "bifurcation": "bifurcation",
    "chaosgame": "chaosgame",
    "verify-trap": "trap",
}


@dataclass(frozen=True)
class RunConfig:
    command: str = "attractor"
    system: str = "sierpinski"
    params: tuple[tuple[str, float], ...] = ()
    custom_domain: str = ""
    custom_maps: tuple[str, ...] = ()
    res: int = 512
    eta: float = 0.0
    support: str = "domain"
    seed: int = 0
    threads: int = 0
    out: str = "out"
    attractor: AttractorOptions = field(default_factory=AttractorOptions)
    chaingraph: ChainOptions = field(default_factory=ChainOptions)
    hutchinson: HutchinsonOptions = field(default_factory=HutchinsonOptions)
    bifurcation: SweepOptions = field(default_factory=SweepOptions)
    chaosgame: OrbitOptions = field(default_factory=OrbitOptions)
    trap: TrapOptions = field(default_factory=TrapOptions)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}; known: {', '.join(COMMANDS)}")
        if self.system != "custom" and self.system not in CATALOG:
            raise ConfigurationError(f"unknown system {self.system!r}; known: {sorted(CATALOG)}")
        if self.res < 1:
            raise ConfigurationError("res must be positive")
        if self.eta < 0:
            raise ConfigurationError("eta must be nonnegative")
        if self.threads < 0:
            raise ConfigurationError("threads must be nonnegative")
        object.__setattr__(self, "params", tuple(sorted(self.params)))

    def with_params(self, **updates) -> "RunConfig":
        merged = dict(self.params)
        merged.update({k: float(v) for k, v in updates.items() if v is not None})
        return replace(self, params=tuple(merged.items()))

    def build_system(self) -> IfsSystem:
        if self.system == "custom":
            return custom_system(self.custom_domain, self.custom_maps)
        return build_system(self.system, **dict(self.params))


# ---------------------------------------------------------------------------
# Custom systems
# ---------------------------------------------------------------------------


def _floats(words: list[str], what: str) -> list[float]:
    try:
        return [float(w) for w in words]
    except ValueError:
        raise ConfigurationError(f"non-numeric value in {what}: {' '.join(words)!r}") from None


def parse_domain(text: str) -> Domain:
    words = text.split()
    if not words:
        raise ConfigurationError("custom system needs a domain")
    kind, vals = words[0], _floats(words[1:], "domain")
    expected = {"interval": 2, "box": 4, "triangle": 6}
    if kind not in expected:
        raise ConfigurationError(f"unknown domain kind {kind!r}; expected interval, box or triangle")
    if len(vals) != expected[kind]:
        raise ConfigurationError(f"{kind} domain takes {expected[kind]} numbers, got {len(vals)}")
    if kind == "interval":
        return Domain.interval(*vals)
    if kind == "box":
        return Domain.box(*vals)
    return Domain.from_triangle([vals[0:2], vals[2:4], vals[4:6]])


def custom_system(domain: str, maps: tuple[str, ...]) -> IfsSystem:
    if not maps:
        raise ConfigurationError("custom system needs at least one map (map1 = <kind> <params>)")
    specs = []
    for k, line in enumerate(maps, start=1):
        words = line.split()
        if not words:
            raise ConfigurationError(f"map{k} is empty")
        specs.append(MapSpec(words[0], tuple(_floats(words[1:], f"map{k}")), f"map{k}"))
    ifs = IfsSystem(tuple(specs), parse_domain(domain), "custom")
    ifs.validate()
    return ifs


# ---------------------------------------------------------------------------
# Parse and dump
# ---------------------------------------------------------------------------


def _convert(value: str, default, key: str):
    try:
        if isinstance(default, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            parts = [p for p in value.replace(",", " ").split() if p]
            if default and isinstance(default[0], str):
                return tuple(parts)
            return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"bad value for {key}: {value!r}") from None
    return value.strip()


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _options(cls, items: dict[str, str], section: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, raw in items.items():
        if key not in known:
            raise ConfigurationError(f"unknown key {key!r} in [{section}]")
        kwargs[key] = _convert(raw, getattr(cls(), key), f"{section}.{key}")
    return cls(**kwargs)


def parse(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    known = {"run", "params", "custom", *SECTIONS}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigurationError(f"unknown section(s) {sorted(unknown)}")
    kwargs = {}
    if cp.has_section("run"):
        base = RunConfig()
        top = {"command", "system", "res", "eta", "support", "seed", "threads", "out"}
        for key, raw in cp.items("run"):
            if key not in top:
                raise ConfigurationError(f"unknown key {key!r} in [run]")
            kwargs[key] = _convert(raw, getattr(base, key), f"run.{key}")
    if cp.has_section("params"):
        kwargs["params"] = tuple((k, _convert(v, 0.0, f"params.{k}")) for k, v in cp.items("params"))
    if cp.has_section("custom"):
        items = dict(cp.items("custom"))
        kwargs["custom_domain"] = items.pop("domain", "").strip()
        maps = []
        k = 1
        while f"map{k}" in items:
            maps.append(" ".join(items.pop(f"map{k}").split()))
            k += 1
        if items:
            raise ConfigurationError(f"unknown key(s) {sorted(items)} in [custom]")
        kwargs["custom_maps"] = tuple(maps)
    for section, cls in SECTIONS.items():
        if cp.has_section(section):
            kwargs[_SECTION_FIELD[section]] = _options(cls, dict(cp.items(section)), section)
    return RunConfig(**kwargs)


def dump(cfg: RunConfig) -> str:
    lines = ["[run]"]
    for key in ("command", "system", "res", "eta", "support", "seed", "threads", "out"):
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines += ["", "[params]"]
    lines += [f"{k} = {_fmt(float(v))}" for k, v in cfg.params]
    if cfg.system == "custom" or cfg.custom_maps:
        lines += ["", "[custom]", f"domain = {cfg.custom_domain}"]
        lines += [f"map{k} = {m}" for k, m in enumerate(cfg.custom_maps, start=1)]
    for section, attr in _SECTION_FIELD.items():
        opts = getattr(cfg, attr)
        lines += ["", f"[{section}]"]
        lines += [f"{f.name} = {_fmt(getattr(opts, f.name))}" for f in fields(opts)]
    return "\n".join(line.rstrip() for line in lines) + "\n"
