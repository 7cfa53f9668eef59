"""Experiment configuration: flat key = value files with dotted sections.

Lines look like "solver.eps = 0.1"; '#' starts a comment.  Every key is
declared in the schema below with its type and default, so typos surface as
configuration errors instead of silently running defaults.
"""

import hashlib
from dataclasses import dataclass, field

from .solver import ConfigurationError

_FLOAT = "float"
_INT = "int"
_BOOL = "bool"
_STR = "str"
_FLOATS = "floats"          # comma-separated list
_OPT_FLOAT = "opt_float"    # float or none

SCHEMA = {
    "grid.dim": (_INT, 1),
    "grid.points": (_INT, 4096),
    "grid.half_width": (_FLOAT, 20.0),

    "solver.p": (_FLOAT, 1.0),
    "solver.eps": (_FLOAT, 0.1),
    "solver.eps_list": (_FLOATS, ()),
    "solver.dt_scale": (_FLOAT, 1e-3),
    "solver.dt": (_OPT_FLOAT, None),
    "solver.t_final": (_FLOAT, 1.0),
    "solver.snapshot_stride": (_INT, 100),

    "potential.v0": (_FLOAT, 1.0),
    "potential.amplitude": (_FLOAT, 1.0),
    "potential.beta": (_FLOAT, 0.5),
    "potential.delta": (_FLOAT, 0.5),
    "potential.delta_list": (_FLOATS, ()),

    "initial.x0": (_FLOATS, (4.0,)),
    "initial.xi0": (_FLOATS, (-0.1,)),
    "initial.rho": (_OPT_FLOAT, None),

    "groundstate.tol": (_FLOAT, 1e-8),
    "groundstate.max_iter": (_INT, 20000),

    "diagnostics.mu": (_OPT_FLOAT, None),      # none: 0.1 |E(R)| at run time
    "diagnostics.vacuum_floor": (_FLOAT, 1e-14),
    "diagnostics.guard_radius": (_FLOAT, 1e-6),
    "diagnostics.centroid_margin": (_FLOAT, 1.0),
    "diagnostics.residual_floor": (_FLOAT, 1e-8),

    "coupling.power": (_OPT_FLOAT, None),   # none: 1/(2(beta+3))

    "output.dir": (_STR, ""),
    "output.prefix": (_STR, "run"),
    "output.snapshots": (_BOOL, False),
    "output.figures": (_BOOL, True),
}


def _parse_value(kind, raw, key):
    raw = raw.strip()
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        if kind == _BOOL:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if kind == _STR:
            return raw
        if kind == _FLOATS:
            if not raw or raw.lower() == "none":
                return ()
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if kind == _OPT_FLOAT:
            if raw.lower() in ("none", "auto", ""):
                return None
            return float(raw)
    except ValueError:
        pass
    raise ConfigurationError(f"cannot parse {key} = {raw!r} as {kind}",
                             condition="parse")


def _format_value(val):
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ",".join(repr(float(v)) for v in val) if val else "none"
    if val is None:
        return "none"
    if isinstance(val, float):
        return repr(val)
    return str(val)


@dataclass
class ExperimentConfig:
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in self.entries:
            if key not in SCHEMA:
                raise ConfigurationError(f"unknown configuration key {key!r}",
                                         condition="unknown-key")

    def get(self, key):
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown configuration key {key!r}",
                                     condition="unknown-key")
        return self.entries.get(key, SCHEMA[key][1])

    def set(self, key, raw_value: str):
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown configuration key {key!r}",
                                     condition="unknown-key")
        self.entries[key] = _parse_value(SCHEMA[key][0], raw_value, key)

    def replace(self, **dotted):
        """Copy with keys like solver_eps=... mapped back to dotted form."""
        clone = ExperimentConfig(dict(self.entries))
        for key, val in dotted.items():
            dotted_key = key.replace("__", ".")
            if dotted_key not in SCHEMA:
                raise ConfigurationError(f"unknown configuration key {dotted_key!r}",
                                         condition="unknown-key")
            clone.entries[dotted_key] = val
        return clone

    def canonical_text(self) -> str:
        lines = []
        for key in sorted(SCHEMA):
            lines.append(f"{key} = {_format_value(self.get(key))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(
                f"line {lineno}: expected key = value, got {line!r}",
                condition="parse")
        key, raw = body.split("=", 1)
        cfg.set(key.strip(), raw)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}",
                                 condition="io") from exc
    return parse_config_text(text)


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    clone = ExperimentConfig(dict(cfg.entries))
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(
                f"override {item!r} must look like key=value", condition="parse")
        key, raw = item.split("=", 1)
        clone.set(key.strip().replace("__", "."), raw)
    return clone
