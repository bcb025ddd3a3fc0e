"""Flat, typed ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key must be one of
:data:`KEYS`; values are parsed with the listed type.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

SCENARIOS = ("torus_cosine", "plane_lamb", "appendix_oracle", "custom_snapshot")


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "torus_cosine"
    resolution: int = 256
    horizon: float = 1.0
    dt: float = 1e-3
    dt_policy: str = "fixed"  # fixed | cfl
    cfl_safety: float = 0.5
    half_width: float = 6.0  # free-space box [-L, L)^2
    alpha: float = 1.0
    beta: float = 1.0
    shift1: float = 0.0
    shift2: float = 0.0
    seed: str = "none"  # none | torus | plane
    seed_eps: float = 0.3
    seed_radius: float = 0.0  # transverse sheet radius; 0 tunes it to the budget
    eta: float = 0.08
    tracker: bool = True
    drift_mode: str = "lamb"  # lamb (drift 1) | tracker (drift 1 + pdot)
    cell_average: bool = True
    diag_every: int = 10
    snapshot_every: int = 0
    tracer: bool = False
    tracer_n: int = 128
    resolved_tol: float = 1e-2
    snapshot: str = ""
    out: str = "run_out"
    oracle_t1: float = 1.0  # appendix oracle: fine phase end
    oracle_dt2: float = 5e-2  # appendix oracle: coarse step after oracle_t1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.dt_policy not in ("fixed", "cfl"):
            raise ConfigError("dt_policy must be fixed or cfl")
        if self.diag_every < 1 or self.snapshot_every < 0:
            raise ConfigError("cadences must be at least one step")
        if self.seed not in ("none", "torus", "plane"):
            raise ConfigError(f"unknown seed {self.seed!r}")
        if self.drift_mode not in ("lamb", "tracker"):
            raise ConfigError("drift_mode must be lamb or tracker")
        if self.resolution < 16:
            raise ConfigError("resolution must be at least 16")
        if self.scenario == "custom_snapshot" and not self.snapshot:
            raise ConfigError("custom_snapshot needs snapshot = PATH")

    def quick(self) -> "RunConfig":
        """Half resolution and half horizon."""
        return replace(self, resolution=max(16, self.resolution // 2), horizon=self.horizon / 2)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


KEYS = {f.name: f.type for f in fields(RunConfig)}
_PARSERS = {"int": int, "float": float, "str": str, "bool": _bool}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = _PARSERS[KEYS[key]](val)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from e
    return out


def load_config(path=None, **overrides) -> RunConfig:
    vals = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        vals = parse_config_text(text)
    vals.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(vals) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    return RunConfig(**vals)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.as_dict().items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
