"""Experiment configuration read from a TOML file, with command-line overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, NKakeyaError
from .grassmann import Box
from .kakeya import Budget
from .manifold import QuadraticManifold, codim2_example, parabola
from .plates import MAX_CELLS

PRESETS = {"parabola": parabola, "codim2": codim2_example}


@dataclass
class ExperimentConfig:
    manifold: QuadraticManifold = field(default_factory=parabola)
    box: Box = field(default_factory=lambda: Box.interval(-0.25, 0.25))
    schedule: list[float] = field(default_factory=lambda: [0.25, 0.125])
    res: int | None = None
    quad_n: int = 256
    trials: int = 100
    seed: int = 7
    out: Path = Path("out")
    budget: Budget = field(default_factory=Budget)
    kakeya_delta: float = 0.25
    cover_exponent: float = 0.5
    symmetry_cases: int = 20
    calibration_R: float = 4.0
    record_runtimes: bool = False
    extension: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        s = self.schedule
        if not s or any(not 0 < x <= 1 for x in s) or any(b >= a for a, b in zip(s, s[1:])):
            raise ConfigError("delta schedule must be strictly decreasing in (0, 1]")
        if self.res is not None and (self.res < 2 or float(self.res) ** self.manifold.d > MAX_CELLS):
            raise ConfigError(f"res {self.res} outside the raster memory guard")
        if self.quad_n < 16:
            raise ConfigError("quad_n must be at least 16")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if not 0 < self.kakeya_delta <= 1:
            raise ConfigError("kakeya delta must lie in (0, 1]")
        if not 0 < self.cover_exponent <= self.manifold.n:
            raise ConfigError("cover exponent s must lie in (0, n]")
        return self

    def as_dict(self) -> dict:
        return {
            "manifold": self.manifold.to_config(),
            "box": {"center": self.box.center.tolist(), "radius": self.box.radius, "kind": self.box.kind},
            "schedule": list(self.schedule),
            "res": self.res,
            "quad_n": self.quad_n,
            "trials": self.trials,
            "seed": self.seed,
        }


def _manifold(table) -> QuadraticManifold:
    if isinstance(table, str):
        table = {"preset": table}
    if "preset" in table:
        try:
            m = PRESETS[table["preset"]]()
        except KeyError:
            raise ConfigError(f"unknown manifold preset {table['preset']!r}") from None
        return m
    return QuadraticManifold.from_config(table)


def from_mapping(data: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig()
        if "manifold" in data:
            cfg.manifold = _manifold(data["manifold"])
        if "box" in data:
            b = data["box"]
            cfg.box = Box(np.asarray(b.get("center", np.zeros(cfg.manifold.n)), float), float(b["radius"]),
                          b.get("kind", "ball"))
        elif cfg.manifold.n != 1:
            cfg.box = Box(np.zeros(cfg.manifold.n), 0.25)
        for key in ("quad_n", "trials", "seed"):
            if key in data:
                setattr(cfg, key, int(data[key]))
        if data.get("res"):
            cfg.res = int(data["res"])
        if "out" in data:
            cfg.out = Path(data["out"])
        cfg.record_runtimes = bool(data.get("record_runtimes", False))
        ep = data.get("endpoint", {})
        if "schedule" in ep:
            cfg.schedule = [float(x) for x in ep["schedule"]]
        bud = {**data.get("budget", {}), **{k: ep[k] for k in ("r_min", "r_max", "max_steps") if k in ep}}
        cfg.budget = Budget(
            r_min=int(bud.get("r_min", cfg.budget.r_min)),
            r_max=int(bud.get("r_max", cfg.budget.r_max)),
            max_steps=int(bud.get("max_steps", cfg.budget.max_steps)),
            max_seconds=bud.get("max_seconds"),
        )
        cfg.calibration_R = float(ep.get("calibration_R", cfg.calibration_R))
        kk = data.get("kakeya", {})
        cfg.kakeya_delta = float(kk.get("delta", cfg.kakeya_delta))
        cfg.cover_exponent = float(kk.get("s", min(cfg.cover_exponent, cfg.manifold.n)))
        cfg.symmetry_cases = int(data.get("symmetry", {}).get("cases", cfg.symmetry_cases))
        cfg.extension = dict(data.get("extension", {}))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, NKakeyaError) as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc
    return cfg


def load_config(path=None, **overrides) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
    for key, val in overrides.items():
        if val is not None:
            data[key] = val
    return from_mapping(data).validate()
