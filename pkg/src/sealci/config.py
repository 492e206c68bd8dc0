"""Experiment configuration files.

A config is a JSON object; ``dumps`` writes it canonically (sorted keys,
two-space indent) so that load/dump round-trips byte for byte and the
config hash is stable across platforms.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from .baselines import Algo, BaselineParams
from .grid import DATA_DIR, load_pattern_file
from .seal import ConfigError, SealConfig
from .serial import stable_hash

KINDS = ("seal-run", "noise-sweep", "baseline-compare", "auit-eval")
BUILTIN_PREFIX = "builtin:"


@dataclass(frozen=True)
class AuitConfig:
    patterns: Tuple[str, ...] = ("constant", "period8", "random")
    sizes: Tuple[Tuple[int, int], ...] = ((8, 8), (16, 16))
    comm_modes: Tuple[dict, ...] = (
        {"kind": "DIRECT"},
        {"kind": "INDIRECT", "bias_std": 1.0},
        {"kind": "IMITATION", "obs_range": 3.0},
    )
    policy: str = "greedy"
    team_size: int = 5
    episodes: int = 10
    steps: int = 50
    checkpoint_every: int = 10
    sense_radius: float = 3.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["patterns"] = list(self.patterns)
        d["sizes"] = [list(s) for s in self.sizes]
        d["comm_modes"] = [dict(m) for m in self.comm_modes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AuitConfig":
        d = dict(d)
        if "patterns" in d:
            d["patterns"] = tuple(d["patterns"])
        if "sizes" in d:
            d["sizes"] = tuple(tuple(int(v) for v in s) for s in d["sizes"])
        if "comm_modes" in d:
            d["comm_modes"] = tuple(dict(m) for m in d["comm_modes"])
        cfg = cls(**d)
        if cfg.team_size < 1 or cfg.episodes < 0 or cfg.steps < 0:
            raise ConfigError("auit team_size must be positive, episodes and steps non-negative")
        return cfg


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    seal: SealConfig = field(default_factory=SealConfig)
    pattern: str = "builtin:four.pat"
    agent_count: int = 119
    base_seed: int = 0
    seed_count: int = 10
    noise_levels: Tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)
    baseline: BaselineParams = field(default_factory=BaselineParams)
    algos: Tuple[str, ...] = ("IQL", "HQL", "LMRL")
    compare_at: int = 150
    auit: AuitConfig = field(default_factory=AuitConfig)
    output_dir: str = "out"

    def __post_init__(self):
        if self.experiment not in KINDS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {KINDS}")
        if self.seed_count < 0 or self.agent_count < 1:
            raise ConfigError("seed_count must be >= 0 and agent_count >= 1")
        if any(n < 0 for n in self.noise_levels):
            raise ConfigError("noise levels must be non-negative")
        for a in self.algos:
            Algo(a)

    @property
    def seeds(self) -> List[int]:
        # adding seeds never perturbs earlier runs
        return [self.base_seed + i for i in range(self.seed_count)]

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "seal": self.seal.to_dict(),
            "pattern": self.pattern,
            "agent_count": self.agent_count,
            "base_seed": self.base_seed,
            "seed_count": self.seed_count,
            "noise_levels": list(self.noise_levels),
            "baseline": self.baseline.to_dict(),
            "algos": list(self.algos),
            "compare_at": self.compare_at,
            "auit": self.auit.to_dict(),
            "output_dir": self.output_dir,
        }
        del d["seal"]["seed"]  # per-run seeds come from base_seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            d = dict(d)
            seal = dict(d.pop("seal", {}))
            seal.pop("seed", None)
            kw = {
                "seal": SealConfig.from_dict(seal),
                "baseline": BaselineParams.from_dict(d.pop("baseline", {})),
                "auit": AuitConfig.from_dict(d.pop("auit", {})),
            }
            if "noise_levels" in d:
                kw["noise_levels"] = tuple(float(v) for v in d.pop("noise_levels"))
            if "algos" in d:
                kw["algos"] = tuple(d.pop("algos"))
            return cls(**d, **kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def config_hash(self) -> str:
        d = self.to_dict()
        del d["output_dir"]
        return stable_hash(d)

    def replace(self, **changes) -> "RunConfig":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return RunConfig(**kw)


def dumps(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"


def loads(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(raw)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def resolve_pattern(cfg: RunConfig, base_dir: Optional[Path] = None):
    """Load the configured pattern; ``builtin:NAME`` refers to the packaged data files."""
    if cfg.pattern.startswith(BUILTIN_PREFIX):
        path = DATA_DIR / cfg.pattern[len(BUILTIN_PREFIX):]
    else:
        path = Path(cfg.pattern)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
    try:
        return load_pattern_file(path)
    except OSError as exc:
        raise ConfigError(f"cannot read pattern file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad pattern file {path}: {exc}") from exc
