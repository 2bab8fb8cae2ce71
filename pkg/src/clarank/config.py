"""Experiment configuration: a key=value file plus flag overrides.

The config file path comes from --config or the CLARANK_CONFIG environment
variable; command-line flags win over file values.
"""

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

ENV_VAR = "CLARANK_CONFIG"


@dataclass
class ExperimentConfig:
    corpus: Path | None = None
    index: Path | None = None
    conversations: Path | None = None
    qrels: Path | None = None
    output_dir: Path = Path("out")
    stoplist: Path | None = None  # None -> bundled English list
    policy: Path | None = None
    topics: Path | None = None
    mu: float = 2000.0
    q0_weight: float = 0.5
    ndcg_k: int = 20
    depth: int = 1000
    seed: int = 42
    n_test: int = 40
    mode: str = "heuristic"
    threads: int = 1
    tag: str | None = None

    def validate(self) -> None:
        if self.mu <= 0:
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        if not 0.0 <= self.q0_weight <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.q0_weight}")
        if self.ndcg_k < 1:
            raise ConfigError(f"ndcg cutoff must be >= 1, got {self.ndcg_k}")
        if self.depth < 1:
            raise ConfigError(f"ranking depth must be >= 1, got {self.depth}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.n_test < 0:
            raise ConfigError(f"n_test must be >= 0, got {self.n_test}")
        if self.mode not in ("q0", "q0q", "q0a", "q0qa", "heuristic"):
            raise ConfigError(f"unknown composition mode {self.mode!r}")


_PATH_KEYS = {"corpus", "index", "conversations", "qrels", "output_dir",
              "stoplist", "policy", "topics"}
_FLOAT_KEYS = {"mu", "lambda"}
_INT_KEYS = {"ndcg_k", "k", "depth", "seed", "n_test", "threads"}
_STR_KEYS = {"mode", "tag"}

# config-file spellings -> dataclass field names
_ALIASES = {"lambda": "q0_weight", "k": "ndcg_k"}


def _convert(key: str, raw: str):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: {raw!r} is not a number") from None
    if key in _PATH_KEYS:
        return Path(raw)
    return raw


def load_config_file(path: str | Path) -> dict:
    """Parse KEY=VALUE lines; '#' starts a comment; unknown keys are errors."""
    values = {}
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {config_path}")
    for lineno, line in enumerate(config_path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{config_path}:{lineno}: expected KEY=VALUE")
        key, _, raw = stripped.partition("=")
        key = key.strip().lower()
        raw = raw.strip()
        if key not in _PATH_KEYS | _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
            raise ConfigError(f"{config_path}:{lineno}: unknown config key {key!r}")
        values[_ALIASES.get(key, key)] = _convert(key, raw)
    return values


def resolve_config(config_path: str | Path | None, overrides: dict) -> ExperimentConfig:
    """Defaults, then config file (explicit or $CLARANK_CONFIG), then flags."""
    values: dict = {}
    effective_path = config_path or os.environ.get(ENV_VAR) or None
    if effective_path:
        values.update(load_config_file(effective_path))
    field_names = {f.name for f in fields(ExperimentConfig)}
    for key, value in overrides.items():
        if value is None:
            continue
        name = _ALIASES.get(key, key)
        if name not in field_names:
            raise ConfigError(f"unknown config override {key!r}")
        values[name] = Path(value) if name in _PATH_KEYS and not isinstance(value, Path) else value
    config = ExperimentConfig(**values)
    config.validate()
    return config
