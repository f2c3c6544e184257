"""Pipeline configuration read from TOML, with unknown keys rejected."""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from havokts.distributions import FAMILIES
from havokts.errors import ConfigError
from havokts.forecast import DEFAULT_FORCING_THRESHOLD, FORCING_MODES
from havokts.havok import DEFAULT_EPS, DEFAULT_LAMBDA, RankPolicy


@dataclass(frozen=True)
class InputConfig:
    source: str = "csv"  # csv | demo
    path: str | None = None
    layout: str = "auto"
    dt: float | None = None
    time_column: str = "t"
    id_column: str = "id"
    value_column: str = "value"
    # demo corpus size, used when source = "demo"
    n_per_family: int = 10
    n_samples: int = 2000
    demo_dt: float = 0.01


@dataclass(frozen=True)
class ClusteringConfig:
    k: int | str = "auto"
    energy_target: float = 0.90
    k_min: int = 2
    k_max: int | None = None
    max_iter: int = 1000


@dataclass(frozen=True)
class EmbeddingBlock:
    tau: int | str = "auto"
    dim: int | str = "auto"
    tau_max: int = 20
    d_max: int = 20
    bins: int = 16
    drop_threshold: float = 0.10
    r_tol: float = 10.0
    a_tol: float = 2.0


@dataclass(frozen=True)
class ModelConfig:
    r: int | str = 12
    lam: float = DEFAULT_LAMBDA
    eps: float = DEFAULT_EPS


@dataclass(frozen=True)
class ForecastConfig:
    split: float = 0.8  # fraction in (0, 1) or a sample index >= 1
    horizon: int | None = None
    forcing: str = "measured"
    threshold: float = DEFAULT_FORCING_THRESHOLD
    merge_gap: int = 0
    histogram_instants: tuple = ()
    histogram_bins: int = 20
    scalogram: bool = False
    frequencies: tuple = ()
    n_frequencies: int = 32


@dataclass(frozen=True)
class StatsConfig:
    families: tuple = FAMILIES
    significance: float = 0.05
    shift: bool = True
    bins: int = 30


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    threads: int = 1
    out: str = "havokts-out"
    input: InputConfig = field(default_factory=InputConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    embedding: EmbeddingBlock = field(default_factory=EmbeddingBlock)
    model: ModelConfig = field(default_factory=ModelConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    stats: StatsConfig = field(default_factory=StatsConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"]["lambda"] = d["model"].pop("lam")
        return d


_BLOCKS = {
    "input": InputConfig, "clustering": ClusteringConfig, "embedding": EmbeddingBlock,
    "model": ModelConfig, "forecast": ForecastConfig, "stats": StatsConfig,
}
# TOML key -> field name where they differ
_ALIASES = {"model": {"lambda": "lam"}}


def _positive(name, v, allow_zero=False):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or (v < 0 if allow_zero else v <= 0):
        raise ConfigError(f"{name} must be a {'non-negative' if allow_zero else 'positive'} number, got {v!r}")


def _auto_or_int(name, v, lo=1):
    if v == "auto":
        return
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ConfigError(f"{name} must be \"auto\" or an integer >= {lo}, got {v!r}")


def validate(cfg: PipelineConfig) -> PipelineConfig:
    i = cfg.input
    if i.source not in ("csv", "demo"):
        raise ConfigError(f"input.source must be \"csv\" or \"demo\", got {i.source!r}")
    if i.layout not in ("auto", "wide", "long"):
        raise ConfigError(f"input.layout must be auto, wide or long, got {i.layout!r}")
    if i.dt is not None:
        _positive("input.dt", i.dt)
    c = cfg.clustering
    _auto_or_int("clustering.k", c.k)
    _positive("clustering.energy_target", c.energy_target)
    if c.energy_target > 1:
        raise ConfigError("clustering.energy_target must lie in (0, 1]")
    e = cfg.embedding
    _auto_or_int("embedding.tau", e.tau)
    _auto_or_int("embedding.dim", e.dim)
    if e.tau_max < 2 or e.d_max < 2:
        raise ConfigError("embedding.tau_max and embedding.d_max must be >= 2")
    try:
        policy = RankPolicy.parse(cfg.model.r)
    except Exception as exc:
        raise ConfigError(f"model.r: {exc}") from None
    if policy.kind == "manual" and policy.value < 2:
        raise ConfigError(f"model.r must be >= 2, got {cfg.model.r!r}")
    _positive("model.lambda", cfg.model.lam, allow_zero=True)
    _positive("model.eps", cfg.model.eps)
    f = cfg.forecast
    if f.forcing not in FORCING_MODES:
        raise ConfigError(f"forecast.forcing must be one of {FORCING_MODES}, got {f.forcing!r}")
    _positive("forecast.split", f.split)
    if isinstance(f.split, float) and f.split >= 1:
        raise ConfigError("forecast.split as a fraction must lie in (0, 1)")
    if f.horizon is not None and (not isinstance(f.horizon, int) or f.horizon < 1):
        raise ConfigError(f"forecast.horizon must be an integer >= 1, got {f.horizon!r}")
    _positive("forecast.threshold", f.threshold, allow_zero=True)
    unknown = [x for x in cfg.stats.families if x not in FAMILIES]
    if unknown:
        raise ConfigError(f"stats.families has unknown entries {unknown}; choose from {list(FAMILIES)}")
    if not cfg.stats.families:
        raise ConfigError("stats.families must not be empty")
    if not 0 < cfg.stats.significance < 1:
        raise ConfigError("stats.significance must lie in (0, 1)")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


def from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    top = {f.name for f in fields(PipelineConfig)} - set(_BLOCKS)
    kwargs = {}
    for key, value in data.items():
        if key in _BLOCKS:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            cls = _BLOCKS[key]
            names = {f.name for f in fields(cls)}
            alias = _ALIASES.get(key, {})
            block = {}
            for k, v in value.items():
                name = alias.get(k, k)
                if name not in names or (name in alias.values() and k not in alias):
                    raise ConfigError(f"unknown key '{key}.{k}'")
                block[name] = tuple(v) if isinstance(v, list) else v
            kwargs[key] = cls(**block)
        elif key in top:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown key '{key}'")
    cfg = PipelineConfig(**kwargs)
    if base_dir is not None and cfg.input.path and not Path(cfg.input.path).is_absolute():
        cfg = replace(cfg, input=replace(cfg.input, path=str(base_dir / cfg.input.path)))
    return validate(cfg)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(data, path.parent)
