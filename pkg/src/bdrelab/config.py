"""Experiment configuration: flat dotted-key text files and hashing.

The on-disk format is deliberately primitive: one `key = value` pair per
line, dotted section prefixes (model.alpha = 1.0), '#' comments, blank
lines ignored. It parses with no dependencies and diffs line by line.
Floats are written with repr, so a write/read round trip reproduces every
field bit for bit.

The config hash covers exactly the fields that influence computed
numbers (model, scheme, quadrature, experiment, n, seed, grids, routes).
output_dir is where results land, not what they are, so it stays outside
the hash.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, replace
from enum import Enum

from .errors import ConfigError
from .model import ModelParams
from .sde import Scheme, SchemeConfig
from .specfun import DomainMap, QuadratureConfig

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "DEFAULT_SEED",
    "ENV_SEED_VAR",
    "config_to_text",
    "config_from_text",
    "read_config",
    "write_config",
    "config_hash",
    "seed_from_environment",
]

DEFAULT_SEED = 20260821
ENV_SEED_VAR = "BDRE_LAB_SEED"


class Experiment(Enum):
    EXTINCTION = "extinction"
    CONDITIONED_SURVIVAL = "conditioned-survival"
    RATES = "rates"
    MARTINGALE = "martingale"
    LAPLACE = "laplace"
    LAW_EQUIVALENCE = "law-equivalence"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on, plus where to write it.

    Defaults: standard parameter set (alpha = sigma_e = sigma_b = z0 = 1),
    full-truncation Euler at dt = 0.01 to horizon 30, reference quadrature
    tolerances, extinction experiment, n = 10^5 replications.
    """

    model: ModelParams = ModelParams(alpha=1.0, sigma_e=1.0, sigma_b=1.0, z0=1.0)
    scheme: SchemeConfig = SchemeConfig(
        dt=0.01, horizon=30.0, scheme=Scheme.EULER_FULL_TRUNCATION
    )
    quadrature: QuadratureConfig = QuadratureConfig()
    experiment: Experiment = Experiment.EXTINCTION
    n: int = 100_000
    seed: int = DEFAULT_SEED
    t_grid: tuple[float, ...] = (4.0, 6.0, 8.0, 10.0, 12.0)
    lambda_grid: tuple[float, ...] = (0.5, 1.0, 2.0, 10.0)
    routes: tuple[str, ...] = ()
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be a positive integer")
        if not self.t_grid or any(t <= 0 for t in self.t_grid):
            raise ConfigError("t_grid must hold positive times")
        if any(l < 0 for l in self.lambda_grid):
            raise ConfigError("lambda_grid must hold nonnegative values")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Enum):
        return str(v.value)
    return str(v)


def _semantic_items(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    m, s, q = cfg.model, cfg.scheme, cfg.quadrature
    return [
        ("model.alpha", _fmt(m.alpha)),
        ("model.sigma_e", _fmt(m.sigma_e)),
        ("model.sigma_b", _fmt(m.sigma_b)),
        ("model.z0", _fmt(m.z0)),
        ("scheme.dt", _fmt(s.dt)),
        ("scheme.horizon", _fmt(s.horizon)),
        ("scheme.scheme", _fmt(s.scheme)),
        ("scheme.absorption_threshold", _fmt(s.absorption_threshold)),
        ("scheme.store_stride", _fmt(s.store_stride)),
        ("quadrature.rel_tol", _fmt(q.rel_tol)),
        ("quadrature.abs_tol", _fmt(q.abs_tol)),
        ("quadrature.max_subdivisions", _fmt(q.max_subdivisions)),
        ("quadrature.infinite_domain_map", _fmt(q.infinite_domain_map)),
        ("experiment", _fmt(cfg.experiment)),
        ("n", _fmt(cfg.n)),
        ("seed", _fmt(cfg.seed)),
        ("t_grid", ", ".join(_fmt(t) for t in cfg.t_grid)),
        ("lambda_grid", ", ".join(_fmt(l) for l in cfg.lambda_grid)),
        ("routes", ", ".join(cfg.routes)),
    ]


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = [f"{k} = {v}" for k, v in _semantic_items(cfg)]
    lines.append(f"output_dir = {cfg.output_dir}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> ExperimentConfig:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = val.strip()

    def take(key: str, default: str) -> str:
        return pairs.pop(key, default)

    def as_float(key: str, default: str) -> float:
        raw = take(key, default)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: not a number: {raw!r}") from exc

    def as_int(key: str, default: str) -> int:
        raw = take(key, default)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: not an integer: {raw!r}") from exc

    def as_enum(key: str, enum_cls, default: str):
        raw = take(key, default)
        try:
            return enum_cls(raw)
        except ValueError as exc:
            valid = ", ".join(e.value for e in enum_cls)
            raise ConfigError(f"{key}: {raw!r} is not one of: {valid}") from exc

    def as_float_tuple(key: str, default: str) -> tuple[float, ...]:
        raw = take(key, default)
        if not raw:
            return ()
        try:
            return tuple(float(p.strip()) for p in raw.split(","))
        except ValueError as exc:
            raise ConfigError(f"{key}: bad list: {raw!r}") from exc

    try:
        model = ModelParams(
            alpha=as_float("model.alpha", "1.0"),
            sigma_e=as_float("model.sigma_e", "1.0"),
            sigma_b=as_float("model.sigma_b", "1.0"),
            z0=as_float("model.z0", "1.0"),
        )
        scheme = SchemeConfig(
            dt=as_float("scheme.dt", "0.01"),
            horizon=as_float("scheme.horizon", "30.0"),
            scheme=as_enum("scheme.scheme", Scheme, "EulerFullTruncation"),
            absorption_threshold=as_float("scheme.absorption_threshold", "0.0"),
            store_stride=as_int("scheme.store_stride", "1"),
        )
        quadrature = QuadratureConfig(
            rel_tol=as_float("quadrature.rel_tol", "1e-10"),
            abs_tol=as_float("quadrature.abs_tol", "1e-12"),
            max_subdivisions=as_int("quadrature.max_subdivisions", "200"),
            infinite_domain_map=as_enum(
                "quadrature.infinite_domain_map", DomainMap, "ExpSubstitution"
            ),
        )
        routes_raw = take("routes", "")
        cfg = ExperimentConfig(
            model=model,
            scheme=scheme,
            quadrature=quadrature,
            experiment=as_enum("experiment", Experiment, "extinction"),
            n=as_int("n", "100000"),
            seed=as_int("seed", str(DEFAULT_SEED)),
            t_grid=as_float_tuple("t_grid", "4, 6, 8, 10, 12"),
            lambda_grid=as_float_tuple("lambda_grid", "0.5, 1, 2, 10"),
            routes=tuple(p.strip() for p in routes_raw.split(",") if p.strip()),
            output_dir=take("output_dir", "results"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if pairs:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(pairs))}")
    return cfg


def read_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_text(text)


def write_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_to_text(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    """12 hex digits of sha256 over the canonical semantic serialization."""
    canon = "\n".join(f"{k} = {v}" for k, v in _semantic_items(cfg))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def seed_from_environment(cfg: ExperimentConfig) -> ExperimentConfig:
    """Apply the BDRE_LAB_SEED override if the environment sets it."""
    raw = os.environ.get(ENV_SEED_VAR)
    if raw is None:
        return cfg
    try:
        return replace(cfg, seed=int(raw))
    except ValueError as exc:
        raise ConfigError(f"{ENV_SEED_VAR} must be an integer, got {raw!r}") from exc
