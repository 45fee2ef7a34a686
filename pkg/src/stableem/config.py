"""Flat key=value experiment configuration.

Files are UTF-8 ``key = value`` lines with ``#`` comments.  Parsing is
strict: unknown keys are rejected with their line number, and each
experiment validates the keys it needs at load time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .schedule import StepSchedule

EXPERIMENTS = (
    "rate",
    "weak-error",
    "ergodicity",
    "cf-check",
    "schedule",
    "sample",
    "certify-drift",
)

_SCHEME_ALIASES = {
    "pareto": "pareto-em",
    "pareto-em": "pareto-em",
    "stable": "stable-em",
    "stable-em": "stable-em",
    "exact-ou": "exact-ou",
}


@dataclass
class ExperimentConfig:
    experiment: str
    alpha: float = None
    scheme: str = "pareto-em"
    dim: int = 1
    drift: str = "ou"
    schedule: str = "c-over-n:0.5"
    theta: float | None = None
    m: int = 200_000
    checkpoints: str = "128..8192 geometric"
    x0: float = 0.0
    kappa: float = 1.2
    seed: int = 0
    out: str | None = None
    reference: str = "ensemble"
    workers: int = 0  # 0 -> env override or 1
    slope_tol: float = 0.15
    n: int = 512
    lambdas: str = "0.25,0.5,1,2"
    gammas: str = "2^-3..2^-9"
    mc: int = 10_000_000
    x: float = 5.0
    y: float = -5.0
    rho_toy: float = 0.5
    n_max: int = 100_000
    box: float = 20.0
    pairs: int = 10_000
    sampler: str = "stable-1d"
    count: int = 10_000
    test_fn: str = "cos"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.scheme not in _SCHEME_ALIASES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        self.scheme = _SCHEME_ALIASES[self.scheme]
        if self.alpha is None and self.experiment not in ("schedule",):
            raise ConfigError("missing required key: alpha")
        if self.alpha is not None and not 1.0 < float(self.alpha) < 2.0:
            raise ConfigError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.reference not in ("ensemble", "oracle"):
            raise ConfigError(f"reference must be 'ensemble' or 'oracle', got {self.reference!r}")

    @property
    def effective_theta(self) -> float:
        if self.theta is not None:
            return float(self.theta)
        return 1.0 / float(self.alpha) if self.alpha else 1.0

    @property
    def effective_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get("STABLEEM_WORKERS")
        return int(env) if env else 1

    def build_schedule(self) -> StepSchedule:
        return parse_schedule(self.schedule, self.effective_theta)

    def checkpoint_list(self) -> tuple[int, ...]:
        return parse_checkpoints(self.checkpoints)

    def gamma_grid(self) -> tuple[float, ...]:
        return parse_gamma_grid(self.gammas)

    def lambda_list(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.lambdas.split(","))

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class ConfigError(ValueError):
    pass


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_INT_KEYS = {"dim", "m", "seed", "n", "mc", "n_max", "pairs", "count", "workers"}
_FLOAT_KEYS = {"alpha", "theta", "x0", "kappa", "slope_tol", "x", "y", "rho_toy", "box"}


def load_config(path: str) -> ExperimentConfig:
    """Parse a key=value config file into an ExperimentConfig (strict keys)."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = _coerce(key, value, f"{path}:{lineno}")
    if "experiment" not in values:
        raise ConfigError(f"{path}: missing required key: experiment")
    return ExperimentConfig(**values)


def _coerce(key: str, value: str, where: str):
    try:
        if key in _INT_KEYS:
            return int(value.replace("_", ""))
        if key in _FLOAT_KEYS:
            return _parse_number(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {value!r}") from exc
    return value


def _parse_number(value: str) -> float:
    if "^" in value:  # allow 2^-9 style exponents
        base, _, exp = value.partition("^")
        return float(base) ** float(exp)
    if "/" in value:
        num, _, den = value.partition("/")
        return float(num) / float(den)
    return float(value)


def parse_schedule(spec: str, theta: float) -> StepSchedule:
    """Schedule syntax: c-over-n:G1 | c-over-rho-n:C,RHO | poly:G1,A | explicit:v1,v2,..."""
    name, _, rest = spec.partition(":")
    try:
        if name == "c-over-n":
            return StepSchedule.c_over_rho_n(c=_parse_number(rest), rho=1.0, theta=theta)
        if name == "c-over-rho-n":
            c, rho = (_parse_number(v) for v in rest.split(","))
            return StepSchedule.c_over_rho_n(c=c, rho=rho, theta=theta)
        if name == "poly":
            g1, a = (_parse_number(v) for v in rest.split(","))
            return StepSchedule.polynomial(gamma1=g1, a=a, theta=theta)
        if name == "explicit":
            return StepSchedule.explicit([_parse_number(v) for v in rest.split(",")], theta=theta)
    except ValueError as exc:
        raise ConfigError(f"bad schedule spec {spec!r}") from exc
    raise ConfigError(f"unknown schedule family {name!r}")


def parse_checkpoints(spec: str) -> tuple[int, ...]:
    """Checkpoint syntax: 'A..B geometric' (doubling) or a comma list."""
    spec = spec.strip()
    if ".." in spec:
        rng, *qual = spec.split()
        if qual and qual != ["geometric"]:
            raise ConfigError(f"bad checkpoint qualifier in {spec!r}")
        lo_s, _, hi_s = rng.partition("..")
        lo, hi = int(lo_s), int(hi_s)
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad checkpoint range {spec!r}")
        cps = []
        c = lo
        while c <= hi:
            cps.append(c)
            c *= 2
        return tuple(cps)
    return tuple(int(v) for v in spec.split(","))


def parse_gamma_grid(spec: str) -> tuple[float, ...]:
    """Gamma-grid syntax: '2^-3..2^-9' (halving) or a comma list."""
    spec = spec.strip()
    if ".." in spec:
        lo_s, _, hi_s = spec.partition("..")
        lo, hi = _parse_number(lo_s), _parse_number(hi_s)
        if not 0 < hi <= lo:
            raise ConfigError(f"bad gamma grid {spec!r}")
        out = []
        g = lo
        while g >= hi * (1.0 - 1e-12):
            out.append(g)
            g /= 2.0
        return tuple(out)
    return tuple(_parse_number(v) for v in spec.split(","))
