"""Experiment configuration: a flat key=value format with optional sections.

Sections are grouping sugar only: a ``[name]`` header must match the chosen
experiment, and keys inside it mean the same as bare keys. Validation
collects every problem (unknown keys, type mismatches, domain violations)
instead of stopping at the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from . import __version__
from .errors import ConfigError

__all__ = ["ParamSpec", "ExperimentConfig", "EXPERIMENTS", "parse_config", "config_echo"]


@dataclass(frozen=True)
class ParamSpec:
    kind: str  # int | float | str | bool | floats
    default: Any
    check: Callable[[Any], str | None] | None = None


def _in_range(lo, hi, *, lo_open=False, hi_open=False, name=""):
    def check(v):
        ok_lo = v > lo if lo_open else v >= lo
        ok_hi = v < hi if hi_open else v <= hi
        if not (ok_lo and ok_hi):
            lo_b = "(" if lo_open else "["
            hi_b = ")" if hi_open else "]"
            return f"must lie in {lo_b}{lo}, {hi}{hi_b}, got {v}"
        return None

    return check


_GAMMA = _in_range(1.0, 2.0, lo_open=True)
_PROB = _in_range(0.0, 1.0, lo_open=True, hi_open=True)
_POS = _in_range(0.0, math.inf, lo_open=True, hi_open=True)
_POS_INT = _in_range(1, 1 << 62)


EXPERIMENTS: dict[str, dict[str, ParamSpec]] = {
    # Poisson mean-threshold grid, overhead control, algebraic inversion;
    # optional distribution-identity rows (Pareto/Poisson/exponential).
    "thresholds": {
        "c_max": ParamSpec("int", 200, _POS_INT),
        "alphas": ParamSpec("floats", [0.1, 0.01, 1e-4]),
        "gammas": ParamSpec("floats", [1.1, 1.5, 2.0]),
        "overhead_probs": ParamSpec("floats", [0.1, 0.01, 1e-3]),
        "trials": ParamSpec("int", 10000, _POS_INT),
        "identities": ParamSpec("bool", False),
        "identity_draws": ParamSpec("int", 100000, _POS_INT),
    },
    # Type I / II rates of the thresholding mechanism at desk scale.
    "gtm-accuracy": {
        "eps": ParamSpec("float", 1.0, _POS),
        "eps_t": ParamSpec("float", 0.05, _in_range(0.0, math.inf, hi_open=True)),
        "theta": ParamSpec("float", 1.0, _POS),
        "gamma": ParamSpec("float", 1.5, _GAMMA),
        "beta": ParamSpec("float", 0.2, _PROB),
        "p_star": ParamSpec("float", 0.5, _PROB),
        "T": ParamSpec("int", 50, _POS_INT),
        "halt_at": ParamSpec("int", 25, _POS_INT),
        "trials": ParamSpec("int", 200, _POS_INT),
    },
    # Transcript-level privacy ratios on adjacent Laplace-instance streams,
    # pure and purified.
    "privacy-audit": {
        "eps": ParamSpec("float", 1.0, _POS),
        "eps_t": ParamSpec("float", 0.2, _POS),
        "theta": ParamSpec("float", 1.0, _POS),
        "gamma": ParamSpec("float", 1.5, _GAMMA),
        "beta": ParamSpec("float", 0.2, _PROB),
        "p_star": ParamSpec("float", 0.5, _PROB),
        "steps": ParamSpec("int", 5, _POS_INT),
        "p_low": ParamSpec("float", 0.05, _PROB),
        "p_halt": ParamSpec("float", 0.3, _PROB),
        "delta1": ParamSpec("float", 1e-5, _in_range(0.0, 1.0, hi_open=True)),
        "slack": ParamSpec("float", 1.1, _in_range(1.0, math.inf, hi_open=True)),
        "max_lambda": ParamSpec("float", 1e15, _POS),
        "trials": ParamSpec("int", 100000, _POS_INT),
    },
    # Per-step evaluation counts against the design bound and the universal floor.
    "sample-complexity": {
        "eps": ParamSpec("float", 1.0, _POS),
        "eps_t": ParamSpec("float", 0.05, _POS),
        "theta": ParamSpec("float", 1.0, _POS),
        "gamma": ParamSpec("float", 1.5, _GAMMA),
        "beta": ParamSpec("float", 0.2, _PROB),
        "p_star": ParamSpec("float", 0.5, _PROB),
        "T": ParamSpec("int", 20, _POS_INT),
        "trials": ParamSpec("int", 500, _POS_INT),
    },
    # Continual-observation reduction on the threshold-count fixture.
    "co-demo": {
        "m": ParamSpec("int", 16, _in_range(2, 32)),
        "stream_length": ParamSpec("int", 2000, _POS_INT),
        "kappa": ParamSpec("float", 0.5, _POS),
        "eps": ParamSpec("float", 1.0, _in_range(0.0, 1.0, lo_open=True)),
        "delta": ParamSpec("float", 0.0, _in_range(0.0, 1.0, hi_open=True)),
        "beta": ParamSpec("float", 0.1, _in_range(0.0, 1.0 / math.e, lo_open=True, hi_open=True)),
        "p_star": ParamSpec("float", 0.4, _in_range(0.0, 0.5, lo_open=True)),
        "gamma": ParamSpec("float", 1.5, _GAMMA),
        "C1": ParamSpec("float", 4.0, _POS),
        "C_H": ParamSpec("float", 4.0, _POS),
        "beta_A": ParamSpec("float", 0.2, _PROB),
        "stream_file": ParamSpec("str", ""),
        "trials": ParamSpec("int", 1, _POS_INT),
    },
    # Rejection-threshold comparison: this toolkit vs prior-work testers.
    "compare-baselines": {
        "T": ParamSpec("int", 100, _POS_INT),
        "beta": ParamSpec("float", 0.1, _PROB),
        "eps1": ParamSpec("float", 0.01, _POS),
        "eps": ParamSpec("float", 0.5, _POS),
        "p_star": ParamSpec("float", 0.5, _PROB),
        "theta": ParamSpec("float", 1.0, _POS),
        "gamma": ParamSpec("float", 1.5, _GAMMA),
        "lt_eps0": ParamSpec("float", 0.1, _PROB),
        "lt_delta": ParamSpec("float", 0.1, _PROB),
        "probes": ParamSpec("int", 12, _POS_INT),
        "trials": ParamSpec("int", 500, _POS_INT),
    },
}

_COMMON = {
    "seed": ParamSpec("int", 0),
    "out": ParamSpec("str", ""),
    "format": ParamSpec("str", "csv", lambda v: None if v in ("csv", "json") else
                        f"must be 'csv' or 'json', got {v!r}"),
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    out: str
    fmt: str
    params: dict[str, Any] = field(default_factory=dict)


def _coerce(raw: str, spec: ParamSpec):
    if spec.kind == "int":
        return int(raw)
    if spec.kind == "float":
        return float(raw)
    if spec.kind == "bool":
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if spec.kind == "floats":
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError("expected a comma-separated list of numbers")
        return [float(p) for p in parts]
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    errors: list[str] = []
    entries: list[tuple[str, str, str, int]] = []
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"line {lineno}: expected key=value, got {raw!r}")
            continue
        entries.append((section, key.strip(), value.strip(), lineno))

    experiment = None
    for sec, key, value, lineno in entries:
        if key == "experiment" and sec == "":
            experiment = value
    if experiment is None:
        errors.append("missing required key 'experiment'")
    elif experiment not in EXPERIMENTS:
        errors.append(
            f"unknown experiment {experiment!r}; expected one of {sorted(EXPERIMENTS)}"
        )
        experiment = None

    schema = EXPERIMENTS.get(experiment, {}) if experiment else {}
    common_values = {name: spec.default for name, spec in _COMMON.items()}
    params = {name: spec.default for name, spec in schema.items()}

    for sec, key, value, lineno in entries:
        if key == "experiment":
            if sec != "":
                errors.append(f"line {lineno}: 'experiment' must be set outside sections")
            continue
        if sec and experiment and sec != experiment:
            errors.append(
                f"line {lineno}: section [{sec}] does not match experiment {experiment!r}"
            )
            continue
        if key in _COMMON and sec == "":
            spec = _COMMON[key]
            target = common_values
        elif key in schema:
            spec = schema[key]
            target = params
        else:
            if experiment:
                errors.append(f"line {lineno}: unknown key {key!r} for {experiment!r}")
            continue
        try:
            coerced = _coerce(value, spec)
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
            continue
        if spec.check is not None:
            problem = spec.check(coerced)
            if problem:
                errors.append(f"line {lineno}: {key}: {problem}")
                continue
        target[key] = coerced

    if errors:
        raise ConfigError(errors)
    assert experiment is not None
    return ExperimentConfig(
        experiment=experiment,
        seed=common_values["seed"],
        out=common_values["out"],
        fmt=common_values["format"],
        params=params,
    )


def config_echo(config: ExperimentConfig) -> dict[str, Any]:
    """Exact-config metadata block for emitted tables."""
    echo: dict[str, Any] = {
        "experiment": config.experiment,
        "seed": config.seed,
        "version": __version__,
    }
    for key in sorted(config.params):
        value = config.params[key]
        if isinstance(value, list):
            value = ",".join(repr(v) for v in value)
        echo[f"param.{key}"] = value
    return echo
