"""Run configuration: a JSON document validated strictly before any computation.

Top-level sections (all optional except ``regime`` for simulate/sweep)::

    regime      {tag, lambda, n, eps_max}
    population  {size, scheme: {kind, value | lo, hi | lambda_max}}
    plan        {seed, burn_in, samples, stride, replicas}
    histogram   {bins, binning}
    fit         {method, xmin, xmin_quantile, xmax, xmax_quantile}
    sweep       {grid, lyapunov_draws, threshold, tol}
    output      {dir, samples}

``regime.lambda`` and ``population.scheme.lambda_max`` may be lists; each value
becomes a separate variant written to its own sub-directory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from stochmap.analytics.distributions import Binning
from stochmap.analytics.tails import DEFAULT_XMIN_QUANTILE, TailMethod
from stochmap.analytics.transition import BISECTION_TOL, LYAPUNOV_DRAWS, ORDER_THRESHOLD
from stochmap.engine import MapCoefficients, SimulationPlan
from stochmap.regimes import LambdaScheme, Regime, RegimeTag, SchemeKind, make_coefficients


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_SECTIONS = {
    "regime": {"tag", "lambda", "n", "eps_max"},
    "population": {"size", "scheme"},
    "plan": {"seed", "burn_in", "samples", "stride", "replicas"},
    "histogram": {"bins", "binning"},
    "fit": {"method", "xmin", "xmin_quantile", "xmax", "xmax_quantile"},
    "sweep": {"grid", "lyapunov_draws", "threshold", "tol"},
    "output": {"dir", "samples"},
}
_SCHEME_KEYS = {"kind", "value", "lo", "hi", "lambda_max"}
_GRID_KEYS = {"start", "stop", "step"}


@dataclass(frozen=True)
class HistogramRequest:
    bins: int = 50
    binning: Binning = Binning.LINEAR


@dataclass(frozen=True)
class FitRequest:
    method: TailMethod = TailMethod.HILL
    xmin: float | None = None
    xmin_quantile: float | None = DEFAULT_XMIN_QUANTILE
    xmax: float | None = None
    xmax_quantile: float | None = None

    def kwargs(self) -> dict:
        return {
            "xmin": self.xmin,
            "xmin_quantile": self.xmin_quantile,
            "xmax": self.xmax,
            "xmax_quantile": self.xmax_quantile,
        }


@dataclass(frozen=True)
class SweepRequest:
    grid: tuple[float, ...]
    lyapunov_draws: int = LYAPUNOV_DRAWS
    threshold: float = ORDER_THRESHOLD
    tol: float = BISECTION_TOL


@dataclass(frozen=True)
class Variant:
    """One fully resolved simulation: a regime or a population, plus its label."""

    label: str | None
    regime: Regime
    eps_max: float = 1.0
    population_size: int | None = None
    scheme: LambdaScheme | None = None

    def coefficients(self) -> MapCoefficients:
        return make_coefficients(self.regime, eps_max=self.eps_max)


@dataclass(frozen=True)
class RunConfig:
    variants: tuple[Variant, ...]
    plan: SimulationPlan
    tag: RegimeTag | None = None
    eps_max: float = 1.0
    histogram: HistogramRequest = HistogramRequest()
    fit: FitRequest | None = None
    sweep: SweepRequest | None = None
    output_dir: Path = Path(".")
    write_samples: bool = False
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def with_seed(self, seed: int) -> RunConfig:
        try:
            return replace(self, plan=replace(self.plan, seed=seed))
        except (TypeError, ValueError) as exc:
            raise ConfigError("--seed", str(exc)) from None


def _check_keys(obj: Any, allowed: set[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(path, "must be an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return obj


def _number(obj: dict, key: str, path: str, default=None, *, allow_none=True):
    value = obj.get(key, default)
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{path}.{key}", "is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}", "must be finite")
    return float(value)


def _integer(obj: dict, key: str, path: str, default: int, lo: int) -> int:
    value = obj.get(key, default)
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}", f"must be an integer, got {value!r}")
    if value < lo:
        raise ConfigError(f"{path}.{key}", f"must be >= {lo}, got {value}")
    return value


def _numbers(obj: dict, key: str, path: str) -> list[float] | None:
    """A number or a non-empty list of numbers."""
    value = obj.get(key)
    if value is None:
        return None
    if isinstance(value, list):
        if not value:
            raise ConfigError(f"{path}.{key}", "list must not be empty")
        return [_number({key: v}, key, path) for v in value]
    return [_number(obj, key, path)]


def _plan(raw: dict) -> SimulationPlan:
    obj = _check_keys(raw.get("plan", {}), _SECTIONS["plan"], "plan")
    d = SimulationPlan()
    seed = obj.get("seed", d.seed)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("plan.seed", f"must be an unsigned 64-bit integer, got {seed!r}")
    return SimulationPlan(
        seed=seed,
        burn_in=_integer(obj, "burn_in", "plan", d.burn_in, 0),
        samples=_integer(obj, "samples", "plan", d.samples, 1),
        stride=_integer(obj, "stride", "plan", d.stride, 1),
        replicas=_integer(obj, "replicas", "plan", d.replicas, 1),
    )


def _enum(cls, value, path):
    try:
        return cls.parse(value) if hasattr(cls, "parse") else cls(str(value).upper())
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(path, f"must be one of {choices}, got {value!r}") from None


def _variants(raw: dict) -> tuple[Variant, ...]:
    if "regime" not in raw:
        raise ConfigError("regime", "is required")
    reg = _check_keys(raw["regime"], _SECTIONS["regime"], "regime")
    if "tag" not in reg:
        raise ConfigError("regime.tag", "is required")
    tag = _enum(RegimeTag, reg["tag"], "regime.tag")
    n = _number(reg, "n", "regime")
    eps_max = _number(reg, "eps_max", "regime", 1.0)
    lambdas = _numbers(reg, "lambda", "regime")

    pop = raw.get("population")
    if pop is None:
        if tag is RegimeTag.GIBRAT:
            lambdas = lambdas or [1.0]
        elif lambdas is None:
            # only a sweep can run without a fixed lambda
            return ()
        out = []
        for lam in lambdas:
            label = f"lambda_{lam!r}" if len(lambdas) > 1 else None
            out.append(_resolve(label, "regime", lambda: Variant(label, Regime(tag, lam, n), eps_max)))
        return tuple(out)

    if lambdas is not None:
        raise ConfigError("regime.lambda", "must be omitted when a population is given")
    pop = _check_keys(pop, _SECTIONS["population"], "population")
    size = _integer(pop, "size", "population", 200, 1)
    if "scheme" not in pop:
        raise ConfigError("population.scheme", "is required")
    sch = _check_keys(pop["scheme"], _SCHEME_KEYS, "population.scheme")
    if "kind" not in sch:
        raise ConfigError("population.scheme.kind", "is required")
    kind = _enum(SchemeKind, sch["kind"], "population.scheme.kind")
    path = "population.scheme"
    maxima = _numbers(sch, "lambda_max", path) or [None]
    out = []
    for lam_max in maxima:
        label = f"lambda_max_{lam_max!r}" if len(maxima) > 1 else None

        def build(lam_max=lam_max, label=label):
            scheme = LambdaScheme(
                kind,
                value=_number(sch, "value", path),
                lo=_number(sch, "lo", path),
                hi=_number(sch, "hi", path),
                lambda_max=lam_max,
            )
            return Variant(label, Regime(tag, 0.0, n), eps_max, size, scheme)

        out.append(_resolve(label, path, build))
    return tuple(out)


def _resolve(label, path, build) -> Variant:
    try:
        variant = build()
        if variant.scheme is None:
            variant.coefficients()
        elif variant.regime.tag is RegimeTag.POWER_LAW:
            # the steepest agent sets the largest coefficient; validate the extremes
            for lam in (0.0, 0.999):
                make_coefficients(Regime(variant.regime.tag, lam, variant.regime.n))
    except (TypeError, ValueError) as exc:
        where = f"{path}[{label}]" if label else path
        raise ConfigError(where, str(exc)) from None
    return variant


def _grid(value) -> tuple[float, ...]:
    if isinstance(value, dict):
        g = _check_keys(value, _GRID_KEYS, "sweep.grid")
        start = _number(g, "start", "sweep.grid", allow_none=False)
        stop = _number(g, "stop", "sweep.grid", allow_none=False)
        step = _number(g, "step", "sweep.grid", allow_none=False)
        if step <= 0 or stop < start:
            raise ConfigError("sweep.grid", "needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return tuple(float(x) for x in np.round(start + step * np.arange(count), 12))
    if isinstance(value, list) and value:
        return tuple(_number({"grid": v}, "grid", "sweep") for v in value)
    raise ConfigError("sweep.grid", "must be a non-empty list or {start, stop, step}")


def parse_config(raw: dict) -> RunConfig:
    """Validate a decoded config document; raises :class:`ConfigError`."""
    _check_keys(raw, set(_SECTIONS), "")
    variants = _variants(raw) if "regime" in raw else ()
    tag, eps_max = None, 1.0
    if "regime" in raw:
        tag = RegimeTag(raw["regime"]["tag"].upper())
        eps_max = _number(raw["regime"], "eps_max", "regime", 1.0)
    plan = _plan(raw)

    h = _check_keys(raw.get("histogram", {}), _SECTIONS["histogram"], "histogram")
    hist = HistogramRequest(
        bins=_integer(h, "bins", "histogram", 50, 1),
        binning=_enum(Binning, h.get("binning", "LINEAR"), "histogram.binning"),
    )

    fit = None
    if raw.get("fit") is not None:
        f = _check_keys(raw["fit"], _SECTIONS["fit"], "fit")
        fit = FitRequest(
            method=_enum(TailMethod, f.get("method", "HILL"), "fit.method"),
            xmin=_number(f, "xmin", "fit"),
            xmin_quantile=_number(f, "xmin_quantile", "fit", DEFAULT_XMIN_QUANTILE),
            xmax=_number(f, "xmax", "fit"),
            xmax_quantile=_number(f, "xmax_quantile", "fit"),
        )
        for key in ("xmin_quantile", "xmax_quantile"):
            q = getattr(fit, key)
            if q is not None and not 0 <= q < 1:
                raise ConfigError(f"fit.{key}", f"must lie in [0, 1), got {q}")

    sweep = None
    if raw.get("sweep") is not None:
        s = _check_keys(raw["sweep"], _SECTIONS["sweep"], "sweep")
        if "grid" not in s:
            raise ConfigError("sweep.grid", "is required")
        sweep = SweepRequest(
            grid=_grid(s["grid"]),
            lyapunov_draws=_integer(s, "lyapunov_draws", "sweep", LYAPUNOV_DRAWS, 1),
            threshold=_number(s, "threshold", "sweep", ORDER_THRESHOLD),
            tol=_number(s, "tol", "sweep", BISECTION_TOL),
        )
        grid = np.asarray(sweep.grid)
        if np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] >= 1:
            raise ConfigError("sweep.grid", "must be strictly increasing inside [0, 1)")
        if sweep.tol <= 0:
            raise ConfigError("sweep.tol", "must be positive")

    o = _check_keys(raw.get("output", {}), _SECTIONS["output"], "output")
    out_dir = o.get("dir", ".")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.dir", "must be a non-empty string")
    samples = o.get("samples", False)
    if not isinstance(samples, bool):
        raise ConfigError("output.samples", "must be true or false")

    return RunConfig(variants, plan, tag, eps_max, hist, fit, sweep, Path(out_dir), samples, raw)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a config file. I/O failures propagate as OSError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON ({exc})") from None
    return parse_config(raw)
