"""Command-line entry point: simulate, sweep, fit, oracle.

Exit codes: 0 success, 2 invalid configuration or input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from stochmap import oracle
from stochmap.analytics import (
    estimate_critical_lambda,
    fit_tail,
    histogram,
    moments,
    sweep_lambda,
)
from stochmap.analytics.tails import TailMethod
from stochmap.config import ConfigError, FitRequest, RunConfig, Variant, load_config, parse_config
from stochmap.engine import AgentState, SimulationPlan, evolve_ensemble, evolve_population
from stochmap.regimes import (
    Regime,
    RegimeTag,
    build_population,
    make_coefficients,
    population_coefficients,
)
from stochmap.rng import U64_MAX

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

HIST_HEADER = "bin_left,bin_right,density,count"
SWEEP_HEADER = "lambda,order_parameter,variance,lyapunov"


def _fmt(x: float) -> str:
    return repr(float(x))


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _dumps(obj: dict) -> str:
    return json.dumps({k: _json_value(v) for k, v in obj.items()}, indent=2) + "\n"


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def histogram_csv(samples, bins: int, binning) -> str:
    """Occupied bins only, so every listed density is positive."""
    h = histogram(samples, bins, binning)
    lines = [HIST_HEADER]
    for i in np.flatnonzero(h.counts):
        lines.append(
            f"{_fmt(h.edges[i])},{_fmt(h.edges[i + 1])},{_fmt(h.density[i])},{int(h.counts[i])}"
        )
    return "\n".join(lines) + "\n"


def summary_dict(variant: Variant, seed: int, samples) -> dict:
    s = moments(samples)
    coeffs = variant.coefficients()
    return {
        "regime": variant.regime.tag.value,
        "lambda": None if variant.scheme is not None else variant.regime.lam,
        "n": None if coeffs.multiplicative else coeffs.n,
        "seed": seed,
        "count": s.count,
        "mean": s.mean,
        "variance": s.variance,
        "skewness": s.skewness,
        "kurtosis": s.kurtosis,
    }


def _prepare(variant: Variant, plan: SimulationPlan):
    """Initial states and coefficients; validates everything before a run starts."""
    if variant.scheme is None:
        lam = variant.regime.lam if variant.regime.lam < 1.0 else 0.0
        return AgentState(1.0, lam=lam), variant.coefficients()
    population = build_population(variant.population_size, variant.scheme, plan.seed)
    coeffs = population_coefficients(variant.regime.tag, population, variant.regime.n)
    return population, coeffs


def run_variant(variant: Variant, plan: SimulationPlan, prepared, threads: int) -> np.ndarray:
    initial, coeffs = prepared
    if variant.scheme is None:
        run = evolve_ensemble(initial, coeffs, plan, threads=threads)
    else:
        run = evolve_population(initial, coeffs, plan, threads=threads)
    return run.pooled()


def cmd_simulate(cfg: RunConfig, threads: int = 1) -> list[Path]:
    if cfg.tag is None:
        raise ConfigError("regime", "is required")
    if not cfg.variants:
        raise ConfigError("regime.lambda", "is required for simulate without a population")
    try:
        prepared = [_prepare(v, cfg.plan) for v in cfg.variants]
    except ValueError as exc:
        raise ConfigError("population", str(exc)) from None
    pending: list[tuple[Path, str]] = []
    for variant, prep in zip(cfg.variants, prepared):
        out = cfg.output_dir / variant.label if variant.label else cfg.output_dir
        samples = run_variant(variant, cfg.plan, prep, threads)
        if not np.all(np.isfinite(samples)):
            raise ConfigError("regime", "samples overflow floating range; shorten the run or lower eps_max")
        pending.append((out / "hist.csv", histogram_csv(samples, cfg.histogram.bins, cfg.histogram.binning)))
        pending.append((out / "summary.json", _dumps(summary_dict(variant, cfg.plan.seed, samples))))
        if cfg.fit is not None:
            fit = fit_tail(samples, cfg.fit.method, **cfg.fit.kwargs())
            pending.append((out / "fit.json", _dumps(fit.as_dict())))
        if cfg.write_samples:
            pending.append((out / "samples.txt", "".join(f"{_fmt(x)}\n" for x in samples)))
    for path, text in pending:
        write_atomic(path, text)
    return [p for p, _ in pending]


def cmd_sweep(cfg: RunConfig, threads: int = 1) -> list[Path]:
    if cfg.sweep is None:
        raise ConfigError("sweep", "is required for the sweep command")
    if cfg.tag is not RegimeTag.OPINION:
        raise ConfigError("regime.tag", "sweep supports the OPINION regime only")
    eps_max = cfg.eps_max
    req = cfg.sweep

    def template(lam):
        return make_coefficients(Regime(RegimeTag.OPINION, lam), eps_max=eps_max)

    result = sweep_lambda(
        template, req.grid, cfg.plan, lyapunov_draws=req.lyapunov_draws, threads=threads
    )
    est = estimate_critical_lambda(result, threshold=req.threshold, tol=req.tol, threads=threads)
    rows = [SWEEP_HEADER]
    for lam, o, v, ly in zip(result.lambda_grid, result.order_parameter, result.variance, result.lyapunov):
        rows.append(f"{_fmt(lam)},{_fmt(o)},{_fmt(v)},{_fmt(ly)}")
    sidecar = {
        "lambda_c_lyapunov": est.lambda_c_lyapunov,
        "lambda_c_order": est.lambda_c_order,
        "mean_log_one_plus_eps": result.mean_log_one_plus_eps,
        "lyapunov_draws": result.lyapunov_draws,
        "threshold": req.threshold,
        "seed": cfg.plan.seed,
    }
    paths = [cfg.output_dir / "sweep.csv", cfg.output_dir / "sweep.json"]
    write_atomic(paths[0], "\n".join(rows) + "\n")
    write_atomic(paths[1], _dumps(sidecar))
    return paths


def read_samples(path: str | Path) -> np.ndarray:
    """One value per line; blank lines are ignored. Bad numbers raise ValueError."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return np.asarray(values)


def cmd_fit(samples_path: str | Path, request: FitRequest, out_dir: Path | None = None) -> dict:
    samples = read_samples(samples_path)
    if samples.size == 0:
        raise ValueError(f"{samples_path}: no samples")
    result = fit_tail(samples, request.method, **request.kwargs()).as_dict()
    if out_dir is not None:
        write_atomic(Path(out_dir) / "fit.json", _dumps(result))
    return result


def cmd_oracle(name: str, params: list[str]) -> str:
    if name not in oracle.ORACLES:
        raise ConfigError("oracle", f"unknown name {name!r}; choose from {', '.join(oracle.ORACLES)}")
    try:
        values = [float(p) for p in params]
    except ValueError:
        raise ConfigError("oracle", f"parameters must be numbers, got {params}") from None
    result = oracle.evaluate(name, *values)
    return f"{result.value!r}\t{result.source}"


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {value}")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochmap",
        description="Seeded Monte Carlo and analytics for the capped stochastic map.",
        epilog="Exit codes: 0 success, 2 configuration/validation error, 3 I/O error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, metavar="PATH",
                       help="JSON run configuration (see configs/*.cfg)")
        p.add_argument("--seed", type=_u64, metavar="U64", help="override plan.seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default: output.dir or .)")
        p.add_argument("--threads", type=_nonneg, default=1, metavar="N",
                       help="worker threads, 0 = one per CPU (default: 1)")

    p = sub.add_parser(
        "simulate",
        help="run a regime or population; write hist.csv and summary.json",
        description=(
            "Defaults: plan seed=0 burn_in=10000 samples=100000 stride=1 replicas=1; "
            "histogram bins=50 binning=LINEAR; population size=200; fit (if present) "
            "method=HILL xmin_quantile=0.9. Writes hist.csv, summary.json and, when "
            "requested, fit.json and samples.txt."
        ),
    )
    common(p)
    p = sub.add_parser(
        "sweep",
        help="order-parameter sweep of the OPINION regime; write sweep.csv and sweep.json",
        description=(
            "Defaults: lyapunov_draws=1000000 threshold=0.001 tol=0.0001. "
            "The grid must bracket the Lyapunov root."
        ),
    )
    common(p)
    p = sub.add_parser("fit", help="fit a power-law tail to a file of samples, one per line")
    p.add_argument("samples", help="input file")
    common(p, config_required=False)
    p.add_argument("--method", choices=[m.value for m in TailMethod] + ["LOGLOG"],
                   type=str.upper, help="override fit.method (default HILL)")
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmin-quantile", type=float, help="default 0.9")
    p.add_argument("--xmax", type=float)
    p.add_argument("--xmax-quantile", type=float)
    p = sub.add_parser("oracle", help="print a closed-form reference value")
    p.add_argument("name", help=", ".join(oracle.ORACLES))
    p.add_argument("params", nargs="*", help="numeric parameters")
    return parser


def _fit_request(args, cfg: RunConfig | None) -> FitRequest:
    base = cfg.fit if cfg is not None and cfg.fit is not None else FitRequest()
    raw = {
        "method": args.method or base.method.value,
        "xmin": args.xmin if args.xmin is not None else base.xmin,
        "xmin_quantile": args.xmin_quantile if args.xmin_quantile is not None else base.xmin_quantile,
        "xmax": args.xmax if args.xmax is not None else base.xmax,
        "xmax_quantile": args.xmax_quantile if args.xmax_quantile is not None else base.xmax_quantile,
    }
    if raw["xmin"] is not None:
        raw["xmin_quantile"] = None
    return parse_config({"fit": raw}).fit


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle":
            print(cmd_oracle(args.name, args.params))
            return EXIT_OK
        cfg = load_config(args.config) if args.config else None
        if cfg is not None:
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
            if args.out:
                cfg = replace(cfg, output_dir=Path(args.out))
        if args.command == "simulate":
            for path in cmd_simulate(cfg, args.threads):
                print(path)
        elif args.command == "sweep":
            for path in cmd_sweep(cfg, args.threads):
                print(path)
        elif args.command == "fit":
            out = Path(args.out) if args.out else None
            print(json.dumps(cmd_fit(args.samples, _fit_request(args, cfg), out), indent=2))
    except OSError as exc:
        print(f"stochmap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"stochmap: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
