"""Command-line interface.

Settings come from three layers, later ones winning: built-in defaults (with
``LONGMEM_SEED`` as the fallback seed), a ``key=value`` file given with
``--config``, and command-line flags.

Exit codes: 0 success, 1 failed self-check, 2 invalid configuration,
3 non-embeddable covariance, 4 clamped estimate (``estimate`` only).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields

import numpy as np

from .errors import InsufficientDataError, NonEmbeddableError, ParameterDomainError
from .estimators import estimate
from .gaussian_sim import (
    SeedSpec,
    read_series_csv,
    simulate_ar1,
    write_series_binary,
    write_series_csv,
)
from .montecarlo import (
    FULL_SCALE_REPS,
    McConfig,
    consistency_sweep,
    run_mc,
    summary_lines,
    write_grid_csv,
    write_replications_csv,
    write_sweep_csv,
)
from .moment_map import MomentMap
from .noise_models import CovarianceModel, model_from_config, spectral_constant

SUBCOMMANDS = ("simulate", "estimate", "fmap", "constants", "mc", "sweep", "check")
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_MODEL, EXIT_CLAMPED = 0, 1, 2, 3, 4
SEED_ENV = "LONGMEM_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    model: str | None = None
    H: float | None = None
    d: float | None = None
    sigma: float | None = None
    custom_file: str | None = None
    theta: float = 0.6
    alpha: float = 0.4
    n: int = 3000
    reps: int = 2000
    seed: int = 0
    workers: int = 1
    tol: float = 1e-10
    out: str | None = None
    in_: str | None = None
    grid: str = "0.01:0.99:0.01"
    n_grid: str = "500,2000,8000"
    records: str | None = None
    grid_out: str | None = None
    format: str = "csv"
    burn_in: int = 0
    inverse: bool = False

    def build_model(self) -> CovarianceModel:
        return model_from_config(
            {"model": self.model, "H": self.H, "d": self.d, "sigma": self.sigma, "custom_file": self.custom_file}
        )

    def to_lines(self) -> list[str]:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            key = "in" if f.name == "in_" else f.name
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return lines


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _key_to_field(key: str) -> str:
    key = key.strip().replace("-", "_")
    return "in_" if key == "in" else key


def _coerce(name: str, raw):
    if raw is None:
        return None
    kind = _FIELD_TYPES[name]
    try:
        if "bool" in kind:
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in kind and "float" not in kind:
            return int(str(raw).strip())
        if "float" in kind:
            return float(str(raw).strip())
    except ValueError:
        raise ConfigError(f"invalid value for {name}: {raw!r}") from None
    return str(raw).strip()


def read_config_file(path: str) -> dict[str, object]:
    """Parse ``key=value`` lines; ``#`` starts a comment; unknown keys are errors."""
    values: dict[str, object] = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, raw = line.split("=", 1)
            name = _key_to_field(key)
            if name not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key.strip()!r}")
            values[name] = _coerce(name, raw)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longmem",
        description="AR(1) with long-memory Gaussian noise: simulation, moment estimation, Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="key=value file; flags override its entries")
    g.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    g = common.add_argument_group("noise model")
    g.add_argument("--model", choices=["fgn", "arfima", "white", "custom"])
    g.add_argument("--H", type=float, help="Hurst exponent (fgn), or d + 1/2 (arfima)")
    g.add_argument("--d", type=float, help="ARFIMA memory parameter in (0, 1/2)")
    g.add_argument("--sigma", type=float, help="ARFIMA scale or white-noise variance")
    g.add_argument("--custom-file", help="CSV of R(0..K) for model=custom")
    g = common.add_argument_group("run")
    g.add_argument("--theta", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--n", type=int)
    g.add_argument("--reps", type=int)
    g.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    g.add_argument("--workers", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--burn-in", type=int, help="discard leading observations (simulate only, exploratory)")
    g.add_argument("--paper-scale", action="store_true", help=f"use {FULL_SCALE_REPS} replications")
    g = common.add_argument_group("input/output")
    g.add_argument("--out", help="output path (default: standard output)")
    g.add_argument("--in", dest="in_", help="input series CSV (estimate)")
    g.add_argument("--format", choices=["csv", "bin"], help="series output encoding (simulate)")
    g.add_argument("--grid", help="theta grid start:stop:step, inclusive (fmap)")
    g.add_argument("--inverse", action="store_const", const=True, help="emit f,theta columns (fmap)")
    g.add_argument("--n-grid", help="comma-separated sample sizes (sweep)")
    g.add_argument("--records", help="per-replication CSV path (mc)")
    g.add_argument("--grid-out", help="2-D histogram CSV path (mc)")
    helps = {
        "simulate": "simulate one AR(1) path to CSV",
        "estimate": "estimate theta and alpha from a series CSV",
        "fmap": "tabulate the moment map f on a theta grid",
        "constants": "print the limit-law constants",
        "mc": "Monte Carlo normality run",
        "sweep": "Monte Carlo consistency sweep over sample sizes",
        "check": "run the oracle and identity battery",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_config(argv=None) -> tuple[RunConfig, bool]:
    """Resolve defaults, config file and flags; returns ``(config, print_config)``."""
    args = build_parser().parse_args(argv)
    values: dict[str, object] = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        values["seed"] = _coerce("seed", env_seed)
    if args.config:
        file_values = read_config_file(args.config)
        file_sub = file_values.pop("subcommand", None)
        if file_sub is not None and file_sub != args.subcommand:
            raise ConfigError(f"config file is for {file_sub!r}, not {args.subcommand!r}")
        values.update(file_values)
    for name in _FIELD_TYPES:
        if name == "subcommand":
            continue
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    if args.paper_scale:
        values["reps"] = FULL_SCALE_REPS
    cfg = RunConfig(subcommand=args.subcommand, **values)
    validate(cfg)
    return cfg, args.print_config


def validate(cfg: RunConfig) -> None:
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}")
    if cfg.subcommand == "check":
        return
    if cfg.model is None:
        raise ConfigError("--model is required")
    try:
        cfg.build_model()
    except (ParameterDomainError, OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if not (0.0 < cfg.theta < 1.0):
        raise ConfigError(f"theta={cfg.theta} outside (0, 1)")
    if cfg.n < 2:
        raise ConfigError("n must be at least 2")
    if cfg.reps < 1 or cfg.workers < 1:
        raise ConfigError("reps and workers must be positive")
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.burn_in < 0:
        raise ConfigError("burn_in must be non-negative")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    if cfg.subcommand == "estimate" and not cfg.in_:
        raise ConfigError("estimate needs --in")
    if cfg.subcommand == "simulate" and cfg.format == "bin" and not cfg.out:
        raise ConfigError("binary output needs --out")
    if cfg.subcommand == "fmap":
        parse_grid(cfg.grid)
    if cfg.subcommand == "sweep":
        parse_n_grid(cfg.n_grid)


def parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise ConfigError(f"grid must be start:stop:step, got {text!r}") from None
    if not (step > 0 and stop >= start):
        raise ConfigError(f"bad grid {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def parse_n_grid(text: str) -> list[int]:
    try:
        grid = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"n_grid must be comma-separated integers, got {text!r}") from None
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 2:
        raise ConfigError(f"n_grid must be increasing integers >= 2, got {text!r}")
    return grid


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _mc_config(cfg: RunConfig) -> McConfig:
    return McConfig(
        model=cfg.build_model(), theta=cfg.theta, alpha=cfg.alpha, n=cfg.n,
        reps=cfg.reps, master_seed=cfg.seed, workers=cfg.workers, tol=cfg.tol,
    )


def dispatch(cfg: RunConfig) -> int:
    sub = cfg.subcommand
    if sub == "check":
        from .selfcheck import run_checks

        ok = True
        for name, value, tol, passed in run_checks():
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} {name} value={value:.3e} tol={tol:.0e}")
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    model = cfg.build_model()
    if sub == "simulate":
        path = simulate_ar1(model, cfg.theta, cfg.alpha, cfg.n, SeedSpec(cfg.seed, 0), burn_in=cfg.burn_in)
        if cfg.format == "bin":
            write_series_binary(cfg.out, path)
        else:
            with _output(cfg.out) as fh:
                write_series_csv(fh, path)
        return EXIT_OK

    mm = MomentMap(model, cfg.tol)
    if sub == "estimate":
        x = read_series_csv(cfg.in_)
        if x.size < 2:
            raise ConfigError(f"{cfg.in_}: need at least two values")
        res = estimate(mm, x)
        with _output(cfg.out) as fh:
            for k, v in res.as_dict().items():
                text = str(v).lower() if isinstance(v, bool) else repr(v)
                fh.write(f"{k}={text}\n")
        return EXIT_CLAMPED if res.clamped else EXIT_OK

    if sub == "fmap":
        table = mm.tabulate_f(parse_grid(cfg.grid))
        with _output(cfg.out) as fh:
            if cfg.inverse:
                fh.write("f,theta\n")
                rows = table[:, ::-1]
            else:
                fh.write("theta,f\n")
                rows = table
            for a, b in rows.tolist():
                fh.write(f"{a!r},{b!r}\n")
        return EXIT_OK

    if sub == "constants":
        consts = mm.variance_constants(cfg.theta)
        with _output(cfg.out) as fh:
            for k, v in model.to_config().items():
                fh.write(f"{k}={v}\n")
            for k, v in consts.as_dict().items():
                fh.write(f"{k}={v if v is None else float(v)!r}\n")
            if consts.H is not None:
                fh.write(f"C_H={spectral_constant(consts.H)!r}\n")
        return EXIT_OK

    if sub == "mc":
        summary = run_mc(_mc_config(cfg))
        if cfg.records:
            write_replications_csv(cfg.records, summary.records)
        if cfg.grid_out and summary.grid is not None:
            write_grid_csv(cfg.grid_out, summary.grid)
        with _output(cfg.out) as fh:
            fh.write("\n".join(summary_lines(summary)) + "\n")
        return EXIT_OK

    if sub == "sweep":
        rows = consistency_sweep(_mc_config(cfg), parse_n_grid(cfg.n_grid))
        with _output(cfg.out) as fh:
            write_sweep_csv(fh, rows)
        return EXIT_OK

    raise ConfigError(f"unknown subcommand {sub!r}")


def main(argv=None) -> int:
    try:
        cfg, print_config = parse_config(argv)
        if print_config:
            print("\n".join(cfg.to_lines()))
            return EXIT_OK
        return dispatch(cfg)
    except (ConfigError, ParameterDomainError, InsufficientDataError) as exc:
        print(f"longmem: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonEmbeddableError as exc:
        print(f"longmem: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
