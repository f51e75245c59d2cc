"""Replicated simulation and estimation with normality diagnostics.

Replication ``i`` always draws its noise from ``derive_seed(master_seed, i)``,
so a run is reproducible bit for bit whatever the number of worker processes.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import ParameterDomainError
from .estimators import estimate, standardized_stats
from .gaussian_sim import CirculantEmbedding, SeedSpec, derive_seed, simulate_ar1
from .moment_map import MomentMap, VarianceConstants
from .noise_models import CovarianceModel, cov_sequence

__all__ = [
    "McConfig",
    "ReplicationRecord",
    "Moments",
    "Grid2D",
    "McSummary",
    "SweepRow",
    "run_replications",
    "run_mc",
    "normality_diagnostics",
    "joint_diagnostics",
    "consistency_sweep",
    "write_replications_csv",
    "write_grid_csv",
    "write_sweep_csv",
    "summary_lines",
]

MIN_DIAGNOSTIC_SAMPLES = 30
FULL_SCALE_REPS = 10_000


@dataclass(frozen=True)
class McConfig:
    model: CovarianceModel
    theta: float = 0.6
    alpha: float = 0.4
    n: int = 3000
    reps: int = 2000
    master_seed: int = 0
    workers: int = 1
    tol: float = 1e-10

    def __post_init__(self) -> None:
        if not (0.0 < self.theta < 1.0):
            raise ParameterDomainError(f"theta={self.theta!r} outside (0, 1)")
        if self.n < 2:
            raise ParameterDomainError("n must be at least 2")
        if self.reps < 1:
            raise ParameterDomainError("reps must be at least 1")
        if self.workers < 1:
            raise ParameterDomainError("workers must be at least 1")

    @property
    def H_effective(self) -> float | None:
        return self.model.long_memory_exponent

    def echo(self) -> dict[str, object]:
        return {
            **self.model.to_config(),
            "theta": self.theta,
            "alpha": self.alpha,
            "n": self.n,
            "reps": self.reps,
            "seed": self.master_seed,
            "workers": self.workers,
            "tol": self.tol,
            "H_effective": self.H_effective,
            "tail_constant": self.model.hypothesis_constant,
        }


class ReplicationRecord(NamedTuple):
    rep: int
    theta_hat: float
    alpha_hat: float
    s2: float
    g1: float
    g2: float
    clamped: bool


@dataclass(frozen=True)
class Moments:
    mean: float
    var: float
    skew: float
    excess_kurtosis: float


@dataclass(frozen=True)
class Grid2D:
    counts: np.ndarray
    x_edges: np.ndarray
    y_edges: np.ndarray


@dataclass
class McSummary:
    config: McConfig
    records: list[ReplicationRecord]
    constants: VarianceConstants
    g1_samples: np.ndarray
    g2_samples: np.ndarray
    pre_samples: np.ndarray
    clamp_count: int
    moments: dict[str, Moments | None] = field(default_factory=dict)
    ks_stat: dict[str, float] = field(default_factory=dict)
    cross_corr: float = float("nan")
    grid: Grid2D | None = None
    runtime: float = 0.0


def _replicate(config: McConfig, mm: MomentMap, constants: VarianceConstants, start: int, stop: int):
    emb = CirculantEmbedding(cov_sequence(config.model, config.n - 1), config.n)
    out = []
    for i in range(start, stop):
        path = simulate_ar1(
            config.model, config.theta, config.alpha, config.n,
            SeedSpec(config.master_seed, i), embedding=emb, keep_noise=False,
        )
        res = estimate(mm, path)
        if res.clamped:
            g1 = g2 = float("nan")
        else:
            g1, g2 = standardized_stats(mm, path, config.theta, config.alpha, result=res, constants=constants)
        out.append(ReplicationRecord(i, res.theta_hat, res.alpha_hat, res.s2, g1, g2, res.clamped))
    return out


def _replicate_star(args):
    return _replicate(*args)


def run_replications(
    config: McConfig,
    mm: MomentMap | None = None,
    constants: VarianceConstants | None = None,
) -> list[ReplicationRecord]:
    """Per-replication records in replication order."""
    if mm is None:
        mm = MomentMap(config.model, config.tol)
    if constants is None:
        constants = mm.variance_constants(config.theta)
    if config.workers == 1:
        return _replicate(config, mm, constants, 0, config.reps)
    n_chunks = min(config.reps, 4 * config.workers)
    bounds = np.linspace(0, config.reps, n_chunks + 1).astype(int)
    jobs = [(config, mm, constants, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    records: list[ReplicationRecord] = []
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        for chunk in pool.map(_replicate_star, jobs):
            records.extend(chunk)
    return records


def normality_diagnostics(samples) -> tuple[Moments, float]:
    """Sample moments and the one-sample KS distance to the standard normal."""
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_DIAGNOSTIC_SAMPLES:
        raise ParameterDomainError(f"need at least {MIN_DIAGNOSTIC_SAMPLES} samples, got {x.size}")
    with np.errstate(all="ignore"):
        moments = Moments(
            mean=float(x.mean()),
            var=float(x.var(ddof=1)),
            skew=float(stats.skew(x)),
            excess_kurtosis=float(stats.kurtosis(x)),
        )
    ks = float(stats.kstest(x, "norm").statistic)
    return moments, ks


def joint_diagnostics(g1, g2, bins: int = 24, extent: float = 4.0) -> tuple[float, Grid2D]:
    """Pearson correlation and a 2-D histogram on ``[-extent, extent]^2``."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if g1.shape != g2.shape:
        raise ParameterDomainError(f"length mismatch: {g1.size} vs {g2.size}")
    if g1.size < MIN_DIAGNOSTIC_SAMPLES:
        raise ParameterDomainError(f"need at least {MIN_DIAGNOSTIC_SAMPLES} pairs, got {g1.size}")
    corr = float(np.corrcoef(g1, g2)[0, 1])
    counts, xe, ye = np.histogram2d(g1, g2, bins=bins, range=[[-extent, extent], [-extent, extent]])
    return corr, Grid2D(counts.astype(int), xe, ye)


def _summarize(config, records, constants, runtime) -> McSummary:
    kept = [r for r in records if not r.clamped]
    g1 = np.array([r.g1 for r in kept])
    g2 = np.array([r.g2 for r in kept])
    pre = np.array([r.s2 for r in kept])
    if math.isfinite(constants.sigma_H_sq):
        pre = math.sqrt(config.n) * (pre - constants.f_value) / math.sqrt(constants.sigma_H_sq)
    else:
        pre = np.full(pre.shape, np.nan)
    summary = McSummary(
        config=config,
        records=records,
        constants=constants,
        g1_samples=g1,
        g2_samples=g2,
        pre_samples=pre,
        clamp_count=len(records) - len(kept),
        runtime=runtime,
    )
    for name, x in (("g1", g1), ("g2", g2), ("pre", pre)):
        if x.size >= MIN_DIAGNOSTIC_SAMPLES and np.all(np.isfinite(x)):
            summary.moments[name], summary.ks_stat[name] = normality_diagnostics(x)
        else:
            summary.moments[name] = None
    if g1.size >= MIN_DIAGNOSTIC_SAMPLES and np.all(np.isfinite(g1)) and np.all(np.isfinite(g2)):
        summary.cross_corr, summary.grid = joint_diagnostics(g1, g2)
    return summary


def run_mc(config: McConfig) -> McSummary:
    """Simulate, estimate and standardize ``config.reps`` replications, then summarize.

    Clamped replications are counted and left out of every diagnostic.
    """
    t0 = time.perf_counter()
    mm = MomentMap(config.model, config.tol)
    constants = mm.variance_constants(config.theta)
    records = run_replications(config, mm, constants)
    return _summarize(config, records, constants, time.perf_counter() - t0)


@dataclass(frozen=True)
class SweepRow:
    n: int
    mae_theta: float
    mae_alpha: float
    clamp_count: int


def consistency_sweep(config: McConfig, n_grid: Sequence[int]) -> list[SweepRow]:
    """Mean absolute errors of both estimators at each sample size in ``n_grid``.

    Sample size ``n`` uses master seed ``derive_seed(config.master_seed, n)``.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ParameterDomainError("n_grid must be strictly increasing")
    mm = MomentMap(config.model, config.tol)
    constants = mm.variance_constants(config.theta)
    rows = []
    for n in n_grid:
        cfg = replace(config, n=n, master_seed=derive_seed(config.master_seed, n))
        recs = [r for r in run_replications(cfg, mm, constants) if not r.clamped]
        rows.append(SweepRow(
            n=n,
            mae_theta=float(np.mean([abs(r.theta_hat - config.theta) for r in recs])),
            mae_alpha=float(np.mean([abs(r.alpha_hat - config.alpha) for r in recs])),
            clamp_count=cfg.reps - len(recs),
        ))
    return rows


def _emit(path_or_file, writer) -> None:
    if hasattr(path_or_file, "write"):
        writer(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            writer(fh)


def write_replications_csv(path_or_file, records: Sequence[ReplicationRecord]) -> None:
    """Columns ``rep,theta_hat,alpha_hat,s2,g1,g2,clamped``; floats in round-trip form."""

    def w(fh):
        fh.write("rep,theta_hat,alpha_hat,s2,g1,g2,clamped\n")
        for r in records:
            fh.write(f"{r.rep},{r.theta_hat!r},{r.alpha_hat!r},{r.s2!r},{r.g1!r},{r.g2!r},{int(r.clamped)}\n")

    _emit(path_or_file, w)


def write_grid_csv(path_or_file, grid: Grid2D) -> None:
    """One row per cell: ``g1_lo,g1_hi,g2_lo,g2_hi,count``."""

    xe, ye, counts = grid.x_edges.tolist(), grid.y_edges.tolist(), grid.counts.tolist()

    def w(fh):
        fh.write("g1_lo,g1_hi,g2_lo,g2_hi,count\n")
        for i, row in enumerate(counts):
            for j, count in enumerate(row):
                fh.write(f"{xe[i]!r},{xe[i + 1]!r},{ye[j]!r},{ye[j + 1]!r},{count}\n")

    _emit(path_or_file, w)


def write_sweep_csv(path_or_file, rows: Sequence[SweepRow]) -> None:
    def w(fh):
        fh.write("n,mae_theta,mae_alpha,clamp_count\n")
        for r in rows:
            fh.write(f"{r.n},{r.mae_theta!r},{r.mae_alpha!r},{r.clamp_count}\n")

    _emit(path_or_file, w)


def summary_lines(summary: McSummary) -> list[str]:
    """``key=value`` lines: config echo, constants, then per-statistic diagnostics."""
    lines = [f"{k}={v}" for k, v in summary.config.echo().items()]
    c = summary.constants
    lines += [
        f"f_theta={c.f_value!r}",
        f"f_prime={c.f_prime!r}",
        f"sigma_H_sq={c.sigma_H_sq!r}",
        f"sigma_1_sq_model={c.sigma_1_sq_model!r}",
        f"clamp_count={summary.clamp_count}",
        f"kept={summary.g1_samples.size}",
    ]
    for name in ("g1", "g2", "pre"):
        m = summary.moments.get(name)
        if m is None:
            continue
        lines += [
            f"{name}_mean={m.mean!r}",
            f"{name}_var={m.var!r}",
            f"{name}_skew={m.skew!r}",
            f"{name}_excess_kurtosis={m.excess_kurtosis!r}",
            f"{name}_ks={summary.ks_stat[name]!r}",
        ]
    lines += [f"cross_corr={summary.cross_corr!r}", f"runtime_s={summary.runtime:.3f}"]
    return lines
