"""Exact stationary Gaussian sampling and AR(1) path generation.

Noise paths come from circulant (Davies-Harte) embedding of the Toeplitz
covariance.  AR(1) paths start from ``X_0 = 0`` and follow
``X_t = alpha + theta X_{t-1} + xi_t``.
"""
from __future__ import annotations

import hashlib
import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.signal import lfilter

from .errors import NonEmbeddableError, ParameterDomainError
from .noise_models import CovarianceModel, cov_sequence

__all__ = [
    "SeriesKind",
    "Series",
    "SeedSpec",
    "derive_seed",
    "make_rng",
    "CirculantEmbedding",
    "sample_stationary_gaussian",
    "sample_cholesky",
    "simulate_ar1",
    "ar1_from_noise",
    "write_series_csv",
    "read_series_csv",
    "write_series_binary",
    "read_series_binary",
]

_MASK64 = (1 << 64) - 1


class SeriesKind(str, Enum):
    NOISE = "noise"
    AR1_PATH = "ar1_path"


@dataclass
class Series:
    values: np.ndarray
    kind: SeriesKind
    meta: dict = field(default_factory=dict)
    noise: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.meta.setdefault("n", self.values.size)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ParameterDomainError("a series needs at least one value")
        if self.meta["n"] != self.values.size:
            raise ValueError("meta['n'] disagrees with the number of values")

    def __len__(self) -> int:
        return self.values.size


def derive_seed(master: int, index: int) -> int:
    """Split a master seed into a per-replication 64-bit seed.

    The result is the first 8 bytes (little-endian) of BLAKE2b over the packed
    pair ``(master mod 2^64, index)``.  This definition is part of the public
    contract and will not change.
    """
    if index < 0:
        raise ParameterDomainError("replication index must be non-negative")
    payload = struct.pack("<QQ", int(master) & _MASK64, int(index) & _MASK64)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    replication_index: int = 0

    @property
    def derived(self) -> int:
        return derive_seed(self.master_seed, self.replication_index)


def make_rng(seed) -> np.random.Generator:
    """Generator for a ``SeedSpec``, a plain integer, or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        seed = seed.derived
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


class CirculantEmbedding:
    """Eigen-decomposition of the circulant of size ``2(n-1)`` embedding ``R(0..n-1)``.

    Build once per (covariance, n) and call :meth:`sample` per replication.
    """

    def __init__(self, cov, n: int, tol_eig: float = 1e-8):
        n = int(n)
        cov = np.asarray(cov, dtype=float)
        if n < 2:
            raise ParameterDomainError("circulant embedding needs n >= 2")
        if cov.size < n:
            raise ParameterDomainError(f"need {n} covariance lags, got {cov.size}")
        row = np.concatenate([cov[:n], cov[n - 2 : 0 : -1]])
        lam = np.fft.fft(row).real
        lam_max = lam.max()
        if lam_max <= 0:
            raise NonEmbeddableError("embedding has no positive eigenvalue")
        floor = -tol_eig * lam_max
        worst = lam.min()
        if worst < floor:
            raise NonEmbeddableError(
                f"embedding eigenvalue {worst:.3e} below -{tol_eig:g} * max ({lam_max:.3e})"
            )
        self.clamped = bool(worst < 0)
        if self.clamped:
            warnings.warn(
                f"clamped small negative embedding eigenvalues (min {worst:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
        self.n = n
        self.size = row.size
        self._scale = np.sqrt(np.maximum(lam, 0.0) / self.size)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        m = self.size
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        return np.fft.fft(self._scale * z).real[: self.n]


def sample_stationary_gaussian(cov, n: int, seed, tol_eig: float = 1e-8) -> Series:
    """Draw one zero-mean Gaussian path with autocovariance ``cov[0..n-1]``."""
    emb = CirculantEmbedding(cov, n, tol_eig=tol_eig)
    seed_meta = seed.derived if isinstance(seed, SeedSpec) else seed
    meta = {"n": int(n), "seed": seed_meta, "eigen_clamped": emb.clamped}
    return Series(emb.sample(make_rng(seed)), SeriesKind.NOISE, meta)


def sample_cholesky(cov, n: int, seed, size: int = 1) -> np.ndarray:
    """Reference sampler through the Cholesky factor; O(n^3), for tests with ``n <= 512``."""
    cov = np.asarray(cov, dtype=float)
    L = cholesky(toeplitz(cov[:n]), lower=True)
    z = make_rng(seed).standard_normal((size, n))
    return z @ L.T


def ar1_from_noise(xi: np.ndarray, theta: float, alpha: float) -> np.ndarray:
    """Run ``X_t = alpha + theta X_{t-1} + xi_t`` from ``X_0 = 0``; returns ``X_1..X_n``."""
    return lfilter([1.0], [1.0, -theta], alpha + np.asarray(xi, dtype=float))


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta < 1.0):
        raise ParameterDomainError(f"theta={theta!r} outside (0, 1)")
    return theta


def simulate_ar1(
    model: CovarianceModel,
    theta: float,
    alpha: float,
    n: int,
    seed,
    *,
    burn_in: int = 0,
    embedding: CirculantEmbedding | None = None,
    keep_noise: bool = True,
) -> Series:
    """Simulate ``X_1..X_n`` of the AR(1) model driven by ``model`` noise.

    ``burn_in`` discards that many leading observations (the path still starts
    from ``X_0 = 0`` before the burn-in); leave it at 0 to reproduce the
    estimators' setting.  A prebuilt ``embedding`` of size ``n + burn_in`` may
    be passed to skip the FFT of the covariance.
    """
    theta = _check_theta(theta)
    n = int(n)
    if n < 2:
        raise ParameterDomainError("n must be at least 2")
    total = n + int(burn_in)
    if embedding is None:
        embedding = CirculantEmbedding(cov_sequence(model, total - 1), total)
    elif embedding.n != total:
        raise ValueError("embedding length does not match n + burn_in")
    xi = embedding.sample(make_rng(seed))
    x = ar1_from_noise(xi, theta, alpha)
    meta = {
        "n": n,
        "theta": theta,
        "alpha": float(alpha),
        "seed": seed.derived if isinstance(seed, SeedSpec) else seed,
        "burn_in": int(burn_in),
        **model.to_config(),
    }
    return Series(x[burn_in:], SeriesKind.AR1_PATH, meta, noise=xi[burn_in:] if keep_noise else None)


def write_series_csv(path_or_file, series: Series | np.ndarray) -> None:
    """CSV with header ``t,value``; ``t`` counts from 1."""
    values = series.values if isinstance(series, Series) else np.asarray(series, dtype=float)

    def _emit(fh):
        fh.write("t,value\n")
        for t, v in enumerate(values.tolist(), start=1):
            fh.write(f"{t},{v!r}\n")

    if hasattr(path_or_file, "write"):
        _emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _emit(fh)


def read_series_csv(path: str | Path) -> np.ndarray:
    """Read values from a ``t,value`` CSV, or from a headerless single column."""
    values = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            field_ = line.split(",")[-1]
            try:
                values.append(float(field_))
            except ValueError:
                if i == 0:
                    continue
                raise
    return np.asarray(values)


def write_series_binary(path: str | Path, series: Series | np.ndarray) -> None:
    """Little-endian uint64 length followed by that many little-endian float64 values."""
    values = series.values if isinstance(series, Series) else np.asarray(series, dtype=float)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", values.size))
        fh.write(values.astype("<f8").tobytes())


def read_series_binary(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(8 * n), dtype="<f8")
    if data.size != n:
        raise ValueError(f"truncated binary series: header says {n}, found {data.size}")
    return data.astype(float)
