"""Covariance laws for long-memory stationary Gaussian noise.

Four noise families are supported: fractional Gaussian noise, ARFIMA(0, d, 0)
driven by Gaussian white noise, white noise, and a user supplied finite
covariance sequence.  Every family yields its autocovariance ``R(k)``; the two
long-memory families also know their power-law tail ``R(k) ~ C k^(2H-2)``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np
from scipy.special import gamma, gammaln

from .errors import InsufficientDataError, ParameterDomainError

__all__ = [
    "NoiseKind",
    "CovarianceModel",
    "HypothesisReport",
    "cov_fgn",
    "cov_arfima",
    "cov_sequence",
    "iter_cov_chunks",
    "check_hypothesis",
    "spectral_constant",
    "model_from_config",
    "read_custom_sequence",
    "write_cov_csv",
]

_CHUNK = 1 << 18


class NoiseKind(str, Enum):
    FGN = "fgn"
    ARFIMA = "arfima"
    WHITE = "white"
    CUSTOM = "custom"


def _check_open(name: str, value: float, lo: float, hi: float) -> float:
    value = float(value)
    if not (lo < value < hi):
        raise ParameterDomainError(f"{name}={value!r} outside the open interval ({lo}, {hi})")
    return value


@dataclass(frozen=True)
class CovarianceModel:
    """Immutable description of a stationary Gaussian noise law.

    Use the ``fgn``, ``arfima``, ``white`` and ``custom`` constructors rather
    than calling the class directly.  For ``WHITE`` the ``sigma`` field is the
    variance; for ``ARFIMA`` it multiplies the whole covariance sequence.
    """

    kind: NoiseKind
    hurst: float | None = None
    d: float | None = None
    sigma: float = 1.0
    custom_seq: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        kind = NoiseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterDomainError(f"sigma must be positive, got {self.sigma!r}")
        if kind is NoiseKind.FGN:
            if self.hurst is None:
                raise ParameterDomainError("fgn model requires H")
            object.__setattr__(self, "hurst", _check_open("H", self.hurst, 0.5, 1.0))
        elif kind is NoiseKind.ARFIMA:
            if self.d is None:
                raise ParameterDomainError("arfima model requires d")
            object.__setattr__(self, "d", _check_open("d", self.d, 0.0, 0.5))
        elif kind is NoiseKind.CUSTOM:
            if not self.custom_seq:
                raise ParameterDomainError("custom model requires a non-empty covariance sequence")
            seq = tuple(float(v) for v in self.custom_seq)
            if not seq[0] > 0:
                raise ParameterDomainError("custom sequence must have R(0) > 0")
            if any(abs(v) > seq[0] * (1 + 1e-12) for v in seq):
                raise ParameterDomainError("custom sequence violates |R(k)| <= R(0)")
            object.__setattr__(self, "custom_seq", seq)

    @classmethod
    def fgn(cls, H: float) -> "CovarianceModel":
        return cls(NoiseKind.FGN, hurst=H)

    @classmethod
    def arfima(cls, d: float, sigma: float = 1.0) -> "CovarianceModel":
        return cls(NoiseKind.ARFIMA, d=d, sigma=sigma)

    @classmethod
    def white(cls, sigma2: float = 1.0) -> "CovarianceModel":
        return cls(NoiseKind.WHITE, sigma=sigma2)

    @classmethod
    def custom(cls, seq) -> "CovarianceModel":
        return cls(NoiseKind.CUSTOM, custom_seq=tuple(np.asarray(seq, dtype=float).ravel()))

    @property
    def long_memory_exponent(self) -> float | None:
        """H for fGn, d + 1/2 for ARFIMA, ``None`` for the other families."""
        if self.kind is NoiseKind.FGN:
            return self.hurst
        if self.kind is NoiseKind.ARFIMA:
            return self.d + 0.5
        return None

    @property
    def hypothesis_constant(self) -> float | None:
        """Constant ``C`` in ``R(k) ~ C k^(2H-2)``; 0 for white noise, ``None`` if unknown."""
        if self.kind is NoiseKind.FGN:
            H = self.hurst
            return H * (2 * H - 1)
        if self.kind is NoiseKind.ARFIMA:
            d = self.d
            return float(self.sigma * gamma(1 - 2 * d) / (gamma(1 - d) * gamma(d)))
        if self.kind is NoiseKind.WHITE:
            return 0.0
        return None

    @property
    def variance(self) -> float:
        return float(cov_sequence(self, 0)[0])

    @property
    def max_lag(self) -> int | None:
        """Largest lag available, ``None`` when the family is defined for every lag."""
        if self.kind is NoiseKind.CUSTOM:
            return len(self.custom_seq) - 1
        return None

    def cov(self, k):
        """Autocovariance at integer lag(s) ``k``; negative lags mirror positive ones."""
        k_arr = np.abs(np.asarray(k, dtype=np.int64))
        K = int(k_arr.max()) if k_arr.size else 0
        out = cov_sequence(self, K)[k_arr]
        return float(out) if out.ndim == 0 else out

    def to_config(self) -> dict[str, str]:
        cfg = {"model": self.kind.value}
        if self.kind is NoiseKind.FGN:
            cfg["H"] = repr(self.hurst)
        elif self.kind is NoiseKind.ARFIMA:
            cfg["d"] = repr(self.d)
            cfg["sigma"] = repr(self.sigma)
        elif self.kind is NoiseKind.WHITE:
            cfg["sigma"] = repr(self.sigma)
        return cfg

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.to_config().items())


def cov_fgn(H: float, k):
    """Autocovariance of unit-variance fractional Gaussian noise.

    ``H = 1/2`` is accepted here as the white-noise boundary so the formula can
    be evaluated there; models themselves require ``1/2 < H < 1``.
    """
    H = float(H)
    if not (0.5 <= H < 1.0):
        raise ParameterDomainError(f"H={H!r} outside [0.5, 1)")
    k = np.abs(np.asarray(k, dtype=float))
    two_h = 2.0 * H
    out = 0.5 * ((k + 1.0) ** two_h + np.abs(k - 1.0) ** two_h - 2.0 * k**two_h)
    return float(out) if out.ndim == 0 else out


def _arfima_lag0(d: float, sigma: float) -> float:
    # Gamma(1-2d) / Gamma(1-d)^2, the Gamma(d) factors cancel at k = 0
    return sigma * math.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))


def _arfima_chunks(d: float, sigma: float, K: int, chunk: int) -> Iterator[np.ndarray]:
    # R(k) = R(k-1) (k-1+d)/(k-d), carried across chunk boundaries
    last = _arfima_lag0(d, sigma)
    start = 0
    while start <= K:
        stop = min(K + 1, start + chunk)
        k = np.arange(max(start, 1), stop, dtype=float)
        ratios = (k - 1.0 + d) / (k - d)
        vals = last * np.cumprod(ratios)
        if start == 0:
            vals = np.concatenate(([last], vals))
        if vals.size:
            last = vals[-1]
        yield vals
        start = stop


def cov_arfima(d: float, sigma: float, k):
    """Autocovariance of ARFIMA(0, d, 0) at non-negative lag(s) ``k``.

    Lag 0 is seeded by direct Gamma evaluation, later lags by the ratio
    recurrence, which never forms ``Gamma(k + d)`` and so cannot overflow.
    """
    d = _check_open("d", d, 0.0, 0.5)
    if not sigma > 0:
        raise ParameterDomainError(f"sigma must be positive, got {sigma!r}")
    k_arr = np.asarray(k, dtype=np.int64)
    if np.any(k_arr < 0):
        raise ParameterDomainError("cov_arfima takes non-negative lags")
    K = int(k_arr.max()) if k_arr.size else 0
    seq = np.concatenate(list(_arfima_chunks(d, float(sigma), K, _CHUNK)))
    out = seq[k_arr]
    return float(out) if out.ndim == 0 else out


def iter_cov_chunks(model: CovarianceModel, K: int, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Yield ``R(0..K)`` in consecutive pieces of at most ``chunk`` values."""
    if K < 0:
        raise ParameterDomainError("K must be non-negative")
    if model.kind is NoiseKind.CUSTOM:
        if K > model.max_lag:
            raise InsufficientDataError(
                f"custom sequence has lags 0..{model.max_lag}, requested {K}"
            )
        seq = np.asarray(model.custom_seq[: K + 1])
        for start in range(0, K + 1, chunk):
            yield seq[start : start + chunk]
    elif model.kind is NoiseKind.ARFIMA:
        yield from _arfima_chunks(model.d, model.sigma, K, chunk)
    else:
        for start in range(0, K + 1, chunk):
            k = np.arange(start, min(K + 1, start + chunk))
            if model.kind is NoiseKind.FGN:
                yield cov_fgn(model.hurst, k)
            else:
                vals = np.zeros(k.size)
                if start == 0:
                    vals[0] = model.sigma
                yield vals


def cov_sequence(model: CovarianceModel, K: int) -> np.ndarray:
    """Return ``[R(0), ..., R(K)]`` as a float array of length ``K + 1``."""
    return np.concatenate(list(iter_cov_chunks(model, int(K))))


@dataclass(frozen=True)
class HypothesisReport:
    lags: np.ndarray
    ratios: np.ndarray
    estimated_C: float
    relative_drift: float

    @property
    def satisfied(self) -> bool:
        """Positive tail constant and tail ratios settled to within 5%."""
        return self.estimated_C > 0 and self.relative_drift < 0.05


def check_hypothesis(model: CovarianceModel, H: float, K_min: int, K_max: int) -> HypothesisReport:
    """Tabulate ``R(k) / k^(2H-2)`` on ``[K_min, K_max]`` and estimate its limit.

    The limit is estimated by the mean ratio over the top decile of lags;
    ``relative_drift`` is the largest relative departure of those tail ratios
    from the estimate (infinite when the estimate is not positive).
    """
    H = _check_open("H", H, 0.5, 1.0)
    if not (1 <= K_min < K_max):
        raise ParameterDomainError(f"need 1 <= K_min < K_max, got {K_min}, {K_max}")
    lags = np.arange(K_min, K_max + 1)
    ratios = cov_sequence(model, K_max)[K_min:] / lags.astype(float) ** (2 * H - 2)
    n_tail = max(1, lags.size // 10)
    tail = ratios[-n_tail:]
    est = float(tail.mean())
    drift = float(np.max(np.abs(tail - est)) / est) if est > 0 else math.inf
    return HypothesisReport(lags=lags, ratios=ratios, estimated_C=est, relative_drift=drift)


def spectral_constant(H: float) -> float:
    """Low-frequency constant of the spectral density for ``R(k) = |k|^(2H-2)``."""
    H = _check_open("H", H, 0.5, 1.0)
    if H < 0.501:
        warnings.warn(f"H={H} is close to 1/2; spectral constant is near its pole", RuntimeWarning, stacklevel=2)
    return float(gamma(2 * H - 1)) * math.sin(math.pi - math.pi * H) / math.pi


def read_custom_sequence(path: str | Path) -> np.ndarray:
    """Read a covariance sequence from CSV (``lag,value`` header) or one value per line."""
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if values:
                    raise
                # header line
    return np.asarray(values)


def write_cov_csv(path_or_file, seq) -> None:
    """Write a covariance sequence as CSV with header ``lag,value``."""
    seq = np.asarray(seq, dtype=float)

    def _emit(fh):
        fh.write("lag,value\n")
        for k, v in enumerate(seq.tolist()):
            fh.write(f"{k},{v!r}\n")

    if hasattr(path_or_file, "write"):
        _emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _emit(fh)


def model_from_config(cfg: Mapping[str, object]) -> CovarianceModel:
    """Build a model from ``model=``, ``H=``, ``d=``, ``sigma=``, ``custom_file=`` entries."""
    kind = str(cfg.get("model", "")).lower()
    sigma = cfg.get("sigma")
    if kind == "fgn":
        if cfg.get("H") is None:
            raise ParameterDomainError("model=fgn requires H")
        return CovarianceModel.fgn(float(cfg["H"]))
    if kind == "arfima":
        d = cfg.get("d")
        if d is None and cfg.get("H") is not None:
            d = float(cfg["H"]) - 0.5
        if d is None:
            raise ParameterDomainError("model=arfima requires d")
        if cfg.get("H") is not None and abs(float(cfg["H"]) - (float(d) + 0.5)) > 1e-12:
            raise ParameterDomainError("arfima requires H = d + 1/2")
        return CovarianceModel.arfima(float(d), 1.0 if sigma is None else float(sigma))
    if kind == "white":
        return CovarianceModel.white(1.0 if sigma is None else float(sigma))
    if kind == "custom":
        path = cfg.get("custom_file")
        if not path:
            raise ParameterDomainError("model=custom requires custom_file")
        return CovarianceModel.custom(read_custom_sequence(str(path)))
    raise ParameterDomainError(f"unknown model {kind!r}; expected fgn, arfima, white or custom")
