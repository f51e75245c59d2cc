"""Moment estimators of the autoregressive coefficient and the intercept."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError
from .gaussian_sim import Series
from .moment_map import EPS, MomentMap, VarianceConstants

__all__ = [
    "EstimationResult",
    "sample_mean",
    "centered_second_moment",
    "estimate",
    "standardized_stats",
    "pre_inversion_stat",
]


@dataclass(frozen=True)
class EstimationResult:
    theta_hat: float
    alpha_hat: float
    x_bar: float
    s2: float
    clamped: bool
    n: int

    def as_dict(self) -> dict[str, object]:
        return {
            "theta_hat": self.theta_hat,
            "alpha_hat": self.alpha_hat,
            "x_bar": self.x_bar,
            "s2": self.s2,
            "clamped": self.clamped,
            "n": self.n,
        }


def _values(X) -> np.ndarray:
    values = X.values if isinstance(X, Series) else np.asarray(X, dtype=float)
    if values.ndim != 1:
        raise ParameterDomainError("expected a one-dimensional series")
    return values


def sample_mean(X) -> float:
    x = _values(X)
    if x.size == 0:
        raise ParameterDomainError("empty series")
    return float(x.mean())


def centered_second_moment(X) -> float:
    """``(1/n) sum (X_t - X_bar)^2``, with denominator ``n``."""
    x = _values(X)
    if x.size < 2:
        raise ParameterDomainError("need at least two observations")
    return float(np.mean((x - x.mean()) ** 2))


def estimate(mm: MomentMap, X) -> EstimationResult:
    """Invert the moment map at the centred second moment, then ``alpha_hat = (1 - theta_hat) X_bar``."""
    x = _values(X)
    x_bar = sample_mean(x)
    s2 = centered_second_moment(x)
    if s2 <= 0.0:
        theta_hat, clamped = EPS, True
    else:
        theta_hat, clamped = mm.f_inverse(s2)
    return EstimationResult(
        theta_hat=theta_hat,
        alpha_hat=(1.0 - theta_hat) * x_bar,
        x_bar=x_bar,
        s2=s2,
        clamped=clamped,
        n=x.size,
    )


def _rate_exponent(mm: MomentMap, H: float | None) -> float | None:
    H_model = mm.model.long_memory_exponent
    if H is None:
        return H_model
    if H_model is not None and abs(float(H) - H_model) > 1e-12:
        raise ParameterDomainError(f"H={H} disagrees with the model's exponent {H_model}")
    return float(H)


def standardized_stats(
    mm: MomentMap,
    X,
    theta_true: float,
    alpha_true: float,
    H: float | None = None,
    *,
    result: EstimationResult | None = None,
    constants: VarianceConstants | None = None,
) -> tuple[float, float]:
    """Return ``(g1*, g2*)``.

    ``g1* = sqrt(n) (theta_hat - theta) f'(theta) / sigma_H`` and
    ``g2* = n^(1-H) (alpha_hat - alpha) / sigma_1``, each asymptotically
    standard normal.  ``sigma_1`` uses the model's tail constant.  ``g1*`` is
    NaN when ``H >= 3/4``.  White noise uses ``H = 1/2`` and ``sigma_1^2 = R(0)``
    in ``g2*``; the theta error then enters ``g2*`` at the same rate, so it is
    not standard normal there.
    """
    if result is None:
        result = estimate(mm, X)
    if constants is None:
        constants = mm.variance_constants(theta_true)
    H = _rate_exponent(mm, H)
    n = result.n
    if math.isfinite(constants.sigma_H_sq):
        g1 = math.sqrt(n) * (result.theta_hat - theta_true) * constants.f_prime / math.sqrt(constants.sigma_H_sq)
    else:
        g1 = float("nan")
    rate = 0.5 if H is None else 1.0 - H
    g2 = n**rate * (result.alpha_hat - alpha_true) / math.sqrt(constants.sigma_1_sq_model)
    return float(g1), float(g2)


def pre_inversion_stat(result: EstimationResult, constants: VarianceConstants) -> float:
    """``sqrt(n) (s2 - f(theta)) / sigma_H``: the centred second moment before inversion."""
    return math.sqrt(result.n) * (result.s2 - constants.f_value) / math.sqrt(constants.sigma_H_sq)
