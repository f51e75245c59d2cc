"""The stationary second-moment map ``f(theta) = E(Y_t^2)`` and its companions.

``Y_t = sum_j theta^j xi_{t-j}`` is the stationary AR(1) filter of the noise.
Resumming the double series over its diagonals gives

    f(theta)    = (R(0) + 2 sum_{k>=1} R(k) theta^k) / (1 - theta^2)
    R_Y(k)      = sum_{m in Z} R(m) theta^{|k-m|} / (1 - theta^2)

which are evaluated here to an absolute tolerance using the bound
``|R(k)| <= R(0)`` for the geometric tail.  The module also holds the
closed-form constants that enter the limit laws of the estimators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz
from scipy.signal import lfilter
from scipy.special import beta, gamma, zeta

from .errors import InsufficientDataError, ParameterDomainError
from .noise_models import CovarianceModel, NoiseKind, iter_cov_chunks

__all__ = [
    "EPS",
    "MomentMap",
    "VarianceConstants",
    "sigma_1_sq",
    "c_theta_H_cov",
    "c_theta_H_spec",
    "l_infty",
    "l_infty_quadrature",
]

EPS = 1e-6
_THETA_MAX = 1.0 - EPS
# theta values tried, in order, when bracketing f^{-1} from above
_LADDER = (0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999, _THETA_MAX)
_PREFIX_THETA = 0.999
_SIGMA_H_LAGS = 1 << 15


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta < 1.0):
        raise ParameterDomainError(f"theta={theta!r} outside (0, 1)")
    if theta > _THETA_MAX:
        raise ParameterDomainError(f"theta={theta!r} too close to 1 (limit 1 - {EPS:g})")
    return theta


def _check_H(H: float, hi: float = 1.0) -> float:
    H = float(H)
    if not (0.5 < H < hi):
        raise ParameterDomainError(f"H={H!r} outside (0.5, {hi})")
    return H


def sigma_1_sq(H: float) -> float:
    """Limit variance of ``n^(1-H) (alpha_hat - alpha)`` for unit tail constant."""
    H = _check_H(H)
    b = float(beta(2 * H - 1, 2 - 2 * H))
    return b * math.sin(2 * math.pi * H - math.pi) / (H * (2 * H - 1) * math.pi)


def c_theta_H_cov(theta: float, H: float) -> float:
    """Constant in ``R_Y(k) ~ c k^(2H-2)`` for unit tail constant of the noise."""
    theta = float(theta)
    if not (0.0 <= theta < 1.0):
        raise ParameterDomainError(f"theta={theta!r} outside [0, 1)")
    H = _check_H(H)
    b = float(beta(2 * H - 1, 2 - 2 * H))
    return b * math.sin(2 * math.pi * H - math.pi) / ((1 - theta) ** 2 * math.pi)


def c_theta_H_spec(theta: float, H: float) -> float:
    """Constant in ``h_Y(lambda) ~ c |lambda|^(1-2H)`` for unit tail constant."""
    theta = float(theta)
    if not (0.0 <= theta < 1.0):
        raise ParameterDomainError(f"theta={theta!r} outside [0, 1)")
    H = _check_H(H)
    return float(gamma(2 * H - 1)) * math.sin(math.pi - math.pi * H) / ((1 - theta) ** 2 * math.pi)


def l_infty(H: float) -> float:
    """``2 * int_0^1 (1 - x) x^(2H-2) dx = 1 / (H (2H - 1))``."""
    H = _check_H(H)
    return 2.0 * (1.0 / (2 * H - 1) - 1.0 / (2 * H))


def l_infty_quadrature(H: float) -> float:
    """Same integral by algebraic-weight Gauss-Kronrod quadrature."""
    H = _check_H(H)
    val, _ = quad(lambda x: 1.0 - x, 0.0, 1.0, weight="alg", wvar=(2 * H - 2, 0.0), epsabs=1e-14, epsrel=1e-13)
    return 2.0 * val


@dataclass(frozen=True)
class VarianceConstants:
    """Constants of the limit laws at one ``theta``.

    ``sigma_1_sq``, ``c_cov`` and ``c_spec`` are the closed forms, which assume
    the noise tail ``R(k) ~ k^(2H-2)`` (tail constant 1).  The ``*_model``
    fields rescale them by the noise's own tail constant ``C``.
    """

    theta: float
    H: float | None
    f_value: float
    f_prime: float
    sigma_H_sq: float
    sigma_1_sq: float
    c_cov: float
    c_spec: float
    l_inf: float
    tail_constant: float | None
    sigma_1_sq_model: float
    c_cov_model: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


class MomentMap:
    """Evaluator of ``f``, ``f'``, ``f^{-1}`` and ``R_Y`` for one noise model.

    The covariance prefix needed for ``theta`` up to 0.999 is tabulated at
    construction; deeper truncations (only needed very close to 1) stream the
    covariance in chunks.
    """

    def __init__(self, model: CovarianceModel, tol: float = 1e-10):
        if not tol > 0:
            raise ParameterDomainError("tol must be positive")
        self.model = model
        self.tol = float(tol)
        self._r0 = model.variance
        if model.kind is NoiseKind.CUSTOM:
            K = model.max_lag
        else:
            K = self.truncation_depth(_PREFIX_THETA)
        self._prefix = np.concatenate(list(iter_cov_chunks(model, K)))
        self._prefix.setflags(write=False)
        self._ladder_cache: dict[float, float] = {}
        self.f_min = self.f_value(EPS)

    def __repr__(self) -> str:
        return f"MomentMap({self.model.describe()}, tol={self.tol:g})"

    # -- series machinery -------------------------------------------------

    def truncation_depth(self, theta: float) -> int:
        """Smallest ``K`` whose geometric tail bound for ``f`` and ``f'`` is below ``tol``.

        Uses ``2 R(0) (K+1) theta^K / ((1-theta)^2 (1-theta^2))``, which bounds
        both the neglected part of ``f`` and of ``f'``.
        """
        theta = float(theta)
        denom = (1 - theta) ** 2 * (1 - theta * theta)
        log_t = math.log(theta)

        def bound(K):
            return math.log(2 * self._r0 * (K + 1) / denom) + K * log_t

        target = math.log(self.tol)
        K = max(1, math.ceil((target - math.log(2 * self._r0 / denom)) / log_t))
        while bound(K) >= target:
            K = math.ceil(K * 1.05) + 1
        return K

    def cov_prefix(self, K: int) -> np.ndarray:
        """``R(0..K)``, from the table when possible."""
        if K < self._prefix.size:
            return self._prefix[: K + 1]
        if self.model.kind is NoiseKind.CUSTOM:
            raise InsufficientDataError(
                f"custom sequence has {self._prefix.size} lags; {K + 1} needed at this theta"
            )
        return np.concatenate(list(iter_cov_chunks(self.model, K)))

    def _power_sums(self, theta: float) -> tuple[float, float]:
        """``(sum_{k=1}^K R(k) theta^k, sum_{k=1}^K k R(k) theta^(k-1))``."""
        K = self.truncation_depth(theta)
        log_t = math.log(theta)
        if self.model.kind is NoiseKind.CUSTOM and K > self.model.max_lag:
            raise InsufficientDataError(
                f"custom sequence has lags 0..{self.model.max_lag}; {K} needed at theta={theta}"
            )
        if K < self._prefix.size:
            chunks = [self._prefix[: K + 1]]
        else:
            chunks = iter_cov_chunks(self.model, K)
        s0 = s1 = 0.0
        start = 0
        for chunk in chunks:
            k = np.arange(start, start + chunk.size, dtype=float)
            start += chunk.size
            if k[0] == 0:
                k, chunk = k[1:], chunk[1:]
            w = np.exp((k - 1) * log_t) * chunk
            s1 += float(np.dot(k, w))
            s0 += float(w.sum()) * theta
        return s0, s1

    def _f_and_prime(self, theta: float) -> tuple[float, float]:
        s0, s1 = self._power_sums(theta)
        one_m = 1.0 - theta * theta
        f = (self._r0 + 2.0 * s0) / one_m
        fp = 2.0 * theta / one_m * f + 2.0 / one_m * s1
        return f, fp

    # -- public evaluations ----------------------------------------------

    def f_value(self, theta: float) -> float:
        """``E(Y_t^2)`` to absolute accuracy ``tol``."""
        theta = _check_theta(theta)
        return self._f_and_prime(theta)[0]

    def f_derivative(self, theta: float) -> float:
        theta = _check_theta(theta)
        return self._f_and_prime(theta)[1]

    def f_value_bruteforce(self, theta: float, K: int) -> float:
        """Direct truncation ``sum_{i,j=0}^K theta^(i+j) R(i-j)``; O(K^2), test oracle only."""
        theta = _check_theta(theta)
        if K < 0:
            raise ParameterDomainError("K must be non-negative")
        v = theta ** np.arange(K + 1)
        T = toeplitz(self.cov_prefix(K))
        return float(v @ T @ v)

    def r_y(self, theta: float, k: int) -> float:
        """Stationary autocovariance ``E(Y_t Y_{t+k})``."""
        theta = _check_theta(theta)
        k = abs(int(k))
        K = self.truncation_depth(theta)
        R = self.cov_prefix(k + K)
        m = np.arange(k - K, k + K + 1)
        w = theta ** np.abs(k - m).astype(float)
        return float(np.dot(R[np.abs(m)], w)) / (1.0 - theta * theta)

    def r_y_bruteforce(self, theta: float, k: int, K: int) -> float:
        """``sum_{i,j=0}^K theta^(i+j) R(k+i-j)``; O(K^2), test oracle only."""
        theta = _check_theta(theta)
        k = abs(int(k))
        R = self.cov_prefix(k + K)
        # explicit matrix with entry (i, j) = R(k + i - j)
        T = toeplitz(R[k : k + K + 1], R[np.abs(k - np.arange(K + 1))])
        v = theta ** np.arange(K + 1)
        return float(v @ T @ v)

    def r_y_sequence(self, theta: float, K: int) -> np.ndarray:
        """``R_Y(0..K)`` in O(K) through forward and backward geometric filters."""
        theta = _check_theta(theta)
        Kt = self.truncation_depth(theta)
        N = K + Kt
        R = self.cov_prefix(N)
        fwd = lfilter([1.0], [1.0, -theta], R)
        bwd = lfilter([1.0], [1.0, -theta], R[::-1])[::-1] - R
        s0, _ = self._power_sums(theta)
        k = np.arange(K + 1, dtype=float)
        ry = fwd[: K + 1] + bwd[: K + 1] + np.exp(k * math.log(theta)) * s0
        return ry / (1.0 - theta * theta)

    def sigma_H_sq(self, theta: float, H: float | None = None, K: int | None = None) -> float:
        """``2 sum_{k in Z} R_Y(k)^2``, the limit variance of the centred second moment.

        Lags ``|k| <= K`` are summed exactly; beyond ``K`` the power-law
        asymptote ``R_Y(k) ~ C k^(2H-2) / (1-theta)^2`` is summed in closed form
        through the Hurwitz zeta function.  Requires ``H < 3/4``.
        """
        theta = _check_theta(theta)
        H_model = self.model.long_memory_exponent
        if H is not None:
            H = float(H)
            if H_model is not None and abs(H - H_model) > 1e-12:
                raise ParameterDomainError(f"H={H} disagrees with the model's exponent {H_model}")
            _check_H(H, 0.75)
        if H_model is not None:
            _check_H(H_model, 0.75)
        kind = self.model.kind
        if kind is NoiseKind.CUSTOM:
            K_avail = self.model.max_lag - self.truncation_depth(theta)
            if K_avail < 1:
                raise InsufficientDataError("custom sequence too short for sigma_H^2")
            K = K_avail if K is None else min(K, K_avail)
        elif K is None:
            K = max(_SIGMA_H_LAGS, 4 * self.truncation_depth(theta))
        ry = self.r_y_sequence(theta, K)
        total = ry[0] ** 2 + 2.0 * float(np.sum(ry[1:] ** 2))
        if H_model is not None:
            c = self.model.hypothesis_constant / (1 - theta) ** 2
            total += 2.0 * c * c * float(zeta(4.0 - 4.0 * H_model, K + 1))
        return float(2.0 * total)

    def f_inverse(self, y: float) -> tuple[float, bool]:
        """Solve ``f(theta) = y``; returns ``(theta, clamped)``.

        Values of ``y`` outside ``(f(EPS), f(1 - EPS))`` map to the nearer end
        of ``[EPS, 1 - EPS]`` with ``clamped = True``.  Inside, Newton steps
        are kept within a shrinking bisection bracket.
        """
        y = float(y)
        if not y > 0 or not math.isfinite(y):
            raise ParameterDomainError(f"f_inverse needs a positive finite value, got {y!r}")
        if y <= self.f_min:
            return EPS, True
        lo, f_lo = EPS, self.f_min
        hi = f_hi = None
        for t in _LADDER:
            ft = self._ladder_value(t)
            if ft >= y:
                hi, f_hi = t, ft
                break
            lo, f_lo = t, ft
        if hi is None:
            return _THETA_MAX, True
        if f_hi == y:
            return hi, False
        theta = lo + (hi - lo) * (y - f_lo) / (f_hi - f_lo)
        for _ in range(200):
            f, fp = self._f_and_prime(theta)
            g = f - y
            if g < 0:
                lo = theta
            else:
                hi = theta
            step = g / fp if fp > 0 else math.inf
            cand = theta - step
            if not (lo < cand < hi):
                cand = 0.5 * (lo + hi)
                step = theta - cand
            if abs(g) < self.tol and abs(step) < 1e-13:
                break
            theta = cand
            if hi - lo < 1e-15:
                break
        return theta, False

    def _ladder_value(self, theta: float) -> float:
        val = self._ladder_cache.get(theta)
        if val is None:
            val = self._ladder_cache[theta] = self.f_value(theta)
        return val

    def tabulate_f(self, grid) -> np.ndarray:
        """Rows ``(theta, f(theta))``; swap the columns for the inverse map."""
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ParameterDomainError("grid must be a non-empty 1-D sequence")
        if np.any(np.diff(grid) <= 0):
            raise ParameterDomainError("grid must be strictly increasing")
        if grid[0] < EPS or grid[-1] > _THETA_MAX:
            raise ParameterDomainError(f"grid must lie inside [{EPS:g}, 1 - {EPS:g}]")
        return np.column_stack([grid, [self.f_value(t) for t in grid]])

    def variance_constants(self, theta: float) -> VarianceConstants:
        """All limit-law constants at ``theta``.

        For white noise (no long memory) the closed forms are undefined and
        reported as NaN; ``sigma_1_sq_model`` then holds the short-memory
        analogue ``sum_k R(k) = R(0)`` used with rate ``sqrt(n)``.
        """
        theta = _check_theta(theta)
        f, fp = self._f_and_prime(theta)
        H = self.model.long_memory_exponent
        C = self.model.hypothesis_constant
        nan = float("nan")
        if H is None:
            s1 = c_cov = c_spec = l_inf = nan
            s1_model = self._r0 if self.model.kind is NoiseKind.WHITE else nan
            c_cov_model = 0.0 if self.model.kind is NoiseKind.WHITE else nan
        else:
            s1, c_cov, c_spec, l_inf = sigma_1_sq(H), c_theta_H_cov(theta, H), c_theta_H_spec(theta, H), l_infty(H)
            s1_model, c_cov_model = float(C * s1), float(C * c_cov)
        sH = self.sigma_H_sq(theta) if (H is None or H < 0.75) else math.inf
        return VarianceConstants(
            theta=theta,
            H=H,
            f_value=f,
            f_prime=fp,
            sigma_H_sq=sH,
            sigma_1_sq=s1,
            c_cov=c_cov,
            c_spec=c_spec,
            l_inf=l_inf,
            tail_constant=C,
            sigma_1_sq_model=s1_model,
            c_cov_model=c_cov_model,
        )

