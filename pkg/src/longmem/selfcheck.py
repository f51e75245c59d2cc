"""Fast oracle and identity battery behind ``longmem check``."""
from __future__ import annotations

import math
from typing import Callable, Iterator

import numpy as np

from .gaussian_sim import SeedSpec, derive_seed, simulate_ar1
from .moment_map import (
    MomentMap,
    c_theta_H_cov,
    l_infty,
    l_infty_quadrature,
    sigma_1_sq,
)
from .noise_models import CovarianceModel, cov_arfima, cov_fgn, spectral_constant

THETAS = (0.1, 0.3, 0.5, 0.7, 0.9)
MODELS = (
    CovarianceModel.white(),
    CovarianceModel.fgn(0.58),
    CovarianceModel.fgn(0.7),
    CovarianceModel.arfima(0.08),
)


def _bruteforce_f() -> float:
    worst = 0.0
    for model in MODELS:
        mm = MomentMap(model)
        for t in THETAS:
            worst = max(worst, abs(mm.f_value(t) - mm.f_value_bruteforce(t, 1000)))
    return worst


def _derivative() -> float:
    worst = 0.0
    h = 1e-5
    for model in MODELS:
        mm = MomentMap(model)
        for t in THETAS:
            fd = (mm.f_value(t + h) - mm.f_value(t - h)) / (2 * h)
            worst = max(worst, abs(mm.f_derivative(t) / fd - 1))
    return worst


def _inverse() -> float:
    worst = 0.0
    for model in MODELS:
        mm = MomentMap(model)
        for t in THETAS:
            worst = max(worst, abs(mm.f_inverse(mm.f_value(t))[0] - t))
    return worst


def _r_y() -> float:
    worst = 0.0
    for model in MODELS:
        mm = MomentMap(model)
        for t in (0.3, 0.7):
            for k in (1, 5):
                worst = max(worst, abs(mm.r_y(t, k) - mm.r_y_bruteforce(t, k, 800)))
    return worst


def _identities() -> float:
    worst = 0.0
    for H in (0.55, 0.58, 0.65, 0.7, 0.74):
        worst = max(worst, abs(l_infty(H) * H * (2 * H - 1) - 1))
        worst = max(worst, abs(c_theta_H_cov(0.6, H) * 0.16 / (H * (2 * H - 1) * sigma_1_sq(H)) - 1))
        worst = max(worst, abs(l_infty_quadrature(H) / l_infty(H) - 1))
    return worst


def _closed_forms() -> float:
    return max(
        abs(sigma_1_sq(0.75) - 8 / 3),
        abs(spectral_constant(0.75) - 1 / math.sqrt(2 * math.pi)),
        abs(cov_fgn(0.58, 1) - (2**0.16 - 1)),
        abs(cov_arfima(0.08, 1.0, 1) / cov_arfima(0.08, 1.0, 0) - 0.08 / 0.92),
    )


def _ar1_roundtrip() -> float:
    path = simulate_ar1(CovarianceModel.fgn(0.58), 0.6, 0.4, 512, SeedSpec(1, 0))
    x = np.concatenate(([0.0], path.values))
    return float(np.max(np.abs(x[1:] - 0.4 - 0.6 * x[:-1] - path.noise)))


def _seed_split() -> float:
    seeds = {derive_seed(12345, i) for i in range(20000)}
    return float(20000 - len(seeds))


CHECKS: list[tuple[str, Callable[[], float], float]] = [
    ("f_vs_bruteforce_abs", _bruteforce_f, 1e-8),
    ("f_prime_vs_central_difference_rel", _derivative, 1e-5),
    ("f_inverse_roundtrip_abs", _inverse, 1e-8),
    ("r_y_vs_bruteforce_abs", _r_y, 1e-8),
    ("constant_identities_rel", _identities, 1e-10),
    ("closed_form_values_abs", _closed_forms, 1e-10),
    ("ar1_noise_roundtrip_abs", _ar1_roundtrip, 1e-10),
    ("seed_split_collisions", _seed_split, 0.5),
]


def run_checks() -> Iterator[tuple[str, float, float, bool]]:
    for name, fn, tol in CHECKS:
        value = fn()
        yield name, value, tol, bool(value < tol)
