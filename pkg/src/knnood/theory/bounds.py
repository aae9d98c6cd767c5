"""Closed-form thresholds and rates from the finite-sample k-NN guarantees."""

from __future__ import annotations

import math

from ..errors import InvalidParameter
from ..knn import unit_ball_volume


def _positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise InvalidParameter(f"{name} must be positive, got {value}")


def theorem1_thresholds(C_beta: float, beta: float, d: int, n: int, k: int) -> tuple[float, float]:
    """Radius cutoff ``r`` and density cutoff ``lambda`` for the recall guarantee.

    ``r = (k / (2 C_beta n v_d))^(1/(beta+d))`` and
    ``lambda = 5 C_beta^(d/(beta+d)) (k / (n v_d))^(beta/(beta+d))``.
    """
    _positive(C_beta=C_beta, beta=beta, d=d, n=n, k=k)
    if beta > 1:
        raise InvalidParameter(f"Holder exponent must lie in (0, 1], got {beta}")
    v_d = unit_ball_volume(d)
    r = (k / (2.0 * C_beta * n * v_d)) ** (1.0 / (beta + d))
    lam = 5.0 * C_beta ** (d / (beta + d)) * (k / (n * v_d)) ** (beta / (beta + d))
    return r, lam


def precision_error_bound(C_eta: float, C_beta: float, beta: float, d: int, n: int, k: int) -> float:
    """Bound on the fraction of in-distribution points flagged with ``r_k >= r``."""
    _positive(C_eta=C_eta)
    _, lam = theorem1_thresholds(C_beta, beta, d, n, k)
    return C_eta * lam


def confidence_factor(delta: float, d: int, n: int) -> float:
    """``C_{delta,n} = 16 log(2/delta) sqrt(d log n)``."""
    if not 0 < delta < 1:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    _positive(d=d, n=n)
    return 16.0 * math.log(2.0 / delta) * math.sqrt(d * math.log(n))


def epsilon_kn(d: int, n: int, k: int, delta: float, C: float = 1.0) -> tuple[float, float]:
    """``(C_{delta,n}, eps_{k,n})`` with ``eps = C (C_{delta,n}/sqrt(k) + (k/n)^(1/d))``."""
    _positive(k=k, C=C)
    c_dn = confidence_factor(delta, d, n)
    return c_dn, C * (c_dn / math.sqrt(k) + (k / n) ** (1.0 / d))


def k_lower_bound(delta: float, d: int, n: int) -> float:
    """Smallest ``k`` the guarantees are stated for: ``2^8 log(2/delta)^2 d log n``."""
    if not 0 < delta < 1:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    return 256.0 * math.log(2.0 / delta) ** 2 * d * math.log(n)


def contraction_k_upper_bound(
    c0: float, d: int, gamma_in: float, gamma_out: float, r_min: float, n: int
) -> float:
    """Largest ``k`` for which the contraction improves every out/in radius ratio."""
    _positive(c0=c0, r_min=r_min, n=n)
    if not 0 < gamma_in < gamma_out < 1:
        raise InvalidParameter(f"need 0 < gamma_in < gamma_out < 1, got {gamma_in}, {gamma_out}")
    ratio = (gamma_out - gamma_in) / gamma_in * r_min
    return 0.5 * c0 * unit_ball_volume(d) * ratio**d * n
