"""Special functions needed by the percolation path-count formulas.

Everything here is evaluated in (or convertible to) the log domain because
the path counts behave like (D*p)**T with D up to 1e5, far beyond float
range.  Implementations are the classical ones: power series for small
arguments, continued fractions (modified Lentz) for large, cross-checked
in the test suite against identity-based oracles and scipy.
"""

from __future__ import annotations

import math

_FPMIN = 1e-300
_EPS = 1e-16
_MAX_ITER = 10_000

# series/continued-fraction crossover for erfc
_ERFC_CROSSOVER = 2.0


class ConvergenceError(ArithmeticError):
    """An iterative special-function evaluation failed to converge."""


def log_gamma(s: float) -> float:
    """Natural log of Gamma(s) for s > 0."""
    if s <= 0.0:
        raise ValueError(f"log_gamma requires s > 0, got {s}")
    return math.lgamma(s)


def _gamma_series(s: float, x: float) -> tuple[float, float]:
    """Log of regularized lower gamma P(s, x) by series; valid for x < s + 1.

    Returns (log P, log Q-ish placeholder unused); series gives log P directly.
    """
    if x == 0.0:
        return -math.inf, 0.0
    ap = s
    total = 1.0 / s
    term = total
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            log_p = math.log(total) + (-x + s * math.log(x) - math.lgamma(s))
            return log_p, math.log1p(-math.exp(log_p)) if log_p < -1e-17 else -math.inf
    raise ConvergenceError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _gamma_cf(s: float, x: float) -> float:
    """Log of regularized upper gamma Q(s, x) by continued fraction; x >= s + 1."""
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return -x + s * math.log(x) - math.lgamma(s) + math.log(h)
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def log_gamma_p(s: float, x: float) -> float:
    """Log of the regularized lower incomplete gamma P(s, x) = gamma(s, x)/Gamma(s)."""
    if s <= 0.0:
        raise ValueError(f"log_gamma_p requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"log_gamma_p requires x >= 0, got {x}")
    if x == 0.0:
        return -math.inf
    if x < s + 1.0:
        return _gamma_series(s, x)[0]
    log_q = _gamma_cf(s, x)
    # P = 1 - Q; Q may be tiny, in which case log1p(-exp(.)) is exact enough.
    if log_q >= 0.0:
        return -math.inf
    return math.log1p(-math.exp(log_q))


def log_gamma_q(s: float, x: float) -> float:
    """Log of the regularized upper incomplete gamma Q(s, x) = 1 - P(s, x)."""
    if s <= 0.0:
        raise ValueError(f"log_gamma_q requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"log_gamma_q requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x >= s + 1.0:
        return _gamma_cf(s, x)
    log_p = _gamma_series(s, x)[0]
    if log_p >= 0.0:
        return -math.inf
    return math.log1p(-math.exp(log_p))


def regularized_gamma_p(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x) in the linear domain."""
    return math.exp(log_gamma_p(s, x))


def regularized_gamma_q(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) in the linear domain."""
    return math.exp(log_gamma_q(s, x))


def _erf_series(x: float) -> float:
    """Maclaurin series for erf(x); accurate for |x| <= ~2.5."""
    # term_n = (-1)^n x^(2n+1) / (n! (2n+1))
    t = x
    total = x
    x2 = x * x
    for n in range(1, _MAX_ITER):
        t *= -x2 / n
        total += t / (2 * n + 1)
        if abs(t) <= abs(total) * _EPS:
            return total * (2.0 / math.sqrt(math.pi))
    raise ConvergenceError(f"erf series did not converge (x={x})")


def _erfc_cf_scaled(x: float) -> float:
    """K(x) = sqrt(pi) * exp(x^2) * erfc(x), by the Laplace continued fraction.

    K(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), for x > 0.
    """
    b = x
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = i / 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ConvergenceError(f"erfc continued fraction did not converge (x={x})")


def erfc(x: float) -> float:
    """Complementary error function."""
    if x < 0.0:
        return 2.0 - erfc(-x)
    if x <= _ERFC_CROSSOVER:
        return 1.0 - _erf_series(x)
    return math.exp(-x * x) / math.sqrt(math.pi) * _erfc_cf_scaled(x)


def log_erfc(x: float) -> float:
    """log(erfc(x)), finite for arbitrarily large positive x."""
    if x <= _ERFC_CROSSOVER:
        return math.log(erfc(x))
    return -x * x - 0.5 * math.log(math.pi) + math.log(_erfc_cf_scaled(x))


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc."""
    return 0.5 * erfc(-x / math.sqrt(2.0))


def log_normal_cdf(x: float) -> float:
    """log of the standard normal CDF, stable deep into the lower tail."""
    return log_erfc(-x / math.sqrt(2.0)) - math.log(2.0)
