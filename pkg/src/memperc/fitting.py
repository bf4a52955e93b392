"""Curve fits: sigmoid A(dt), power laws, and the percolation-ratio fit.

Nonlinear fits are derivative-free: a coarse grid over the parameter
plane seeds a Nelder-Mead simplex refinement (the objectives are cheap,
so robustness beats gradient code).  Weights for the sigmoid fit are
normally the inverse squared binomial standard errors of the sweep rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from . import dp


class FitError(ValueError):
    """A fit could not be carried out on the given data."""


@dataclass(frozen=True)
class SigmoidFit:
    """A = 1 / (1 + exp(-c (dt - d))); d is the midpoint, A(d) = 1/2."""

    c: float
    d: float
    residual: float
    residual_history: tuple[float, ...] = ()

    def predict(self, dt) -> np.ndarray:
        return expit(self.c * (np.asarray(dt, dtype=float) - self.d))


@dataclass(frozen=True)
class PowerLawFit:
    prefactor: float
    exponent: float
    r_squared: float

    def predict(self, x) -> np.ndarray:
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


@dataclass(frozen=True)
class DpFit:
    """Percolation-ratio fit of A(dt) under delta = a*(1/(N dt) - b)."""

    a: float
    b: float
    dim: float
    residual: float


def _sigmoid_sse(c: float, d: float, dts, As, ws) -> float:
    pred = expit(c * (dts - d))
    return float(np.sum(ws * (As - pred) ** 2))


def fit_sigmoid(points: Sequence[tuple[float, float, float]]) -> SigmoidFit:
    """Weighted least-squares sigmoid fit of (dt, A, weight) triples.

    Requires at least 4 points with the transition bracketed (some point
    above A = 0.9 and some below A = 0.1); for decreasing data c < 0.
    """
    if len(points) < 4:
        raise FitError(f"need at least 4 points, got {len(points)}")
    dts = np.array([p[0] for p in points], dtype=float)
    As = np.array([p[1] for p in points], dtype=float)
    ws = np.array([p[2] for p in points], dtype=float)
    if not (As.max() > 0.9 and As.min() < 0.1):
        raise FitError("no transition bracketed (need A > 0.9 and A < 0.1)")

    span = dts.max() - dts.min()
    if span <= 0:
        raise FitError("dt values must not be all equal")

    # coarse seed grid over (c, d)
    c_mags = np.geomspace(0.5 / span, 500.0 / span, 24)
    d_cands = np.linspace(dts.min(), dts.max(), 25)
    best = (math.inf, 0.0, 0.0)
    for mag in c_mags:
        for sign in (-1.0, 1.0):
            for d0 in d_cands:
                sse = _sigmoid_sse(sign * mag, d0, dts, As, ws)
                if sse < best[0]:
                    best = (sse, sign * mag, d0)
    _, c0, d0 = best

    history = [best[0]]

    def objective(x):
        return _sigmoid_sse(x[0] * c0, d0 + x[1] * span, dts, As, ws)

    def record(xk):
        history.append(min(history[-1], objective(xk)))

    res = minimize(
        objective,
        x0=np.array([1.0, 0.0]),
        method="Nelder-Mead",
        callback=record,
        options={"xatol": 1e-8, "fatol": 1e-16, "maxiter": 4000, "maxfev": 8000},
    )
    if not res.success and res.fun > best[0]:
        raise FitError(f"sigmoid fit did not converge: {res.message}")
    c = float(res.x[0] * c0)
    d = float(d0 + res.x[1] * span)
    return SigmoidFit(c=c, d=d, residual=float(res.fun),
                      residual_history=tuple(history))


def dt_at_level(fit: SigmoidFit, level: float) -> float:
    """Invert the fitted sigmoid: the dt at which A equals `level`."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if fit.c == 0.0:
        raise ValueError("degenerate fit: c = 0 has no inverse")
    return fit.d + math.log(level / (1.0 - level)) / fit.c


def fit_power_law(pairs: Sequence[tuple[float, float]]) -> PowerLawFit:
    """y = prefactor * x**exponent by linear regression in log-log space."""
    if len(pairs) < 3:
        raise FitError(f"need at least 3 pairs, got {len(pairs)}")
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fit requires strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return PowerLawFit(prefactor=float(np.exp(intercept)),
                       exponent=float(slope), r_squared=r2)


def weights_from_stderr(stderr: Sequence[float],
                        floor: float = 0.01) -> list[float]:
    """Sweep-row weights: inverse squared standard error with a floor."""
    return [1.0 / max(float(s), floor) ** 2 for s in stderr]


def _dp_model(u: np.ndarray, b: float, dim: float, a: float) -> np.ndarray:
    delta = a * (u - b)
    p = (math.e + delta) / dim
    out = np.empty_like(u)
    for i, pi in enumerate(p):
        if pi <= 1.0 / dim or pi >= 1.0:
            # outside the closed form's domain: deep absorbing / saturated
            out[i] = 0.0 if pi <= 1.0 / dim else 1.0
        else:
            out[i] = dp.permeable_ratio(dim, float(pi))
    return out


def fit_dp_ratio(
    points: Sequence[tuple[float, float, float]],
    a: float = 5.0,
    d_max: Optional[float] = None,
) -> DpFit:
    """Fit (b, D) of the percolation-ratio model to (N, dt, A) points.

    The ansatz delta = a*(1/(N dt) - b) maps the time step to the bond
    probability p = (e + delta)/D; A is matched to the permeable-path
    ratio.  `a` is fixed (default 5).  D is bounded above by ten times
    the phase-space dimension for the ratio-8 instances.
    """
    if len(points) < 4:
        raise FitError(f"need at least 4 points, got {len(points)}")
    ns = {p[0] for p in points}
    if len(ns) != 1:
        raise FitError("points must all share a single problem size N")
    n = float(next(iter(ns)))
    u = np.array([1.0 / (n * p[1]) for p in points], dtype=float)
    As = np.array([p[2] for p in points], dtype=float)
    if not (As.max() > 0.5 > As.min()):
        raise FitError("insufficient span: points must straddle A = 1/2")
    if d_max is None:
        d_max = 10.0 * (1.0 + 2.0 * 8.0) * n
    d_min = math.e * (1.0 + 1e-9)

    def sse(b: float, dim: float) -> float:
        return float(np.sum((As - _dp_model(u, b, dim, a)) ** 2))

    # seed: b near the observed A = 1/2 crossing, D over a log grid
    order = np.argsort(u)
    b_guess = float(np.interp(0.5, As[order], u[order]))
    b_cands = np.unique(np.concatenate([
        np.geomspace(max(u.min() / 3, 1e-12), u.max() * 3, 20),
        [b_guess] if b_guess > 0 else [],
    ]))
    d_cands = np.geomspace(10.0, d_max, 24)
    best = (math.inf, b_cands[0], d_cands[0])
    for b0 in b_cands:
        for dd in d_cands:
            s = sse(b0, dd)
            if s < best[0]:
                best = (s, b0, dd)
    _, b0, dim0 = best

    def objective(x):
        b = b0 * math.exp(x[0])
        dim = dim0 * math.exp(x[1])
        if b <= 0 or not d_min <= dim <= d_max:
            return math.inf
        return sse(b, dim)

    res = minimize(
        objective,
        x0=np.array([0.0, 0.0]),
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-16, "maxiter": 4000, "maxfev": 8000},
    )
    b = b0 * math.exp(res.x[0])
    dim = dim0 * math.exp(res.x[1])
    if dim >= d_max * 0.99 or dim <= d_min * 1.01:
        raise FitError(f"optimizer stuck at dimension bound (D = {dim:.3g})")
    if not 0.0 < b <= 1.0:
        raise FitError(f"optimizer stuck at offset bound (b = {b:.3g})")
    return DpFit(a=a, b=float(b), dim=float(dim), residual=float(res.fun))
