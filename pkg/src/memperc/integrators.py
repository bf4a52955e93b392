"""Generic explicit Runge-Kutta stepping with a constant time step.

A scheme is a Butcher tableau (weights omega, strictly lower-triangular
coefficient matrix lambda); one step evaluates

    k_i = F(x + dt * sum_{j<i} lambda_ij k_j),   i = 1..q
    x'  = x + dt * sum_i omega_i k_i

Only the three fixed-step schemes used by the experiments are provided:
forward Euler (q=1), trapezoid (q=2) and classic RK4 (q=4).  Explicit
methods on a stiff flow can blow up fast, so every stage is guarded
against non-finite derivatives and fails loudly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np


class NonFiniteDerivativeError(ArithmeticError):
    """The field returned a non-finite derivative; carries the stage index."""

    def __init__(self, stage: int):
        super().__init__(f"non-finite derivative at stage {stage}")
        self.stage = stage


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    weights: np.ndarray  # omega, shape (q,)
    coeffs: np.ndarray   # lambda, shape (q, q), strictly lower triangular

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        lam = np.asarray(self.coeffs, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "coeffs", lam)
        q = w.shape[0]
        if lam.shape != (q, q):
            raise ValueError("coeffs must be (q, q) for q weights")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 (consistency)")
        if np.any(np.triu(lam) != 0.0):
            raise ValueError("coeffs must be strictly lower triangular (explicitness)")

    @property
    def stages(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class StepBudget:
    dt: float
    max_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


def tableau_euler() -> ButcherTableau:
    return ButcherTableau("euler", np.array([1.0]), np.zeros((1, 1)))


def tableau_trapezoid() -> ButcherTableau:
    lam = np.zeros((2, 2))
    lam[1, 0] = 1.0
    return ButcherTableau("trapezoid", np.array([0.5, 0.5]), lam)


def tableau_rk4() -> ButcherTableau:
    lam = np.zeros((4, 4))
    lam[1, 0] = 0.5
    lam[2, 1] = 0.5
    lam[3, 2] = 1.0
    return ButcherTableau(
        "rk4", np.array([1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]), lam
    )


_TABLEAUS = {
    "euler": tableau_euler,
    "trapezoid": tableau_trapezoid,
    "rk4": tableau_rk4,
}


def get_tableau(name: str) -> ButcherTableau:
    try:
        return _TABLEAUS[name]()
    except KeyError:
        raise ValueError(
            f"unknown method {name!r}; choose from {sorted(_TABLEAUS)}"
        ) from None


def step(field: Callable, x, dt: float, tableau: ButcherTableau):
    """One explicit RK step; exactly `tableau.stages` field evaluations."""
    q = tableau.stages
    lam = tableau.coeffs
    w = tableau.weights
    ks = []
    for i in range(q):
        xi = x
        for j in range(i):
            if lam[i, j] != 0.0:
                xi = xi + dt * lam[i, j] * ks[j]
        k = field(xi)
        if not np.all(np.isfinite(k)):
            raise NonFiniteDerivativeError(i + 1)
        ks.append(k)
    out = x
    for i in range(q):
        out = out + dt * w[i] * ks[i]
    return out


class IntegrationResult(NamedTuple):
    solved: bool
    steps: int
    fn_evals: int


def integrate(
    field: Callable,
    clamp: Callable,
    solved: Callable[..., bool],
    x0,
    budget: StepBudget,
    tableau: ButcherTableau,
    check_interval: int = 1,
) -> IntegrationResult:
    """Drive step + clamp to the fixed point or until the budget runs out.

    The solution predicate is tested at the initial state, every
    `check_interval` completed steps, and on the final step.  Function
    evaluations are steps times stages.
    """
    if check_interval <= 0:
        raise ValueError("check_interval must be positive")
    q = tableau.stages
    x = x0
    if solved(x):
        return IntegrationResult(True, 0, 0)
    for n in range(1, budget.max_steps + 1):
        x = clamp(step(field, x, budget.dt, tableau))
        if n % check_interval == 0 or n == budget.max_steps:
            if solved(x):
                return IntegrationResult(True, n, q * n)
    return IntegrationResult(False, budget.max_steps, q * budget.max_steps)
