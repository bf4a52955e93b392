"""The memcomputing dynamical system for 3-SAT.

State: one voltage per variable, v in [-1, 1] (v > 0 reads as logical 1),
plus two memory variables per clause, short-term x_s in [0, 1] and
long-term x_l in [1, 1e4 * M].  Each clause contributes a continuous
violation measure

    C_m = 1/2 * min_i (1 - q_i * v_i),    q_i = +-1 the literal sign,

which is < 1/2 exactly when the clause is satisfied by the sign mapping.
The flow combines a gradient-like push on every literal of a clause
(weighted by x_l * x_s) with a rigidity term that pins the best-satisfied
literal of the clause (weighted by (1 + zeta*x_l)(1 - x_s)), while the
memories integrate C_m against their thresholds.

Bounds are enforced two ways.  The state itself is projected onto its box
(`clamp`) after each completed integration step.  The flow as seen by the
integrators (`flow_field`) additionally saturates its *argument* at the
box before evaluating: the memory variables are physically bounded
quantities, so the vector field is only meaningful there.  For forward
Euler the two conventions coincide (stages are evaluated at the already
clamped state); for multi-stage schemes the saturation is what keeps
intermediate stage states meaningful at large time steps, and without it
the higher-order schemes lose their stability edge over Euler.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .instances import Assignment, Formula, evaluate


@dataclass(frozen=True)
class DmmParams:
    alpha: float = 5.0       # long-term memory rate
    beta: float = 20.0       # short-term memory rate
    gamma: float = 0.25      # short-term threshold
    delta: float = 0.05      # long-term threshold
    epsilon: float = 1e-3    # short-term floor
    zeta: float = 0.1        # rigidity modulation
    xl_max: Optional[float] = None  # long-term cap; defaults to 1e4 * M

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "epsilon", "zeta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma <= self.delta:
            raise ValueError("gamma must exceed delta")
        if self.epsilon >= 0.1:
            raise ValueError("epsilon must be small (< 0.1)")
        if self.xl_max is not None and self.xl_max < 1.0:
            raise ValueError("xl_max must be >= 1")

    def xl_cap(self, n_clauses: int) -> float:
        return self.xl_max if self.xl_max is not None else 1e4 * n_clauses


@dataclass
class DmmState:
    v: np.ndarray    # (N,) voltages in [-1, 1]
    x_s: np.ndarray  # (M,) short-term memory in [0, 1]
    x_l: np.ndarray  # (M,) long-term memory in [1, xl_cap]

    def __post_init__(self):
        self.v = np.ascontiguousarray(self.v, dtype=np.float64)
        self.x_s = np.ascontiguousarray(self.x_s, dtype=np.float64)
        self.x_l = np.ascontiguousarray(self.x_l, dtype=np.float64)
        if self.x_s.shape != self.x_l.shape:
            raise ValueError("x_s and x_l must have the same length")

    def copy(self) -> "DmmState":
        return DmmState(self.v.copy(), self.x_s.copy(), self.x_l.copy())


@dataclass
class Derivative:
    dv: np.ndarray
    dx_s: np.ndarray
    dx_l: np.ndarray


def _check_bounds(state: DmmState, params: DmmParams) -> None:
    cap = params.xl_cap(state.x_l.shape[0])
    if np.any(np.abs(state.v) > 1.0):
        raise ValueError("voltage outside [-1, 1]")
    if np.any(state.x_s < 0.0) or np.any(state.x_s > 1.0):
        raise ValueError("x_s outside [0, 1]")
    if np.any(state.x_l < 1.0) or np.any(state.x_l > cap):
        raise ValueError(f"x_l outside [1, {cap}]")


def _clause_terms(v: np.ndarray, f: Formula) -> np.ndarray:
    # (M, 3) array of 1 - q * v per literal slot
    return 1.0 - f.signs * v[f.var_idx]


def clause_values(state: DmmState, f: Formula) -> np.ndarray:
    """C_m for all clauses at once."""
    return 0.5 * _clause_terms(state.v, f).min(axis=1)


def clause_value(state: DmmState, f: Formula, m: int) -> float:
    """Continuous violation measure of clause m, in [0, 1]."""
    terms = 1.0 - f.signs[m] * state.v[f.var_idx[m]]
    return 0.5 * float(terms.min())


def gradient_term(state: DmmState, f: Formula, m: int, slot: int) -> float:
    """Gradient-like push on the literal in `slot` of clause m.

    Half the literal sign times the smaller of the other two slots'
    (1 - q*v) terms: the clause pulls a literal only as hard as its other
    literals are unsatisfied.
    """
    terms = 1.0 - f.signs[m] * state.v[f.var_idx[m]]
    others = [terms[j] for j in range(3) if j != slot]
    return 0.5 * float(f.signs[m, slot]) * float(min(others))


def rigidity_term(state: DmmState, f: Formula, m: int, slot: int) -> float:
    """Rigidity pin toward the rail, nonzero only on the clause minimizer.

    Ties on the minimum go to the lowest slot index, so exactly one slot
    per clause is active.
    """
    terms = 1.0 - f.signs[m] * state.v[f.var_idx[m]]
    if int(np.argmin(terms)) != slot:
        return 0.0
    return 0.5 * float(f.signs[m, slot] - state.v[f.var_idx[m, slot]])


def flow(state: DmmState, f: Formula, params: DmmParams,
         check_bounds: bool = True) -> Derivative:
    """Time derivative of the full state; pure and deterministic."""
    if check_bounds:
        _check_bounds(state, params)
    dv, dx_s, dx_l = _flow_arrays(state.v, state.x_s, state.x_l, f, params)
    return Derivative(dv, dx_s, dx_l)


def _flow_arrays(v, x_s, x_l, f: Formula, params: DmmParams):
    terms = _clause_terms(v, f)                      # (M, 3)
    min_slot = terms.argmin(axis=1)                  # first minimum: tie rule
    rows = np.arange(f.n_clauses)
    min_val = terms[rows, min_slot]
    c = 0.5 * min_val

    other_min = np.empty_like(terms)
    other_min[:, 0] = np.minimum(terms[:, 1], terms[:, 2])
    other_min[:, 1] = np.minimum(terms[:, 0], terms[:, 2])
    other_min[:, 2] = np.minimum(terms[:, 0], terms[:, 1])
    grad = 0.5 * f.signs * other_min

    rig = np.zeros_like(terms)
    rig[rows, min_slot] = 0.5 * (
        f.signs[rows, min_slot] - v[f.var_idx[rows, min_slot]]
    )

    w_grad = x_l * x_s
    w_rig = (1.0 + params.zeta * x_l) * (1.0 - x_s)
    contrib = w_grad[:, None] * grad + w_rig[:, None] * rig

    dv = np.bincount(
        f.var_idx.ravel(), weights=contrib.ravel(), minlength=f.n_vars
    )
    dx_s = params.beta * (x_s + params.epsilon) * (c - params.gamma)
    dx_l = params.alpha * (c - params.delta)
    return dv, dx_s, dx_l


def clamp(state: DmmState, params: DmmParams) -> DmmState:
    """Project every component onto its interval; idempotent."""
    cap = params.xl_cap(state.x_l.shape[0])
    return DmmState(
        np.clip(state.v, -1.0, 1.0),
        np.clip(state.x_s, 0.0, 1.0),
        np.clip(state.x_l, 1.0, cap),
    )


def assignment_from_voltages(state: DmmState) -> Assignment:
    """Boolean read-out: y_i = 1 iff v_i > 0 (v_i = 0 reads as 0)."""
    return Assignment(state.v > 0.0)


def is_solved(state: DmmState, f: Formula) -> bool:
    return evaluate(f, assignment_from_voltages(state)) == 0


# ---------------------------------------------------------------------------
# flat-vector interface used by the generic integrators: layout [v | x_s | x_l]

def pack(state: DmmState) -> np.ndarray:
    return np.concatenate([state.v, state.x_s, state.x_l])


def unpack(x: np.ndarray, n_vars: int, n_clauses: int) -> DmmState:
    n, m = n_vars, n_clauses
    return DmmState(x[:n], x[n:n + m], x[n + m:n + 2 * m])


def flow_field(f: Formula, params: DmmParams) -> Callable[[np.ndarray], np.ndarray]:
    """Flat derivative function, saturating its argument at the state box.

    Stage states of multi-stage schemes can land outside the box; the
    field is evaluated at their projection onto it.
    """
    n, m = f.n_vars, f.n_clauses
    cap = params.xl_cap(m)

    def field(x: np.ndarray) -> np.ndarray:
        v = np.clip(x[:n], -1.0, 1.0)
        x_s = np.clip(x[n:n + m], 0.0, 1.0)
        x_l = np.clip(x[n + m:], 1.0, cap)
        dv, dx_s, dx_l = _flow_arrays(v, x_s, x_l, f, params)
        return np.concatenate([dv, dx_s, dx_l])

    return field


def clamp_field(f: Formula, params: DmmParams) -> Callable[[np.ndarray], np.ndarray]:
    """Flat projection applied after each completed step."""
    n, m = f.n_vars, f.n_clauses
    cap = params.xl_cap(m)

    def clamp_flat(x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        np.clip(x[:n], -1.0, 1.0, out=out[:n])
        np.clip(x[n:n + m], 0.0, 1.0, out=out[n:n + m])
        np.clip(x[n + m:], 1.0, cap, out=out[n + m:])
        return out

    return clamp_flat


def solved_field(f: Formula) -> Callable[[np.ndarray], bool]:
    """Flat solution predicate on the voltage block."""
    n = f.n_vars
    pos = f.signs > 0

    def solved(x: np.ndarray) -> bool:
        lit_true = (x[:n][f.var_idx] > 0.0) == pos
        return bool(lit_true.any(axis=1).all())

    return solved
