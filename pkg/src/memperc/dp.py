"""Directed percolation on a cone lattice: path counts and the permeable ratio.

The lattice narrows from a base of starting sites down to a single apex
over T levels; every bulk site has D successors one level down, each
bond present independently with probability p.  A permeable path runs
base to apex; an absorbing path ends on a site whose outgoing bonds are
all absent.  Expected counts behave like (Dp)**T, so every formula here
is carried in the log domain; results stay finite for D up to 1e5.

The analytic absorbing count uses the hyperpyramid-volume approximation
for the number of sites per level and ignores the lattice boundary, so
the Monte-Carlo oracle (which samples the concrete finite cone, boundary
included) validates the exact linear recursion and the qualitative
sigmoid, not the closed forms digit for digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .special import log_erfc, log_gamma_p, normal_cdf

_MAX_LATTICE_CELLS = 100_000_000


@dataclass(frozen=True)
class DpParams:
    """Lattice dimension D, percolation probability p, depth T (default D-1)."""

    dim: float
    prob: float
    depth: Optional[int] = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.prob}")
        if self.depth is not None and self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")

    @property
    def t(self) -> int:
        return self.depth if self.depth is not None else int(round(self.dim)) - 1


def _logsumexp(a: np.ndarray) -> float:
    m = np.max(a)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(a - m))))


def expected_permeable(params: DpParams) -> float:
    """Log of the expected permeable-path count, T * ln(Dp)."""
    dp_ = params.dim * params.prob
    if dp_ < 0:
        raise ValueError("Dp must be non-negative")
    if dp_ == 0.0:
        return -math.inf
    return params.t * math.log(dp_)


def expected_absorbing_sum(params: DpParams) -> float:
    """Log of the absorbing-path count by the exact level sum.

    (1-p)^D * sum_{i=0}^{T-1} (T+1-i)^(D-1) / (D-1)! * (Dp)^i, evaluated
    with log-sum-exp.  Uses the hyperpyramid site-count approximation.
    """
    d, p, t = params.dim, params.prob, params.t
    if p == 1.0:
        return -math.inf
    lg = math.lgamma(d)
    if p == 0.0:
        # only the i = 0 term survives
        return (d - 1.0) * math.log(t + 1.0) - lg
    log_dp = math.log(d * p)
    i = np.arange(t)
    terms = (d * math.log1p(-p)
             + (d - 1.0) * np.log(t + 1.0 - i)
             - lg
             + i * log_dp)
    return _logsumexp(terms)


def expected_absorbing_closed(params: DpParams, form: str = "gamma") -> float:
    """Log of the absorbing-path count by the closed forms (valid for Dp > 1).

    gamma form: (Dp)^(T+1)/(D-1)! * ((1-p)/ln Dp)^D * gamma_lower(D, (T+1) ln Dp)
    erfc form (derived for T+1 = D):
                (Dp)^(T+1)/2 * ((1-p)/ln Dp)^D * erfc(sqrt(D)(1-ln Dp)/sqrt(2 ln Dp))
    """
    d, p, t = params.dim, params.prob, params.t
    dp_ = d * p
    if dp_ <= 1.0:
        raise ValueError(f"closed forms require Dp > 1, got Dp = {dp_}")
    log_dp = math.log(dp_)
    if p == 1.0:
        return -math.inf
    common = (t + 1.0) * log_dp + d * (math.log1p(-p) - math.log(log_dp))
    if form == "gamma":
        # log gamma_lower(D, x) - log (D-1)! = log P(D, x)
        return common + log_gamma_p(d, (t + 1.0) * log_dp)
    if form == "erfc":
        arg = math.sqrt(d) * (1.0 - log_dp) / math.sqrt(2.0 * log_dp)
        return common - math.log(2.0) + log_erfc(arg)
    raise ValueError(f"form must be 'gamma' or 'erfc', got {form!r}")


def permeable_ratio(dim: float, prob: float) -> float:
    """Ratio of permeable paths r = n_p / (n_p + n_a), erfc closed form.

    r = 1 / (1 + Dp/2 * ((1-p)/ln Dp)^D * erfc(sqrt(D)(1-ln Dp)/sqrt(2 ln Dp)));
    requires Dp > 1.  The transition sits near p = e/D.
    """
    dp_ = dim * prob
    if dp_ <= 1.0:
        raise ValueError(f"permeable_ratio requires Dp > 1, got Dp = {dp_}")
    if prob >= 1.0:
        return 1.0
    log_dp = math.log(dp_)
    arg = math.sqrt(dim) * (1.0 - log_dp) / math.sqrt(2.0 * log_dp)
    log_x = (math.log(0.5) + log_dp
             + dim * (math.log1p(-prob) - math.log(log_dp))
             + log_erfc(arg))
    # r = 1 / (1 + exp(log_x))
    return math.exp(-np.logaddexp(0.0, log_x))


def ratio_near_transition(dim: float, delta: float) -> float:
    """Permeable ratio expanded around the threshold, p = (e + delta)/D.

    r = 1 / (1 + 1/2 exp(1 - e - delta - D delta/e) erfc(-sqrt(D/2) delta/e));
    for large D the transition is a step at delta = 0.
    """
    e = math.e
    log_x = (math.log(0.5)
             + (1.0 - e - delta - dim * delta / e)
             + log_erfc(-math.sqrt(dim / 2.0) * delta / e))
    return math.exp(-np.logaddexp(0.0, log_x))


def truncated_exp_ratio(n: int, x: float) -> tuple[float, float]:
    """e_n(x) * exp(-x) for the truncated exponential series e_n, with its
    normal-CDF approximation Phi((n - x)/sqrt(x)).

    The exact value is the sum of the Poisson weights g(k, x) for k <= n,
    accumulated in the log domain; its complement is the absorbed
    fraction appearing in the closed-form derivation.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x}")
    k = np.arange(n + 1, dtype=np.float64)
    log_terms = k * math.log(x) - x - gammaln(k + 1.0)
    exact = math.exp(min(_logsumexp(log_terms), 0.0))
    approx = normal_cdf((n - x) / math.sqrt(x))
    return exact, approx


def poisson_weight(k: int, x: float) -> float:
    """g(k, x) = x^k e^{-x} / k!, one term of the truncated series."""
    return math.exp(k * math.log(x) - x - math.lgamma(k + 1.0))


@dataclass(frozen=True)
class LatticeCounts:
    """Permeable/absorbing path counts in the log domain."""

    log_permeable: float
    log_absorbing: float

    @property
    def ratio(self) -> float:
        if self.log_permeable == -math.inf and self.log_absorbing == -math.inf:
            return math.nan
        return math.exp(
            self.log_permeable - np.logaddexp(self.log_permeable,
                                              self.log_absorbing)
        )


@dataclass(frozen=True)
class ConeLatticeResult:
    sampled: LatticeCounts       # log of the Monte-Carlo mean counts
    exact: LatticeCounts         # log of the exact expectation recursion
    mean_permeable: float
    stderr_permeable: float
    mean_absorbing: float
    stderr_absorbing: float
    trials: int


def _simulate_cone_2d(t, p, trials, rng):
    perm = np.ones((trials, t + 1))
    absorbed = np.zeros(trials)
    e_perm = np.ones(t + 1)
    e_absorbed = 0.0
    for level in range(t):
        side = t - level
        b_stay = rng.random((trials, side + 1)) < p
        b_dec = rng.random((trials, side + 1)) < p
        # valid out-bonds: stay needs offset <= side-1, dec needs offset >= 1
        out = b_stay.astype(np.int64)
        out[:, side] = 0
        out[:, 1:] += b_dec[:, 1:]
        absorbed += ((out == 0) * perm[:, : side + 1]).sum(axis=1)
        nxt = np.zeros((trials, side))
        nxt += b_stay[:, :side] * perm[:, :side]
        nxt += b_dec[:, 1:] * perm[:, 1 : side + 1]
        perm = nxt

        deg = np.full(side + 1, 2.0)
        deg[0] = deg[side] = 1.0
        e_absorbed += float(np.sum((1.0 - p) ** deg * e_perm[: side + 1]))
        e_perm = p * (e_perm[:side] + e_perm[1 : side + 1])
    return perm[:, 0], absorbed, float(e_perm[0]), e_absorbed


def _simulate_cone_3d(t, p, trials, rng):
    size = t + 1
    idx = np.arange(size)
    in_simplex = idx[:, None] + idx[None, :] <= t
    perm = np.where(in_simplex, 1.0, 0.0)[None, :, :] * np.ones((trials, 1, 1))
    absorbed = np.zeros(trials)
    e_perm = np.where(in_simplex, 1.0, 0.0)
    e_absorbed = 0.0
    for level in range(t):
        side = t - level
        mask = idx[:, None] + idx[None, :] <= side
        nxt_mask = idx[:, None] + idx[None, :] <= side - 1
        b_stay = rng.random((trials, size, size)) < p
        b_dec1 = rng.random((trials, size, size)) < p
        b_dec2 = rng.random((trials, size, size)) < p

        valid_stay = nxt_mask                      # stay keeps the offset
        valid_dec1 = mask & (idx[:, None] >= 1)
        valid_dec2 = mask & (idx[None, :] >= 1)
        out = (b_stay & valid_stay).astype(np.int64)
        out += b_dec1 & valid_dec1
        out += b_dec2 & valid_dec2
        dead = (out == 0) & mask
        absorbed += (dead * perm).sum(axis=(1, 2))

        nxt = np.zeros_like(perm)
        nxt += (b_stay & nxt_mask) * perm
        nxt[:, :-1, :] += (b_dec1[:, 1:, :] & nxt_mask[:-1, :]) * perm[:, 1:, :]
        nxt[:, :, :-1] += (b_dec2[:, :, 1:] & nxt_mask[:, :-1]) * perm[:, :, 1:]
        nxt *= nxt_mask
        perm = nxt

        deg = (valid_stay.astype(np.int64) + valid_dec1 + valid_dec2)
        e_absorbed += float(np.sum((1.0 - p) ** deg * e_perm * mask))
        e_nxt = np.zeros_like(e_perm)
        e_nxt += e_perm
        e_nxt[:-1, :] += e_perm[1:, :]
        e_nxt[:, :-1] += e_perm[:, 1:]
        e_perm = p * e_nxt * nxt_mask
    return perm[:, 0, 0], absorbed, float(e_perm[0, 0]), e_absorbed


def simulate_cone_lattice(
    dim: int, depth: int, prob: float, trials: int, seed: int
) -> ConeLatticeResult:
    """Monte-Carlo bond percolation on the concrete finite cone (D = 2 or 3).

    Counts permeable and absorbing paths per sampled bond configuration by
    dynamic programming down the levels, and also evaluates the exact
    expectation recursion (predecessor sums times p) on the same lattice.
    """
    if dim not in (2, 3):
        raise ValueError("explicit cone geometry supports dim 2 or 3 only")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {prob}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cells = trials * (depth + 1) ** (dim - 1)
    if cells > _MAX_LATTICE_CELLS:
        raise ValueError(f"lattice of {cells} cells exceeds the memory cap")
    rng = np.random.default_rng(seed)
    if dim == 2:
        perm, absorbed, e_perm, e_abs = _simulate_cone_2d(depth, prob, trials, rng)
    else:
        perm, absorbed, e_perm, e_abs = _simulate_cone_3d(depth, prob, trials, rng)

    mean_p = float(perm.mean())
    mean_a = float(absorbed.mean())
    se_p = float(perm.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    se_a = float(absorbed.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0

    def _log(v: float) -> float:
        return math.log(v) if v > 0 else -math.inf

    return ConeLatticeResult(
        sampled=LatticeCounts(_log(mean_p), _log(mean_a)),
        exact=LatticeCounts(_log(e_perm), _log(e_abs)),
        mean_permeable=mean_p,
        stderr_permeable=se_p,
        mean_absorbing=mean_a,
        stderr_absorbing=se_a,
        trials=trials,
    )
