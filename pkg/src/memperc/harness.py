"""Trial runner and the three experiment protocols.

A trial integrates one instance from one random initial condition
(voltages uniform on (-1, 1), short-term memory at 0.5, long-term at its
floor) until the Boolean read-out satisfies the formula or the step
budget runs out.  On top of that sit the figure-level protocols:

* plateau curves: unsolved-trial counts versus integration steps,
* basin sweeps: solved fraction A versus the time step dt,
* scalability runs: steps/function evaluations at fixed percentiles,
  with the production dt chosen as 0.6 times the fitted dt at A = 0.95.

Trials are independent jobs; the pool is a thread pool over the nogil
kernel and results are aggregated in (instance, replica) order, so every
aggregate is a pure function of (instances, config, base seed) no matter
how many workers run.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .dmm import DmmParams, DmmState
from .instances import Assignment, CdcParams, Formula, generate_cdc
from .integrators import get_tableau

_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, *indices: int) -> int:
    """Stable per-trial seed: base XOR a keyed hash of the index tuple.

    Adding instances or replicas never perturbs existing trials.
    """
    tag = ":".join(str(i) for i in indices).encode("ascii")
    h = hashlib.blake2b(tag, digest_size=8).digest()
    return (base_seed ^ int.from_bytes(h, "little")) & _MASK64


def trial_seed(base_seed: int, instance_index: int, replica_index: int) -> int:
    return derive_seed(base_seed, instance_index, replica_index)


def default_max_steps(n_vars: int) -> int:
    """Default step budget: 1e5 up to 1000 variables, then a power law."""
    if n_vars <= 1000:
        return 100_000
    return int(round(1e5 * (n_vars / 1000.0) ** 0.6))


def initial_state(f: Formula, seed: int) -> DmmState:
    """Random voltages from the seed; memories start neutral/minimal."""
    rng = np.random.default_rng(seed & _MASK64)
    v = rng.uniform(-1.0, 1.0, f.n_vars)
    return DmmState(v, np.full(f.n_clauses, 0.5), np.ones(f.n_clauses))


@dataclass(frozen=True)
class TrialConfig:
    formula: Formula
    method: str
    dt: float
    max_steps: int
    seed: int
    dmm_params: DmmParams = field(default_factory=DmmParams)
    check_interval: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        get_tableau(self.method)  # validate the method id early


@dataclass(frozen=True)
class TrialResult:
    solved: bool
    steps: int
    fn_evals: int
    wall_time: float
    diverged: bool = False

    @property
    def solve_step(self) -> float:
        """Step at which the trial solved, +inf for unsolved trials."""
        return float(self.steps) if self.solved else float("inf")


def run_trial(cfg: TrialConfig) -> TrialResult:
    """One deterministic solution attempt; divergence counts as unsolved."""
    t0 = time.perf_counter()
    f = cfg.formula
    tab = get_tableau(cfg.method)
    state = initial_state(f, cfg.seed)
    status, steps = _kernels.integrate_dmm(
        f.var_idx,
        f.signs.astype(np.float64),
        state.v,
        state.x_s,
        state.x_l,
        float(cfg.dt),
        tab.weights,
        tab.coeffs,
        int(cfg.max_steps),
        int(cfg.check_interval),
        cfg.dmm_params.alpha,
        cfg.dmm_params.beta,
        cfg.dmm_params.gamma,
        cfg.dmm_params.delta,
        cfg.dmm_params.epsilon,
        cfg.dmm_params.zeta,
        cfg.dmm_params.xl_cap(f.n_clauses),
    )
    wall = time.perf_counter() - t0
    return TrialResult(
        solved=status == _kernels.SOLVED,
        steps=int(steps),
        fn_evals=tab.stages * int(steps),
        wall_time=wall,
        diverged=status == _kernels.DIVERGED,
    )


_kernel_warm = False


def _warm_kernel() -> None:
    # compile the kernel once before fanning out onto the pool
    global _kernel_warm
    if _kernel_warm:
        return
    params = CdcParams(n_vars=5, ratio=1.0, seed=0)
    f, _ = generate_cdc(params)
    run_trial(TrialConfig(f, "euler", dt=0.05, max_steps=2, seed=1))
    _kernel_warm = True


def run_trials(
    configs: Sequence[TrialConfig], threads: Optional[int] = None
) -> list[TrialResult]:
    """Run independent trials on a worker pool; results in input order."""
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(configs) <= 1:
        return [run_trial(c) for c in configs]
    _warm_kernel()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_trial, configs))


# ---------------------------------------------------------------------------
# protocols


def generate_instances(
    n_vars: int,
    ratio: float,
    count: int,
    base_seed: int = 0,
    p0: float = 0.08,
) -> list[tuple[Formula, Assignment]]:
    """CDC instances with per-instance seeds derived from the base seed."""
    out = []
    for k in range(count):
        params = CdcParams(
            n_vars=n_vars, ratio=ratio, p0=p0, seed=derive_seed(base_seed, 7, k)
        )
        out.append(generate_cdc(params))
    return out


@dataclass
class PlateauCurve:
    grid: np.ndarray          # increasing step counts
    unsolved: np.ndarray      # total unsolved trials at each grid point
    per_instance: np.ndarray  # (instances, grid) unsolved among each instance's replicas
    trials: int

    @property
    def instance_std(self) -> np.ndarray:
        return self.per_instance.std(axis=0)


def plateau_curve(
    formulas: Sequence[Formula],
    method: str,
    dt: float,
    seeds_per_instance: int,
    max_steps: int,
    grid: Sequence[int],
    base_seed: int = 0,
    dmm_params: Optional[DmmParams] = None,
    threads: Optional[int] = None,
) -> PlateauCurve:
    """Unsolved-trial counts versus integration steps (aggregate and per instance)."""
    grid = np.asarray(grid, dtype=np.int64)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty increasing sequence")
    params = dmm_params or DmmParams()
    configs = [
        TrialConfig(f, method, dt, max_steps, trial_seed(base_seed, i, r), params)
        for i, f in enumerate(formulas)
        for r in range(seeds_per_instance)
    ]
    results = run_trials(configs, threads)
    solve_steps = np.array([r.solve_step for r in results]).reshape(
        len(formulas), seeds_per_instance
    )
    per_instance = (solve_steps[:, :, None] > grid[None, None, :]).sum(axis=1)
    return PlateauCurve(
        grid=grid,
        unsolved=per_instance.sum(axis=0),
        per_instance=per_instance,
        trials=len(configs),
    )


@dataclass(frozen=True)
class SweepRow:
    n_vars: int
    ratio: float
    method: str
    dt: float
    trials: int
    solved: int
    stderr_A: float
    max_steps: int
    plateau_reached: bool

    @property
    def A(self) -> float:
        return self.solved / self.trials


def _sweep_point(
    formulas, n_vars, ratio, method, dt, seeds_per_instance, budget,
    base_seed, dmm_params, threads,
) -> SweepRow:
    configs = [
        TrialConfig(f, method, dt, budget, trial_seed(base_seed, i, r), dmm_params)
        for i, f in enumerate(formulas)
        for r in range(seeds_per_instance)
    ]
    results = run_trials(configs, threads)
    solved = sum(r.solved for r in results)
    n = len(results)
    a = solved / n
    stderr = float(np.sqrt(a * (1.0 - a) / n))
    # plateau criterion: the unsolved count must not change over the last
    # 20% of the budget, i.e. no trial may solve after 80% of it
    late = [r for r in results if r.solved and r.steps > 0.8 * budget]
    return SweepRow(
        n_vars=n_vars,
        ratio=ratio,
        method=method,
        dt=dt,
        trials=n,
        solved=solved,
        stderr_A=stderr,
        max_steps=budget,
        plateau_reached=not late,
    )


def sweep_dt(
    n_vars: int,
    ratio: float,
    method: str,
    dt_grid: Sequence[float],
    n_instances: int,
    seeds_per_instance: int,
    budget: int,
    base_seed: int = 0,
    p0: float = 0.08,
    dmm_params: Optional[DmmParams] = None,
    threads: Optional[int] = None,
    formulas: Optional[Sequence[Formula]] = None,
) -> list[SweepRow]:
    """Basin-of-attraction estimate A(dt) on a fixed grid, rows sorted by dt."""
    if any(dt <= 0 for dt in dt_grid):
        raise ValueError("dt grid must be positive")
    params = dmm_params or DmmParams()
    if formulas is None:
        formulas = [f for f, _ in generate_instances(n_vars, ratio, n_instances,
                                                     base_seed, p0)]
    rows = [
        _sweep_point(formulas, n_vars, ratio, method, float(dt),
                     seeds_per_instance, budget, base_seed, params, threads)
        for dt in sorted(dt_grid)
    ]
    return rows


GRID_POINTS_PER_DECADE = 12


def bracket_transition(
    n_vars: int,
    ratio: float,
    method: str,
    n_instances: int,
    seeds_per_instance: int,
    budget: int,
    start_dt: float = 0.3,
    high: float = 0.95,
    low: float = 0.05,
    max_points: int = 40,
    points_per_decade: int = GRID_POINTS_PER_DECADE,
    base_seed: int = 0,
    p0: float = 0.08,
    dmm_params: Optional[DmmParams] = None,
    threads: Optional[int] = None,
) -> list[SweepRow]:
    """Adaptive sweep: extend a geometric dt grid until both shoulders
    (A > high and A < low) are observed.  Rows come back sorted by dt."""
    params = dmm_params or DmmParams()
    formulas = [f for f, _ in generate_instances(n_vars, ratio, n_instances,
                                                 base_seed, p0)]
    step = 10.0 ** (1.0 / points_per_decade)

    def point(dt: float) -> SweepRow:
        return _sweep_point(formulas, n_vars, ratio, method, dt,
                            seeds_per_instance, budget, base_seed, params,
                            threads)

    rows: dict[float, SweepRow] = {}
    dt = start_dt
    rows[dt] = point(dt)

    # walk up in dt until the failing shoulder is seen
    hi_dt = start_dt
    while rows[hi_dt].A > low and len(rows) < max_points:
        hi_dt = hi_dt * step
        rows[hi_dt] = point(hi_dt)
    # walk down in dt until the solving shoulder is seen
    lo_dt = start_dt
    while rows[lo_dt].A < high and len(rows) < max_points:
        lo_dt = lo_dt / step
        rows[lo_dt] = point(lo_dt)

    out = [rows[k] for k in sorted(rows)]
    if not (any(r.A > high for r in out) and any(r.A < low for r in out)):
        raise RuntimeError(
            f"transition not bracketed within {max_points} grid points"
        )
    return out


@dataclass(frozen=True)
class ScaleRow:
    n_vars: int
    ratio: float
    method: str
    dt: float
    trials: int
    solved: int
    percentile: int
    steps: Optional[int]        # None when the percentile is undefined
    fn_evals: Optional[int]
    stderr_steps: float

    @property
    def defined(self) -> bool:
        return self.steps is not None


def _percentile_step(solve_steps: np.ndarray, pct: float) -> float:
    """Smallest step count by which pct% of the trials have solved."""
    n = solve_steps.shape[0]
    k = int(np.ceil(pct / 100.0 * n))
    return float(np.partition(solve_steps, k - 1)[k - 1])


def scalability(
    n_list: Sequence[int],
    ratio: float,
    method: str,
    n_instances: int,
    seeds_per_instance: int,
    dt95_of_n,
    percentiles: Sequence[int] = (50, 90),
    safety: float = 0.6,
    budget_of_n=default_max_steps,
    n_bootstrap: int = 1000,
    base_seed: int = 0,
    p0: float = 0.08,
    dmm_params: Optional[DmmParams] = None,
    threads: Optional[int] = None,
) -> list[ScaleRow]:
    """Steps / function evaluations at fixed percentiles versus problem size.

    The production time step for each size is safety * dt95_of_n(n), with
    dt95_of_n normally the power-law fit of the sweep-derived dt at
    A = 0.95.  Percentile errors come from resampling trials with
    replacement (one-standard-deviation bars).
    """
    params = dmm_params or DmmParams()
    tab = get_tableau(method)
    out: list[ScaleRow] = []
    for n in n_list:
        dt = safety * float(dt95_of_n(n))
        budget = int(budget_of_n(n))
        formulas = [f for f, _ in generate_instances(n, ratio, n_instances,
                                                     base_seed, p0)]
        configs = [
            TrialConfig(f, method, dt, budget, trial_seed(base_seed, i, r), params)
            for i, f in enumerate(formulas)
            for r in range(seeds_per_instance)
        ]
        results = run_trials(configs, threads)
        solve_steps = np.array([r.solve_step for r in results])
        solved = int(np.isfinite(solve_steps).sum())
        boot_rng = np.random.default_rng(derive_seed(base_seed, 11, n))
        for pct in percentiles:
            est = _percentile_step(solve_steps, pct)
            if not np.isfinite(est):
                out.append(ScaleRow(n, ratio, method, dt, len(results), solved,
                                    int(pct), None, None, float("nan")))
                continue
            boots = np.empty(n_bootstrap)
            m = solve_steps.shape[0]
            for b in range(n_bootstrap):
                sample = solve_steps[boot_rng.integers(0, m, size=m)]
                boots[b] = _percentile_step(sample, pct)
            finite = boots[np.isfinite(boots)]
            stderr = float(finite.std()) if finite.size else float("nan")
            out.append(ScaleRow(n, ratio, method, dt, len(results), solved,
                                int(pct), int(est), tab.stages * int(est),
                                stderr))
    return out
