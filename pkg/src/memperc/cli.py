"""Command-line front end: generation, solving, sweeps, fits, percolation tables.

Every table-producing command writes a fixed-header CSV plus a JSON run
manifest; `memperc rerun <manifest>` replays the stored parameters and
reproduces the CSV byte for byte (worker-pool width never affects
output).  The base seed defaults to 0, can be set with --seed, or via
the MEMPERC_SEED environment variable when --seed is absent.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, artifacts, dp, fitting, harness, instances
from .dmm import DmmParams


def _resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get("MEMPERC_SEED")
    if env is not None:
        return int(env)
    return 0


def _ratio_tag(ratio: float) -> str:
    return str(int(ratio)) if float(ratio).is_integer() else str(ratio)


def _load_cnf_dir(path: str):
    files = sorted(Path(path).glob("*.cnf"))
    if not files:
        raise FileNotFoundError(f"no .cnf files under {path}")
    formulas = [instances.load_formula(f) for f in files]
    digests = {f.name: artifacts.file_digest(f) for f in files}
    return formulas, digests


def _write_with_manifest(command, params, seed, out_path, writer, digests=None):
    writer(out_path)
    manifest = artifacts.new_manifest(command, params, seed, __version__)
    manifest.instance_digests = digests or {}
    manifest.outputs = [out_path.name]
    manifest.save(artifacts.manifest_path_for(out_path))
    return [str(out_path)]


# ---------------------------------------------------------------------------
# command implementations; each takes a plain params dict so a manifest
# can replay it


def run_gen(params: dict, out_dir: Path, threads=None) -> list[str]:
    n, ratio, p0 = params["n"], params["ratio"], params["p0"]
    count, seed = params["count"], params["seed"]
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = harness.generate_instances(n, ratio, count, seed, p0)
    outputs = []
    for k, (formula, assignment) in enumerate(pairs):
        stem = f"cdc_N{n}_r{_ratio_tag(ratio)}_s{seed}_{k}"
        cnf = out_dir / f"{stem}.cnf"
        instances.save_formula(cnf, formula)
        instances.save_assignment(out_dir / f"{stem}.assignment", assignment)
        outputs.append(str(cnf))
    manifest = artifacts.new_manifest("gen", params, seed, __version__)
    manifest.outputs = [Path(o).name for o in outputs]
    manifest.instance_digests = {
        Path(o).name: artifacts.file_digest(o) for o in outputs
    }
    manifest.save(out_dir / f"cdc_N{n}_r{_ratio_tag(ratio)}_s{seed}.manifest.json")
    return outputs


def run_solve(params: dict, out_dir: Path, threads=None) -> list[str]:
    formula = instances.load_formula(params["cnf"])
    max_steps = params["max_steps"] or harness.default_max_steps(formula.n_vars)
    cfg = harness.TrialConfig(
        formula=formula,
        method=params["method"],
        dt=params["dt"],
        max_steps=max_steps,
        seed=params["seed"],
        dmm_params=DmmParams(),
    )
    result = harness.run_trial(cfg)
    print(json.dumps({
        "solved": result.solved,
        "steps": result.steps,
        "fn_evals": result.fn_evals,
        "wall_time": result.wall_time,
        "diverged": result.diverged,
    }))
    return []


def run_plateau(params: dict, out_dir: Path, threads=None) -> list[str]:
    seed = params["seed"]
    digests = None
    if params.get("cnf_dir"):
        formulas, digests = _load_cnf_dir(params["cnf_dir"])
    else:
        formulas = [f for f, _ in harness.generate_instances(
            params["n"], params["ratio"], params["instances"], seed,
            params["p0"])]
    grid = np.unique(np.geomspace(
        1, params["max_steps"], params["grid_points"]).astype(np.int64))
    curve = harness.plateau_curve(
        formulas, params["method"], params["dt"], params["seeds"],
        params["max_steps"], grid, base_seed=seed, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "plateau.csv"
    return _write_with_manifest(
        "plateau", params, seed, out,
        lambda p: artifacts.write_plateau_csv(p, curve), digests)


def run_sweep(params: dict, out_dir: Path, threads=None) -> list[str]:
    seed = params["seed"]
    digests = None
    formulas = None
    if params.get("cnf_dir"):
        formulas, digests = _load_cnf_dir(params["cnf_dir"])
    if params.get("dt_grid"):
        rows = harness.sweep_dt(
            params["n"], params["ratio"], params["method"], params["dt_grid"],
            params["instances"], params["seeds"], params["budget"],
            base_seed=seed, p0=params["p0"], threads=threads,
            formulas=formulas)
    else:
        rows = harness.bracket_transition(
            params["n"], params["ratio"], params["method"],
            params["instances"], params["seeds"], params["budget"],
            start_dt=params["start_dt"], base_seed=seed, p0=params["p0"],
            threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "sweep.csv"
    return _write_with_manifest(
        "sweep", params, seed, out,
        lambda p: artifacts.write_sweep_csv(p, rows), digests)


def run_fit(params: dict, out_dir: Path, threads=None) -> list[str]:
    rows = artifacts.read_sweep_csv(params["input"])
    digests = {Path(params["input"]).name: artifacts.file_digest(params["input"])}
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r.n_vars, r.ratio, r.method), []).append(r)
    fit_rows = []
    for (n, ratio, method), grp in sorted(groups.items()):
        pts = [(g.dt, g.A, w) for g, w in zip(
            grp, fitting.weights_from_stderr([g.stderr_A for g in grp]))]
        fit = fitting.fit_sigmoid(pts)
        b = dim = None
        if params["dp_fit"]:
            dpfit = fitting.fit_dp_ratio(
                [(n, g.dt, g.A) for g in grp], a=params["a"])
            b, dim = dpfit.b, dpfit.dim
        fit_rows.append(artifacts.FitRow(
            n_vars=n, ratio=ratio, method=method, c=fit.c, d=fit.d,
            dt_c=fit.d, dt_95=fitting.dt_at_level(fit, 0.95),
            b=b, dim=dim, residual=fit.residual))
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "fit.csv"
    return _write_with_manifest(
        "fit", params, params["seed"], out,
        lambda p: artifacts.write_fit_csv(p, fit_rows), digests)


def run_scale(params: dict, out_dir: Path, threads=None) -> list[str]:
    fits = [r for r in artifacts.read_fit_csv(params["fits"])
            if r.method == params["method"]]
    if len(fits) < 3:
        raise ValueError(
            f"need fitted dt_95 for >= 3 sizes of method {params['method']!r}")
    digests = {Path(params["fits"]).name: artifacts.file_digest(params["fits"])}
    law = fitting.fit_power_law([(r.n_vars, r.dt_95) for r in fits])
    rows = harness.scalability(
        params["n_list"], params["ratio"], params["method"],
        params["instances"], params["seeds"],
        dt95_of_n=lambda n: float(law.predict(n)),
        percentiles=params["percentiles"], safety=params["safety"],
        base_seed=params["seed"], p0=params["p0"], threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "scale.csv"
    return _write_with_manifest(
        "scale", params, params["seed"], out,
        lambda p: artifacts.write_scale_csv(p, rows), digests)


def run_dp_eval(params: dict, out_dir: Path, threads=None) -> list[str]:
    dim = params["dim"]
    if params.get("p_grid"):
        probs = [float(p) for p in params["p_grid"]]
    elif params.get("delta_grid"):
        probs = [(math.e + float(d)) / dim for d in params["delta_grid"]]
    else:
        probs = list(np.linspace(0.8 * math.e / dim, 1.3 * math.e / dim,
                                 params["points"]))
    depth = params["depth"] if params.get("depth") else int(round(dim)) - 1
    rows = []
    for p in probs:
        delta = dim * p - math.e
        dp_params = dp.DpParams(dim=dim, prob=p, depth=depth)
        log_np = dp.expected_permeable(dp_params)
        log_na = dp.expected_absorbing_sum(dp_params)
        r_sum = dp.LatticeCounts(log_np, log_na).ratio
        if dim * p > 1.0:
            r_gamma = dp.LatticeCounts(
                log_np, dp.expected_absorbing_closed(dp_params, "gamma")).ratio
            r_erfc = dp.permeable_ratio(dim, p)
        else:
            r_gamma = r_erfc = None
        rows.append((dim, p, delta, r_sum, r_gamma, r_erfc,
                     dp.ratio_near_transition(dim, delta)))
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "dp_eval.csv"
    return _write_with_manifest(
        "dp-eval", params, params.get("seed", 0), out,
        lambda path: artifacts.write_csv(path, artifacts.DP_EVAL_COLUMNS, rows))


def run_dp_sim(params: dict, out_dir: Path, threads=None) -> list[str]:
    res = dp.simulate_cone_lattice(
        params["dim"], params["depth"], params["p"], params["trials"],
        params["seed"])
    row = (params["dim"], params["depth"], params["p"], res.trials,
           res.mean_permeable, res.stderr_permeable, res.mean_absorbing,
           res.stderr_absorbing, res.sampled.ratio,
           math.exp(res.exact.log_permeable),
           math.exp(res.exact.log_absorbing), res.exact.ratio)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "dp_sim.csv"
    return _write_with_manifest(
        "dp-sim", params, params["seed"], out,
        lambda path: artifacts.write_csv(path, artifacts.DP_SIM_COLUMNS, [row]))


COMMANDS = {
    "gen": run_gen,
    "solve": run_solve,
    "plateau": run_plateau,
    "sweep": run_sweep,
    "fit": run_fit,
    "scale": run_scale,
    "dp-eval": run_dp_eval,
    "dp-sim": run_dp_sim,
}


def run_rerun(manifest_path: str, out_dir: Path, threads=None) -> list[str]:
    manifest = artifacts.RunManifest.load(manifest_path)
    if manifest.command not in COMMANDS:
        raise ValueError(f"manifest command {manifest.command!r} unknown")
    # inputs named in the manifest must still match their digests
    params = manifest.params
    for key in ("input", "fits", "cnf"):
        if key in params and params[key]:
            name = Path(params[key]).name
            want = manifest.instance_digests.get(name)
            if want and artifacts.file_digest(params[key]) != want:
                raise ValueError(f"input {params[key]} digest mismatch")
    return COMMANDS[manifest.command](params, out_dir, threads)


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (default: MEMPERC_SEED or 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker-pool width (output independent of it)")
    p.add_argument("--out", default=".", help="output directory")


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="memperc",
        description="memcomputing 3-SAT solver experiments and "
                    "directed-percolation tables",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate planted CDC instances")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--ratio", type=float, default=8.0)
    g.add_argument("--p0", type=float, default=0.08)
    g.add_argument("--count", type=int, default=1)
    _add_common(g)

    s = sub.add_parser("solve", help="solve one DIMACS instance")
    s.add_argument("cnf")
    s.add_argument("--method", choices=["euler", "trapezoid", "rk4"],
                   default="euler")
    s.add_argument("--dt", type=float, required=True)
    s.add_argument("--max-steps", type=int, default=None)
    _add_common(s)

    pl = sub.add_parser("plateau", help="unsolved count vs integration steps")
    pl.add_argument("--n", type=int)
    pl.add_argument("--ratio", type=float, default=8.0)
    pl.add_argument("--p0", type=float, default=0.08)
    pl.add_argument("--cnf-dir", default=None)
    pl.add_argument("--method", choices=["euler", "trapezoid", "rk4"],
                    default="euler")
    pl.add_argument("--dt", type=float, required=True)
    pl.add_argument("--instances", type=int, default=10)
    pl.add_argument("--seeds", type=int, default=10)
    pl.add_argument("--max-steps", type=int, default=None)
    pl.add_argument("--grid-points", type=int, default=40)
    _add_common(pl)

    sw = sub.add_parser("sweep", help="basin-of-attraction sweep A(dt)")
    sw.add_argument("--n", type=int, required=True)
    sw.add_argument("--ratio", type=float, default=8.0)
    sw.add_argument("--p0", type=float, default=0.08)
    sw.add_argument("--cnf-dir", default=None)
    sw.add_argument("--method", choices=["euler", "trapezoid", "rk4"],
                    default="euler")
    sw.add_argument("--dt-grid", type=_float_list, default=None,
                    help="comma-separated dt values; omit for adaptive "
                         "bracketing")
    sw.add_argument("--start-dt", type=float, default=0.3)
    sw.add_argument("--instances", type=int, default=10)
    sw.add_argument("--seeds", type=int, default=10)
    sw.add_argument("--budget", type=int, default=None)
    _add_common(sw)

    ft = sub.add_parser("fit", help="sigmoid / percolation-ratio fits of a sweep CSV")
    ft.add_argument("--in", dest="input", required=True)
    ft.add_argument("--dp-fit", action="store_true",
                    help="also fit (b, D) of the percolation-ratio model")
    ft.add_argument("--a", type=float, default=5.0)
    _add_common(ft)

    sc = sub.add_parser("scale", help="steps at percentiles vs problem size")
    sc.add_argument("--fits", required=True, help="fit CSV with dt_95 per size")
    sc.add_argument("--n-list", type=_int_list, required=True)
    sc.add_argument("--ratio", type=float, default=8.0)
    sc.add_argument("--p0", type=float, default=0.08)
    sc.add_argument("--method", choices=["euler", "trapezoid", "rk4"],
                    default="euler")
    sc.add_argument("--instances", type=int, default=10)
    sc.add_argument("--seeds", type=int, default=10)
    sc.add_argument("--percentiles", type=_int_list, default=[50, 90])
    sc.add_argument("--safety", type=float, default=0.6)
    _add_common(sc)

    dpe = sub.add_parser("dp-eval", help="analytic permeable-ratio tables")
    dpe.add_argument("--dim", type=float, required=True)
    dpe.add_argument("--depth", type=int, default=None)
    dpe.add_argument("--p-grid", type=_float_list, default=None)
    dpe.add_argument("--delta-grid", type=_float_list, default=None)
    dpe.add_argument("--points", type=int, default=25)
    _add_common(dpe)

    dps = sub.add_parser("dp-sim", help="Monte-Carlo cone-lattice sampling")
    dps.add_argument("--dim", type=int, choices=[2, 3], required=True)
    dps.add_argument("--depth", type=int, required=True)
    dps.add_argument("--p", type=float, required=True)
    dps.add_argument("--trials", type=int, default=10000)
    _add_common(dps)

    rr = sub.add_parser("rerun", help="replay a run manifest byte-for-byte")
    rr.add_argument("manifest")
    rr.add_argument("--threads", type=int, default=None)
    rr.add_argument("--out", default=".")

    return ap


def _params_from_args(args: argparse.Namespace) -> dict:
    seed = _resolve_seed(args.seed)
    cmd = args.command
    if cmd == "gen":
        return {"n": args.n, "ratio": args.ratio, "p0": args.p0,
                "count": args.count, "seed": seed}
    if cmd == "solve":
        return {"cnf": args.cnf, "method": args.method, "dt": args.dt,
                "max_steps": args.max_steps, "seed": seed}
    if cmd == "plateau":
        if not args.cnf_dir and args.n is None:
            raise ValueError("plateau needs --n or --cnf-dir")
        return {"n": args.n, "ratio": args.ratio, "p0": args.p0,
                "cnf_dir": args.cnf_dir, "method": args.method, "dt": args.dt,
                "instances": args.instances, "seeds": args.seeds,
                "max_steps": args.max_steps or harness.default_max_steps(args.n or 1000),
                "grid_points": args.grid_points, "seed": seed}
    if cmd == "sweep":
        return {"n": args.n, "ratio": args.ratio, "p0": args.p0,
                "cnf_dir": args.cnf_dir, "method": args.method,
                "dt_grid": args.dt_grid, "start_dt": args.start_dt,
                "instances": args.instances, "seeds": args.seeds,
                "budget": args.budget or harness.default_max_steps(args.n),
                "seed": seed}
    if cmd == "fit":
        return {"input": args.input, "dp_fit": args.dp_fit, "a": args.a,
                "seed": seed}
    if cmd == "scale":
        return {"fits": args.fits, "n_list": args.n_list, "ratio": args.ratio,
                "p0": args.p0, "method": args.method,
                "instances": args.instances, "seeds": args.seeds,
                "percentiles": args.percentiles, "safety": args.safety,
                "seed": seed}
    if cmd == "dp-eval":
        return {"dim": args.dim, "depth": args.depth, "p_grid": args.p_grid,
                "delta_grid": args.delta_grid, "points": args.points,
                "seed": seed}
    if cmd == "dp-sim":
        return {"dim": args.dim, "depth": args.depth, "p": args.p,
                "trials": args.trials, "seed": seed}
    raise ValueError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out_dir = Path(args.out)
        if args.command == "rerun":
            run_rerun(args.manifest, out_dir, args.threads)
            return 0
        params = _params_from_args(args)
        COMMANDS[args.command](params, out_dir, args.threads)
        return 0
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - single machine-readable line
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
