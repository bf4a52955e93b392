"""CSV and run-manifest output.

Every experiment writes a fixed-header CSV plus a JSON manifest capturing
the command, its full parameter set and input digests, so any table can
be reproduced byte for byte from its manifest.  Floats are rendered with
`repr` (shortest round trip, locale independent); wall-clock quantities
never enter a CSV.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from .harness import PlateauCurve, ScaleRow, SweepRow

SWEEP_COLUMNS = ["n_vars", "ratio", "method", "dt", "trials", "solved",
                 "A", "stderr_A", "max_steps", "plateau_reached"]
PLATEAU_COLUMNS = ["step", "unsolved", "mean_per_instance", "std_per_instance"]
SCALE_COLUMNS = ["n_vars", "ratio", "method", "dt", "trials", "solved",
                 "percentile", "steps", "fn_evals", "stderr_steps"]
FIT_COLUMNS = ["n_vars", "ratio", "method", "c", "d", "dt_c", "dt_95",
               "b", "D", "residual"]
DP_EVAL_COLUMNS = ["D", "p", "delta", "r_exact_sum", "r_gamma", "r_erfc",
                   "r_near_transition"]
DP_SIM_COLUMNS = ["D", "T", "p", "trials", "mean_permeable",
                  "stderr_permeable", "mean_absorbing", "stderr_absorbing",
                  "ratio", "exact_permeable", "exact_absorbing", "exact_ratio"]


def fmt(value) -> str:
    """Stable text form for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_sweep_csv(path, rows: Sequence[SweepRow]) -> None:
    write_csv(path, SWEEP_COLUMNS, (
        (r.n_vars, r.ratio, r.method, r.dt, r.trials, r.solved, r.A,
         r.stderr_A, r.max_steps, r.plateau_reached)
        for r in rows
    ))


def read_sweep_csv(path) -> list[SweepRow]:
    out = []
    with open(path, newline="", encoding="ascii") as fh:
        for rec in csv.DictReader(fh):
            out.append(SweepRow(
                n_vars=int(rec["n_vars"]),
                ratio=float(rec["ratio"]),
                method=rec["method"],
                dt=float(rec["dt"]),
                trials=int(rec["trials"]),
                solved=int(rec["solved"]),
                stderr_A=float(rec["stderr_A"]),
                max_steps=int(rec["max_steps"]),
                plateau_reached=rec["plateau_reached"] == "true",
            ))
    return out


def write_plateau_csv(path, curve: PlateauCurve) -> None:
    mean = curve.per_instance.mean(axis=0)
    std = curve.instance_std
    write_csv(path, PLATEAU_COLUMNS, (
        (int(s), int(u), float(m), float(sd))
        for s, u, m, sd in zip(curve.grid, curve.unsolved, mean, std)
    ))


def write_scale_csv(path, rows: Sequence[ScaleRow]) -> None:
    write_csv(path, SCALE_COLUMNS, (
        (r.n_vars, r.ratio, r.method, r.dt, r.trials, r.solved,
         r.percentile, r.steps, r.fn_evals, r.stderr_steps)
        for r in rows
    ))


def read_scale_csv(path) -> list[ScaleRow]:
    out = []
    with open(path, newline="", encoding="ascii") as fh:
        for rec in csv.DictReader(fh):
            out.append(ScaleRow(
                n_vars=int(rec["n_vars"]),
                ratio=float(rec["ratio"]),
                method=rec["method"],
                dt=float(rec["dt"]),
                trials=int(rec["trials"]),
                solved=int(rec["solved"]),
                percentile=int(rec["percentile"]),
                steps=int(rec["steps"]) if rec["steps"] else None,
                fn_evals=int(rec["fn_evals"]) if rec["fn_evals"] else None,
                stderr_steps=float(rec["stderr_steps"]),
            ))
    return out


@dataclass(frozen=True)
class FitRow:
    n_vars: int
    ratio: float
    method: str
    c: float
    d: float
    dt_c: float
    dt_95: float
    b: Optional[float] = None
    dim: Optional[float] = None
    residual: float = 0.0


def write_fit_csv(path, rows: Sequence[FitRow]) -> None:
    write_csv(path, FIT_COLUMNS, (
        (r.n_vars, r.ratio, r.method, r.c, r.d, r.dt_c, r.dt_95, r.b, r.dim,
         r.residual)
        for r in rows
    ))


def read_fit_csv(path) -> list[FitRow]:
    out = []
    with open(path, newline="", encoding="ascii") as fh:
        for rec in csv.DictReader(fh):
            out.append(FitRow(
                n_vars=int(rec["n_vars"]),
                ratio=float(rec["ratio"]),
                method=rec["method"],
                c=float(rec["c"]),
                d=float(rec["d"]),
                dt_c=float(rec["dt_c"]),
                dt_95=float(rec["dt_95"]),
                b=float(rec["b"]) if rec["b"] else None,
                dim=float(rec["D"]) if rec["D"] else None,
                residual=float(rec["residual"]),
            ))
    return out


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to byte-reproduce a command's output tables."""

    command: str
    params: dict
    base_seed: int
    instance_digests: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tool_version: str = ""
    timestamp: str = ""

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, encoding="ascii") as fh:
            data = json.load(fh)
        return cls(**data)


def new_manifest(command: str, params: dict, base_seed: int,
                 version: str) -> RunManifest:
    return RunManifest(
        command=command,
        params=params,
        base_seed=base_seed,
        tool_version=version,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


def manifest_path_for(output: Path) -> Path:
    return output.with_suffix(output.suffix + ".manifest.json")
