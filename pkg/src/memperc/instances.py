"""3-SAT formulas: DIMACS I/O and clause-distribution-control (CDC) generation.

CDC instances plant a hidden satisfying assignment and draw each clause's
sign pattern so that the number of literals that are false under the planted
assignment is 0, 1 or 2 with probabilities (p0, 3*p1, 3*p2).  The two
constraints p0 + 3*p1 + 3*p2 = 1 (normalization) and p1 + 2*p2 = 1/2
(polarity balance, so the planted solution is not readable off the literal
signs) leave p0 as the single free parameter.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, TextIO, Union

import numpy as np


class DimacsError(ValueError):
    """Malformed DIMACS CNF input; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Literal:
    var: int
    negated: bool = False

    @property
    def sign(self) -> int:
        return -1 if self.negated else 1


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, Literal, Literal]

    def __post_init__(self):
        if len(self.literals) != 3:
            raise ValueError("a clause holds exactly 3 literals")
        vs = [l.var for l in self.literals]
        if len(set(vs)) != 3:
            raise ValueError(f"repeated variable in clause: {vs}")

    @property
    def signs(self) -> tuple[int, int, int]:
        return tuple(l.sign for l in self.literals)  # type: ignore[return-value]


class Formula:
    """A 3-SAT formula over n_vars 0-based variables.

    Clauses are stored columnar as an (M, 3) variable-index array and an
    (M, 3) sign array (+1 for a plain literal, -1 for a negated one), which
    is what the flow evaluation and the generator need; `clauses` gives the
    object view.
    """

    def __init__(self, n_vars: int, var_idx: np.ndarray, signs: np.ndarray):
        var_idx = np.ascontiguousarray(var_idx, dtype=np.int32)
        signs = np.ascontiguousarray(signs, dtype=np.int8)
        if var_idx.ndim != 2 or var_idx.shape[1] != 3 or signs.shape != var_idx.shape:
            raise ValueError("var_idx and signs must both be (M, 3)")
        if n_vars <= 0:
            raise ValueError("n_vars must be positive")
        if var_idx.size:
            if var_idx.min() < 0 or var_idx.max() >= n_vars:
                raise ValueError("variable index out of range")
            if np.any(var_idx[:, 0] == var_idx[:, 1]) or np.any(
                var_idx[:, 0] == var_idx[:, 2]
            ) or np.any(var_idx[:, 1] == var_idx[:, 2]):
                raise ValueError("repeated variable within a clause")
            if not np.all(np.abs(signs) == 1):
                raise ValueError("signs must be +-1")
        self.n_vars = int(n_vars)
        self.var_idx = var_idx
        self.signs = signs

    @classmethod
    def from_clauses(cls, n_vars: int, clauses: Iterable[Clause]) -> "Formula":
        clauses = list(clauses)
        var_idx = np.array(
            [[l.var for l in c.literals] for c in clauses], dtype=np.int32
        ).reshape(len(clauses), 3)
        signs = np.array([c.signs for c in clauses], dtype=np.int8).reshape(
            len(clauses), 3
        )
        return cls(n_vars, var_idx, signs)

    @property
    def n_clauses(self) -> int:
        return self.var_idx.shape[0]

    def clause(self, m: int) -> Clause:
        lits = tuple(
            Literal(int(v), bool(s < 0))
            for v, s in zip(self.var_idx[m], self.signs[m])
        )
        return Clause(lits)  # type: ignore[arg-type]

    @property
    def clauses(self) -> list[Clause]:
        return [self.clause(m) for m in range(self.n_clauses)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Formula)
            and self.n_vars == other.n_vars
            and np.array_equal(self.var_idx, other.var_idx)
            and np.array_equal(self.signs, other.signs)
        )

    def __repr__(self) -> str:
        return f"Formula(n_vars={self.n_vars}, n_clauses={self.n_clauses})"


@dataclass(frozen=True)
class Assignment:
    values: np.ndarray  # bool, length n_vars

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.ascontiguousarray(self.values, dtype=bool)
        )

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CdcParams:
    """Parameters of the planted-solution generator.

    p0 is the probability of a clause with zero literals false under the
    planted assignment; p1 and p2 follow from normalization and polarity
    balance (each applies to 3 slot patterns).
    """

    n_vars: int
    ratio: float
    p0: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if self.n_vars < 3:
            raise ValueError("need at least 3 variables for 3-SAT clauses")
        if self.ratio <= 0:
            raise ValueError("clause-to-variable ratio must be positive")
        if not 0.0 <= self.p0 < 0.25:
            raise ValueError(f"p0 must lie in [0, 0.25), got {self.p0}")
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"derived {name}={p} outside [0, 1]")

    @property
    def p1(self) -> float:
        return (1.0 - 4.0 * self.p0) / 6.0

    @property
    def p2(self) -> float:
        return (1.0 + 2.0 * self.p0) / 6.0

    @property
    def n_clauses(self) -> int:
        return int(round(self.ratio * self.n_vars))


def parse_dimacs(text: Union[str, TextIO]) -> Formula:
    """Parse DIMACS CNF into a Formula; every clause must have 3 distinct vars.

    Comment lines starting with 'c' are ignored.  Errors report the
    1-based line number where the problem was detected.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    n_vars = n_clauses = -1
    header_line = 0
    var_rows: list[list[int]] = []
    sign_rows: list[list[int]] = []
    current: list[int] = []
    clause_start_line = 0

    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if n_vars >= 0:
                raise DimacsError("duplicate problem header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno) from None
            if n_vars <= 0 or n_clauses < 0:
                raise DimacsError(f"malformed header {line!r}", lineno)
            header_line = lineno
            continue
        if n_vars < 0:
            raise DimacsError("clause data before 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"non-integer token {tok!r}", lineno) from None
            if lit == 0:
                _finish_clause(current, n_vars, var_rows, sign_rows,
                               clause_start_line or lineno)
                current = []
                clause_start_line = 0
            else:
                if not current:
                    clause_start_line = lineno
                if abs(lit) > n_vars:
                    raise DimacsError(
                        f"variable {abs(lit)} out of range 1..{n_vars}", lineno
                    )
                current.append(lit)

    if n_vars < 0:
        raise DimacsError("missing 'p cnf' header", 1)
    if current:
        raise DimacsError("unterminated clause at end of input", clause_start_line)
    if len(var_rows) != n_clauses:
        raise DimacsError(
            f"header declares {n_clauses} clauses, found {len(var_rows)}",
            header_line,
        )
    var_idx = np.array(var_rows, dtype=np.int32).reshape(len(var_rows), 3)
    signs = np.array(sign_rows, dtype=np.int8).reshape(len(sign_rows), 3)
    return Formula(n_vars, var_idx, signs)


def _finish_clause(lits, n_vars, var_rows, sign_rows, lineno):
    if len(lits) != 3:
        raise DimacsError(f"clause has {len(lits)} literals, expected 3", lineno)
    vs = [abs(l) - 1 for l in lits]
    if len(set(vs)) != 3:
        raise DimacsError(f"repeated variable in clause {lits}", lineno)
    var_rows.append(vs)
    sign_rows.append([1 if l > 0 else -1 for l in lits])


def write_dimacs(f: Formula) -> str:
    """Serialize a Formula to DIMACS CNF text (1-based variables)."""
    out = [f"p cnf {f.n_vars} {f.n_clauses}"]
    signed = f.var_idx.astype(np.int64) + 1
    signed *= f.signs
    for row in signed:
        out.append(f"{row[0]} {row[1]} {row[2]} 0")
    return "\n".join(out) + "\n"


def generate_cdc(params: CdcParams) -> tuple[Formula, Assignment]:
    """Generate one CDC planted-solution instance; pure function of the seed.

    Working frame: the planted assignment is mapped to all-TRUE, so a slot
    is false exactly when it is negated.  A clause type k in {0, 1, 2}
    (number of false slots) is drawn with probability (p0, 3*p1, 3*p2),
    the false slots are placed uniformly over the C(3, k) patterns, and the
    signs are mapped back through the planted values.  Clauses are sampled
    with replacement, so duplicates are possible.
    """
    n, m = params.n_vars, params.n_clauses
    rng = np.random.default_rng(params.seed)

    planted = rng.integers(0, 2, size=n).astype(bool)

    # three distinct variables per clause, uniform, via draw-and-shift
    v1 = rng.integers(0, n, size=m)
    v2 = rng.integers(0, n - 1, size=m)
    v2 += v2 >= v1
    lo = np.minimum(v1, v2)
    hi = np.maximum(v1, v2)
    v3 = rng.integers(0, n - 2, size=m)
    v3 += v3 >= lo
    v3 += v3 >= hi
    var_idx = np.stack([v1, v2, v3], axis=1).astype(np.int32)

    kind = rng.choice(3, size=m, p=[params.p0, 3 * params.p1, 3 * params.p2])
    slot = rng.integers(0, 3, size=m)

    cols = np.arange(3)
    negated = np.zeros((m, 3), dtype=bool)
    negated |= (kind == 1)[:, None] & (cols[None, :] == slot[:, None])
    negated |= (kind == 2)[:, None] & (cols[None, :] != slot[:, None])

    signs_alltrue = np.where(negated, -1, 1).astype(np.int8)
    flip = np.where(planted[var_idx], 1, -1).astype(np.int8)
    signs = signs_alltrue * flip

    return Formula(n, var_idx, signs), Assignment(planted)


def evaluate(f: Formula, a: Assignment) -> int:
    """Number of clauses not satisfied by the assignment (0 iff satisfying)."""
    if len(a) != f.n_vars:
        raise ValueError(
            f"assignment length {len(a)} != formula n_vars {f.n_vars}"
        )
    lit_true = a.values[f.var_idx] == (f.signs > 0)
    return int(np.count_nonzero(~lit_true.any(axis=1)))


def load_formula(path) -> Formula:
    with open(path, "r", encoding="ascii") as fh:
        return parse_dimacs(fh)


def save_formula(path, f: Formula) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(write_dimacs(f))


def save_assignment(path, a: Assignment) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(" ".join("1" if v else "0" for v in a.values) + "\n")


def load_assignment(path) -> Assignment:
    with open(path, "r", encoding="ascii") as fh:
        vals = [int(tok) for tok in fh.read().split()]
    return Assignment(np.array(vals, dtype=bool))
