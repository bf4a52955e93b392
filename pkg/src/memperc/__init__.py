"""memperc: memcomputing 3-SAT ODE experiments and directed-percolation analysis."""

__version__ = "0.1.0"

from .dmm import (  # noqa: F401
    DmmParams,
    DmmState,
    assignment_from_voltages,
    clamp,
    clause_value,
    flow,
    is_solved,
)
from .instances import (  # noqa: F401
    Assignment,
    CdcParams,
    Clause,
    Formula,
    Literal,
    evaluate,
    generate_cdc,
    parse_dimacs,
    write_dimacs,
)
from .integrators import (  # noqa: F401
    ButcherTableau,
    StepBudget,
    get_tableau,
    integrate,
    step,
    tableau_euler,
    tableau_rk4,
    tableau_trapezoid,
)
