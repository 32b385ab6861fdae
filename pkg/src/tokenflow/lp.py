"""Generic solve-with-duals contract plus independent KKT verification.

The solver backend is scipy's HiGHS interface; everything market-specific
stays out of this module. Sign conventions, fixed here once:

* equality duals are reported so that dual_eq[i] is the marginal cost of
  one additional unit of b_eq[i] (d objective / d rhs);
* inequality duals are reported nonnegative (scipy's A_ub marginals are
  nonpositive in this convention and are negated on the way out);
* all variables have a fixed lower bound of zero.

verify_kkt re-derives feasibility, dual feasibility, complementary
slackness, and the duality gap from raw matrices, independent of whatever
the backend claims. Violations are normalized by the magnitude of the
participating quantities so one tolerance works across unit scales.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog


class LpError(RuntimeError):
    """Malformed program handed to the solver."""


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    SOLVER_ERROR = "solver_error"


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-7
    dual: float = 1e-7
    gap: float = 1e-7


@dataclass(frozen=True)
class LinearProgram:
    """min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0."""

    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    var_names: tuple[str, ...] = ()
    eq_names: tuple[str, ...] = ()
    ub_names: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        for mat_name, vec_name in (("a_eq", "b_eq"), ("a_ub", "b_ub")):
            mat, vec = getattr(self, mat_name), getattr(self, vec_name)
            if (mat is None) != (vec is None):
                raise LpError(f"{mat_name} and {vec_name} must be given together")
            if mat is None:
                continue
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            vec = np.atleast_1d(np.asarray(vec, dtype=float))
            if mat.shape != (len(vec), len(c)):
                raise LpError(
                    f"{mat_name} shape {mat.shape} inconsistent with "
                    f"{len(vec)} rows x {len(c)} variables"
                )
            if not (np.all(np.isfinite(mat)) and np.all(np.isfinite(vec))):
                raise LpError(f"{mat_name}/{vec_name} must be finite")
            object.__setattr__(self, mat_name, mat)
            object.__setattr__(self, vec_name, vec)
        if not np.all(np.isfinite(c)):
            raise LpError("objective coefficients must be finite")
        if self.var_names and len(self.var_names) != len(c):
            raise LpError("var_names length mismatch")

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_eq(self) -> int:
        return 0 if self.b_eq is None else len(self.b_eq)

    @property
    def n_ub(self) -> int:
        return 0 if self.b_ub is None else len(self.b_ub)


@dataclass(frozen=True)
class LpSolution:
    """Primal/dual pair for one solve. Dual vectors follow the module signs."""

    status: LpStatus
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual_ub: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


_SCIPY_STATUS = {
    0: LpStatus.OPTIMAL,
    2: LpStatus.INFEASIBLE,
    3: LpStatus.UNBOUNDED,
}


def solve(lp: LinearProgram, tolerances: Tolerances = Tolerances()) -> LpSolution:
    """Solve the program and extract duals in the module's sign convention.

    The backend method is HiGHS dual simplex by default (deterministic and
    always basic, so reported duals are reproducible); TOKENFLOW_LP_METHOD
    overrides it for experimentation. Numerical failure is reported as an
    explicit status, never as a fabricated solution.
    """
    method = os.environ.get("TOKENFLOW_LP_METHOD", "highs-ds")
    try:
        res = linprog(
            c=lp.c,
            A_eq=lp.a_eq,
            b_eq=lp.b_eq,
            A_ub=lp.a_ub,
            b_ub=lp.b_ub,
            bounds=(0, None),
            method=method,
            options={
                "primal_feasibility_tolerance": min(tolerances.feas, 1e-9),
                "dual_feasibility_tolerance": min(tolerances.dual, 1e-9),
            },
        )
    except Exception as exc:  # scipy raises on malformed input
        return LpSolution(status=LpStatus.SOLVER_ERROR, message=str(exc))

    status = _SCIPY_STATUS.get(res.status, LpStatus.SOLVER_ERROR)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status=status, message=res.message)

    dual_eq = np.asarray(res.eqlin.marginals, float) if lp.n_eq else np.zeros(0)
    dual_ub = -np.asarray(res.ineqlin.marginals, float) if lp.n_ub else np.zeros(0)
    # Clip the tiny negative dust HiGHS can leave on inactive rows.
    dual_ub = np.where(np.abs(dual_ub) < 1e-14, 0.0, dual_ub)
    return LpSolution(
        status=LpStatus.OPTIMAL,
        objective=float(res.fun),
        x=np.asarray(res.x, float),
        dual_eq=dual_eq,
        dual_ub=dual_ub,
        message=res.message,
    )


@dataclass(frozen=True)
class KktReport:
    """Largest normalized violation per optimality category."""

    primal_feasibility: float
    dual_feasibility: float
    complementarity: float
    duality_gap: float

    @property
    def max_violation(self) -> float:
        return max(
            self.primal_feasibility,
            self.dual_feasibility,
            self.complementarity,
            self.duality_gap,
        )

    def within(self, tol: float) -> bool:
        return self.max_violation <= tol


def verify_kkt(lp: LinearProgram, solution: LpSolution, tol: float = 1e-6) -> KktReport:
    """Check a claimed optimal pair against the KKT conditions.

    Categories, each normalized by 1 + magnitude of the quantities involved:

    * primal feasibility: equality residuals, inequality overshoot, x >= 0;
    * dual feasibility: reduced costs c - A_eq' y + A_ub' z >= 0 and z >= 0;
    * complementarity: x_i * rc_i and slack_i * z_i;
    * duality gap: |c'x - (b_eq' y - b_ub' z)|.

    Violations are reported, not thrown; `tol` only feeds the `within`
    convenience on the report.
    """
    if not solution.optimal:
        raise LpError("verify_kkt requires an optimal solution")
    x = solution.x
    y = solution.dual_eq
    z = solution.dual_ub

    primal = float(np.max(np.maximum(0.0, -x), initial=0.0))
    if lp.n_eq:
        resid = lp.a_eq @ x - lp.b_eq
        primal = max(primal, float(np.max(np.abs(resid) / (1.0 + np.abs(lp.b_eq)))))
    slack = np.zeros(0)
    if lp.n_ub:
        slack = lp.b_ub - lp.a_ub @ x
        primal = max(primal, float(np.max(np.maximum(0.0, -slack) / (1.0 + np.abs(lp.b_ub)))))

    rc = lp.c.copy()
    if lp.n_eq:
        rc -= lp.a_eq.T @ y
    if lp.n_ub:
        rc += lp.a_ub.T @ z
    scale_rc = 1.0 + np.abs(lp.c)
    dual_viol = float(np.max(np.maximum(0.0, -rc) / scale_rc, initial=0.0))
    if lp.n_ub:
        dual_viol = max(dual_viol, float(np.max(np.maximum(0.0, -z), initial=0.0)))

    comp = float(np.max(np.abs(x * rc) / (1.0 + np.abs(x)), initial=0.0))
    if lp.n_ub:
        comp = max(comp, float(np.max(np.abs(slack * z) / (1.0 + np.abs(slack)), initial=0.0)))

    dual_obj = 0.0
    if lp.n_eq:
        dual_obj += float(lp.b_eq @ y)
    if lp.n_ub:
        dual_obj -= float(lp.b_ub @ z)
    primal_obj = float(lp.c @ x)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))

    return KktReport(
        primal_feasibility=primal,
        dual_feasibility=dual_viol,
        complementarity=comp,
        duality_gap=gap,
    )
