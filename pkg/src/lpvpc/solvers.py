"""Uniform contracts over the QP, LP and SDP solves used by the toolkit.

All numerical-solver policy lives here: backend choice, tolerances,
presolve and status mapping. Callers build problem records and receive a
solution plus a :class:`SolveStatus`; numerical failures surface as a
status, never as a crash.

QPs are solved after a nullspace presolve that eliminates equality rows
(SVD-based), which both shrinks the problem and removes the ill
conditioning that large soft-penalty terms would otherwise inject into
the KKT system. The conic backends equilibrate internally; residuals
reported in the status are always recomputed on the original problem.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_ERROR = "numerical_error"


@dataclass(frozen=True)
class SolveStatus:
    state: str
    primal_res: float = np.nan
    dual_res: float = np.nan
    iterations: int = 0
    time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.state == OPTIMAL


@dataclass(frozen=True)
class SocConstraint:
    """||A z + b||_2 <= c.z + d."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float


@dataclass
class QpProblem:
    """minimize 0.5 z'Hz + f'z  s.t.  A_eq z = b_eq, G_in z <= h_in, socs.

    The Hessian is symmetrized on construction. ``socs`` extends the
    spec'd linear rows with second-order cones (used for ellipsoidal
    terminal sets).
    """

    H: np.ndarray
    f: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    G_in: np.ndarray | None = None
    h_in: np.ndarray | None = None
    socs: list = field(default_factory=list)

    def __post_init__(self):
        self.H = 0.5 * (np.asarray(self.H, float) + np.asarray(self.H, float).T)
        self.f = np.asarray(self.f, float).ravel()
        n = self.f.shape[0]
        if self.A_eq is not None:
            self.A_eq = np.atleast_2d(np.asarray(self.A_eq, float))
            self.b_eq = np.atleast_1d(np.asarray(self.b_eq, float))
        if self.G_in is not None:
            self.G_in = np.atleast_2d(np.asarray(self.G_in, float))
            self.h_in = np.atleast_1d(np.asarray(self.h_in, float))
        self.n = n

    def primal_residual(self, z) -> float:
        r = 0.0
        if self.A_eq is not None and self.A_eq.size:
            r = max(r, float(np.max(np.abs(self.A_eq @ z - self.b_eq))))
        if self.G_in is not None and self.G_in.size:
            r = max(r, float(max(0.0, np.max(self.G_in @ z - self.h_in))))
        for s in self.socs:
            r = max(r, float(np.linalg.norm(s.A @ z + s.b) - (s.c @ z + s.d)))
        return r

    def objective(self, z) -> float:
        return float(0.5 * z @ self.H @ z + self.f @ z)


@dataclass
class LpProblem:
    """minimize c.z  s.t.  A_ub z <= b_ub, A_eq z = b_eq (variables free)."""

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None


def solve_lp(prob: LpProblem, tol: float = 1e-9):
    from scipy.optimize import linprog
    t0 = time.perf_counter()
    res = linprog(
        np.asarray(prob.c, float),
        A_ub=prob.A_ub, b_ub=prob.b_ub,
        A_eq=prob.A_eq, b_eq=prob.b_eq,
        bounds=(None, None), method="highs",
        options={"primal_feasibility_tolerance": tol,
                 "dual_feasibility_tolerance": tol},
    )
    elapsed = time.perf_counter() - t0
    state = {0: OPTIMAL, 1: MAX_ITERATIONS, 2: INFEASIBLE, 3: UNBOUNDED}.get(
        res.status, NUMERICAL_ERROR)
    x = res.x if res.x is not None else np.full(len(prob.c), np.nan)
    pres = 0.0
    if state == OPTIMAL and prob.A_ub is not None:
        pres = float(max(0.0, np.max(prob.A_ub @ x - prob.b_ub)))
    return x, SolveStatus(state, pres, np.nan, int(res.nit or 0), elapsed)


def _min_norm_and_nullspace(A, b, rank_rtol=1e-11):
    """Minimum-norm solution of A z = b and an orthonormal nullspace basis.

    Returns (z0, N, consistent).
    """
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > max(A.shape) * np.finfo(float).eps * smax + rank_rtol * smax))
    if r == 0:
        z0 = np.zeros(A.shape[1])
    else:
        z0 = Vt[:r].T @ ((U[:, :r].T @ b) / s[:r])
    N = Vt[r:].T
    scale = max(1.0, float(np.linalg.norm(b)))
    consistent = np.linalg.norm(A @ z0 - b) <= 1e-7 * scale
    return z0, N, consistent


def _cvxopt_qp(H, f, G, h, socs, tol):
    from cvxopt import matrix, solvers as cvs
    opts = {"show_progress": False, "abstol": tol, "reltol": tol,
            "feastol": tol, "maxiters": 200}
    nl = G.shape[0] if G is not None else 0
    if socs:
        rows = [G] if nl else []
        hs = [h] if nl else []
        qdims = []
        for s in socs:
            rows.append(-s.c[None, :])
            hs.append(np.array([s.d]))
            rows.append(-s.A)
            hs.append(s.b.copy())
            qdims.append(1 + s.A.shape[0])
        Gall = np.vstack(rows)
        hall = np.concatenate(hs)
        sol = cvs.coneqp(matrix(H), matrix(f), matrix(Gall), matrix(hall),
                         {"l": nl, "q": qdims, "s": []}, options=opts)
    elif nl:
        sol = cvs.qp(matrix(H), matrix(f), matrix(G), matrix(h), options=opts)
    else:
        sol = cvs.qp(matrix(H), matrix(f), options=opts)
    if sol["status"] != "optimal":
        return None, sol["status"], int(sol.get("iterations", 0))
    return np.array(sol["x"]).ravel(), "optimal", int(sol.get("iterations", 0))


def _clarabel_qp(H, f, Aeq, beq, G, h, socs, tol):
    import clarabel
    import scipy.sparse as sp
    blocks, rhs, cones = [], [], []
    if Aeq is not None and Aeq.shape[0]:
        blocks.append(sp.csc_matrix(Aeq))
        rhs.append(beq)
        cones.append(clarabel.ZeroConeT(Aeq.shape[0]))
    if G is not None and G.shape[0]:
        blocks.append(sp.csc_matrix(G))
        rhs.append(h)
        cones.append(clarabel.NonnegativeConeT(G.shape[0]))
    for s in socs:
        blocks.append(sp.csc_matrix(np.vstack([-s.c[None, :], -s.A])))
        rhs.append(np.concatenate([[s.d], s.b]))
        cones.append(clarabel.SecondOrderConeT(1 + s.A.shape[0]))
    if blocks:
        A = sp.vstack(blocks).tocsc()
        b = np.concatenate(rhs)
    else:
        A = sp.csc_matrix((0, f.shape[0]))
        b = np.zeros(0)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    solver = clarabel.DefaultSolver(sp.csc_matrix(np.triu(H)), f, A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status)
    if name in ("Solved", "AlmostSolved"):
        return np.array(sol.x), "optimal", int(sol.iterations)
    if "PrimalInfeasible" in name:
        return None, "infeasible", int(sol.iterations)
    if "DualInfeasible" in name:
        return None, "unbounded", int(sol.iterations)
    if "MaxIterations" in name:
        return None, "max_iterations", int(sol.iterations)
    return None, "numerical_error", int(sol.iterations)


def solve_qp(prob: QpProblem, tol: float = 1e-9, warm_start=None):
    """Solve a convex QP (+ optional SOC rows). Deterministic for fixed inputs.

    Equality rows are eliminated first: z = z0 + N w with z0 the
    minimum-norm solution. Inconsistent equalities map to an infeasible
    status immediately.
    """
    t0 = time.perf_counter()

    def _finish(z, state, iters):
        elapsed = time.perf_counter() - t0
        if z is None:
            return None, SolveStatus(state, np.nan, np.nan, iters, elapsed)
        pres = prob.primal_residual(z)
        return z, SolveStatus(state, pres, np.nan, iters, elapsed)

    if prob.A_eq is not None and prob.A_eq.shape[0]:
        z0, N, consistent = _min_norm_and_nullspace(prob.A_eq, prob.b_eq)
        if not consistent:
            return _finish(None, INFEASIBLE, 0)
        if N.shape[1] == 0:
            return _finish(z0, OPTIMAL, 0)
        Hr = N.T @ prob.H @ N
        Hr = 0.5 * (Hr + Hr.T)
        # tiny floor keeps directions the cost ignores from breaking the KKT solve
        reg = 1e-12 * max(np.trace(Hr) / Hr.shape[0], 1.0)
        Hr = Hr + reg * np.eye(Hr.shape[0])
        fr = N.T @ (prob.H @ z0 + prob.f)
        Gr = prob.G_in @ N if prob.G_in is not None else None
        hr = prob.h_in - prob.G_in @ z0 if prob.G_in is not None else None
        socs = [SocConstraint(s.A @ N, s.A @ z0 + s.b, N.T @ s.c,
                              float(s.c @ z0 + s.d)) for s in prob.socs]
        lift = lambda w: z0 + N @ w
    else:
        Hr, fr, Gr, hr, socs = prob.H, prob.f, prob.G_in, prob.h_in, prob.socs
        reg = 1e-12 * max(np.trace(Hr) / max(Hr.shape[0], 1), 1.0)
        Hr = Hr + reg * np.eye(Hr.shape[0])
        lift = lambda w: w

    try:
        w, state, iters = _cvxopt_qp(Hr, fr, Gr, hr, socs, max(tol, 1e-10))
    except Exception:
        w, state, iters = None, "error", 0
    if w is None:
        w, state, iters = _clarabel_qp(Hr, fr, None, None, Gr, hr, socs,
                                       max(tol, 1e-10))
        if w is None:
            return _finish(None, state if state != "error" else NUMERICAL_ERROR, iters)
    return _finish(lift(w), OPTIMAL, iters)


# ---------------------------------------------------------------------------
# SDP layer: named matrix variables, affine LMI blocks, trace/log-det objectives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatVar:
    name: str
    shape: tuple
    symmetric: bool = False


@dataclass(frozen=True)
class Term:
    """L @ op(V) @ R with op = transpose when ``transpose`` is set."""

    left: np.ndarray
    var: str
    right: np.ndarray
    transpose: bool = False


@dataclass(frozen=True)
class AffExpr:
    """constant + sum of terms; evaluated as a matrix expression."""

    const: np.ndarray
    terms: tuple

    @staticmethod
    def of(const, *terms):
        return AffExpr(np.asarray(const, float), tuple(terms))


@dataclass
class SdpProblem:
    """Affine matrix-inequality blocks over named matrix variables.

    objective: ("feasibility",) | ("min_trace", var) | ("max_logdet", var)
               | ("min_sum_trace", (var, ...)).
    psd_blocks: AffExpr required >= margin * I.
    nsd_blocks: AffExpr required <= -margin * I.
    eq_blocks: (AffExpr, AffExpr) pairs required equal entrywise.
    scalar_ub: (AffExpr 1x1, float bound) pairs, expr <= bound.
    """

    variables: list
    psd_blocks: list = field(default_factory=list)
    nsd_blocks: list = field(default_factory=list)
    eq_blocks: list = field(default_factory=list)
    scalar_ub: list = field(default_factory=list)
    objective: tuple = ("feasibility",)
    margin: float = 1e-7


def _cvxpy_expr(expr: AffExpr, vars_):
    import cvxpy as cp
    out = cp.Constant(expr.const)
    for t in expr.terms:
        V = vars_[t.var]
        V = V.T if t.transpose else V
        out = out + cp.Constant(t.left) @ V @ cp.Constant(t.right)
    return out


def solve_sdp(prob: SdpProblem, tol: float = 1e-8):
    """Solve via cvxpy with CLARABEL, falling back to SCS.

    Returns (dict name -> value, SolveStatus). Residuals in the status are
    recomputed from the returned values, independent of the solver.
    """
    import cvxpy as cp

    t0 = time.perf_counter()
    vars_ = {}
    for v in prob.variables:
        if v.symmetric:
            vars_[v.name] = cp.Variable(v.shape, symmetric=True)
        else:
            vars_[v.name] = cp.Variable(v.shape)
    cons = []
    for blk in prob.psd_blocks:
        e = _cvxpy_expr(blk, vars_)
        n = e.shape[0]
        cons.append(e >> prob.margin * np.eye(n))
    for blk in prob.nsd_blocks:
        e = _cvxpy_expr(blk, vars_)
        n = e.shape[0]
        cons.append(e << -prob.margin * np.eye(n))
    for lhs, rhs in prob.eq_blocks:
        cons.append(_cvxpy_expr(lhs, vars_) == _cvxpy_expr(rhs, vars_))
    for expr, bound in prob.scalar_ub:
        cons.append(_cvxpy_expr(expr, vars_) <= bound)

    kind = prob.objective[0]
    if kind == "feasibility":
        objective = cp.Minimize(0)
    elif kind == "min_trace":
        objective = cp.Minimize(cp.trace(vars_[prob.objective[1]]))
    elif kind == "min_sum_trace":
        objective = cp.Minimize(sum(cp.trace(vars_[n]) for n in prob.objective[1]))
    elif kind == "max_logdet":
        objective = cp.Maximize(cp.log_det(vars_[prob.objective[1]]))
    else:
        raise ValueError(f"unknown objective {prob.objective}")

    problem = cp.Problem(objective, cons)
    state, iters = NUMERICAL_ERROR, 0
    for solver, kwargs in (
        (cp.CLARABEL, {}),
        (cp.SCS, {"eps": max(tol, 1e-9), "max_iters": 200_000}),
    ):
        try:
            problem.solve(solver=solver, **kwargs)
        except cp.SolverError:
            continue
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            state = OPTIMAL
            break
        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            state = INFEASIBLE
            break
        if problem.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            state = UNBOUNDED
            break
    elapsed = time.perf_counter() - t0
    if state != OPTIMAL:
        return {}, SolveStatus(state, np.nan, np.nan, iters, elapsed)

    values = {name: np.atleast_2d(np.asarray(v.value, float))
              for name, v in vars_.items()}
    pres = _sdp_residual(prob, values)
    return values, SolveStatus(OPTIMAL, pres, np.nan, iters, elapsed)


def _eval_expr(expr: AffExpr, values) -> np.ndarray:
    out = np.array(expr.const, float, copy=True)
    out = np.atleast_2d(out)
    for t in expr.terms:
        V = values[t.var]
        V = V.T if t.transpose else V
        out = out + t.left @ V @ t.right
    return out


def _sdp_residual(prob: SdpProblem, values) -> float:
    """Worst constraint violation of the returned values (0 = satisfied)."""
    worst = 0.0
    for blk in prob.psd_blocks:
        M = _eval_expr(blk, values)
        worst = max(worst, -float(np.linalg.eigvalsh(0.5 * (M + M.T)).min()))
    for blk in prob.nsd_blocks:
        M = _eval_expr(blk, values)
        worst = max(worst, float(np.linalg.eigvalsh(0.5 * (M + M.T)).max()))
    for lhs, rhs in prob.eq_blocks:
        worst = max(worst, float(np.max(np.abs(_eval_expr(lhs, values)
                                               - _eval_expr(rhs, values)))))
    for expr, bound in prob.scalar_ub:
        worst = max(worst, float(_eval_expr(expr, values)[0, 0] - bound))
    return worst
