"""LPV system models, trajectories and reference simulation oracles."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .affine import AffineMatrixFunction, eval_affine
from .errors import DimensionError, FactorizationError, UnsupportedModelError
from .polytope import Polytope


@dataclass(frozen=True)
class LpvSsModel:
    """State-space form x+ = A(p)x + B(p)u, y = C(p)x + D(p)u with affine maps."""

    A: AffineMatrixFunction
    B: AffineMatrixFunction
    C: AffineMatrixFunction
    D: AffineMatrixFunction
    P: Optional[Polytope] = None

    def __post_init__(self):
        n_x, n_u = self.A.shape[0], self.B.shape[1]
        n_y = self.C.shape[0]
        if self.A.shape != (n_x, n_x):
            raise DimensionError("A must be square")
        if self.B.shape != (n_x, n_u):
            raise DimensionError(f"B shape {self.B.shape} != ({n_x},{n_u})")
        if self.C.shape != (n_y, n_x):
            raise DimensionError(f"C shape {self.C.shape} != ({n_y},{n_x})")
        if self.D.shape != (n_y, n_u):
            raise DimensionError(f"D shape {self.D.shape} != ({n_y},{n_u})")
        n_p = self.A.n_p
        if not (self.B.n_p == self.C.n_p == self.D.n_p == n_p):
            raise DimensionError("A, B, C, D must share the scheduling dimension")

    @property
    def n_x(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B.shape[1]

    @property
    def n_y(self):
        return self.C.shape[0]

    @property
    def n_p(self):
        return self.A.n_p

    @classmethod
    def state_measured(cls, A: AffineMatrixFunction, B: AffineMatrixFunction,
                       P: Optional[Polytope] = None) -> "LpvSsModel":
        """Model with C = I, D = 0 (full state measurement)."""
        n_x, n_u, n_p = A.shape[0], B.shape[1], A.n_p
        C = AffineMatrixFunction.constant(np.eye(n_x), n_p)
        D = AffineMatrixFunction.constant(np.zeros((n_x, n_u)), n_p)
        return cls(A, B, C, D, P)


@dataclass(frozen=True)
class LpvIoModel:
    """Shifted-affine IO form y_k + sum a_i(p_{k-i}) y_{k-i} = sum b_i(p_{k-i}) u_{k-i}."""

    a: tuple  # n_a AffineMatrixFunction, each n_y x n_y
    b: tuple  # n_b AffineMatrixFunction, each n_y x n_u

    def __post_init__(self):
        a = tuple(self.a)
        b = tuple(self.b)
        if len(a) < 1 or len(b) < 1:
            raise DimensionError("need n_a >= 1 and n_b >= 1")
        n_y = a[0].shape[0]
        for ai in a:
            if ai.shape != (n_y, n_y):
                raise DimensionError("all a_i must be n_y x n_y")
        n_u = b[0].shape[1]
        for bi in b:
            if bi.shape != (n_y, n_u):
                raise DimensionError("all b_i must share shape n_y x n_u")
        n_p = a[0].n_p
        if any(m.n_p != n_p for m in a + b):
            raise DimensionError("all coefficients must share the scheduling dimension")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_a(self):
        return len(self.a)

    @property
    def n_b(self):
        return len(self.b)

    @property
    def lag(self):
        return max(self.n_a, self.n_b)

    @property
    def n_y(self):
        return self.a[0].shape[0]

    @property
    def n_u(self):
        return self.b[0].shape[1]

    @property
    def n_p(self):
        return self.a[0].n_p


@dataclass(frozen=True)
class Trajectory:
    """Time-aligned named channels; all present channels share the length."""

    u: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    scheduling_in_set: bool = True

    def __post_init__(self):
        lengths = set()
        for name in ("u", "p", "x", "y"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.atleast_2d(np.asarray(v, float))
            object.__setattr__(self, name, v)
            lengths.add(v.shape[0])
        if len(lengths) > 1:
            raise DimensionError(f"channel lengths differ: {sorted(lengths)}")

    def __len__(self):
        for name in ("u", "p", "x", "y"):
            v = getattr(self, name)
            if v is not None:
                return v.shape[0]
        return 0

    def check_scheduling(self, P: Polytope, tol: float = 1e-9) -> bool:
        if self.p is None:
            return True
        return all(P.contains(pk, tol) for pk in self.p)


@dataclass(frozen=True)
class Setpoint:
    u_r: np.ndarray
    p_r: np.ndarray
    y_r: Optional[np.ndarray] = None
    x_r: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("u_r", "p_r", "y_r", "x_r"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.atleast_1d(np.asarray(v, float)))


@dataclass(frozen=True)
class NonlinearPlant:
    """Deterministic x+ = f(x, u) with a scheduling map p = psi(x, u)."""

    f: Callable
    psi: Callable
    n_x: int
    n_u: int
    n_p: int
    T_s: float
    P: Optional[Polytope] = None

    def step(self, x, u):
        return np.atleast_1d(np.asarray(self.f(np.asarray(x, float),
                                                np.atleast_1d(np.asarray(u, float))), float))

    def scheduling(self, x, u):
        return np.atleast_1d(np.asarray(self.psi(np.asarray(x, float),
                                                 np.atleast_1d(np.asarray(u, float))), float))


@dataclass(frozen=True)
class DataDictionary:
    """The single measured sequence all predictors are built from.

    kind "io" stores (u, p, y); kind "ss" stores (u, p, x).
    """

    u: np.ndarray
    p: np.ndarray
    y: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u, float))
        p = np.atleast_2d(np.asarray(self.p, float))
        if u.ndim == 2 and u.shape[0] == 1 and u.shape[1] > 1:
            pass
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "p", p)
        n = u.shape[0]
        if p.shape[0] != n:
            raise DimensionError("u and p must have equal lengths")
        if (self.y is None) == (self.x is None):
            raise DimensionError("exactly one of y (io) or x (ss) must be given")
        for name in ("y", "x"):
            v = getattr(self, name)
            if v is not None:
                v = np.atleast_2d(np.asarray(v, float))
                if v.shape[0] != n:
                    raise DimensionError(f"{name} length differs from u")
                object.__setattr__(self, name, v)

    @property
    def kind(self):
        return "io" if self.y is not None else "ss"

    @property
    def N_d(self):
        return self.u.shape[0]

    @property
    def n_u(self):
        return self.u.shape[1]

    @property
    def n_p(self):
        return self.p.shape[1]

    @property
    def outputs(self):
        return self.y if self.y is not None else self.x

    @property
    def n_y(self):
        return self.outputs.shape[1]


def _as_seq(w, n):
    w = np.asarray(w, float)
    if w.ndim == 1:
        w = w[:, None] if n == 1 else w[None, :]
    return w


def simulate_ss(model: LpvSsModel, x0, u, p, P: Optional[Polytope] = None) -> Trajectory:
    """Run the state recursion; returns x of length N+1 and y of length N.

    Scheduling excursions outside the polytope only flag the result.
    """
    u = _as_seq(u, model.n_u)
    p = _as_seq(p, model.n_p)
    if u.shape[0] != p.shape[0]:
        raise DimensionError("u and p must have equal lengths")
    N = u.shape[0]
    x = np.zeros((N + 1, model.n_x))
    y = np.zeros((N, model.n_y))
    x[0] = np.atleast_1d(np.asarray(x0, float))
    in_set = True
    box = P if P is not None else model.P
    for k in range(N):
        if box is not None and not box.contains(p[k]):
            in_set = False
        Ak = eval_affine(model.A, p[k])
        Bk = eval_affine(model.B, p[k])
        y[k] = eval_affine(model.C, p[k]) @ x[k] + eval_affine(model.D, p[k]) @ u[k]
        x[k + 1] = Ak @ x[k] + Bk @ u[k]
    # x has one extra sample; return channels separately to keep lengths honest
    return Trajectory(u=u, p=p, y=y, scheduling_in_set=in_set), x


def simulate_io(model: LpvIoModel, init_u, init_p, init_y, u_future, p_future) -> np.ndarray:
    """Propagate the shifted-affine IO recursion; returns y over the future window.

    The init window must be at least ``model.lag`` long; p is needed over
    both windows because coefficient i is evaluated at p_{k-i}.
    """
    lag = model.lag
    init_u = _as_seq(init_u, model.n_u)
    init_p = _as_seq(init_p, model.n_p)
    init_y = _as_seq(init_y, model.n_y)
    if not (init_u.shape[0] == init_p.shape[0] == init_y.shape[0]):
        raise DimensionError("init channels must share length")
    if init_u.shape[0] < lag:
        raise DimensionError(f"init window shorter than the lag {lag}")
    u_future = _as_seq(u_future, model.n_u)
    p_future = _as_seq(p_future, model.n_p)
    if u_future.shape[0] != p_future.shape[0]:
        raise DimensionError("u_future and p_future must share length")
    N = u_future.shape[0]
    uu = np.vstack([init_u, u_future])
    pp = np.vstack([init_p, p_future])
    yy = np.vstack([init_y, np.zeros((N, model.n_y))])
    off = init_u.shape[0]
    for k in range(N):
        kk = off + k
        val = np.zeros(model.n_y)
        for i in range(1, model.n_a + 1):
            val -= eval_affine(model.a[i - 1], pp[kk - i]) @ yy[kk - i]
        for i in range(1, model.n_b + 1):
            val += eval_affine(model.b[i - 1], pp[kk - i]) @ uu[kk - i]
        yy[kk] = val
    return yy[off:]


def io_to_ss_companion(model: LpvIoModel) -> LpvSsModel:
    """SISO observability-companion realization of the IO form.

    The companion state matrix carries -a_i(p) in its first column; the
    sign is fixed by requiring simulation equivalence with the IO
    recursion (covered by the oracle tests).
    """
    if model.n_u != 1 or model.n_y != 1:
        raise UnsupportedModelError("companion realization implemented for SISO only")
    n = model.lag
    n_p = model.n_p
    a = list(model.a) + [AffineMatrixFunction.constant(np.zeros((1, 1)), n_p)] * (n - model.n_a)
    b = list(model.b) + [AffineMatrixFunction.constant(np.zeros((1, 1)), n_p)] * (n - model.n_b)

    def companion(col_funcs, shift):
        base = np.zeros((n, n))
        base[:n - 1, 1:] = np.eye(n - 1)
        base[:, 0] = [-f.base[0, 0] for f in col_funcs]
        coeffs = []
        for j in range(n_p):
            cj = np.zeros((n, n))
            cj[:, 0] = [-f.coeffs[j][0, 0] for f in col_funcs]
            coeffs.append(cj)
        return AffineMatrixFunction(base, tuple(coeffs))

    A = companion(a, True)
    Bbase = np.array([[f.base[0, 0]] for f in b])
    Bcoeffs = tuple(np.array([[f.coeffs[j][0, 0]] for f in b]) for j in range(n_p))
    B = AffineMatrixFunction(Bbase, Bcoeffs)
    C = AffineMatrixFunction.constant(np.eye(1, n), n_p)
    D = AffineMatrixFunction.constant(np.zeros((1, 1)), n_p)
    return LpvSsModel(A, B, C, D)


def ss_as_shifted_io(model: LpvSsModel) -> LpvIoModel:
    """Lag-1 IO form of a state-measured model: y_k - A(p_{k-1})y_{k-1} = B(p_{k-1})u_{k-1}."""
    if not (model.C.is_constant() and np.allclose(model.C.base, np.eye(model.n_x))):
        raise UnsupportedModelError("requires C = I")
    if not (model.D.is_constant() and np.allclose(model.D.base, 0.0)):
        raise UnsupportedModelError("requires D = 0")
    a1 = AffineMatrixFunction(-model.A.base, tuple(-c for c in model.A.coeffs))
    return LpvIoModel((a1,), (model.B,))


def embed_nonlinear(plant: NonlinearPlant, fA: Callable, fB: Callable,
                    x_samples, u_samples, tol: float = 1e-10):
    """Fit affine A(.), B(.) with A(psi(x,u)) = fA(x,u), B(psi(x,u)) = fB(x,u).

    The factorization f(x,u) = fA(x,u)x + fB(x,u)u is checked on the sample
    grid, as is f(0,0) = 0 and exactness of the affine fit in p.

    Returns an ``LpvSsModel`` (state-measured form).

    Raises:
        FactorizationError: when any check exceeds ``tol``; carries the
            worst sample.
    """
    origin = plant.step(np.zeros(plant.n_x), np.zeros(plant.n_u))
    if np.max(np.abs(origin)) > tol:
        raise FactorizationError("f(0,0) != 0; shift coordinates first",
                                 worst_sample=(np.zeros(plant.n_x), np.zeros(plant.n_u)))
    rows_A, rows_B, ps = [], [], []
    worst = (0.0, None)
    for x in x_samples:
        for u in u_samples:
            x = np.atleast_1d(np.asarray(x, float))
            u = np.atleast_1d(np.asarray(u, float))
            Ax = np.atleast_2d(np.asarray(fA(x, u), float))
            Bu = np.atleast_2d(np.asarray(fB(x, u), float))
            res = float(np.max(np.abs(plant.step(x, u) - Ax @ x - Bu @ u)))
            if res > worst[0]:
                worst = (res, (x.copy(), u.copy()))
            ps.append(plant.scheduling(x, u))
            rows_A.append(Ax)
            rows_B.append(Bu)
    if worst[0] > tol:
        raise FactorizationError(
            f"factorization residual {worst[0]:.3e} exceeds {tol:.1e}",
            worst_sample=worst[1])
    ps = np.asarray(ps)
    reg = np.hstack([np.ones((len(ps), 1)), ps])  # [1, p] per sample

    def affine_fit(mats):
        data = np.stack([m.ravel() for m in mats])
        coef, *_ = np.linalg.lstsq(reg, data, rcond=None)
        resid = float(np.max(np.abs(reg @ coef - data)))
        shape = mats[0].shape
        base = coef[0].reshape(shape)
        cs = tuple(coef[1 + j].reshape(shape) for j in range(plant.n_p))
        return AffineMatrixFunction(base, cs), resid

    A, resA = affine_fit(rows_A)
    B, resB = affine_fit(rows_B)
    if max(resA, resB) > tol:
        raise FactorizationError(
            f"factor maps are not affine in the scheduling (residual {max(resA, resB):.3e})")
    return LpvSsModel.state_measured(A, B, plant.P)


def is_model_equilibrium(model, setpoint: Setpoint, tol: float = 1e-9) -> bool:
    """True iff the constant setpoint trajectory satisfies the model residual."""
    if isinstance(model, LpvIoModel):
        y_r = setpoint.y_r
        resid = y_r.astype(float).copy()
        for i in range(model.n_a):
            resid += eval_affine(model.a[i], setpoint.p_r) @ y_r
        for i in range(model.n_b):
            resid -= eval_affine(model.b[i], setpoint.p_r) @ setpoint.u_r
        return bool(np.max(np.abs(resid)) <= tol)
    if isinstance(model, LpvSsModel):
        x_r = setpoint.x_r if setpoint.x_r is not None else setpoint.y_r
        Ar = eval_affine(model.A, setpoint.p_r)
        Br = eval_affine(model.B, setpoint.p_r)
        resid = Ar @ x_r + Br @ setpoint.u_r - x_r
        checks = [np.max(np.abs(resid))]
        if setpoint.y_r is not None and setpoint.x_r is not None:
            Cr = eval_affine(model.C, setpoint.p_r)
            Dr = eval_affine(model.D, setpoint.p_r)
            checks.append(np.max(np.abs(Cr @ x_r + Dr @ setpoint.u_r - setpoint.y_r)))
        return bool(max(checks) <= tol)
    raise TypeError(f"unsupported model type {type(model)!r}")
