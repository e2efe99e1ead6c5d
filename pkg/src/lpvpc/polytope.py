"""Polyhedral sets in H-representation with optional vertex lists."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class Polytope:
    """{x : G x <= h}. ``vertices`` is optional and not derived automatically.

    When vertices are supplied they are checked against the inequalities.
    """

    G: np.ndarray
    h: np.ndarray
    vertices: tuple = field(default_factory=tuple)
    _check_tol: float = 1e-9

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if G.shape[0] != h.shape[0]:
            raise DimensionError(f"G has {G.shape[0]} rows but h has {h.shape[0]}")
        verts = tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in self.vertices)
        for v in verts:
            if v.shape != (G.shape[1],):
                raise DimensionError(f"vertex shape {v.shape} != ({G.shape[1]},)")
            if np.any(G @ v > h + self._check_tol):
                raise DimensionError(f"vertex {v} violates G v <= h")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "vertices", verts)

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(self.G @ x <= self.h + tol))

    def violation(self, x) -> float:
        """Largest inequality violation (<= 0 means inside)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(np.max(self.G @ x - self.h))

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto the set (boxes handled by clipping)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.contains(x):
            return x
        lo, hi = self._as_box()
        if lo is not None:
            return np.clip(x, lo, hi)
        from .solvers import QpProblem, solve_qp
        n = self.dim
        prob = QpProblem(H=2 * np.eye(n), f=-2 * x, G_in=self.G, h_in=self.h)
        z, status = solve_qp(prob)
        if status.state != "optimal":
            raise RuntimeError(f"projection QP failed: {status.state}")
        return z

    def _as_box(self):
        """Return (lo, hi) if the rows are exactly +-e_i rows, else (None, None)."""
        n = self.dim
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        for g, b in zip(self.G, self.h):
            nz = np.nonzero(g)[0]
            if len(nz) != 1:
                return None, None
            i = nz[0]
            if g[i] > 0:
                hi[i] = min(hi[i], b / g[i])
            else:
                lo[i] = max(lo[i], b / g[i])
        return lo, hi

    @classmethod
    def box(cls, lo, hi) -> "Polytope":
        """Axis-aligned box with corner vertices attached."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionError("box bounds must have equal shapes")
        if np.any(lo > hi):
            raise DimensionError("box has lo > hi")
        n = lo.shape[0]
        G = np.vstack([np.eye(n), -np.eye(n)])
        h = np.concatenate([hi, -lo])
        corners = tuple(np.array(c) for c in itertools.product(*zip(lo, hi)))
        return cls(G, h, corners)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Polytope":
        return cls.box([lo], [hi])


def support_value(poly: Polytope, direction) -> float:
    """max_{x in poly} direction . x via LP."""
    from .solvers import LpProblem, solve_lp
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    prob = LpProblem(c=-d, A_ub=poly.G, b_ub=poly.h)
    x, status = solve_lp(prob)
    if status.state == "unbounded":
        return np.inf
    if status.state != "optimal":
        raise RuntimeError(f"support LP failed: {status.state}")
    return float(d @ x)


def is_subset(inner: Polytope, outer: Polytope, tol: float = 1e-9) -> bool:
    """inner ⊆ outer, decided row by row with support LPs."""
    return all(support_value(inner, g) <= b + tol for g, b in zip(outer.G, outer.h))
