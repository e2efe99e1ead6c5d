"""Scheduling-affine matrix functions M(p) = M0 + sum_i p_i * M_i."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class AffineMatrixFunction:
    """A matrix-valued map with affine dependence on the scheduling vector.

    Attributes:
        base: constant term M0, shape (rows, cols).
        coeffs: tuple of n_p matrices M_i, each the same shape as ``base``.
    """

    base: np.ndarray
    coeffs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        base = np.atleast_2d(np.asarray(self.base, dtype=float))
        coeffs = tuple(np.atleast_2d(np.asarray(c, dtype=float)) for c in self.coeffs)
        for c in coeffs:
            if c.shape != base.shape:
                raise DimensionError(
                    f"coefficient shape {c.shape} != base shape {base.shape}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_p(self) -> int:
        return len(self.coeffs)

    @property
    def shape(self) -> tuple:
        return self.base.shape

    def __call__(self, p) -> np.ndarray:
        return eval_affine(self, p)

    def stacked(self) -> np.ndarray:
        """[M0 M1 ... M_np] concatenated horizontally."""
        return np.hstack([self.base, *self.coeffs]) if self.coeffs else self.base.copy()

    @classmethod
    def constant(cls, M, n_p: int = 0) -> "AffineMatrixFunction":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(M, tuple(np.zeros_like(M) for _ in range(n_p)))

    def is_constant(self, tol: float = 0.0) -> bool:
        return all(np.max(np.abs(c)) <= tol for c in self.coeffs)


def eval_affine(M: AffineMatrixFunction, p) -> np.ndarray:
    """Evaluate M(p) = base + sum_i p_i coeffs_i.

    Raises:
        DimensionError: if len(p) differs from the scheduling dimension.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (M.n_p,):
        raise DimensionError(f"scheduling vector has shape {p.shape}, expected ({M.n_p},)")
    out = M.base.copy()
    for pi, Mi in zip(p, M.coeffs):
        out += pi * Mi
    return out
