"""Diffusion matrices that shape the Gaussian noise of the Langevin model.

Every matrix here has zero column sums, so ``m @ xi`` never changes the total
population. The income-conserving variant additionally annihilates the income
direction: ``incomes @ m == 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class NoiseKind(str, enum.Enum):
    NONE = "none"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    CONSERVING = "conserving"


@dataclass(frozen=True, eq=False)
class DiffusionMatrix:
    kind: NoiseKind
    m: np.ndarray
    depends_on_state: bool = False

    def __matmul__(self, xi):
        return self.m @ xi


def _frozen(kind: NoiseKind, m: np.ndarray, depends_on_state: bool = False) -> DiffusionMatrix:
    m.setflags(write=False)
    return DiffusionMatrix(kind, m, depends_on_state)


def additive_matrix(n: int) -> DiffusionMatrix:
    """``I - J/n``: subtract the mean of the noise vector."""
    if n < 2:
        raise ValueError(f"class count must be >= 2, got {n}")
    return _frozen(NoiseKind.ADDITIVE, np.eye(n) - 1.0 / n)


def multiplicative_matrix(x: np.ndarray) -> DiffusionMatrix:
    """``diag(x) - x x^T``: noise proportional to the class populations.

    Vanishes on simplex vertices. Rebuilt from the current state at every step.
    """
    x = np.asarray(x, dtype=float)
    return _frozen(NoiseKind.MULTIPLICATIVE, np.diag(x) - np.outer(x, x), True)


def conserving_correction(incomes: np.ndarray) -> np.ndarray:
    """Closed-form correction ``a`` so that ``I + a`` keeps population and income.

    ``a_ij = (R1 (r_i + r_j) - R2 - n r_i r_j) / (n R2 - R1^2)`` with
    ``R1 = sum r``, ``R2 = sum r^2``. Evaluated in the equivalent centered
    form ``-1/n - c_i c_j / sum(c^2)``, ``c = r - mean(r)``, which avoids the
    cancellation of the raw form when the incomes are close together.
    """
    r = np.asarray(incomes, dtype=float)
    n = r.size
    if n < 2:
        raise ValueError(f"need at least two classes, got {n}")
    c = r - r.mean()
    ss = c @ c
    # n * ss == n R2 - R1^2; zero iff the ladder is constant
    if not ss > 1e-24 * (r @ r):
        raise ValueError("incomes must contain at least two distinct values")
    return -1.0 / n - np.outer(c, c) / ss


def conserving_additive_matrix(incomes: np.ndarray) -> DiffusionMatrix:
    """Additive noise matrix conserving both total population and total income."""
    a = conserving_correction(incomes)
    return _frozen(NoiseKind.CONSERVING, np.eye(a.shape[0]) + a)


def min_norm_correction(*constraints: np.ndarray) -> np.ndarray:
    """Smallest (Frobenius) ``a`` with ``v + a^T v = 0`` for every constraint vector ``v``.

    Generic counterpart of :func:`conserving_correction`: with constraints
    ``(ones,)`` it gives ``-1/n`` everywhere, with ``(ones, incomes)`` it
    reproduces the closed form. The constraints must be linearly independent.
    """
    v = np.column_stack([np.asarray(c, dtype=float) for c in constraints])
    gram = v.T @ v
    if np.linalg.matrix_rank(gram) < v.shape[1]:
        raise ValueError("constraint vectors must be linearly independent")
    # a = -V (V^T V)^-1 V^T; with one constraint this is a single division
    return -(v @ np.linalg.solve(gram, v.T))


def noise_matrix(kind: NoiseKind | str, incomes: np.ndarray, x: np.ndarray | None = None):
    """Matrix for ``kind``; ``None`` for :attr:`NoiseKind.NONE`."""
    kind = NoiseKind(kind)
    n = len(incomes)
    if kind is NoiseKind.NONE:
        return None
    if kind is NoiseKind.ADDITIVE:
        return additive_matrix(n)
    if kind is NoiseKind.CONSERVING:
        return conserving_additive_matrix(incomes)
    if x is None:
        raise ValueError("multiplicative noise needs the current state")
    return multiplicative_matrix(x)
