"""Kinetic exchange model: transition probabilities, interaction coefficients, drift.

Classes are numbered 1..n in every public function. The interaction tensor
``C[i, h, k]`` (probability that an h-individual ends up in class i after
meeting a k-individual) is tridiagonal in ``(i, h)``, so it is stored as a
band of shape ``(3, n, n)``::

    band[d, h, k] == C[h + d - 1, h, k]     (0-based, d = 0, 1, 2)

which brings the drift evaluation down to O(n^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SIMPLEX_ATOL = 1e-12


def _delta(a: int, b: int) -> int:
    return 1 if a == b else 0


def transition_probability(h: int, k: int, n: int) -> float:
    """Probability that, in an (h, k) encounter, the h-individual pays the k-individual.

    Indices run over the extended range 0..n+1; outside 1..n the value is 0.
    """
    if n < 2:
        raise ValueError(f"class count must be >= 2, got {n}")
    if not (0 <= h <= n + 1 and 0 <= k <= n + 1):
        raise ValueError(f"class indices must lie in 0..{n + 1}, got h={h}, k={k}")
    if h in (0, n + 1) or k in (0, n + 1):
        return 0.0

    d = _delta
    return (
        min(h, k) / (4 * n)
        * (1 - d(h, k)) * (1 - d(1, k)) * (1 - d(1, h)) * (1 - d(n, h)) * (1 - d(n, k))
        + h / (2 * n) * d(h, k) * (1 - d(1, k)) * (1 - d(n, k))
        + 1 / (2 * n) * d(1, k) * (1 - d(1, h)) * (1 - d(n, h))
        + k / (2 * n) * d(n, h) * (1 - d(n, k)) * (1 - d(1, k))
        + 1 / (2 * n) * d(h, n) * d(k, 1)
    )


def transition_matrix(n: int) -> np.ndarray:
    """Matrix ``p[h-1, k-1]`` of transition probabilities for classes 1..n."""
    return np.array(
        [[transition_probability(h, k, n) for k in range(1, n + 1)] for h in range(1, n + 1)]
    )


@dataclass(frozen=True, eq=False)
class ClassSystem:
    """Model constants plus the precomputed ``p`` matrix and banded ``C`` tensor.

    Build instances with :meth:`build`. Arrays are read-only so a system can be
    shared freely between workers.
    """

    n: int
    delta_r: float
    s_unit: float
    incomes: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    c_band: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n: int = 10, delta_r: float = 10.0, s_unit: float = 0.1) -> "ClassSystem":
        if n < 2:
            raise ValueError(f"class count n must be >= 2, got {n}")
        if not delta_r > 0:
            raise ValueError(f"delta_r must be > 0, got {delta_r}")
        if not 0 < s_unit <= delta_r:
            raise ValueError(
                f"s_unit must satisfy 0 < s_unit <= delta_r ({delta_r}), got {s_unit}"
            )
        p = transition_matrix(n)
        # boundary classes cannot descend/ascend; guaranteed by the formula itself
        assert np.all(p[0, :] == 0.0) and np.all(p[:, -1] == 0.0)
        assert np.all(p >= 0.0) and np.all(p + p.T <= 1.0)

        band = _coefficient_band(p, s_unit / delta_r)
        incomes = delta_r * np.arange(1, n + 1, dtype=float)
        for arr in (incomes, p, band):
            arr.setflags(write=False)
        return cls(n=n, delta_r=float(delta_r), s_unit=float(s_unit),
                   incomes=incomes, p=p, c_band=band)

    @property
    def ratio(self) -> float:
        """Exchanged unit relative to the class spacing, S / delta_r."""
        return self.s_unit / self.delta_r

    @cached_property
    def transfer_band(self) -> np.ndarray:
        """``c_band`` minus the identity; the identity cancels the loss term exactly.

        The diagonal is rebuilt as ``-(up + down)`` rather than ``c - 1`` so that
        column sums vanish to the round-off of the small entries, not of 1.
        """
        t = np.array(self.c_band)
        t[1] = -(t[0] + t[2])
        t.setflags(write=False)
        return t

    def with_s_unit(self, s_unit: float) -> "ClassSystem":
        return ClassSystem.build(self.n, self.delta_r, s_unit)

    def dense_c(self) -> np.ndarray:
        """Full ``(n, n, n)`` tensor ``C[i, h, k]`` expanded from the band (0-based)."""
        n = self.n
        c = np.zeros((n, n, n))
        for d in range(3):
            for h in range(n):
                i = h + d - 1
                if 0 <= i < n:
                    c[i, h, :] = self.c_band[d, h, :]
        return c


def _coefficient_band(p: np.ndarray, ratio: float) -> np.ndarray:
    # band[0, h, k]: h drops one class by paying k (k must be able to rise)
    # band[2, h, k]: h rises one class when paid by k (k must be able to drop)
    # band[1, h, k]: h stays put
    n = p.shape[0]
    band = np.zeros((3, n, n))
    band[0, 1:, :] = ratio * p[1:, :]
    band[0, :, -1] = 0.0
    band[2, :-1, :] = ratio * p[:, :-1].T
    band[2, :, 0] = 0.0
    band[1] = 1.0 - band[0] - band[2]
    return band


def interaction_coefficient(i: int, h: int, k: int, sys: ClassSystem) -> float:
    """``C^i_{hk}`` evaluated term by term from the Kronecker-delta form.

    Independent of the banded storage used by :func:`drift`.
    """
    n = sys.n
    for name, v in (("i", i), ("h", h), ("k", k)):
        if not 1 <= v <= n:
            raise ValueError(f"{name}={v} outside 1..{n}")
    d = _delta
    p = lambda a, b: transition_probability(a, b, n)  # noqa: E731
    s = sys.ratio
    return (
        s * d(h, i + 1) * (1 - d(k, n)) * p(i + 1, k)
        + d(h, i) * (1 - s * (1 - d(i, n)) * (1 - d(k, 1)) * p(k, i)
                     - s * (1 - d(i, 1)) * (1 - d(k, n)) * p(i, k))
        + s * d(h, i - 1) * (1 - d(k, 1)) * p(k, i - 1)
    )


def drift(x: np.ndarray, sys: ClassSystem) -> np.ndarray:
    """Deterministic rate of change of the population fractions.

    Valid for any real vector ``x`` (not only simplex points), which is what the
    divergence check by finite differences relies on.
    """
    x = np.asarray(x, dtype=float)
    q = (sys.transfer_band @ x) * x
    out = q[1].copy()
    out[:-1] += q[0, 1:]
    out[1:] += q[2, :-1]
    return out


def drift_divergence(x: np.ndarray, sys: ClassSystem) -> float:
    """Sum of ``d drift_i / d x_i``, computed analytically."""
    x = np.asarray(x, dtype=float)
    t = sys.transfer_band
    n = sys.n
    # d/dx_i of sum_hk T^i_hk x_h x_k = sum_k (T^i_ik + T^i_ki) x_k
    own = (t[1] @ x).sum()
    diag = np.array([t[0, k, k - 1] if k > 0 else 0.0 for k in range(n)])
    diag += np.diagonal(t[1])
    diag += np.array([t[2, k, k + 1] if k < n - 1 else 0.0 for k in range(n)])
    return float(own + diag @ x)


def check_state(x, n: int | None = None, atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the probability simplex."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("state must be a 1-d vector")
    if n is not None and x.size != n:
        raise ValueError(f"state has {x.size} classes, expected {n}")
    if np.any(x < 0):
        raise ValueError(f"state has negative fractions: min={x.min():.3g}")
    if abs(x.sum() - 1.0) > atol:
        raise ValueError(f"state fractions sum to {x.sum():.17g}, not 1")
    return x


def vertex(cls: int, n: int) -> np.ndarray:
    """State with the whole population in class ``cls`` (1-based)."""
    if not 1 <= cls <= n:
        raise ValueError(f"class {cls} outside 1..{n}")
    x = np.zeros(n)
    x[cls - 1] = 1.0
    return x
