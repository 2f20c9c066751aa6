"""Invariant audit on randomized inputs (backs the ``verify`` subcommand)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinetic import ClassSystem, drift, drift_divergence, interaction_coefficient
from .noise import (
    additive_matrix,
    conserving_additive_matrix,
    min_norm_correction,
    multiplicative_matrix,
)


@dataclass
class Check:
    name: str
    worst: float
    tolerance: float  # 0 means the check must hold exactly

    @property
    def passed(self) -> bool:
        if self.tolerance == 0:
            return self.worst == 0
        return bool(np.isfinite(self.worst)) and self.worst < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<46s} worst={self.worst:.3e}  tol={self.tolerance:.0e}"


def brute_force_drift(x, sys: ClassSystem) -> np.ndarray:
    """Triple loop over the scalar coefficient formula: O(n^3) reference drift."""
    n = sys.n
    c = np.array([[[interaction_coefficient(i, h, k, sys) for k in range(1, n + 1)]
                   for h in range(1, n + 1)] for i in range(1, n + 1)])
    out = np.zeros(n)
    for i in range(n):
        gain = loss = 0.0
        for h in range(n):
            for k in range(n):
                gain += c[i, h, k] * x[h] * x[k]
                loss += c[h, i, k] * x[i] * x[k]
        out[i] = gain - loss
    return out


def fd_divergence(x, sys: ClassSystem, step: float = 1e-6) -> float:
    x = np.asarray(x, dtype=float)
    total = 0.0
    for i in range(sys.n):
        e = np.zeros(sys.n)
        e[i] = step
        total += (drift(x + e, sys)[i] - drift(x - e, sys)[i]) / (2 * step)
    return total


def random_simplex(rng, n: int, size: int | None = None) -> np.ndarray:
    return rng.dirichlet(np.ones(n), size=size)


def random_ladder(rng, n: int) -> np.ndarray:
    return np.sort(rng.uniform(1.0, 100.0, n))


def run_checks(sys: ClassSystem | None = None, seed: int = 0, points: int = 1000) -> list[Check]:
    """Run every invariant on ``sys`` (default model) and on random auxiliary inputs."""
    rng = np.random.default_rng(seed)
    sys = sys if sys is not None else ClassSystem.build()
    n = sys.n
    c = sys.c_band
    checks: list[Check] = []

    checks.append(Check("C stochastic: |sum_i C^i_hk - 1|", float(np.abs(c.sum(axis=0) - 1).max()), 1e-14))
    checks.append(Check("C non-negative: max(-C)", float(max(0.0, -c.min())), 0.0))
    checks.append(Check("p boundary zeros and p_hk + p_kh <= 1",
                        float(max(np.abs(sys.p[0]).max(), np.abs(sys.p[:, -1]).max(),
                                  max(0.0, (sys.p + sys.p.T - 1).max()), max(0.0, -sys.p.min()))),
                        0.0))

    xs = random_simplex(rng, n, points)
    rates = np.array([drift(x, sys) for x in xs])
    checks.append(Check("drift conserves population", float(np.abs(rates.sum(axis=1)).max()), 1e-13))
    checks.append(Check("drift conserves income", float(np.abs(rates @ sys.incomes).max()), 1e-10))

    worst = 0.0
    for m in range(2, 13):
        s = ClassSystem.build(m, sys.delta_r, min(sys.s_unit, sys.delta_r))
        for x in random_simplex(rng, m, 3):
            worst = max(worst, float(np.abs(drift(x, s) - brute_force_drift(x, s)).max()))
    checks.append(Check("banded drift == O(n^3) drift, n = 2..12", worst, 1e-13))

    worst = 0.0
    for x in xs[:100]:
        fd = fd_divergence(x, sys)
        an = drift_divergence(x, sys)
        worst = max(worst, abs(an - fd) / max(abs(fd), 1e-300))
    checks.append(Check("drift divergence vs finite differences (rel)", worst, 1e-6))

    worst_add = worst_cons = worst_mult = worst_prop = worst_single = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 21))
        r = random_ladder(rng, m)
        xi = rng.standard_normal(m)
        a = additive_matrix(m).m
        d = conserving_additive_matrix(r).m
        worst_add = max(worst_add, np.abs(a @ a - a).max(), np.abs(a - a.T).max(),
                        abs((a @ xi).sum()))
        worst_cons = max(worst_cons, np.abs(d @ d - d).max(), np.abs(d - d.T).max(),
                         abs(np.trace(d) - (m - 2)))
        worst_prop = max(worst_prop, abs((d @ xi).sum()), abs(r @ (d @ xi)) / r.max(),
                         np.abs(1 + (d - np.eye(m)).sum(axis=0)).max(),
                         np.abs(r + r @ (d - np.eye(m))).max() / r.max())
        worst_single = max(worst_single, np.abs(min_norm_correction(np.ones(m)) + 1.0 / m).max())
        x = random_simplex(rng, m)
        worst_mult = max(worst_mult, abs((multiplicative_matrix(x).m @ xi).sum()))
    checks.append(Check("additive noise: projector, zero column sums", float(worst_add), 1e-12))
    checks.append(Check("conserving noise: projector, trace n - 2", float(worst_cons), 1e-10))
    checks.append(Check("conserving noise: population and income kept", float(worst_prop), 1e-10))
    checks.append(Check("single constraint gives a = -1/n", float(worst_single), 1e-12))
    checks.append(Check("multiplicative noise: zero column sums", float(worst_mult), 1e-14))
    return checks
