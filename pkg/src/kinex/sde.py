"""Euler-Maruyama integration of the Langevin kinetic equation (Ito convention).

One step is::

    x' = x + drift(x) dt + sqrt(gamma dt) * D @ xi,     xi ~ N(0, I_n)

Random numbers come from numpy's PCG64 bit generator; the stream for
realization ``k`` of an ensemble is seeded with ``SeedSequence(seed,
spawn_key=(k,))`` and Gaussian deviates are drawn with
``Generator.standard_normal`` (ziggurat method), one length-n vector per
attempted step. A stand-alone trajectory uses stream ``k = 0``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kinetic import ClassSystem, check_state, drift
from .noise import NoiseKind, multiplicative_matrix, noise_matrix

log = logging.getLogger(__name__)

MAX_RETRIES = 100


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 1.0
    sqrt_gamma: float = 0.0
    steps: int = 20000
    noise_kind: NoiseKind = NoiseKind.ADDITIVE
    seed: int = 0
    sample_every: int = 100
    max_retries: int = MAX_RETRIES

    def __post_init__(self):
        object.__setattr__(self, "noise_kind", NoiseKind(self.noise_kind))
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.sqrt_gamma >= 0:
            raise ValueError(f"sqrt_gamma must be >= 0, got {self.sqrt_gamma}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.sample_every < 1:
            raise ValueError(f"sample_every must be >= 1, got {self.sample_every}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")

    @property
    def gamma(self) -> float:
        return self.sqrt_gamma**2

    @property
    def noisy(self) -> bool:
        return self.noise_kind is not NoiseKind.NONE and self.sqrt_gamma > 0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    rejected_steps: int = 0
    fallback_steps: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class EquilibriumResult:
    state: np.ndarray
    converged: bool
    residual: float
    steps: int


def realization_rng(seed: int, k: int = 0) -> np.random.Generator:
    """Independent generator for realization ``k`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def _increment(x, matrix, cfg: SdeConfig, rng) -> np.ndarray:
    xi = rng.standard_normal(x.size)
    if cfg.noise_kind is NoiseKind.MULTIPLICATIVE:
        matrix = multiplicative_matrix(x)
    return np.sqrt(cfg.gamma * cfg.dt) * (matrix.m @ xi)


def em_step(x, sys: ClassSystem, cfg: SdeConfig, rng, matrix=None) -> np.ndarray:
    """Unguarded Euler-Maruyama update; may leave the simplex if the noise is large."""
    x = np.asarray(x, dtype=float)
    out = x + cfg.dt * drift(x, sys)
    if cfg.noisy:
        if matrix is None and cfg.noise_kind is not NoiseKind.MULTIPLICATIVE:
            matrix = noise_matrix(cfg.noise_kind, sys.incomes)
        out = out + _increment(x, matrix, cfg, rng)
    return out


@dataclass
class GuardOutcome:
    state: np.ndarray
    redraws: int
    fell_back: bool


def negativity_guard(candidate, previous, sys: ClassSystem, cfg: SdeConfig, rng,
                     matrix=None) -> GuardOutcome:
    """Redraw the whole noise vector until the step stays non-negative.

    Rejection keeps both linear conservation laws intact (clipping or
    renormalising would not). After ``cfg.max_retries`` redraws the step falls
    back to the pure drift update.
    """
    if candidate.min() >= 0.0:
        return GuardOutcome(candidate, 0, False)
    previous = np.asarray(previous, dtype=float)
    if matrix is None and cfg.noise_kind is not NoiseKind.MULTIPLICATIVE:
        matrix = noise_matrix(cfg.noise_kind, sys.incomes)
    deterministic = previous + cfg.dt * drift(previous, sys)
    for attempt in range(1, cfg.max_retries + 1):
        trial = deterministic + _increment(previous, matrix, cfg, rng)
        if trial.min() >= 0.0:
            return GuardOutcome(trial, attempt, False)
    return GuardOutcome(deterministic, cfg.max_retries, True)


def run_trajectory(x0, sys: ClassSystem, cfg: SdeConfig, rng=None) -> Trajectory:
    """Integrate ``cfg.steps`` steps, keeping every ``cfg.sample_every``-th state.

    The initial state is recorded as step 0.
    """
    x = check_state(x0, sys.n).copy()
    if rng is None:
        rng = realization_rng(cfg.seed, 0)
    matrix = None
    if cfg.noisy and cfg.noise_kind is not NoiseKind.MULTIPLICATIVE:
        matrix = noise_matrix(cfg.noise_kind, sys.incomes)

    times = [0]
    states = [x.copy()]
    rejected = 0
    fallbacks: list[int] = []
    for step in range(1, cfg.steps + 1):
        candidate = em_step(x, sys, cfg, rng, matrix)
        if candidate.min() < 0.0:
            outcome = negativity_guard(candidate, x, sys, cfg, rng, matrix)
            rejected += outcome.redraws
            if outcome.fell_back:
                fallbacks.append(step)
                log.warning("step %d: noise rejected %d times, used drift-only update",
                            step, outcome.redraws)
            candidate = outcome.state
        x = candidate
        if step % cfg.sample_every == 0:
            times.append(step)
            states.append(x.copy())
    return Trajectory(np.asarray(times), np.asarray(states), rejected, fallbacks)


def find_equilibrium(x0, sys: ClassSystem, tol: float = 1e-12, max_steps: int = 1_000_000,
                     dt: float | None = None) -> EquilibriumResult:
    """Integrate the noiseless system until ``max |drift| < tol``.

    The default step ``delta_r / s_unit`` is the largest for which one Euler
    step is still a convex combination of populations, so the iterate never
    leaves the simplex. The fixed point does not depend on the step.
    """
    x = check_state(x0, sys.n).copy()
    if dt is None:
        dt = 1.0 / sys.ratio
    rate = drift(x, sys)
    residual = float(np.abs(rate).max())
    steps = 0
    while residual >= tol and steps < max_steps:
        x += dt * rate
        rate = drift(x, sys)
        residual = float(np.abs(rate).max())
        steps += 1
    converged = residual < tol
    if not converged:
        log.warning("no equilibrium after %d steps, residual %.3g", steps, residual)
    return EquilibriumResult(x, converged, residual, steps)


def _run_one(args):
    x0, sys, cfg, k = args
    return run_trajectory(x0, sys, cfg, realization_rng(cfg.seed, k))


def run_ensemble(x0, sys: ClassSystem, cfg: SdeConfig, realizations: int = 24,
                 workers: int = 1) -> list[Trajectory]:
    """Independent realizations, returned in realization order.

    Each realization owns its random stream, so the output does not depend on
    ``workers``.
    """
    if realizations < 1:
        raise ValueError(f"realizations must be >= 1, got {realizations}")
    x0 = check_state(x0, sys.n)
    jobs = [(x0, sys, cfg, k) for k in range(realizations)]
    if workers <= 1 or realizations == 1:
        return [_run_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, realizations)) as pool:
        return list(pool.map(_run_one, jobs))
