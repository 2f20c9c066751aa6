"""Kinetic model of binary economic exchange with Langevin noise."""

from .kinetic import (
    ClassSystem,
    check_state,
    drift,
    drift_divergence,
    interaction_coefficient,
    transition_probability,
    vertex,
)
from .metrics import (
    DegenerateDistributionError,
    DegenerateSeriesError,
    EnsembleSummary,
    Histogram,
    gini,
    histogram,
    mobility,
    observables,
    pearson,
    summarize_ensemble,
    total_income,
)
from .noise import (
    DiffusionMatrix,
    NoiseKind,
    additive_matrix,
    conserving_additive_matrix,
    multiplicative_matrix,
)
from .sde import (
    EquilibriumResult,
    SdeConfig,
    Trajectory,
    em_step,
    find_equilibrium,
    negativity_guard,
    realization_rng,
    run_ensemble,
    run_trajectory,
)

__version__ = "0.1.0"
