"""Simulator and analysis lab for classical and quantum simulated annealing."""

from .anneal_classical import (
    PropagationResult,
    SaSchedule,
    build_sa_schedule,
    propagate_exact,
    run_sa_chain,
    run_sa_trials,
    sa_cost,
)
from .anneal_quantum import (
    QsaRunTrace,
    QsaSchedule,
    RepeatResult,
    average_cost,
    build_qsa_schedule,
    exact_success_probability,
    initial_state,
    repeat_until_success,
    run_qsa,
    run_qsa_ensemble,
    terminal_beta,
)
from .chains import (
    GibbsDistribution,
    SpectralReport,
    StochasticMatrix,
    detailed_balance_residual,
    discriminant,
    evolve_distribution,
    gibbs,
    metropolis,
    schedule_gap,
    spectral_report,
)
from .instances import (
    Configuration,
    ProblemInstance,
    analyze,
    evaluate,
    generate_ising_chain,
    generate_random_ising_chain,
    generate_weak_link_chain,
    load_instance,
    save_instance,
    two_state,
)
from .lab import (
    ComparisonRow,
    ScalingResult,
    bundled_instances,
    compare,
    emit_report,
    loglog_slope,
    scaling_study,
    weak_link_family,
)
from .walk import (
    QuantumState,
    WalkOperator,
    WalkSpectrum,
    apply_P,
    apply_R,
    apply_W,
    apply_X,
    apply_X_dagger,
    build_walk,
    coherent_gibbs_state,
    dense_walk_matrix,
    fixed_point_residual,
    walk_spectrum,
)

__version__ = "0.1.0"
