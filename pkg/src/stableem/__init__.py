"""Euler-Maruyama schemes with decreasing step sizes for alpha-stable SDEs.

Two discretizations of dX = b(X) dt + A dZ (Z isotropic alpha-stable,
1 < alpha < 2) with steps gamma_n -> 0, plus the measurement apparatus to
check their Wasserstein-1 convergence rates to the invariant law: exact
samplers, characteristic-function oracles, W1 estimators, step-schedule
diagnostics, and a reproducible parallel ensemble engine.
"""

__version__ = "1.0.0"

from .cf_oracle import (
    first_order_cf_coefficient,
    pareto_cf,
    pareto_em_chain_cf,
    stable_mean_abs,
    stable_ou_invariant_cf,
    w1_exact_ou_vs_invariant,
    w1_pareto_chain_vs_invariant,
    w1_stable_chain_vs_invariant,
)
from .config import ConfigError, ExperimentConfig, load_config
from .drift import (
    CertificationReport,
    DriftModel,
    builtin_ou,
    builtin_perturbed_ou,
    certify_assumptions,
    drift_by_name,
)
from .em import (
    EXACT_OU,
    PARETO_EM,
    STABLE_EM,
    ChainState,
    EnsembleResult,
    EnsembleRun,
    Snapshot,
    empirical_moment,
    exact_ou_sigma,
    make_exact_ou_run,
    run_ensemble,
    save_snapshot,
    step_exact_ou,
    step_pareto,
    step_stable,
)
from .experiments import ExperimentReport, emit_outputs, run_experiment
from .metrics import (
    RateFit,
    W1Estimate,
    bootstrap_w1_stderr,
    ecf,
    rate_fit,
    w1_exact_lp,
    w1_sliced,
    w1_sorted_1d,
)
from .rng import GENERATOR_NAME, derive_stream
from .sampling import (
    NoiseConstants,
    StableSpec,
    noise_constants,
    sample_one_sided_stable,
    sample_pareto_vec,
    sample_stable_1d,
    sample_stable_vec,
)
from .schedule import (
    ScheduleDiagnostics,
    StepSchedule,
    decay_diagnostics,
    omega_of,
    rho_theory,
)

__all__ = [name for name in dir() if not name.startswith("_")]
