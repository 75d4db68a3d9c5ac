"""Adaptive, error-aware estimation of observables on qudit registers."""

from .bayes import (
    CovarianceEstimate,
    MCMCConfig,
    ThetaTriple,
    covariance_mcmc,
    gelman_rubin,
    geweke_z,
    init_chain,
    joint_probs,
    posterior_mean_theta,
    propose,
    ps_mean,
    self_covariance,
    state_to_probs,
    tune_gamma,
)
from .clifford import CliffordCircuit, Gate, conjugate_ps, diagonalize_clique, gate_unitary
from .engine import (
    EstimationReport,
    NoiseFit,
    RunSettings,
    XiEstimate,
    comparison_metrics,
    estimate_xi,
    fit_noise_model,
    run_estimation,
    systematic_deviation,
    worst_case_bound,
)
from .graph import (
    Clique,
    CommutationGraph,
    EdgeEstimates,
    build_graph,
    clique_cover,
    estimate_observable,
    scaled_covariance,
    variance_decrease,
)
from .observables import (
    Observable,
    SpinPolynomial,
    SpinTerm,
    decompose_matrix,
    decompose_observable,
    decompose_spin,
)
from .paulis import (
    PauliString,
    QuditRegister,
    commutes_bitwise,
    commutes_general,
    local_matrix,
    ps_dagger,
    ps_matrix,
    ps_multiply,
    spectral_offset,
)
from .simulator import (
    NoiseModel,
    ProbeTally,
    StateVector,
    apply_circuit,
    circuit_error_prob,
    outcome_to_eigenindex,
    prepare_product_state,
    sample_shot,
    stabilizer_probe,
)
from .spin import spin_coefficients, spin_matrix

__version__ = "0.1.0"
