"""Linear self-supervised reconstruction laboratory."""

__version__ = "0.1.0"

from ._core import (
    SubspaceModel,
    build_split,
    derived_fractions,
    fit_rate,
    lemma1_stepsize,
    make_dataset,
    n2n_sample_gradient,
    noisier2noise_population_estimator,
    normalized_gradient_variances,
    optimal_estimator,
    optimal_risk,
    prop2_exact_check,
    random_orthonormal_basis,
    risk_closed_form,
    risk_gradient,
    run_sweep,
    ss_cs_loss,
    theorem1_bound,
    train_denoiser_gd,
    train_denoiser_sgm,
    unitary_dft_matrix,
)

__all__ = [
    "SubspaceModel",
    "build_split",
    "derived_fractions",
    "fit_rate",
    "lemma1_stepsize",
    "make_dataset",
    "n2n_sample_gradient",
    "noisier2noise_population_estimator",
    "normalized_gradient_variances",
    "optimal_estimator",
    "optimal_risk",
    "prop2_exact_check",
    "random_orthonormal_basis",
    "risk_closed_form",
    "risk_gradient",
    "run_sweep",
    "ss_cs_loss",
    "theorem1_bound",
    "train_denoiser_gd",
    "train_denoiser_sgm",
    "unitary_dft_matrix",
]
