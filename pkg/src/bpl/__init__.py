"""Learning to predict quantum channel outputs over product state distributions.

The package splits into distribution geometry (:mod:`bpl.bloch`), dense
simulation (:mod:`bpl.qsim`), the adapted site basis with its truncation
certificates (:mod:`bpl.basis`), the commutative analogue
(:mod:`bpl.classical`), learning pipelines (:mod:`bpl.learner`), and
scikit-learn style estimators (:mod:`bpl.estimators`). ``bpl.cli`` drives
experiments from config files and emits CSV/JSON artifacts.
"""

__version__ = "0.1.0"

from .basis import (
    BasisExpansion,
    SiteBasis,
    basis_second_moment,
    build_site_basis,
    eta_prime,
    expand,
    mean_state_gram,
    truncate,
    truncation_error_exact,
    verify_min_eigenvalue,
    verify_scaled_covariance,
)
from .bloch import (
    BlochDistribution,
    Rotation,
    bernoulli_axis,
    pauli_eigenstates,
    spectral_norm,
    two_point,
    uniform_sphere,
)
from .classical import (
    CodeDistribution,
    IntervalDistribution,
    MultilinearFunction,
    build_code_distribution,
    majority_levels,
    majority_multilinear,
    truncate_classical,
    truncation_blowup_scan,
    truncation_error_classical,
)
from .learner import (
    Hypothesis,
    LearnReport,
    TrainingSet,
    demo_code_hardness,
    feature_index,
    fit_least_squares,
    generate_dataset,
    learn_channel,
    learn_classical,
    required_degree,
)
from .qsim import KrausChannel, estimate_label, pauli_to_operator, random_channel

__all__ = [
    "BasisExpansion",
    "BlochDistribution",
    "CodeDistribution",
    "Hypothesis",
    "IntervalDistribution",
    "KrausChannel",
    "LearnReport",
    "MultilinearFunction",
    "Rotation",
    "SiteBasis",
    "TrainingSet",
    "basis_second_moment",
    "bernoulli_axis",
    "build_code_distribution",
    "build_site_basis",
    "demo_code_hardness",
    "estimate_label",
    "eta_prime",
    "expand",
    "feature_index",
    "fit_least_squares",
    "generate_dataset",
    "learn_channel",
    "learn_classical",
    "majority_levels",
    "majority_multilinear",
    "mean_state_gram",
    "pauli_eigenstates",
    "pauli_to_operator",
    "random_channel",
    "required_degree",
    "spectral_norm",
    "truncate",
    "truncate_classical",
    "truncation_blowup_scan",
    "truncation_error_classical",
    "truncation_error_exact",
    "two_point",
    "uniform_sphere",
    "verify_min_eigenvalue",
    "verify_scaled_covariance",
]
