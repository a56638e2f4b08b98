"""Low-rank intensity estimation for multivariate spatial point processes.

The package fits intensity functions on the unit cube from replicated
point patterns by projecting onto a tensor-product orthonormal polynomial
basis and denoising the coefficient tensor: soft singular value
thresholding when the coordinates are split into two blocks, and a
sketched Tucker projection for three or more blocks.  Simulators, a
kernel-smoothing baseline, and a benchmark harness round out the library.
"""

from intensor.basis import (
    IntensityModel,
    PartitionSpec,
    block_basis_eval,
    evaluate_model,
    gauss_legendre_01,
    legendre_eval,
    project_function,
)
from intensor.errors import ConfigError, DataError, ResourceLimitError
from intensor.estimate import (
    EstimatorConfig,
    cluster_partition,
    cv_gamma,
    empirical_coefficients,
    fit_intensity,
    matrix_svt_estimate,
    select_ranks,
    tensor_estimate,
    theoretical_gamma,
    theoretical_m,
)
from intensor.kie import KernelModel, kie_fit, kie_evaluate, scott_bandwidth
from intensor.simulate import (
    PointPattern,
    ScenarioSpec,
    sample_lgcp,
    sample_neyman_scott,
    sample_poisson,
    scenario_intensity,
    scenario_sup,
    substream,
    thin_split,
)
from intensor.tensors import (
    SvdFactors,
    kron_factors,
    matricize,
    mode_product,
    soft_threshold_svd,
    truncated_svd,
    tucker_project,
    unmatricize,
)

__all__ = [
    "ConfigError",
    "DataError",
    "EstimatorConfig",
    "IntensityModel",
    "KernelModel",
    "PartitionSpec",
    "PointPattern",
    "ResourceLimitError",
    "ScenarioSpec",
    "SvdFactors",
    "block_basis_eval",
    "cluster_partition",
    "cv_gamma",
    "empirical_coefficients",
    "evaluate_model",
    "fit_intensity",
    "gauss_legendre_01",
    "kie_evaluate",
    "kie_fit",
    "kron_factors",
    "legendre_eval",
    "matricize",
    "matrix_svt_estimate",
    "mode_product",
    "project_function",
    "sample_lgcp",
    "sample_neyman_scott",
    "sample_poisson",
    "scenario_intensity",
    "scenario_sup",
    "scott_bandwidth",
    "select_ranks",
    "soft_threshold_svd",
    "substream",
    "tensor_estimate",
    "theoretical_gamma",
    "theoretical_m",
    "thin_split",
    "truncated_svd",
    "tucker_project",
    "unmatricize",
]

__version__ = "0.1.0"
