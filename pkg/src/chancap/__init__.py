"""Cost-constrained capacity, resolvability and identification tools for
discrete and Gaussian channels. Rates are in nats."""

from .channels import (
    ConstraintSet,
    CostFunction,
    DiscreteChannel,
    FiniteDistribution,
    GaussianChannel,
    GaussianMixture,
    apply_memoryless,
    check_constraint,
    product_law,
    push_forward,
    sample_output,
    transition_prob,
)
from .errors import ChancapError, PreconditionError, SpecFileError, UnsupportedError
from .gaussian import (
    SpectralDensity,
    ToeplitzCovariance,
    ar1_autocorr,
    awgn_divergence,
    anwgn_divergence,
    build_toeplitz,
    fisher_norm,
    spectral_density_eval,
    whiten,
)
from .identification import (
    IdentificationCode,
    build_distinct_id_code,
    count_quantized_codebooks,
    duality_distance_check,
    id_errors,
    loglog_rate,
)
from .quantizer import QuantGrid, build_grid, pinsker_check, quantize, tv_bound, tv_exact
from .resolvability import (
    ResolvabilityEncoder,
    encoder_output_law,
    random_binning_experiment,
    resolvability_curve,
)
from .spectrum import (
    GaussianInput,
    constrained_capacity_dmc,
    info_density,
    j_curve,
    mutual_information,
    sample_info_density,
    spectral_inf,
    spectral_sup,
)
from .waterfill import awgn_capacity, waterfill_discrete, waterfill_spectral

__version__ = "0.1.0"

__all__ = [
    "ChancapError",
    "ConstraintSet",
    "CostFunction",
    "DiscreteChannel",
    "FiniteDistribution",
    "GaussianChannel",
    "GaussianInput",
    "GaussianMixture",
    "IdentificationCode",
    "PreconditionError",
    "QuantGrid",
    "ResolvabilityEncoder",
    "SpecFileError",
    "SpectralDensity",
    "ToeplitzCovariance",
    "UnsupportedError",
    "anwgn_divergence",
    "apply_memoryless",
    "ar1_autocorr",
    "awgn_capacity",
    "awgn_divergence",
    "build_distinct_id_code",
    "build_grid",
    "build_toeplitz",
    "check_constraint",
    "constrained_capacity_dmc",
    "count_quantized_codebooks",
    "duality_distance_check",
    "encoder_output_law",
    "fisher_norm",
    "id_errors",
    "info_density",
    "j_curve",
    "loglog_rate",
    "mutual_information",
    "pinsker_check",
    "product_law",
    "push_forward",
    "quantize",
    "random_binning_experiment",
    "resolvability_curve",
    "sample_info_density",
    "sample_output",
    "spectral_density_eval",
    "spectral_inf",
    "spectral_sup",
    "transition_prob",
    "tv_bound",
    "tv_exact",
    "waterfill_discrete",
    "waterfill_spectral",
    "whiten",
]
