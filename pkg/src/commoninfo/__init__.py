"""Common-information toolkit for finite-alphabet joint distributions.

Computes Shannon mutual information, the Gacs-Korner common randomness,
and Wyner-style common information (penalized test-channel and auxiliary
model routes with cross-validation), plus Gray-Wyner rate-region helpers
and small operational simulators.
"""

from .dist import (
    AlphabetSpec,
    Coupling,
    JointPMF,
    binary_entropy,
    conditional_entropy,
    conditional_multi_information,
    entropy,
    kl_divergence,
    marginalize,
    multi_information,
    mutual_information,
    validate,
)
from .errors import (
    BudgetExceeded,
    CommonInfoError,
    EmptyKeepSet,
    InconsistentEstimates,
    IncompatibleAux,
    InvalidConfig,
    NegativeMass,
    NonConvergence,
    NotNormalized,
    OutOfRange,
    OverlappingSets,
    ParseError,
    ShapeMismatch,
    TensorTooLarge,
    TooManyParameters,
)

__version__ = "0.1.0"

from .models import AuxModel, TestChannel
from .gk import CommonPart, common_part, gk_common_randomness, measure_ordering
from .wyner import (
    OptConfig,
    OptResult,
    StepRule,
    brute_force_oracle,
    gamma,
    wyner_ci,
    wyner_upper_via_test_channel,
)
from .csbs import (
    a0_of_a1,
    a1_of_a0,
    asymptote_gap,
    bsc_mixture_joint,
    c_closed_form,
    csbs3_joint,
    dsbs_joint,
)
from .graywyner import (
    RateTuple,
    RegionCertificate,
    Unknown,
    certify_achievable,
    constant_witness,
    copy_witness,
    corner_point,
    sum_rate_slack,
)
from .simulate import (
    CodecSimConfig,
    GenSimConfig,
    SimReport,
    generator_sim,
    gw_codec_sim,
)
from .distfile import (
    format_distfile,
    parse_distfile,
    read_distfile,
    read_witness,
    write_distfile,
    write_witness,
)
