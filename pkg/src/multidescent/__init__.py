"""Column subset selection and Nystrom approximation through determinantal point processes.

Exact expected errors of DPP and k-DPP sampling, stable-rank bounds on the
approximation factor, worst-case instances, and the tools to trace the
factor as a function of the subset size.
"""

from .bounds import (
    BoundCurve,
    ExpDecay,
    PolyDecay,
    StableRankProfile,
    concentration_threshold,
    decay_bound,
    decay_stable_rank_floor,
    lemma1_alpha,
    lemma2_applicable,
    master_envelope,
    phi,
    psi,
    stable_rank_profile,
)
from .esp import (
    EspTable,
    convexity_probe,
    dpp_expected_error,
    dpp_expected_size,
    dpp_size_pmf,
    esp,
    kdpp_error_curve,
    kdpp_expected_error,
    newton_ratio_check,
)
from .exceptions import (
    BudgetExceeded,
    CertificationError,
    ConfigError,
    DegenerateError,
    DomainError,
    MultidescentError,
    ParseError,
    ShapeError,
    WindowError,
)
from .generators import (
    KernelSpec,
    LowerBoundSpec,
    SpectrumSpec,
    build_kernel,
    gen_lower_bound,
    gen_shaped_matrix,
    read_libsvm,
)
from .sampling import DppConfig, SubsetSample, make_rng, sample_batch, sample_dpp, sample_kdpp
from .selectors import SelectionResult, brute_force_optimum, estimate_factor, greedy_select, kdpp_select
from .spectral import (
    GramInstance,
    Spectrum,
    eigensym,
    nystrom_approximation,
    nystrom_error,
    opt_k,
    projection_error,
)

__version__ = "0.1.0"
