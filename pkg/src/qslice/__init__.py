"""Quantile slice sampling with pseudo-targets, comparator kernels and diagnostics."""

from .distributions import (
    ParameterError,
    ScalarDist,
    UnnormTarget,
    STD_TARGETS,
    beta,
    cauchy,
    format_dist,
    gamma,
    invgamma,
    normal,
    parse_dist,
    std_target,
    student_t,
    uniform,
)
from .streams import ScriptedStream, VariateStream, chain_stream
from .shrinkage import ShrinkageError, generalized_shrink, shrink_hyperrect, shrink_unit
from .samplers import (
    GESS,
    IMH,
    RWM,
    ChainError,
    ChainResult,
    InitializationError,
    Latent,
    MQSlice,
    MSlice,
    MultiPseudo,
    MultiTarget,
    QSlice,
    StepOut,
    StepRecord,
    UnsupportedConfigError,
    gess_step,
    imh_step,
    latent_slice_step,
    mqslice_step,
    mslice_hyperrect_step,
    qslice_step,
    run_chain,
    rwm_step,
    stepout_slice_step,
)
from .pseudo import (
    PseudoFit,
    PsiDiagnostics,
    auc_from_samples,
    auc_quadrature,
    laplace_pseudo,
    moment_match_pseudo,
    msw,
    msw_from_samples,
    optimize_pseudo,
    psi_diagnostics,
)
from .diagnostics import DiagnosticsReport, ess, esps, ks_test, psrf, report
from .tuning import race

__version__ = "0.1.0"
