from .numerics import qfunc, qfunc_inv, to_db, from_db, mod_reduce
from .pam import (
    PamConstellation,
    build_constellation,
    gray_encode,
    decode_min_distance,
    pam_symbol_error_bound,
    bit_error_bound,
    gamma0,
)
from .system import SystemConfig, DerivedParams, derive_params
from .schemes import (
    TrialRecord,
    TrialRunner,
    SchemeFactory,
    run_trial_proposed,
    run_trial_coupled,
    run_trial_sk,
    run_trial_uncoded,
)
from .analysis import (
    TheoremTerms,
    GapPoint,
    GapCurve,
    snr_after_n,
    pe_budget,
    required_snr,
    gap_curve,
    reference_gap_curve,
    theorem1_gap,
    theorem1_approx_gap,
    sk_gap_approx,
    concatenated_snr,
    bandwidth_tradeoff,
    bandwidth_crossover,
)
from .montecarlo import RngSpec, SimResult, estimate, verify_coupling, variance_profile

__all__ = [
        "qfunc",
        "qfunc_inv",
        "to_db",
        "from_db",
        "mod_reduce",
        "PamConstellation",
        "build_constellation",
        "gray_encode",
        "decode_min_distance",
        "pam_symbol_error_bound",
        "bit_error_bound",
        "gamma0",
        "SystemConfig",
        "DerivedParams",
        "derive_params",
        "TrialRecord",
        "TrialRunner",
        "SchemeFactory",
        "run_trial_proposed",
        "run_trial_coupled",
        "run_trial_sk",
        "run_trial_uncoded",
        "TheoremTerms",
        "GapPoint",
        "GapCurve",
        "snr_after_n",
        "pe_budget",
        "required_snr",
        "gap_curve",
        "reference_gap_curve",
        "theorem1_gap",
        "theorem1_approx_gap",
        "sk_gap_approx",
        "concatenated_snr",
        "bandwidth_tradeoff",
        "bandwidth_crossover",
        "RngSpec",
        "SimResult",
        "estimate",
        "verify_coupling",
        "variance_profile",
]
