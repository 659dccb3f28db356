"""Closed-form and search-based analytics of the modulo feedback scheme.

All SNR arguments are linear unless the name ends in ``_db``. Noiseless feedback is
expressed as ``snr_fb = dsnr = math.inf``.
"""

from dataclasses import asdict, dataclass, field
import math
import sys

from scipy.optimize import brentq

from skfeedback.core.numerics import from_db, qfunc, to_db
from skfeedback.core.pam import gamma0
from skfeedback.core.system import aliasing_lambda
from skfeedback.errors import DomainError, ErrorFloorError, InfeasibleError
from skfeedback.utils import log

CONVENTIONS = ("budget", "target_rate")
REFERENCE_PAM_SLACK = 5.0
N_OPT_MARGIN_DB = 0.2
BISECTION_TOL_DB = 1e-4
BISECTION_MAX_ITER = 200
SEARCH_BRACKET_DB = (-10.0, 60.0)
BRACKET_STEP_DB = 20.0
BRACKET_LIMIT_DB = (-100.0, 300.0)
LN10_FACTOR = 10.0 / math.log(10.0)
LOG_FLOAT_MAX = math.log(sys.float_info.max)
# 2 Q(40) underflows to 0 in double precision
LOG_Q_ARGUMENT_CUTOFF = math.log(40.0)


@dataclass(frozen=True)
class ErrorBudget:
    """Split of the message error bound into aliasing and final PAM decoding terms."""

    aliasing: float
    pam: float

    @property
    def total(self) -> float:
        return self.aliasing + self.pam


@dataclass(frozen=True)
class TheoremTerms:
    lam: float
    psi1_db: float
    psi2_db: float
    psi3_db: float
    gap_db: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GapPoint:
    n_rounds: int
    snr_db: float
    gap_db: float


@dataclass
class GapCurve:
    """Capacity gap versus rounds for one (R, pe, dsnr) triple.

    ``points`` holds the feasible rounds only; ``infeasible`` lists the others.
    """

    rate_bits_per_use: float
    pe_target: float
    dsnr: float
    points: list[GapPoint] = field(default_factory=list)
    infeasible: list[int] = field(default_factory=list)
    n_opt: int | None = None

    @property
    def dsnr_db(self) -> float:
        return math.inf if math.isinf(self.dsnr) else to_db(self.dsnr)

    def gap_at(self, n: int) -> float:
        for point in self.points:
            if point.n_rounds == n:
                return point.gap_db
        raise KeyError(f"no feasible point at N={n}")

    @property
    def minimum_gap_db(self) -> float | None:
        return min((p.gap_db for p in self.points), default=None)


def _fb_terms(snr: float, snr_fb: float, dsnr: float, lam: float) -> tuple[float, float]:
    """(1/(lambda snr_fb), 1/(lambda dsnr)), both 0 for noiseless feedback."""
    if math.isinf(snr_fb):
        return 0.0, 0.0
    if lam * snr_fb <= 1.0:
        raise ErrorFloorError(f"error floor violated: lambda * snr_fb = {lam * snr_fb:.6g} <= 1")
    return 1.0 / (lam * snr_fb), 1.0 / (lam * dsnr)


def _log_snr_after_n(snr: float, snr_fb: float, dsnr: float, lam: float, n: int) -> float:
    if not snr > 0.0:
        raise DomainError(f"snr must be positive, got {snr}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    a, b = _fb_terms(snr, snr_fb, dsnr, lam)
    return math.log(snr) + (n - 1) * math.log1p(snr * (1.0 - a) / (1.0 + b))


def snr_after_n(snr: float, snr_fb: float, dsnr: float, lam: float, n: int) -> float:
    """Effective SNR after n rounds, snr (1 + snr (1 - 1/(lambda snr_fb)) / (1 + 1/(lambda dsnr)))^(n-1).

    Raises:
        ErrorFloorError: If lambda * snr_fb <= 1.

    Returns:
        float: The SNR, or math.inf when it exceeds the double range.
    """
    log_snr_n = _log_snr_after_n(snr, snr_fb, dsnr, lam, n)
    if log_snr_n > LOG_FLOAT_MAX:
        return math.inf
    return math.exp(log_snr_n)


def _pam_term(log_snr_n: float, n: int, rate_bits_per_use: float) -> float:
    bits = n * rate_bits_per_use
    log_denominator = 2.0 * bits * math.log(2.0) + math.log1p(-(2.0 ** (-2.0 * bits)))
    log_argument = 0.5 * (math.log(3.0) + log_snr_n - log_denominator)
    if log_argument > LOG_Q_ARGUMENT_CUTOFF:
        return 0.0
    return 2.0 * qfunc(math.exp(log_argument))


def pe_budget_terms(snr: float, snr_fb: float, dsnr: float, n: int, rate_bits_per_use: float, p_m: float) -> ErrorBudget:
    """Aliasing and PAM terms of the message error bound after n rounds.

    The aliasing term (n-1) p_m is only charged when the feedback is noisy.
    """
    lam = aliasing_lambda(p_m)
    aliasing = 0.0 if math.isinf(snr_fb) else (n - 1) * p_m
    return ErrorBudget(aliasing=aliasing, pam=_pam_term(_log_snr_after_n(snr, snr_fb, dsnr, lam, n), n, rate_bits_per_use))


def pe_budget(snr: float, snr_fb: float, dsnr: float, n: int, rate_bits_per_use: float, p_m: float) -> float:
    """(n-1) p_m + 2 Q(sqrt(3 SNR_n / (2^(2nR) - 1))), with lambda taken from p_m."""
    return pe_budget_terms(snr, snr_fb, dsnr, n, rate_bits_per_use, p_m).total


def _search_error(snr_db: float, rate: float, pe_target: float, n: int, dsnr: float, p_m: float,
                  convention: str, pam_slack: float) -> float:
    """Normalized error at snr_db: <= 1 means the target is met."""
    snr = from_db(snr_db)
    snr_fb = snr * dsnr
    try:
        terms = pe_budget_terms(snr, snr_fb, dsnr, n, rate, p_m)
    except ErrorFloorError:
        return math.inf
    if convention == "budget":
        return terms.total / pe_target
    return terms.pam / (pam_slack * pe_target)


def required_snr(
    rate_bits_per_use: float,
    pe_target: float,
    n: int,
    dsnr: float,
    p_m: float | None = None,
    convention: str = "budget",
    pam_slack: float = 1.0,
) -> float:
    """Smallest forward SNR (dB) at which n rounds meet pe_target.

    dsnr is held fixed, so the feedback SNR tracks the search variable. The
    ``budget`` convention solves pe_budget = pe_target; ``target_rate`` only asks
    the final PAM term to stay below pam_slack * pe_target.

    Args:
        rate_bits_per_use (float): Rate R.
        pe_target (float): Target error probability.
        n (int): Rounds.
        dsnr (float): Feedback SNR excess, linear (math.inf for noiseless feedback).
        p_m (float | None): Aliasing budget; defaults to pe_target / (2n).
        convention (str): ``budget`` or ``target_rate``.
        pam_slack (float): Multiplier on pe_target for the PAM term under ``target_rate``.

    Raises:
        InfeasibleError: If the aliasing floor alone exceeds the target or no SNR in range works.
        DomainError: On invalid arguments, or when the target holds even at -100 dB.

    Returns:
        float: SNR in dB, within 1e-4 dB of the threshold and on its feasible side.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown convention '{convention}', expected one of {CONVENTIONS}")
    if not 0.0 < pe_target < 1.0:
        raise DomainError(f"pe_target must lie in (0, 1), got {pe_target}")
    if not dsnr > 1.0:
        raise DomainError(f"dsnr must exceed 1, got {dsnr}")
    if pam_slack <= 0.0:
        raise DomainError(f"pam_slack must be positive, got {pam_slack}")
    p_m = pe_target / (2.0 * n) if p_m is None else p_m
    if convention == "budget" and not math.isinf(dsnr) and (n - 1) * p_m >= pe_target:
        raise InfeasibleError(f"aliasing floor exceeds target: (n-1) p_m = {(n - 1) * p_m:.3g} >= {pe_target:.3g}")

    def meets(snr_db: float) -> bool:
        return _search_error(snr_db, rate_bits_per_use, pe_target, n, dsnr, p_m, convention, pam_slack) <= 1.0

    lo, hi = SEARCH_BRACKET_DB
    while not meets(hi):
        hi += BRACKET_STEP_DB
        log(f"required_snr: raising upper bracket to {hi} dB (n={n})", level="debug")
        if hi > BRACKET_LIMIT_DB[1]:
            raise InfeasibleError(f"no SNR below {BRACKET_LIMIT_DB[1]} dB reaches pe={pe_target} in {n} rounds")
    while meets(lo):
        lo -= BRACKET_STEP_DB
        if lo < BRACKET_LIMIT_DB[0]:
            raise DomainError(
                f"pe={pe_target} is met at every SNR down to {BRACKET_LIMIT_DB[0]} dB; "
                f"the target (times pam_slack={pam_slack}) is too loose to define a threshold"
            )

    for _ in range(BISECTION_MAX_ITER):
        if hi - lo <= BISECTION_TOL_DB:
            break
        mid = 0.5 * (lo + hi)
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


def gap_db(snr_db: float, rate_bits_per_use: float) -> float:
    """Capacity gap: snr_db - 10 log10(2^(2R) - 1)."""
    return snr_db - to_db(math.expm1(2.0 * rate_bits_per_use * math.log(2.0)))


def gap_curve(
    rate_bits_per_use: float,
    pe_target: float,
    dsnr: float,
    n_max: int,
    convention: str = "budget",
    pam_slack: float = 1.0,
    p_m: float | None = None,
) -> GapCurve:
    """Capacity gap for N = 1..n_max and the n_opt marker.

    n_opt is the smallest N whose gap is less than 0.2 dB above the curve minimum.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    curve = GapCurve(rate_bits_per_use=rate_bits_per_use, pe_target=pe_target, dsnr=dsnr)
    for n in range(1, n_max + 1):
        try:
            snr_db = required_snr(rate_bits_per_use, pe_target, n, dsnr, p_m, convention, pam_slack)
        except InfeasibleError as exc:
            log(f"gap_curve: N={n} infeasible ({exc})", level="debug")
            curve.infeasible.append(n)
            continue
        curve.points.append(GapPoint(n_rounds=n, snr_db=snr_db, gap_db=gap_db(snr_db, rate_bits_per_use)))
    best = curve.minimum_gap_db
    if best is not None:
        curve.n_opt = next(p.n_rounds for p in curve.points if p.gap_db < best + N_OPT_MARGIN_DB)
    return curve


def reference_gap_curve(rate_bits_per_use: float, pe_target: float, dsnr: float, n_max: int = 36) -> GapCurve:
    """Gap curve under the convention of the published reference curves (PAM term within 5 pe)."""
    return gap_curve(rate_bits_per_use, pe_target, dsnr, n_max, convention="target_rate", pam_slack=REFERENCE_PAM_SLACK)


def _theorem_lambda(pe_target: float, n: int) -> float:
    return aliasing_lambda(pe_target / (2.0 * n))


def theorem1_gap(pe_target: float, n: int, snr: float, dsnr: float) -> TheoremTerms:
    """Upper bound on the capacity gap of the modulo scheme in n rounds.

    gap = Gamma0_dB(pe/2) / N + ((N-1)/N) (Psi1_dB + Psi2_dB) + Psi3, with
    Psi1 = 1 + 1/(lambda dsnr), Psi2 = 1/(1 - 1/(lambda snr_fb)) and
    Psi3 = (10/ln 10) / (snr Psi1^-(N-1)/N Psi2^-(N-1)/N Gamma0(pe/2)^-1/N - 1).

    Raises:
        ErrorFloorError: If lambda * snr * dsnr <= 1.
        InfeasibleError: If snr is too low for the Psi3 term to be defined.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    lam = _theorem_lambda(pe_target, n)
    snr_fb = snr * dsnr
    a, b = _fb_terms(snr, snr_fb, dsnr, lam)
    psi1 = 1.0 + b
    psi2 = 1.0 / (1.0 - a)
    g0_db = gamma0(pe_target / 2.0)
    g0 = from_db(g0_db)
    weight = (n - 1) / n
    denominator = snr * psi1 ** (-weight) * psi2 ** (-weight) * g0 ** (-1.0 / n) - 1.0
    if denominator <= 0.0:
        raise InfeasibleError(f"theorem bound undefined at snr={snr:.4g}: the SNR is below the scheme's operating range")
    psi1_db = to_db(psi1)
    psi2_db = to_db(psi2)
    psi3 = LN10_FACTOR / denominator
    gap = g0_db / n + weight * (psi1_db + psi2_db) + psi3
    return TheoremTerms(lam=lam, psi1_db=psi1_db, psi2_db=psi2_db, psi3_db=psi3, gap_db=gap)


def theorem1_approx_gap(pe_target: float, n: int, dsnr: float) -> float:
    """High-SNR limit of the theorem: Gamma0_dB(pe/2)/N + ((N-1)/N) [1 + 1/(lambda dsnr)]_dB."""
    lam = _theorem_lambda(pe_target, n)
    psi1_db = 0.0 if math.isinf(dsnr) else to_db(1.0 + 1.0 / (lam * dsnr))
    return gamma0(pe_target / 2.0) / n + (n - 1) / n * psi1_db


def sk_gap_approx(pe_target: float, n: int) -> float:
    return gamma0(pe_target) / n


def concatenated_snr(snr: float, snr_fb: float) -> float:
    """SNR of the forward-then-feedback concatenated channel, snr snr_fb / (snr + snr_fb + 1)."""
    if math.isinf(snr_fb):
        return snr
    return snr * snr_fb / (snr + snr_fb + 1.0)


def shannon_rate(snr_db: float) -> float:
    """C = 1/2 log2(1 + snr) in bits per channel use."""
    return 0.5 * math.log2(1.0 + from_db(snr_db))


@dataclass(frozen=True)
class BandwidthComparison:
    snr_db: float
    interactive_rate: float
    full_band_rate: float

    @property
    def interactive_wins(self) -> bool:
        return self.interactive_rate > self.full_band_rate


def bandwidth_tradeoff(snr_db: float, gap_star_db: float, gap_fec_db: float) -> BandwidthComparison:
    """Half-band interactive scheme against a full-band one-way code with gap gap_fec_db.

    The one-way code doubles the symbol rate at half the SNR per symbol:
    C(snr - gap*) against 2 C(snr - 3 - gap_fec).
    """
    return BandwidthComparison(
        snr_db=snr_db,
        interactive_rate=shannon_rate(snr_db - gap_star_db),
        full_band_rate=2.0 * shannon_rate(snr_db - 3.0 - gap_fec_db),
    )


def bandwidth_crossover(gap_star_db: float, gap_fec_db: float, bracket_db: tuple[float, float] = (-30.0, 80.0)) -> float | None:
    """SNR (dB) where both rates of :func:`bandwidth_tradeoff` coincide, None if they never do."""
    def difference(snr_db: float) -> float:
        comparison = bandwidth_tradeoff(snr_db, gap_star_db, gap_fec_db)
        return comparison.interactive_rate - comparison.full_band_rate

    lo, hi = bracket_db
    if difference(lo) * difference(hi) > 0.0:
        return None
    return brentq(difference, lo, hi, xtol=1e-8)
