"""Seeded, parallel Monte Carlo estimation over the trial runners.

Trials are grouped in fixed blocks of BLOCK_TRIALS. Block b always draws a full
block from ``Philox(SeedSequence(master_seed, spawn_key=(b,)))`` in the order:
messages, N forward noises, N-1 feedback noises, N-1 dithers. Trial t is row
t % BLOCK_TRIALS of block t // BLOCK_TRIALS, whatever the worker count or the
total number of trials. Partial sums are merged in block order.
"""

from dataclasses import asdict, dataclass, field
import math

from joblib import Parallel, delayed
import numpy as np
from scipy import stats

from skfeedback.core.schemes import SchemeFactory, TrialRecord, TrialRunner
from skfeedback.core.system import SystemConfig, derive_params
from skfeedback.core.analysis import pe_budget
from skfeedback.errors import CouplingViolation, UsageError
from skfeedback.utils import log

BLOCK_TRIALS = 4096
Z95 = 1.96
MIN_ERRORS = 10
MAX_DIAGNOSTICS = 10


@dataclass(frozen=True)
class RngSpec:
    """Master seed of a counter-based family of per-block streams."""

    master_seed: int

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise UsageError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def block_generator(self, block: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.master_seed, spawn_key=(block,))))

    def locate(self, trial: int) -> tuple[int, int]:
        """(block, row) holding the realization of a trial."""
        return divmod(trial, BLOCK_TRIALS)


@dataclass
class BlockDraws:
    w: np.ndarray
    noise_fwd: np.ndarray
    noise_fb: np.ndarray
    dither: np.ndarray


def draw_block(rng: RngSpec, block: int, cfg: SystemConfig, levels: int, d: float) -> BlockDraws:
    """Full-block realization of messages, noises and dither for one block."""
    gen = rng.block_generator(block)
    rounds = cfg.N
    w = gen.integers(0, levels, size=BLOCK_TRIALS, dtype=np.int64)
    noise_fwd = math.sqrt(cfg.sigma2) * gen.standard_normal((BLOCK_TRIALS, rounds))
    noise_fb = math.sqrt(cfg.sigma2_fb) * gen.standard_normal((BLOCK_TRIALS, rounds - 1))
    dither = gen.uniform(-0.5 * d, 0.5 * d, size=(BLOCK_TRIALS, rounds - 1))
    return BlockDraws(w=w, noise_fwd=noise_fwd, noise_fb=noise_fb, dither=dither)


def _block_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, BLOCK_TRIALS)
    return [BLOCK_TRIALS] * full + ([rest] if rest else [])


def _dither_interval(cfg: SystemConfig) -> float:
    return math.sqrt(12.0 * cfg.P_fb)


def _make_runner(scheme_id: str, cfg: SystemConfig) -> TrialRunner:
    if scheme_id in ("proposed", "coupled", "sk"):
        return SchemeFactory.create(scheme_id, cfg=cfg, params=derive_params(cfg))
    return SchemeFactory.create(scheme_id, cfg=cfg)


def _run_draws(runner: TrialRunner, draws: BlockDraws, size: int) -> TrialRecord:
    return runner.run(
        draws.w[:size], draws.noise_fwd[:size], draws.noise_fb[:size], draws.dither[:size]
    )


@dataclass
class _Sums:
    trials: int
    symbol_errors: int
    bit_errors: int
    aliasing: np.ndarray
    first_aliasing: np.ndarray
    any_event: int
    power_fwd: np.ndarray
    power_fwd_sq: np.ndarray
    power_fb: np.ndarray
    power_fb_sq: np.ndarray
    eps_moments: np.ndarray

    @classmethod
    def of(cls, record: TrialRecord) -> "_Sums":
        rounds = record.eps.shape[1]
        first = record.first_aliasing_round
        eps = record.eps
        return cls(
            trials=record.trials,
            symbol_errors=int(np.count_nonzero(record.decode_error)),
            bit_errors=int(record.bit_errors.sum()),
            aliasing=record.aliasing.sum(axis=0).astype(np.int64),
            first_aliasing=np.bincount(first, minlength=rounds).astype(np.int64),
            any_event=int(np.count_nonzero(record.decode_error | (first > 0))),
            power_fwd=record.tx_power_fwd.sum(axis=0),
            power_fwd_sq=(record.tx_power_fwd ** 2).sum(axis=0),
            power_fb=record.tx_power_fb.sum(axis=0),
            power_fb_sq=(record.tx_power_fb ** 2).sum(axis=0),
            eps_moments=np.stack([(eps ** k).sum(axis=0) for k in (1, 2, 3, 4)]),
        )

    def merge(self, other: "_Sums") -> "_Sums":
        return _Sums(
            trials=self.trials + other.trials,
            symbol_errors=self.symbol_errors + other.symbol_errors,
            bit_errors=self.bit_errors + other.bit_errors,
            aliasing=self.aliasing + other.aliasing,
            first_aliasing=self.first_aliasing + other.first_aliasing,
            any_event=self.any_event + other.any_event,
            power_fwd=self.power_fwd + other.power_fwd,
            power_fwd_sq=self.power_fwd_sq + other.power_fwd_sq,
            power_fb=self.power_fb + other.power_fb,
            power_fb_sq=self.power_fb_sq + other.power_fb_sq,
            eps_moments=self.eps_moments + other.eps_moments,
        )


def _estimate_block(scheme_id: str, cfg: SystemConfig, rng: RngSpec, block: int, size: int) -> _Sums:
    runner = _make_runner(scheme_id, cfg)
    draws = draw_block(rng, block, cfg, runner.constellation.levels, _dither_interval(cfg))
    return _Sums.of(_run_draws(runner, draws, size))


def _reduce(parts: list[_Sums]) -> _Sums:
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def _check_trials(trials: int) -> None:
    if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
        raise UsageError(f"trials must be an integer >= 1, got {trials!r}")


def _check_workers(workers: int) -> None:
    if isinstance(workers, bool) or not isinstance(workers, (int, np.integer)) or workers < 1:
        raise UsageError(f"workers must be an integer >= 1, got {workers!r}")


def _collect(scheme_id: str, cfg: SystemConfig, trials: int, rng: RngSpec, workers: int) -> _Sums:
    _check_trials(trials)
    _check_workers(workers)
    if scheme_id not in SchemeFactory.names():
        raise UsageError(f"Scheme '{scheme_id}' is not registered. Available schemes: {SchemeFactory.names()}")
    # fail fast on configuration errors before spawning workers
    _make_runner(scheme_id, cfg)
    sizes = _block_sizes(trials)
    log(f"{scheme_id}: {trials} trials in {len(sizes)} blocks on {workers} worker(s)", level="debug")
    parts = Parallel(n_jobs=workers)(
        delayed(_estimate_block)(scheme_id, cfg, rng, block, size) for block, size in enumerate(sizes)
    )
    return _reduce(parts)


def _half_width(p: float, n: int) -> float:
    return Z95 * math.sqrt(p * (1.0 - p) / n)


def _mean_and_se(total: np.ndarray, total_sq: np.ndarray, n: int) -> tuple[list[float], list[float]]:
    mean = total / n
    if n < 2:
        return mean.tolist(), [math.nan] * len(mean)
    var = np.maximum(total_sq - n * mean * mean, 0.0) / (n - 1)
    return mean.tolist(), np.sqrt(var / n).tolist()


@dataclass
class SimResult:
    """Aggregated counts and per-round power statistics of one Monte Carlo run."""

    scheme: str
    trials: int
    message_bits: int
    symbol_errors: int
    bit_errors: int
    aliasing_by_round: list[int]
    first_aliasing_by_round: list[int]
    any_event: int
    mean_power_fwd: list[float]
    se_power_fwd: list[float]
    mean_power_fb: list[float]
    se_power_fb: list[float]
    seed: int

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.trials

    @property
    def ser_ci(self) -> float:
        return _half_width(self.ser, self.trials)

    @property
    def ser_se(self) -> float:
        return math.sqrt(self.ser * (1.0 - self.ser) / self.trials)

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.message_bits)

    @property
    def ber_ci(self) -> float:
        return _half_width(self.ber, self.trials * self.message_bits)

    @property
    def ser_wilson(self) -> tuple[float, float]:
        """95% Wilson score interval of the symbol error rate."""
        z = stats.norm.ppf(0.975)
        n = self.trials
        p = self.ser
        centre = (p + z * z / (2 * n)) / (1 + z * z / n)
        spread = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        return centre - spread, centre + spread

    @property
    def reliable(self) -> bool:
        """At least MIN_ERRORS symbol errors were observed, so pass/fail comparisons are meaningful."""
        return self.symbol_errors >= MIN_ERRORS

    def aliasing_rate(self, n: int) -> float:
        return self.aliasing_by_round[n - 1] / self.trials

    def to_dict(self) -> dict:
        data = asdict(self)
        data.update(
            ser=self.ser, ser_ci=self.ser_ci, ber=self.ber, ber_ci=self.ber_ci,
            ser_wilson=list(self.ser_wilson), reliable=self.reliable,
        )
        return data


def estimate(scheme_id: str, cfg: SystemConfig, trials: int, rng: RngSpec, workers: int = 1) -> SimResult:
    """Run ``trials`` independent trials of a scheme and aggregate them.

    Args:
        scheme_id (str): One of the registered schemes (uncoded, sk, proposed, coupled).
        cfg (SystemConfig): The link configuration.
        trials (int): Number of trials, >= 1.
        rng (RngSpec): Master seed.
        workers (int): Size of the joblib worker pool; results do not depend on it.

    Raises:
        UsageError: If trials < 1 or the scheme is unknown or unsuitable for cfg.
        ConfigError, ErrorFloorError: Propagated from derive_params.

    Returns:
        SimResult: Exact integer counts and per-round power means.
    """
    sums = _collect(scheme_id, cfg, trials, rng, workers)
    fwd_mean, fwd_se = _mean_and_se(sums.power_fwd, sums.power_fwd_sq, sums.trials)
    fb_mean, fb_se = _mean_and_se(sums.power_fb, sums.power_fb_sq, sums.trials)
    message_bits = _make_runner(scheme_id, cfg).message_bits
    result = SimResult(
        scheme=scheme_id,
        trials=sums.trials,
        message_bits=message_bits,
        symbol_errors=sums.symbol_errors,
        bit_errors=sums.bit_errors,
        aliasing_by_round=sums.aliasing.tolist(),
        first_aliasing_by_round=sums.first_aliasing[1:].tolist(),
        any_event=sums.any_event,
        mean_power_fwd=fwd_mean,
        se_power_fwd=fwd_se,
        mean_power_fb=fb_mean,
        se_power_fb=fb_se,
        seed=rng.master_seed,
    )
    log(f"{scheme_id}: SER={result.ser:.4g} +- {result.ser_ci:.2g} over {trials} trials")
    return result


@dataclass
class VarianceProfile:
    """Per-round unbiased sample variance of the estimation error and its standard error."""

    variance: list[float]
    standard_error: list[float]
    trials: int


def variance_profile(scheme_id: str, cfg: SystemConfig, trials: int, rng: RngSpec, workers: int = 1) -> VarianceProfile:
    sums = _collect(scheme_id, cfg, trials, rng, workers)
    n = sums.trials
    if n < 4:
        raise UsageError(f"variance_profile needs at least 4 trials, got {n}")
    s1, s2, s3, s4 = sums.eps_moments / n
    mean = s1
    var_biased = s2 - mean ** 2
    variance = var_biased * n / (n - 1)
    m4 = s4 - 4.0 * mean * s3 + 6.0 * mean ** 2 * s2 - 3.0 * mean ** 4
    se = np.sqrt(np.maximum(m4 - (n - 3) / (n - 1) * variance ** 2, 0.0) / n)
    return VarianceProfile(variance=variance.tolist(), standard_error=se.tolist(), trials=n)


@dataclass
class CouplingReport:
    trials: int
    violations: int
    first_aliasing_histogram: list[int]
    any_event_fraction: float
    union_bound: float
    union_bound_se: float
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def union_bound_holds(self) -> bool:
        return self.any_event_fraction <= self.union_bound + 3.0 * self.union_bound_se

    def raise_for_violations(self) -> None:
        if self.violations:
            raise CouplingViolation(
                f"{self.violations} trial(s) diverged from the coupled system before the first aliasing event",
                self.diagnostics,
            )

    def to_dict(self) -> dict:
        data = asdict(self)
        data["union_bound_holds"] = self.union_bound_holds
        return data


@dataclass
class _CouplingSums:
    trials: int
    violations: int
    histogram: np.ndarray
    any_event: int
    coupled_events: int
    diagnostics: list[dict]


def _coupling_block(cfg: SystemConfig, rng: RngSpec, block: int, size: int) -> _CouplingSums:
    params = derive_params(cfg)
    proposed = SchemeFactory.create("proposed", cfg=cfg, params=params)
    coupled = SchemeFactory.create("coupled", cfg=cfg, params=params)
    draws = draw_block(rng, block, cfg, proposed.constellation.levels, params.d)
    real = _run_draws(proposed, draws, size)
    twin = _run_draws(coupled, draws, size)

    first = real.first_aliasing_round
    rounds = cfg.N
    # eps_1..eps_k must agree for k = first aliasing round (all rounds when none)
    limit = np.where(first > 0, first, rounds)
    columns = np.arange(rounds)[np.newaxis, :]
    checked = columns < limit[:, np.newaxis]
    mismatch = (real.eps != twin.eps) & checked
    bad = np.flatnonzero(mismatch.any(axis=1))
    diagnostics = [
        {
            "trial": block * BLOCK_TRIALS + int(row),
            "block": block,
            "row": int(row),
            "master_seed": rng.master_seed,
            "first_aliasing_round": int(first[row]),
            "first_mismatch_round": int(np.argmax(mismatch[row]) + 1),
        }
        for row in bad[:MAX_DIAGNOSTICS]
    ]
    coupled_events = int(twin.aliasing.sum()) + int(np.count_nonzero(twin.decode_error))
    return _CouplingSums(
        trials=size,
        violations=int(bad.size),
        histogram=np.bincount(first, minlength=rounds).astype(np.int64),
        any_event=int(np.count_nonzero(real.decode_error | (first > 0))),
        coupled_events=coupled_events,
        diagnostics=diagnostics,
    )


def verify_coupling(cfg: SystemConfig, trials: int, rng: RngSpec, workers: int = 1) -> CouplingReport:
    """Check that the modulo scheme tracks its coupled twin exactly until the first aliasing.

    Also audits the union bound: the fraction of trials with any aliasing or a
    decoding error must not exceed the summed per-round event rates of the coupled
    system (aliasing in rounds 1..N-1, decoding error in round N).
    """
    _check_trials(trials)
    _check_workers(workers)
    derive_params(cfg)
    sizes = _block_sizes(trials)
    parts = Parallel(n_jobs=workers)(
        delayed(_coupling_block)(cfg, rng, block, size) for block, size in enumerate(sizes)
    )
    violations = sum(p.violations for p in parts)
    histogram = sum((p.histogram for p in parts[1:]), parts[0].histogram)
    any_event = sum(p.any_event for p in parts)
    coupled_events = sum(p.coupled_events for p in parts)
    diagnostics = [d for p in parts for d in p.diagnostics][:MAX_DIAGNOSTICS]
    union = coupled_events / trials
    fraction = any_event / trials
    report = CouplingReport(
        trials=trials,
        violations=violations,
        first_aliasing_histogram=histogram.tolist(),
        any_event_fraction=fraction,
        union_bound=union,
        union_bound_se=math.sqrt(max(fraction * (1.0 - fraction), 0.0) / trials),
        diagnostics=diagnostics,
    )
    if violations:
        log(f"verify_coupling: {violations} violation(s); first: {diagnostics[0]}", level="warning")
    return report


def audit_power(result: SimResult, cfg: SystemConfig) -> dict:
    """z-scores of the per-round power means against P (forward) and P~ (feedback)."""
    def z(means: list[float], ses: list[float], target: float) -> list[float]:
        return [(m - target) / s if s > 0 else 0.0 for m, s in zip(means, ses)]

    return {
        "forward": z(result.mean_power_fwd, result.se_power_fwd, cfg.P),
        "feedback": z(result.mean_power_fb, result.se_power_fb, cfg.P_fb),
    }


def audit_budget(result: SimResult, cfg: SystemConfig) -> dict:
    """Compare the measured SER of the modulo scheme with the analytic error budget."""
    bound = pe_budget(cfg.snr, cfg.snr_fb, cfg.dsnr, cfg.N, cfg.rate_bits_per_use, cfg.aliasing_budget)
    return {
        "ser": result.ser,
        "budget": bound,
        "ser_se": result.ser_se,
        "within_budget": result.ser <= bound + 3.0 * result.ser_se,
        "reliable": result.reliable,
    }
