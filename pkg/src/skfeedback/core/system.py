"""Physical setup of the two-way AWGN link and the scheme constants derived from it."""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from skfeedback.core.numerics import from_db, qfunc_inv
from skfeedback.core.pam import MAX_RATE_BITS
from skfeedback.errors import ConfigError, ErrorFloorError


@dataclass(frozen=True)
class SystemConfig:
    """Powers, noise variances, rounds, rate and error target of one link.

    Attributes:
        P: Forward (A to B) transmit power, linear.
        P_fb: Feedback (B to A) transmit power, linear.
        sigma2: Forward noise variance.
        sigma2_fb: Feedback noise variance; 0 means noiseless feedback.
        N: Number of forward channel uses (rounds).
        rate_bits_per_use: Rate R in bits per forward channel use.
        pe_target: Target message error probability.
        p_m: Per-round aliasing probability; None selects pe_target / (2N).
    """

    P: float
    P_fb: float
    sigma2: float
    sigma2_fb: float
    N: int
    rate_bits_per_use: float
    pe_target: float = 1e-6
    p_m: float | None = None

    def __post_init__(self):
        for name in ("P", "P_fb", "sigma2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"{name} must be a positive finite number, got {value}")
        if not (math.isfinite(self.sigma2_fb) and self.sigma2_fb >= 0.0):
            raise ConfigError(f"sigma2_fb must be a finite number >= 0, got {self.sigma2_fb}")
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ConfigError(f"N must be an integer >= 1, got {self.N!r}")
        if not self.rate_bits_per_use > 0.0:
            raise ConfigError(f"rate_bits_per_use must be positive, got {self.rate_bits_per_use}")
        total = self.N * self.rate_bits_per_use
        if abs(total - round(total)) > 1e-9:
            raise ConfigError(f"N * R must be a whole number of bits, got {total}")
        if round(total) > MAX_RATE_BITS:
            raise ConfigError(f"N * R = {round(total)} bits exceeds the {MAX_RATE_BITS}-bit message limit")
        if not 0.0 < self.pe_target < 1.0:
            raise ConfigError(f"pe_target must lie in (0, 1), got {self.pe_target}")
        if self.p_m is not None and not 0.0 < self.p_m < 1.0:
            raise ConfigError(f"p_m must lie in (0, 1), got {self.p_m}")

    @classmethod
    def from_db(
        cls,
        snr_db: float,
        dsnr_db: float | None,
        N: int,
        rate_bits_per_use: float,
        pe_target: float = 1e-6,
        p_m: float | None = None,
        fb_power_db: float | None = None,
    ) -> "SystemConfig":
        """Build a configuration from dB quantities with unit forward noise.

        Args:
            snr_db (float): Forward SNR in dB.
            dsnr_db (float | None): Feedback SNR excess in dB; None or +inf means noiseless feedback.
            N (int): Rounds.
            rate_bits_per_use (float): Rate R.
            pe_target (float): Target error probability.
            p_m (float | None): Aliasing budget per round.
            fb_power_db (float | None): Feedback power in dB; defaults to the forward power.
        """
        P = from_db(snr_db)
        P_fb = P if fb_power_db is None else from_db(fb_power_db)
        if dsnr_db is None or math.isinf(dsnr_db):
            sigma2_fb = 0.0
        else:
            sigma2_fb = P_fb / (P * from_db(dsnr_db))
        return cls(P=P, P_fb=P_fb, sigma2=1.0, sigma2_fb=sigma2_fb, N=N,
                   rate_bits_per_use=rate_bits_per_use, pe_target=pe_target, p_m=p_m)

    @property
    def snr(self) -> float:
        return self.P / self.sigma2

    @property
    def snr_fb(self) -> float:
        return math.inf if self.sigma2_fb == 0.0 else self.P_fb / self.sigma2_fb

    @property
    def dsnr(self) -> float:
        return self.snr_fb / self.snr

    @property
    def noiseless_feedback(self) -> bool:
        return self.sigma2_fb == 0.0

    @property
    def total_bits(self) -> int:
        return int(round(self.N * self.rate_bits_per_use))

    @property
    def aliasing_budget(self) -> float:
        """Effective p_m (the default splits pe_target evenly as pe_target / (2N))."""
        return self.pe_target / (2.0 * self.N) if self.p_m is None else self.p_m

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedParams:
    """Scheme constants computed once per configuration.

    ``gamma[k]`` and ``beta[k]`` belong to round k+1 (feedback of round k+1 and
    the update that produces the estimate of round k+2); ``sigma_n2[k]`` is the
    coupled-system error variance after round k+1.
    """

    lam: float
    d: float
    alpha: float
    gamma: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    sigma_n2: np.ndarray = field(repr=False)

    @property
    def snr_n(self) -> float:
        """Effective SNR after the last round, 1 / sigma_N^2."""
        return 1.0 / float(self.sigma_n2[-1])


def aliasing_lambda(p_m: float) -> float:
    """lambda = 3 / Q^-1(p_m / 2)^2, the variance margin that keeps aliasing at p_m per round."""
    return 3.0 / qfunc_inv(p_m / 2.0) ** 2


def derive_params(cfg: SystemConfig) -> DerivedParams:
    """Compute lambda, d, alpha and the per-round gamma, beta and sigma^2 sequences.

    With noiseless feedback the 1/(lambda snr_fb) and 1/(lambda dsnr) terms vanish
    and the recursion is the classic one, sigma_{n+1}^2 = sigma_n^2 / (1 + snr).

    Raises:
        ConfigError: If the feedback is noisy and dsnr <= 1.
        ErrorFloorError: If lambda * snr_fb <= 1.
    """
    lam = aliasing_lambda(cfg.aliasing_budget)
    snr = cfg.snr
    if cfg.noiseless_feedback:
        a = 0.0
        b = 0.0
    else:
        if cfg.dsnr <= 1.0:
            raise ConfigError(f"the feedback channel needs excess SNR (dsnr > 1), got dsnr={cfg.dsnr}")
        if lam * cfg.snr_fb <= 1.0:
            raise ErrorFloorError(
                f"error floor violated: lambda * snr_fb = {lam * cfg.snr_fb:.6g} <= 1 "
                f"(p_m={cfg.aliasing_budget:.3g} is below the minimal value supported)"
            )
        a = 1.0 / (lam * cfg.snr_fb)
        b = 1.0 / (lam * cfg.dsnr)

    d = math.sqrt(12.0 * cfg.P_fb)
    alpha = math.sqrt(cfg.P / (lam * cfg.P_fb))
    sigma = math.sqrt(cfg.sigma2)
    growth = 1.0 + snr * (1.0 - a) / (1.0 + b)

    sigma_n2 = np.empty(cfg.N)
    gamma = np.empty(cfg.N - 1)
    beta = np.empty(cfg.N - 1)
    sigma_n2[0] = 1.0 / snr
    for k in range(cfg.N - 1):
        gamma[k] = math.sqrt((lam * cfg.P_fb - cfg.sigma2_fb) / sigma_n2[k])
        beta[k] = math.sqrt(sigma_n2[k]) / sigma * math.sqrt(snr * (1.0 - a)) / (1.0 + snr)
        sigma_n2[k + 1] = sigma_n2[k] / growth
    return DerivedParams(lam=lam, d=d, alpha=alpha, gamma=gamma, beta=beta, sigma_n2=sigma_n2)
