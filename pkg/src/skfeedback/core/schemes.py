"""Trial runners for uncoded PAM, noiseless-feedback S-K, the modulo scheme and its coupled twin.

Runners are driven by externally supplied noise and dither and execute a batch of
independent trials at once: messages have shape (B,), forward noise (B, N),
feedback noise and dither (B, N-1). A single trial may be passed with the batch
axis omitted.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from skfeedback.core.numerics import mod_reduce
from skfeedback.core.pam import PamConstellation, build_constellation, decode_min_distance, gray_encode
from skfeedback.core.system import DerivedParams, SystemConfig, derive_params
from skfeedback.errors import UsageError


@dataclass
class TrialRecord:
    """Protocol outcome of a batch of trials.

    Per-round arrays have the trial batch on axis 0. Round n (1-based) lives in
    column n-1.
    """

    w_true: np.ndarray
    w_decoded: np.ndarray
    eps: np.ndarray
    eps_tilde: np.ndarray
    aliasing: np.ndarray
    decode_error: np.ndarray
    tx_power_fwd: np.ndarray
    tx_power_fb: np.ndarray
    bit_errors: np.ndarray

    @property
    def trials(self) -> int:
        return int(self.w_true.shape[0])

    @property
    def first_aliasing_round(self) -> np.ndarray:
        """1-based round of the first aliasing event per trial, 0 when none occurred."""
        if self.aliasing.shape[1] == 0:
            return np.zeros(self.trials, dtype=np.int64)
        hit = self.aliasing.any(axis=1)
        return np.where(hit, np.argmax(self.aliasing, axis=1) + 1, 0).astype(np.int64)


class SchemeFactory:
    """Factory for trial runners (classes that inherit TrialRunner)."""
    __registry = {}

    @classmethod
    def register(cls, name: str):
        """Decorator to register a trial runner class under a scheme name."""
        def decorator(runner_class):
            cls.__registry[name] = runner_class
            return runner_class
        return decorator

    @classmethod
    def create(cls, name: str, **kwargs) -> "TrialRunner":
        """Create the runner registered as ``name``.

        Args:
            name (str): Scheme name.
            **kwargs: Passed to the runner constructor (``cfg`` and optionally ``params``).

        Raises:
            UsageError: If no runner is registered under ``name``.
        """
        if name not in cls.__registry:
            raise UsageError(f"Scheme '{name}' is not registered. Available schemes: {list(cls.__registry.keys())}")
        return cls.__registry[name](**kwargs)

    @classmethod
    def names(cls) -> list[str]:
        return list(cls.__registry.keys())


class TrialRunner(ABC):
    """Base class of every scheme: owns the configuration, constants and constellation."""

    def __init__(self, cfg: SystemConfig, params: DerivedParams | None = None):
        self._cfg = cfg
        self._params = params
        self._constellation = build_constellation(self.message_bits)

    @property
    def cfg(self) -> SystemConfig:
        return self._cfg

    @property
    def params(self) -> DerivedParams | None:
        return self._params

    @property
    def constellation(self) -> PamConstellation:
        return self._constellation

    @property
    def message_bits(self) -> int:
        return self._cfg.total_bits

    @property
    def rounds(self) -> int:
        return self._cfg.N

    @abstractmethod
    def run(self, w, noise_fwd, noise_fb=None, dither=None) -> TrialRecord:
        raise NotImplementedError("run method must be implemented by subclasses.")

    def _prepare(self, w, noise_fwd, noise_fb, dither, needs_fb: bool, needs_dither: bool):
        rounds = self.rounds
        w = np.asarray(w, dtype=np.int64)
        single = w.ndim == 0
        w = np.atleast_1d(w)
        batch = w.shape[0]

        def shaped(values, length: int, label: str) -> np.ndarray:
            arr = np.asarray(values, dtype=float)
            if single and arr.ndim == 1:
                arr = arr[np.newaxis, :]
            if arr.ndim == 1 and length == 1 and arr.shape[0] == batch:
                arr = arr[:, np.newaxis]
            if arr.shape != (batch, length):
                raise UsageError(f"{label} must have shape ({batch}, {length}), got {arr.shape}")
            return arr

        noise_fwd = shaped(noise_fwd, rounds, "noise_fwd")
        if needs_fb:
            if noise_fb is None:
                raise UsageError("feedback noise is required by this scheme")
            noise_fb = shaped(noise_fb, rounds - 1, "noise_fb")
        if needs_dither:
            if dither is None:
                raise UsageError("dither is required by this scheme")
            dither = shaped(dither, rounds - 1, "dither")
            half = 0.5 * self._params.d
            if np.any(dither < -half) or np.any(dither >= half):
                raise UsageError(f"dither values must lie in [-d/2, d/2) with d={self._params.d}")
        return w, noise_fwd, noise_fb, dither

    def _first_round(self, w: np.ndarray, noise_fwd: np.ndarray):
        sqrt_p = np.sqrt(self._cfg.P)
        theta = gray_encode(w, self._constellation)
        x1 = sqrt_p * theta
        # Y_1 / sqrt(P) written so that Z_1 = 0 gives Theta^ = Theta exactly
        theta_hat = theta + noise_fwd[:, 0] / sqrt_p
        return theta, x1, theta_hat

    def _finish(self, w, theta, theta_hat, eps, eps_tilde, aliasing, tx_fwd, tx_fb) -> TrialRecord:
        w_decoded = decode_min_distance(theta_hat, self._constellation)
        return TrialRecord(
            w_true=w,
            w_decoded=w_decoded,
            eps=eps,
            eps_tilde=eps_tilde,
            aliasing=aliasing,
            decode_error=w_decoded != w,
            tx_power_fwd=tx_fwd,
            tx_power_fb=tx_fb,
            bit_errors=np.bitwise_count(w ^ w_decoded).astype(np.int64),
        )


class _IterativeRunner(TrialRunner):
    """Shared forward loop of the interactive schemes.

    Subclasses provide the feedback step, which returns (X~_n, eps~_n, aliasing_n)
    and the forward scaling applied to eps~_n.
    """

    uses_dither = False

    def __init__(self, cfg: SystemConfig, params: DerivedParams | None = None):
        super().__init__(cfg, params if params is not None else derive_params(cfg))

    @abstractmethod
    def _feedback(self, n: int, theta: np.ndarray, theta_hat: np.ndarray, eps_n: np.ndarray, z_fb, v):
        raise NotImplementedError("_feedback method must be implemented by subclasses.")

    @abstractmethod
    def _forward_gain(self, n: int) -> float:
        raise NotImplementedError("_forward_gain method must be implemented by subclasses.")

    def _needs_feedback_noise(self) -> bool:
        return True

    def run(self, w, noise_fwd, noise_fb=None, dither=None) -> TrialRecord:
        w, noise_fwd, noise_fb, dither = self._prepare(
            w, noise_fwd, noise_fb, dither, self._needs_feedback_noise(), self.uses_dither
        )
        batch, rounds = noise_fwd.shape
        theta, x1, theta_hat = self._first_round(w, noise_fwd)

        eps = np.empty((batch, rounds))
        eps_tilde = np.empty((batch, rounds - 1))
        aliasing = np.zeros((batch, rounds - 1), dtype=bool)
        tx_fwd = np.empty((batch, rounds))
        tx_fb = np.empty((batch, rounds - 1))
        eps[:, 0] = theta_hat - theta
        tx_fwd[:, 0] = x1 * x1

        for n in range(rounds - 1):
            z_fb = None if noise_fb is None else noise_fb[:, n]
            v = None if dither is None else dither[:, n]
            x_fb, e_tilde, alias = self._feedback(n, theta, theta_hat, eps[:, n], z_fb, v)
            x_next = self._forward_gain(n) * e_tilde
            y_next = x_next + noise_fwd[:, n + 1]
            theta_hat = theta_hat - self._params.beta[n] * y_next
            eps[:, n + 1] = theta_hat - theta
            eps_tilde[:, n] = e_tilde
            aliasing[:, n] = alias
            tx_fb[:, n] = x_fb * x_fb
            tx_fwd[:, n + 1] = x_next * x_next

        return self._finish(w, theta, theta_hat, eps, eps_tilde, aliasing, tx_fwd, tx_fb)


@SchemeFactory.register("uncoded")
class UncodedRunner(TrialRunner):
    """Single-shot PAM carrying R bits in one channel use."""

    def __init__(self, cfg: SystemConfig, params: DerivedParams | None = None):
        rate = cfg.rate_bits_per_use
        if abs(rate - round(rate)) > 1e-9:
            raise UsageError(f"uncoded PAM needs an integer rate, got R={rate}")
        super().__init__(cfg, params)

    @property
    def message_bits(self) -> int:
        return int(round(self._cfg.rate_bits_per_use))

    @property
    def rounds(self) -> int:
        return 1

    def run(self, w, noise_fwd, noise_fb=None, dither=None) -> TrialRecord:
        noise = np.asarray(noise_fwd, dtype=float)
        if np.ndim(w) == 0:
            noise = np.atleast_1d(noise)[:1]
        elif noise.ndim == 2:
            noise = noise[:, :1]
        w, noise, _, _ = self._prepare(w, noise, None, None, False, False)
        batch = w.shape[0]
        theta, x1, theta_hat = self._first_round(w, noise)
        return self._finish(
            w, theta, theta_hat,
            eps=(theta_hat - theta)[:, np.newaxis],
            eps_tilde=np.empty((batch, 0)),
            aliasing=np.zeros((batch, 0), dtype=bool),
            tx_fwd=(x1 * x1)[:, np.newaxis],
            tx_fb=np.empty((batch, 0)),
        )


@SchemeFactory.register("sk")
class SchalkwijkKailathRunner(_IterativeRunner):
    """Noiseless-feedback S-K: Terminal B feeds back its estimate unscaled."""

    def __init__(self, cfg: SystemConfig, params: DerivedParams | None = None):
        if not cfg.noiseless_feedback:
            raise UsageError("the S-K baseline requires noiseless feedback (sigma2_fb = 0)")
        super().__init__(cfg, params)
        self._sqrt_p = np.sqrt(cfg.P)

    def _needs_feedback_noise(self) -> bool:
        return False

    def _feedback(self, n, theta, theta_hat, eps_n, z_fb, v):
        x_fb = theta_hat
        e = x_fb - theta
        return x_fb, e, np.zeros(e.shape, dtype=bool)

    def _forward_gain(self, n: int) -> float:
        return self._sqrt_p / np.sqrt(self._params.sigma_n2[n])


@SchemeFactory.register("proposed")
class ModuloRunner(_IterativeRunner):
    """Modulo-dithered active feedback over a noisy channel.

    Terminal B sends X~_n = mod(gamma_n Theta^_n + V_n); Terminal A removes its
    own gamma_n Theta and V_n and reduces again, which leaves gamma_n eps_n + Z~_n
    shifted by an integer multiple of d. The shift is applied as a correction to
    t = gamma_n eps_n + Z~_n only when t leaves [-d/2, d/2).
    """

    uses_dither = True

    def _feedback(self, n, theta, theta_hat, eps_n, z_fb, v):
        gamma = self._params.gamma[n]
        d = self._params.d
        x_fb = mod_reduce(gamma * theta_hat + v, d)
        t = gamma * eps_n + z_fb
        alias = (t < -0.5 * d) | (t >= 0.5 * d)
        e = np.where(alias, mod_reduce(t, d), t)
        return x_fb, e, alias

    def _forward_gain(self, n: int) -> float:
        return self._params.alpha

    def receive_feedback(self, n: int, theta: np.ndarray, x_fb: np.ndarray, z_fb: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Terminal A's literal reduction mod(Y~_n - gamma_n Theta - V_n) for round n (0-based)."""
        return mod_reduce(x_fb + z_fb - self._params.gamma[n] * theta - v, self._params.d)


@SchemeFactory.register("coupled")
class CoupledRunner(_IterativeRunner):
    """The modulo scheme with both reductions removed (unbounded feedback power).

    The dither cancels identically, so it is not an input.
    """

    def _feedback(self, n, theta, theta_hat, eps_n, z_fb, v):
        gamma = self._params.gamma[n]
        d = self._params.d
        x_fb = gamma * theta_hat
        t = gamma * eps_n + z_fb
        alias = (t < -0.5 * d) | (t >= 0.5 * d)
        return x_fb, t, alias

    def _forward_gain(self, n: int) -> float:
        return self._params.alpha


def run_trial_proposed(cfg: SystemConfig, params: DerivedParams, w, noise_fwd, noise_fb, dither) -> TrialRecord:
    return ModuloRunner(cfg, params).run(w, noise_fwd, noise_fb, dither)


def run_trial_coupled(cfg: SystemConfig, params: DerivedParams, w, noise_fwd, noise_fb) -> TrialRecord:
    return CoupledRunner(cfg, params).run(w, noise_fwd, noise_fb)


def run_trial_sk(cfg: SystemConfig, params: DerivedParams, w, noise_fwd) -> TrialRecord:
    return SchalkwijkKailathRunner(cfg, params).run(w, noise_fwd)


def run_trial_uncoded(cfg: SystemConfig, w, z1) -> TrialRecord:
    """Uncoded PAM baseline; N is treated as 1 and only z1 is used."""
    return UncodedRunner(cfg).run(w, z1)
