"""PAM constellation, Gray labeling, minimum-distance decoding and the uncoded PAM formulas."""

import math

import numpy as np

from skfeedback.core.numerics import qfunc, qfunc_inv, to_db
from skfeedback.errors import ConfigError, DomainError

MAX_RATE_BITS = 40
MAX_MATERIALIZED_LEVELS = 2 ** 20


def gray_code(index: int | np.ndarray) -> int | np.ndarray:
    """Reflected binary Gray code of a position index."""
    arr = np.asarray(index, dtype=np.int64)
    out = arr ^ (arr >> 1)
    return int(out) if np.ndim(index) == 0 else out


def gray_inverse(label: int | np.ndarray) -> int | np.ndarray:
    """Position index whose Gray code is ``label`` (prefix XOR)."""
    arr = np.asarray(label, dtype=np.int64)
    out = arr.copy()
    shift = 1
    while shift < 64:
        out ^= out >> shift
        shift <<= 1
    return int(out) if np.ndim(label) == 0 else out


class PamConstellation:
    """Unit mean-square M-PAM constellation {+-eta, +-3 eta, ..., +-(M-1) eta}.

    Points are generated from their position index on demand, so constellations
    carrying up to 40 bits never materialize their full point list.
    """

    def __init__(self, rate_bits: int):
        """Initialize the constellation.

        Args:
            rate_bits (int): Bits per symbol, 1 <= rate_bits <= 40.

        Raises:
            ConfigError: If rate_bits is not an integer in range.
        """
        if isinstance(rate_bits, bool) or not isinstance(rate_bits, (int, np.integer)):
            raise ConfigError(f"rate_bits must be an integer, got {rate_bits!r}")
        if not 1 <= rate_bits <= MAX_RATE_BITS:
            raise ConfigError(f"rate_bits must lie in [1, {MAX_RATE_BITS}], got {rate_bits}")
        self.__rate_bits = int(rate_bits)
        self.__levels = 1 << self.__rate_bits
        self.__eta = math.sqrt(3.0 / (float(self.__levels) ** 2 - 1.0))

    @property
    def rate_bits(self) -> int:
        return self.__rate_bits

    @property
    def levels(self) -> int:
        return self.__levels

    @property
    def eta(self) -> float:
        return self.__eta

    @property
    def min_distance(self) -> float:
        return 2.0 * self.__eta

    @property
    def points(self) -> np.ndarray:
        """All points in increasing order.

        Raises:
            DomainError: If the constellation is too large to materialize.
        """
        if self.__levels > MAX_MATERIALIZED_LEVELS:
            raise DomainError(f"refusing to materialize {self.__levels} points; use point(index)")
        return self.point(np.arange(self.__levels, dtype=np.int64))

    def point(self, index: int | np.ndarray) -> float | np.ndarray:
        """Amplitude of the point(s) at the given position index."""
        arr = np.asarray(index, dtype=np.int64)
        if np.any(arr < 0) or np.any(arr >= self.__levels):
            raise DomainError(f"position index out of range [0, {self.__levels})")
        # 2i - (M-1) is an exact integer in float64 for M <= 2**40
        out = self.__eta * (2.0 * arr.astype(float) - float(self.__levels - 1))
        return float(out) if np.ndim(index) == 0 else out

    def __repr__(self) -> str:
        return f"PamConstellation(rate_bits={self.__rate_bits}, levels={self.__levels}, eta={self.__eta!r})"


def build_constellation(rate_bits: int) -> PamConstellation:
    return PamConstellation(rate_bits)


def gray_encode(w: int | np.ndarray, c: PamConstellation) -> float | np.ndarray:
    """Map message(s) to the point whose position has Gray label ``w``.

    Adjacent points therefore carry labels at Hamming distance one.

    Raises:
        DomainError: If a message index is outside [0, M).
    """
    arr = np.asarray(w, dtype=np.int64)
    if np.any(arr < 0) or np.any(arr >= c.levels):
        raise DomainError(f"message index out of range [0, {c.levels})")
    out = c.point(gray_inverse(arr))
    return float(out) if np.ndim(w) == 0 else out


def decode_min_distance(theta_hat: float | np.ndarray, c: PamConstellation) -> int | np.ndarray:
    """Nearest-point decoder returning the message label(s).

    Ties go to the lower-amplitude point and inputs beyond the outermost points
    clamp to them.

    Args:
        theta_hat (float | np.ndarray): Finite estimate(s) of the transmitted point.
        c (PamConstellation): The constellation.

    Returns:
        int | np.ndarray: Decoded message index (or indices).
    """
    arr = np.asarray(theta_hat, dtype=float)
    top = float(c.levels - 1)
    u = 0.5 * (arr / c.eta + top)
    # ceil(u - 1/2) sends exact midpoints to the lower index
    position = np.clip(np.ceil(u - 0.5), 0.0, top).astype(np.int64)
    out = gray_code(position)
    return int(out) if np.ndim(theta_hat) == 0 else out


def _pam_argument(snr: float, rate_bits_total: float) -> float:
    if not snr > 0.0:
        raise DomainError(f"snr must be positive, got {snr}")
    if not rate_bits_total > 0.0:
        raise DomainError(f"rate_bits_total must be positive, got {rate_bits_total}")
    return math.sqrt(3.0 * snr / math.expm1(2.0 * rate_bits_total * math.log(2.0)))


def pam_symbol_error_bound(snr: float, rate_bits_total: float) -> float:
    """Symbol error bound 2 Q(sqrt(3 snr / (2^(2R) - 1))) of uncoded PAM."""
    return 2.0 * qfunc(_pam_argument(snr, rate_bits_total))


def pam_symbol_error_exact(snr: float, rate_bits: int) -> float:
    """Exact symbol error probability 2 (M-1)/M Q(...) (interior and edge points averaged)."""
    levels = 2.0 ** rate_bits
    return 2.0 * (levels - 1.0) / levels * qfunc(_pam_argument(snr, rate_bits))


def bit_error_bound(snr: float, rate_bits_total: float) -> float:
    """Gray-labeled bit error approximation (2/R) Q(x) + 2 Q(3x)."""
    x = _pam_argument(snr, rate_bits_total)
    return 2.0 / rate_bits_total * qfunc(x) + 2.0 * qfunc(3.0 * x)


def gamma0(pe: float) -> float:
    """Capacity gap of uncoded PAM in dB: 10 log10((1/3) Q^-1(pe/2)^2).

    Raises:
        DomainError: If pe is outside (0, 1).
    """
    if not 0.0 < pe < 1.0:
        raise DomainError(f"pe must lie in (0, 1), got {pe}")
    return to_db(qfunc_inv(pe / 2.0) ** 2 / 3.0)
