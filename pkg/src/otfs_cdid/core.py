"""Shared types for the OTFS cross-domain iterative receiver.

Everything downstream (transforms, channel, detection, analysis, harness)
works on the flat length-MN vectors defined here: a delay-Doppler grid is
vectorized column-major (delay index runs fastest), and soft information is
carried as a Belief = (domain tag, mean vector, per-entry variance vector).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Variance clamps applied to every variance vector exchanged between stages.
# The ceiling scales with the constellation energy: VAR_MAX_FACTOR * Es.
VAR_MIN = 1e-12
VAR_MAX_FACTOR = 1e6


class Domain(enum.Enum):
    """Which signal domain a vector lives in."""

    TIME = "time"
    FREQ = "freq"
    DD = "dd"  # delay-Doppler


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


def clamp_variance(var: np.ndarray | float, es: float) -> np.ndarray | float:
    """Clip variances into [VAR_MIN, VAR_MAX_FACTOR * es]."""
    return np.clip(var, VAR_MIN, VAR_MAX_FACTOR * es)


# ---------------------------------------------------------------------------
# system parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OtfsParams:
    """Grid geometry and noise level for one OTFS frame.

    The symbol period is normalized to 1, so delays are measured in samples
    and Doppler shifts in cycles per frame (index k means k / (M*N) cycles
    per sample).
    """

    M: int            # delay bins per frame
    N: int            # Doppler bins per frame
    L_cp: int         # cyclic prefix length, samples
    Es: float = 1.0   # mean constellation energy
    N0: float = 1.0   # complex noise variance (0 disables noise)

    def __post_init__(self) -> None:
        if self.M < 1 or self.N < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.M}x{self.N}")
        if self.L_cp < 0:
            raise ValueError(f"L_cp must be >= 0, got {self.L_cp}")
        if self.L_cp >= self.M * self.N:
            raise ValueError(
                f"L_cp must be shorter than the frame ({self.M * self.N}), got {self.L_cp}"
            )
        if self.Es <= 0:
            raise ValueError(f"Es must be positive, got {self.Es}")
        if self.N0 < 0:
            raise ValueError(f"N0 must be >= 0, got {self.N0}")

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def frame_len(self) -> int:
        """Samples per transmitted frame including the cyclic prefix."""
        return self.M * self.N + self.L_cp

    @property
    def var_max(self) -> float:
        return VAR_MAX_FACTOR * self.Es


# ---------------------------------------------------------------------------
# constellation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constellation:
    """A unit-mean-energy symbol alphabet with Gray bit labels."""

    kind: str
    points: np.ndarray          # complex, shape (size,)
    labels: tuple[str, ...]     # bit string per point, e.g. "01"
    Es: float

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return len(self.labels[0])

    @property
    def bits(self) -> np.ndarray:
        """Bit labels as a (size, bits_per_symbol) uint8 array."""
        return np.array([[int(c) for c in lab] for lab in self.labels], dtype=np.uint8)


def make_constellation(kind: str = "qpsk", es: float = 1.0) -> Constellation:
    """Build a constellation scaled to mean energy `es`.

    QPSK maps bits (b0, b1) -> ((1 - 2*b0) + 1j*(1 - 2*b1)) * sqrt(es / 2),
    which is Gray: neighbouring points differ in exactly one bit.
    """
    if es <= 0:
        raise ValueError(f"es must be positive, got {es}")
    if kind.lower() != "qpsk":
        raise ValueError(f"unsupported constellation kind: {kind!r}")
    amp = np.sqrt(es / 2.0)
    labels = ("00", "01", "10", "11")
    points = np.array(
        [(1 - 2 * int(l[0])) + 1j * (1 - 2 * int(l[1])) for l in labels],
        dtype=np.complex128,
    ) * amp
    return Constellation(kind="qpsk", points=points, labels=labels, Es=float(es))


def random_symbols(
    constellation: Constellation, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw `count` uniform symbols; returns (symbols, bits).

    bits has shape (count, bits_per_symbol) and matches the Gray labels of
    the drawn points.
    """
    idx = rng.integers(0, constellation.size, size=count)
    return constellation.points[idx], constellation.bits[idx]


# ---------------------------------------------------------------------------
# soft information
# ---------------------------------------------------------------------------


@dataclass
class Belief:
    """Gaussian soft information about a length-MN vector in one domain."""

    domain: Domain
    mean: np.ndarray   # complex
    var: np.ndarray    # real, per-entry variance

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.complex128)
        self.var = np.asarray(self.var, dtype=np.float64)
        if self.mean.shape != self.var.shape:
            raise ValueError(
                f"mean/var length mismatch: {self.mean.shape} vs {self.var.shape}"
            )
        if self.mean.ndim != 1:
            raise ValueError(f"belief vectors must be 1-D, got shape {self.mean.shape}")

    def clamped(self, es: float) -> "Belief":
        return Belief(self.domain, self.mean, clamp_variance(self.var, es))


def uniform_belief(domain: Domain, mn: int, es: float) -> Belief:
    """The uninformative starting point: zero mean, variance Es everywhere."""
    return Belief(domain, np.zeros(mn, dtype=np.complex128), np.full(mn, float(es)))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared error (1/n) * sum |a - b|^2."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b) ** 2))
