"""Time-varying multipath channel with fractional delay/Doppler support.

Each propagation path has a complex gain h, a delay of l samples (possibly
fractional) and a Doppler shift of k cycles per frame. With transmit and
receive pulse shaping by unit-energy rectangles of one sample, the sampled
cross-ambiguity function has a closed form, and each path contributes a
matrix with at most two nonzero diagonals: the sample-domain entry at row m,
column n is

    g[m, n] = h * exp(2j*pi*n*k/(MN)) * conj(ambiguity_rect((n - m) + l, k/MN))

which vanishes unless |(n - m) + l| < 1. The effective frame-level channel
absorbs the cyclic prefix (prepend-last-L / drop-first-L), and its unitary
frequency-domain conjugation is what the equalizer works with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import OtfsParams


@dataclass(frozen=True)
class Path:
    """One propagation path: complex gain, delay in samples, Doppler index."""

    h: complex      # complex gain
    l: float        # delay, samples (>= 0, fractional allowed)
    k: float        # Doppler, cycles per frame (fractional allowed)

    def __post_init__(self) -> None:
        if self.l < 0:
            raise ValueError(f"path delay must be >= 0, got {self.l}")


def ambiguity_rect(tau: float, nu: float) -> complex:
    """Cross-ambiguity of two unit-energy rectangular pulses of width 1.

    amb(tau, nu) = integral p(t) p*(t - tau) exp(-2j*pi*nu*(t - tau)) dt
    over the overlap of the two pulses. Zero for |tau| >= 1; at nu = 0 it is
    the triangle 1 - |tau|.
    """
    if abs(tau) >= 1.0:
        return 0.0 + 0.0j
    a = max(0.0, tau)        # overlap start
    b = min(1.0, 1.0 + tau)  # overlap end
    width = b - a
    centre = 0.5 * (a + b) - tau
    # exact integral: width * sinc(nu * width) * exp(-2j*pi*nu*centre)
    return width * np.sinc(nu * width) * np.exp(-2j * np.pi * nu * centre)


def _band_offsets(l: float) -> list[int]:
    """Column-minus-row offsets d with |d + l| < 1 (one for integer l)."""
    lo = -math.ceil(l)
    hi = -math.floor(l)
    return [d for d in sorted({lo, hi}) if abs(d + l) < 1.0]


def _path_bands(path: Path, params: OtfsParams, size: int) -> list[tuple[int, np.ndarray]]:
    """Nonzero diagonals of one path's size x size matrix.

    Returns (offset d, column profile c) pairs where the matrix entry at
    (m, n = m + d) equals c[n]; c absorbs the gain, the Doppler phase ramp
    over the column (input-time) index, and the ambiguity weight.
    """
    nu = path.k / params.MN
    n_idx = np.arange(size)
    ramp = np.exp(2j * np.pi * n_idx * nu)
    bands = []
    for d in _band_offsets(path.l):
        weight = path.h * np.conj(ambiguity_rect(d + path.l, nu))
        bands.append((d, weight * ramp))
    return bands


def build_path_matrix(path: Path, params: OtfsParams) -> np.ndarray:
    """Dense (MN + L_cp) x (MN + L_cp) matrix of a single path."""
    size = params.frame_len
    g = np.zeros((size, size), dtype=np.complex128)
    for d, profile in _path_bands(path, params, size):
        m = np.arange(max(0, -d), min(size, size - d))
        g[m, m + d] = profile[m + d]
    return g


class ChannelMatrices:
    """Frozen per-realization channel forms shared by detection and analysis.

    G is the MN x MN sample-domain channel after cyclic-prefix absorption,
    H its unitary DFT conjugation, and `gram` = H^H H (one matrix product,
    reused by every equalizer iteration). `lam` (eigenvalues of H H^H in
    descending order) is computed on first use; only the analysis side needs
    it. Treat instances as immutable.
    """

    def __init__(self, G: np.ndarray, H: np.ndarray, params: OtfsParams,
                 bands: list[tuple[int, np.ndarray]]):
        self.G = G
        self.H = H
        self.params = params
        self._bands = bands

    @cached_property
    def gram(self) -> np.ndarray:
        return self.H.conj().T @ self.H

    @cached_property
    def lam(self) -> np.ndarray:
        """Eigenvalues of H H^H, real, sorted descending.

        H^H H and H H^H share their spectrum, so the cached Gram matrix is
        reused; tiny negative rounding is clipped to zero.
        """
        vals = np.linalg.eigvalsh(self.gram)
        return np.maximum(vals[::-1], 0.0)


def build_effective_channels(paths: list[Path], params: OtfsParams) -> ChannelMatrices:
    """Sum the path matrices and absorb the cyclic prefix.

    The CP-extended sum S (frame_len x frame_len) is reduced to the MN x MN
    frame channel by dropping the first L_cp rows and folding the first L_cp
    columns onto the last L_cp ones (the prefix copies the frame tail).
    """
    if not paths:
        raise ValueError("at least one path is required")
    for i, p in enumerate(paths):
        if math.ceil(p.l) > params.L_cp:
            raise ValueError(
                f"path {i} delay {p.l} exceeds the cyclic prefix (L_cp={params.L_cp})"
            )
    size = params.frame_len
    L = params.L_cp
    mn = params.MN
    s_full = np.zeros((size, size), dtype=np.complex128)
    all_bands: list[tuple[int, np.ndarray]] = []
    for p in paths:
        for d, profile in _path_bands(p, params, size):
            m = np.arange(max(0, -d), min(size, size - d))
            s_full[m, m + d] += profile[m + d]
            all_bands.append((d, profile))
    G = s_full[L:, L:].copy()
    if L > 0:
        G[:, mn - L:] += s_full[L:, :L]
    # H = F G F^H: DFT down the columns, inverse DFT along the rows
    H = np.fft.fft(np.fft.ifft(G, axis=1, norm="ortho"), axis=0, norm="ortho")
    return ChannelMatrices(G=G, H=H, params=params, bands=all_bands)


def apply_channel(s: np.ndarray, chan: ChannelMatrices) -> np.ndarray:
    """Pass one frame through the channel: CP add, banded filter, CP drop.

    Equals G @ s but runs in O(MN * paths) using the stored diagonals.
    """
    params = chan.params
    s = np.asarray(s)
    if s.shape != (params.MN,):
        raise ValueError(f"expected length {params.MN}, got shape {s.shape}")
    L = params.L_cp
    size = params.frame_len
    s_ext = np.concatenate([s[params.MN - L:], s]) if L > 0 else s
    out = np.zeros(size, dtype=np.complex128)
    for d, profile in chan._bands:
        m_lo = max(0, -d)
        m_hi = min(size, size - d)
        out[m_lo:m_hi] += profile[m_lo + d:m_hi + d] * s_ext[m_lo + d:m_hi + d]
    return out[L:]


def add_awgn(r: np.ndarray, n0: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise of total variance n0 per sample."""
    r = np.asarray(r, dtype=np.complex128)
    if n0 < 0:
        raise ValueError(f"noise variance must be >= 0, got {n0}")
    if n0 == 0:
        return r.copy()
    scale = np.sqrt(n0 / 2.0)
    return r + scale * (rng.standard_normal(r.shape) + 1j * rng.standard_normal(r.shape))
