"""Grid transforms between the delay-Doppler, time, and frequency domains.

A delay-Doppler grid X (M delay rows, N Doppler columns) is vectorized
column-major: x[n * M + m] = X[m, n], i.e. the delay index runs fastest.
With F_N the unitary N-point DFT, the transmit vector is

    s = (F_N^H kron I_M) x

which is an inverse DFT across the Doppler axis of the grid, and the
frequency-domain view of a time vector is the full unitary MN-point DFT.
All maps here are unitary, so variance vectors are preserved in mean; the
cross-domain variance transfer below exploits exactly that.
"""

from __future__ import annotations

import numpy as np

from .core import OtfsParams


def _as_grid(vec: np.ndarray, params: OtfsParams) -> np.ndarray:
    """Column-major MN vector -> (M, N) grid view."""
    vec = np.asarray(vec)
    if vec.shape != (params.MN,):
        raise ValueError(f"expected length {params.MN}, got shape {vec.shape}")
    return vec.reshape(params.N, params.M).T


def _as_vec(grid: np.ndarray) -> np.ndarray:
    """(M, N) grid -> column-major MN vector."""
    return grid.T.reshape(-1)


# ---------------------------------------------------------------------------
# delay-Doppler <-> time
# ---------------------------------------------------------------------------


def idzt(x: np.ndarray, params: OtfsParams) -> np.ndarray:
    """Delay-Doppler symbols -> time samples, s = (F_N^H kron I_M) x."""
    grid = _as_grid(x, params)
    return _as_vec(np.fft.ifft(grid, axis=1, norm="ortho"))


def dzt(s: np.ndarray, params: OtfsParams) -> np.ndarray:
    """Time samples -> delay-Doppler symbols, x = (F_N kron I_M) s."""
    grid = _as_grid(s, params)
    return _as_vec(np.fft.fft(grid, axis=1, norm="ortho"))


# ---------------------------------------------------------------------------
# time <-> frequency
# ---------------------------------------------------------------------------


def time_to_freq(s: np.ndarray) -> np.ndarray:
    """Unitary MN-point DFT, z = F_MN s."""
    return np.fft.fft(np.asarray(s), norm="ortho")


def freq_to_time(z: np.ndarray) -> np.ndarray:
    """Unitary MN-point inverse DFT, s = F_MN^H z."""
    return np.fft.ifft(np.asarray(z), norm="ortho")


# ---------------------------------------------------------------------------
# frequency <-> delay-Doppler (compositions used by the detectors)
# ---------------------------------------------------------------------------


def freq_to_dd(z: np.ndarray, params: OtfsParams) -> np.ndarray:
    """x = (F_N kron I_M) F_MN^H z."""
    return dzt(freq_to_time(z), params)


def dd_to_freq(x: np.ndarray, params: OtfsParams) -> np.ndarray:
    """z = F_MN (F_N^H kron I_M) x."""
    return time_to_freq(idzt(x, params))


# ---------------------------------------------------------------------------
# cyclic prefix
# ---------------------------------------------------------------------------


def add_cp(s: np.ndarray, params: OtfsParams) -> np.ndarray:
    """Prepend the last L_cp samples of the frame."""
    s = np.asarray(s)
    if s.shape != (params.MN,):
        raise ValueError(f"expected length {params.MN}, got shape {s.shape}")
    if params.L_cp == 0:
        return s.copy()
    return np.concatenate([s[-params.L_cp:], s])


def remove_cp(r: np.ndarray, params: OtfsParams) -> np.ndarray:
    """Drop the first L_cp samples of a received extended frame."""
    r = np.asarray(r)
    if r.shape != (params.frame_len,):
        raise ValueError(f"expected length {params.frame_len}, got shape {r.shape}")
    return r[params.L_cp:].copy()


# ---------------------------------------------------------------------------
# variance transfer
# ---------------------------------------------------------------------------


def average_variance_transfer(var: np.ndarray) -> np.ndarray:
    """Carry a variance vector across a unitary transform as its mean.

    The exact image of a diagonal covariance under a unitary conjugation is
    not diagonal; its diagonal averages to the same mean, and that scalar is
    what the iterative loops propagate. Output = mean(var) in every entry,
    so the vector mean is preserved exactly.
    """
    var = np.asarray(var, dtype=np.float64)
    if var.ndim != 1:
        raise ValueError(f"variance vector must be 1-D, got shape {var.shape}")
    if np.any(var < 0):
        raise ValueError("variance entries must be >= 0")
    return np.full(var.shape, var.mean())
