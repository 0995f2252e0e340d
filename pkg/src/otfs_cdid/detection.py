"""Cross-domain iterative detection.

Both receivers alternate between a frequency-domain linear MMSE estimator
(the channel is well-conditioned there) and a symbol-wise a-posteriori
detector on the delay-Doppler grid (the constellation prior lives there),
carrying Gaussian beliefs across the unitary transforms in between.

Type-I hands the a-posteriori outputs of one domain to the other directly.
Type-II removes the incoming prior from each domain's output (extrinsic
combination, done on the frequency-domain vectors on both hops) before
crossing, which is what keeps its error state pinned to the matched-filter
floor instead of collapsing optimistically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import zpotri

from .channel import ChannelMatrices
from .core import (
    Belief,
    Constellation,
    Domain,
    OtfsParams,
    clamp_variance,
    mse,
    uniform_belief,
)
from .transforms import average_variance_transfer, dd_to_freq, freq_to_dd


class DetectorType(enum.Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"


# ---------------------------------------------------------------------------
# frequency-domain MMSE estimator
# ---------------------------------------------------------------------------


@dataclass
class FdeOutput:
    post_mean: np.ndarray   # complex, length MN
    post_var: np.ndarray    # real, length MN


def fde_mmse(
    q: np.ndarray,
    H: np.ndarray,
    prior: Belief,
    n0: float,
    gram: np.ndarray | None = None,
) -> FdeOutput:
    """Linear MMSE estimate of z from q = H z + w, w ~ CN(0, n0 I).

    Computes z_hat = z_bar + W (q - H z_bar) with
    W = C H^H (H C H^H + n0 I)^{-1}, C = diag(prior.var), and the posterior
    variances diag(C - W H C). Internally this is rearranged through the
    Gram matrix K = H^H H: with D = diag(sqrt(prior.var)),

        z_hat    = z_bar + D (D K D + n0 I)^{-1} D H^H (q - H z_bar)
        post_var = n0 * prior.var * diag((D K D + n0 I)^{-1})

    so one Hermitian Cholesky factorization per call covers both the mean
    update and all MN posterior variances, and K can be shared across the
    iterations of a frame via `gram`.
    """
    if prior.domain is not Domain.FREQ:
        raise ValueError(f"prior must live in the frequency domain, got {prior.domain}")
    q = np.asarray(q, dtype=np.complex128)
    mn = q.size
    if H.shape != (mn, mn) or prior.mean.shape != (mn,):
        raise ValueError(
            f"shape mismatch: q {q.shape}, H {H.shape}, prior {prior.mean.shape}"
        )
    if np.any(prior.var <= 0):
        raise ValueError("prior variances must be positive")
    if n0 < 0:
        raise ValueError(f"noise variance must be >= 0, got {n0}")
    if gram is None:
        gram = H.conj().T @ H

    d = np.sqrt(prior.var)
    a = (d[:, None] * gram) * d[None, :]
    a.flat[:: mn + 1] += n0
    try:
        c, low = cho_factor(a, lower=True, overwrite_a=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # singular only possible at n0 = 0
        raise np.linalg.LinAlgError(
            f"MMSE system not positive definite (n0={n0}); "
            "a singular channel with zero noise cannot be equalized"
        ) from exc

    resid = q - H @ prior.mean
    u = d * (H.conj().T @ resid)
    post_mean = prior.mean + d * cho_solve((c, low), u, check_finite=False)

    inv, info = zpotri(c, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError(f"triangular inversion failed (info={info})")
    post_var = n0 * prior.var * np.real(np.diagonal(inv))
    return FdeOutput(post_mean=post_mean, post_var=post_var)


# ---------------------------------------------------------------------------
# delay-Doppler symbol-wise APP detector
# ---------------------------------------------------------------------------


@dataclass
class DdDetOutput:
    post_mean: np.ndarray   # complex, length MN
    post_var: np.ndarray    # real, length MN
    hard: np.ndarray        # int constellation indices, length MN
    app: np.ndarray       # (MN, |constellation|), rows sum to 1


def dd_app_detect(prior: Belief, constellation: Constellation) -> DdDetOutput:
    """Per-symbol posterior over the constellation from a Gaussian belief.

    Pr[j] propto exp(-|X_j - mean[k]|^2 / var[k]), normalized per symbol
    (the flat constellation prior is absorbed by the normalization). Hard
    decisions take the most probable point, lowest index on ties.
    """
    if prior.domain is not Domain.DD:
        raise ValueError(f"prior must live in the delay-Doppler domain, got {prior.domain}")
    if np.any(prior.var <= 0):
        raise ValueError("prior variances must be positive")
    points = constellation.points
    d2 = np.abs(prior.mean[:, None] - points[None, :]) ** 2
    logw = -d2 / prior.var[:, None]
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    app = w / w.sum(axis=1, keepdims=True)
    post_mean = app @ points
    post_var = np.maximum(app @ np.abs(points) ** 2 - np.abs(post_mean) ** 2, 0.0)
    hard = np.argmax(app, axis=1)
    return DdDetOutput(post_mean=post_mean, post_var=post_var, hard=hard, app=app)


# ---------------------------------------------------------------------------
# extrinsic combination
# ---------------------------------------------------------------------------


def extrinsic_combine(post: Belief, prior: Belief, es: float) -> Belief:
    """Remove a Gaussian prior from a Gaussian posterior, entry by entry.

    1/var_ext = 1/var_post - 1/var_prior and the matching mean combination;
    where the posterior carries no information beyond the prior
    (1/var_post - 1/var_prior <= 0), the extrinsic variance saturates at the
    clamp ceiling and the extrinsic mean falls back to the posterior mean.
    """
    if post.domain is not prior.domain:
        raise ValueError(f"domain mismatch: {post.domain} vs {prior.domain}")
    if post.mean.shape != prior.mean.shape:
        raise ValueError("posterior/prior length mismatch")
    inv_diff = 1.0 / post.var - 1.0 / prior.var
    degenerate = inv_diff <= 0
    with np.errstate(divide="ignore", over="ignore"):
        var_ext = np.where(degenerate, np.inf, 1.0 / np.where(degenerate, 1.0, inv_diff))
    var_ext = clamp_variance(var_ext, es)
    mean_ext = var_ext * (post.mean / post.var - prior.mean / prior.var)
    mean_ext = np.where(degenerate, post.mean, mean_ext)
    return Belief(post.domain, mean_ext, var_ext)


# ---------------------------------------------------------------------------
# iteration records
# ---------------------------------------------------------------------------


@dataclass
class IterationRecord:
    """State of one cross-domain iteration, recorded before DD detection."""

    iteration: int          # 1-based
    eta_z: float            # mean frequency-domain prior variance
    eta_x: float            # mean delay-Doppler prior variance
    x_bar: np.ndarray       # DD prior mean handed to the APP detector
    hard: np.ndarray        # constellation indices decided this iteration
    mse_z: float | None = None   # vs. the true frequency symbols, if known
    mse_x: float | None = None   # vs. the true DD symbols, if known


@dataclass
class CdidResult:
    detector: DetectorType
    trace: list[IterationRecord]

    @property
    def hard(self) -> np.ndarray:
        return self.trace[-1].hard

    def hard_bits(self, constellation: Constellation) -> np.ndarray:
        return constellation.bits[self.hard]


# ---------------------------------------------------------------------------
# the two loops
# ---------------------------------------------------------------------------


def _truth_freq(truth: np.ndarray | None, params: OtfsParams) -> np.ndarray | None:
    return None if truth is None else dd_to_freq(truth, params)


def cdid_type1(
    q: np.ndarray,
    chan: ChannelMatrices,
    constellation: Constellation,
    params: OtfsParams,
    n_iters: int,
    truth: np.ndarray | None = None,
    stall_tol: float | None = None,
) -> CdidResult:
    """A-posteriori cross-domain iteration.

    Each pass equalizes in frequency with the current prior, carries the
    posterior (mean via the unitary transform, variance via its average) to
    the delay-Doppler grid, detects symbol-wise, and feeds the detection
    posterior straight back as the next frequency prior. `stall_tol`, if
    set, stops early once the frequency error state changes by less than
    that relative amount.
    """
    if params.MN != chan.params.MN:
        raise ValueError(
            f"params grid {params.M}x{params.N} does not match the channel "
            f"({chan.params.M}x{chan.params.N})"
        )
    es = constellation.Es
    prior = uniform_belief(Domain.FREQ, params.MN, es)
    z_true = _truth_freq(truth, params)
    trace: list[IterationRecord] = []
    for it in range(1, n_iters + 1):
        eta_z = float(prior.var.mean())
        fde = fde_mmse(q, chan.H, prior, params.N0, gram=chan.gram)
        x_bar = freq_to_dd(fde.post_mean, params)
        v_x = average_variance_transfer(clamp_variance(fde.post_var, es))
        det = dd_app_detect(Belief(Domain.DD, x_bar, v_x), constellation)
        trace.append(IterationRecord(
            iteration=it,
            eta_z=eta_z,
            eta_x=float(v_x[0]),
            x_bar=x_bar,
            hard=det.hard,
            mse_z=None if z_true is None else mse(prior.mean, z_true),
            mse_x=None if truth is None else mse(x_bar, truth),
        ))
        z_next = dd_to_freq(det.post_mean, params)
        v_next = average_variance_transfer(clamp_variance(det.post_var, es))
        prior = Belief(Domain.FREQ, z_next, v_next)
        if stall_tol is not None and abs(v_next[0] - eta_z) <= stall_tol * eta_z:
            break
    return CdidResult(detector=DetectorType.TYPE1, trace=trace)


def cdid_type2(
    q: np.ndarray,
    chan: ChannelMatrices,
    constellation: Constellation,
    params: OtfsParams,
    n_iters: int,
    truth: np.ndarray | None = None,
    stall_tol: float | None = None,
) -> CdidResult:
    """Extrinsic cross-domain iteration.

    The equalizer posterior has its own prior removed before crossing to the
    delay-Doppler grid, and the transformed detection posterior has that
    extrinsic message removed before it becomes the next frequency prior,
    so each domain only ever receives information it did not itself supply.
    """
    if params.MN != chan.params.MN:
        raise ValueError(
            f"params grid {params.M}x{params.N} does not match the channel "
            f"({chan.params.M}x{chan.params.N})"
        )
    es = constellation.Es
    prior = uniform_belief(Domain.FREQ, params.MN, es)
    z_true = _truth_freq(truth, params)
    trace: list[IterationRecord] = []
    for it in range(1, n_iters + 1):
        eta_z = float(prior.var.mean())
        fde = fde_mmse(q, chan.H, prior, params.N0, gram=chan.gram)
        post = Belief(Domain.FREQ, fde.post_mean, clamp_variance(fde.post_var, es))
        ext = extrinsic_combine(post, prior, es)
        x_bar = freq_to_dd(ext.mean, params)
        v_x = average_variance_transfer(ext.var)
        det = dd_app_detect(Belief(Domain.DD, x_bar, v_x), constellation)
        trace.append(IterationRecord(
            iteration=it,
            eta_z=eta_z,
            eta_x=float(v_x[0]),
            x_bar=x_bar,
            hard=det.hard,
            mse_z=None if z_true is None else mse(prior.mean, z_true),
            mse_x=None if truth is None else mse(x_bar, truth),
        ))
        z_dd = dd_to_freq(det.post_mean, params)
        v_dd = average_variance_transfer(clamp_variance(det.post_var, es))
        ext_back = extrinsic_combine(
            Belief(Domain.FREQ, z_dd, v_dd), Belief(Domain.FREQ, ext.mean, ext.var), es
        )
        prior = ext_back
        if stall_tol is not None and abs(float(prior.var.mean()) - eta_z) <= stall_tol * eta_z:
            break
    return CdidResult(detector=DetectorType.TYPE2, trace=trace)


_DETECTORS = {DetectorType.TYPE1: cdid_type1, DetectorType.TYPE2: cdid_type2}


def run_cdid(
    detector: DetectorType,
    q: np.ndarray,
    chan: ChannelMatrices,
    constellation: Constellation,
    params: OtfsParams,
    n_iters: int,
    truth: np.ndarray | None = None,
    stall_tol: float | None = None,
) -> CdidResult:
    return _DETECTORS[detector](q, chan, constellation, params, n_iters,
                                truth=truth, stall_tol=stall_tol)
