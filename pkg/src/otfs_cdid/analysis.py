"""State evolution and bounds for the cross-domain receivers.

The per-iteration quality of either loop is summarized by two scalar error
states: eta_z (mean frequency-domain prior variance) and eta_x (mean
delay-Doppler prior variance). The frequency half-step has a closed form in
the channel eigenvalues; the delay-Doppler half-step is the scalar transfer
function g(eta) = E{posterior variance of the APP detector at prior
variance eta}, which is estimated once by Monte-Carlo on a log grid and
interpolated. Fixed points of the two recursions predict where each
detector's error state settles, and the eigenvalue sums admit closed-form
floors via Jensen's inequality.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .core import VAR_MIN, Belief, Constellation, Domain, clamp_variance
from .detection import DetectorType, dd_app_detect

#: floor applied before taking logs of g values (they can underflow to 0)
_LOG_FLOOR = 1e-300


def empirical_error_state(belief: Belief) -> float:
    """Scalar error state of a belief: the mean of its variance vector."""
    return float(np.mean(belief.var))


# ---------------------------------------------------------------------------
# Monte-Carlo transfer function of the DD detector
# ---------------------------------------------------------------------------


class GGridWarning(UserWarning):
    """A state-evolution query fell outside the tabulated grid."""


@dataclass
class GFunction:
    """Tabulated g(eta) = E{APP posterior variance | prior variance eta}.

    `values` are the isotonic (non-decreasing) fit of `raw_values`;
    evaluation interpolates log-value against log-eta, because g decays
    nearly exponentially in 1/eta and linear-value interpolation in the
    steep region would be off by an order of magnitude. Queries outside the
    grid clamp to the end values with a GGridWarning.
    """

    eta_grid: np.ndarray     # ascending, > 0
    values: np.ndarray       # non-decreasing, >= 0
    raw_values: np.ndarray   # per-point Monte-Carlo means before isotonic fit
    std_errors: np.ndarray   # per-point Monte-Carlo standard errors
    constellation: Constellation

    def __call__(self, eta: float) -> float:
        eta = float(eta)
        if not eta > 0:
            raise ValueError(f"eta must be positive, got {eta}")
        lo, hi = self.eta_grid[0], self.eta_grid[-1]
        if eta < lo or eta > hi:
            warnings.warn(
                f"eta={eta:.3e} outside the tabulated grid [{lo:.3e}, {hi:.3e}]; "
                "clamping to the nearest end",
                GGridWarning,
                stacklevel=2,
            )
            eta = min(max(eta, lo), hi)
        log_vals = np.log(np.maximum(self.values, _LOG_FLOOR))
        out = math.exp(np.interp(math.log(eta), np.log(self.eta_grid), log_vals))
        return 0.0 if out <= _LOG_FLOOR * 10 else out


def default_eta_grid(es: float, n_points: int = 40) -> np.ndarray:
    """Log-spaced prior-variance grid spanning [1e-4 * es, 10 * es]."""
    return np.logspace(np.log10(1e-4 * es), np.log10(10.0 * es), n_points)


def estimate_g(
    constellation: Constellation,
    eta_grid: np.ndarray | None = None,
    trials: int = 10_000,
    seed: int = 0,
) -> GFunction:
    """Tabulate the DD detector's variance transfer by Monte-Carlo.

    For each grid point eta: draw `trials` symbols, observe them through
    x + CN(0, eta), run the APP detector with matched prior variance, and
    average the posterior variances over both draws. A non-decreasing
    isotonic fit removes Monte-Carlo jitter (the true curve is monotone).
    """
    if eta_grid is None:
        eta_grid = default_eta_grid(constellation.Es)
    eta_grid = np.asarray(eta_grid, dtype=np.float64)
    if np.any(eta_grid <= 0) or np.any(np.diff(eta_grid) <= 0):
        raise ValueError("eta_grid must be positive and strictly increasing")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x67)))
    raw = np.empty(eta_grid.size)
    se = np.empty(eta_grid.size)
    for i, eta in enumerate(eta_grid):
        idx = rng.integers(0, constellation.size, size=trials)
        x = constellation.points[idx]
        noise = np.sqrt(eta / 2.0) * (
            rng.standard_normal(trials) + 1j * rng.standard_normal(trials)
        )
        det = dd_app_detect(
            Belief(Domain.DD, x + noise, np.full(trials, eta)), constellation
        )
        raw[i] = det.post_var.mean()
        se[i] = det.post_var.std(ddof=1) / np.sqrt(trials)
    fit = np.maximum(isotonic_regression(raw, increasing=True).x, 0.0)
    return GFunction(
        eta_grid=eta_grid,
        values=fit,
        raw_values=raw,
        std_errors=se,
        constellation=constellation,
    )


# ---------------------------------------------------------------------------
# state-evolution steps
# ---------------------------------------------------------------------------


def _fde_state(eta_z: float, lam: np.ndarray, n0: float) -> float:
    """Frequency half-step: posterior state of the MMSE stage.

    eta_x = eta_z - (eta_z^2 / MN) * sum_l lam_l / (eta_z * lam_l + n0),
    i.e. (1/MN) * sum_l eta_z * n0 / (eta_z * lam_l + n0).
    """
    if eta_z < 0:
        raise ValueError(f"eta_z must be >= 0, got {eta_z}")
    if eta_z == 0:
        return 0.0
    lam = np.asarray(lam, dtype=np.float64)
    return float(np.mean(eta_z * n0 / (eta_z * lam + n0)))


def _extrinsic_state(post: float, prior: float, es: float) -> float:
    """Scalar extrinsic combination with the same clamps as the detectors."""
    inv_diff = 1.0 / max(post, VAR_MIN) - 1.0 / max(prior, VAR_MIN)
    if inv_diff <= 0:
        return float(clamp_variance(np.inf, es))
    return float(clamp_variance(1.0 / inv_diff, es))


def se_type1_step(
    eta_z: float, lam: np.ndarray, n0: float, g: GFunction
) -> tuple[float, float]:
    """One a-posteriori iteration of the scalar states.

    Returns (eta_x, eta_z_next): the frequency half-step in closed form,
    then eta_z_next = E{g(eta_x)} from the tabulated transfer function
    (clamped to the same floor/ceiling the detectors use).
    """
    eta_x = _fde_state(eta_z, lam, n0)
    es = g.constellation.Es
    eta_z_next = float(clamp_variance(g(max(eta_x, VAR_MIN)), es))
    return eta_x, eta_z_next


def se_type2_step(
    eta_z: float, lam: np.ndarray, n0: float, g: GFunction
) -> tuple[float, float]:
    """One extrinsic iteration of the scalar states.

    The frequency posterior state has the incoming prior removed
    (eta_x = 1 / (1/post - 1/eta_z)), and the detector state E{g(eta_x)}
    has eta_x removed on the way back; the clamps and the degenerate rule
    (no information gained -> variance ceiling) mirror extrinsic_combine.
    """
    es = g.constellation.Es
    eta_x = _extrinsic_state(_fde_state(eta_z, lam, n0), eta_z, es)
    e_g = g(max(eta_x, VAR_MIN))
    eta_z_next = _extrinsic_state(e_g, eta_x, es)
    return eta_x, eta_z_next


_SE_STEPS = {DetectorType.TYPE1: se_type1_step, DetectorType.TYPE2: se_type2_step}


def se_trajectory(
    detector: DetectorType,
    lam: np.ndarray,
    n0: float,
    g: GFunction,
    n_iters: int,
    eta_z0: float | None = None,
) -> list[tuple[float, float]]:
    """Predicted (eta_z, eta_x) per iteration, starting from eta_z = Es."""
    step = _SE_STEPS[detector]
    eta_z = g.constellation.Es if eta_z0 is None else eta_z0
    out = []
    for _ in range(n_iters):
        eta_x, eta_z_next = step(eta_z, lam, n0, g)
        out.append((eta_z, eta_x))
        eta_z = eta_z_next
    return out


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------


@dataclass
class FixedPoint:
    detector: DetectorType
    eta_z: float
    eta_x: float
    iterations: int
    converged: bool


def find_fixed_point(
    detector: DetectorType,
    lam: np.ndarray,
    n0: float,
    g: GFunction,
    eta_z0: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> FixedPoint:
    """Iterate the state map from eta_z = Es until it stalls.

    Plain fixed-point iteration with 0.5 damping engaged when successive
    updates change sign (oscillation); convergence is declared when the
    eta_z update falls below tol relative to the state.
    """
    step = _SE_STEPS[detector]
    eta_z = g.constellation.Es if eta_z0 is None else eta_z0
    prev_delta = 0.0
    eta_x = float("nan")
    for it in range(1, max_iter + 1):
        eta_x, eta_z_next = step(eta_z, lam, n0, g)
        delta = eta_z_next - eta_z
        if prev_delta * delta < 0:
            eta_z_next = eta_z + 0.5 * delta
            delta = 0.5 * delta
        if abs(delta) <= tol * max(eta_z, VAR_MIN):
            return FixedPoint(detector, eta_z_next, eta_x, it, True)
        prev_delta = delta
        eta_z = eta_z_next
    return FixedPoint(detector, eta_z, eta_x, max_iter, False)


# ---------------------------------------------------------------------------
# bounds and convergence conditions
# ---------------------------------------------------------------------------


def lower_bound_type1(eta_z: float, sum_h2: float, n0: float) -> float:
    """Jensen floor of the frequency half-step at state eta_z."""
    if sum_h2 <= 0:
        raise ValueError(f"sum_h2 must be positive, got {sum_h2}")
    return eta_z * n0 / (eta_z * sum_h2 + n0)


def lower_bound_type2(sum_h2: float, n0: float) -> float:
    """State-independent floor of the extrinsic DD error state."""
    if sum_h2 <= 0:
        raise ValueError(f"sum_h2 must be positive, got {sum_h2}")
    return n0 / sum_h2


@dataclass
class ConvergenceReport:
    detector: DetectorType
    eta_x_star: float
    e_g: float               # E{g(eta_x_star)}
    threshold: float         # n0 / sum_h2
    branch: str              # "a"/"b" (Type-I), "a2"/"b2" (Type-II)
    feasible: bool           # branch reachable given the error-state floors
    satisfied: bool          # the branch inequality holds at the fixed point
    boundary: bool           # inequality holds with near-equality


def check_convergence_conditions(
    eta_x_star: float,
    g: GFunction,
    sum_h2: float,
    n0: float,
    detector: DetectorType,
    rel_tol: float = 1e-6,
) -> ConvergenceReport:
    """Classify a fixed point against the convergence threshold n0/sum_h2.

    Type-I: below the threshold the zero-state branch "a" requires
    E{g} <= n0*eta/(n0 - eta*sum_h2); above it, branch "b" reverses the
    inequality (trivially true there, the right side is negative). Type-II:
    the sub-threshold branch "a2" contradicts the extrinsic error-state
    floor n0/sum_h2 and is reported infeasible; branch "b2" holds when the
    detector no longer gains, E{g(eta)} <= eta.
    """
    threshold = lower_bound_type2(sum_h2, n0)
    e_g = g(max(eta_x_star, VAR_MIN))
    scale = max(abs(e_g), abs(eta_x_star), VAR_MIN)
    if detector is DetectorType.TYPE1:
        if eta_x_star < threshold:
            rhs = n0 * eta_x_star / (n0 - eta_x_star * sum_h2)
            return ConvergenceReport(
                detector, eta_x_star, e_g, threshold, "a", True,
                e_g <= rhs + rel_tol * scale, abs(e_g - rhs) <= rel_tol * scale,
            )
        rhs = n0 * eta_x_star / (n0 - eta_x_star * sum_h2) if eta_x_star != threshold else -np.inf
        return ConvergenceReport(
            detector, eta_x_star, e_g, threshold, "b", True,
            e_g >= rhs - rel_tol * scale, abs(e_g - rhs) <= rel_tol * scale,
        )
    if eta_x_star < threshold:
        # contradicts eta_x >= n0 / sum_h2: unreachable for Type-II
        return ConvergenceReport(
            detector, eta_x_star, e_g, threshold, "a2", False, False, False
        )
    return ConvergenceReport(
        detector, eta_x_star, e_g, threshold, "b2", True,
        e_g <= eta_x_star + rel_tol * scale, abs(e_g - eta_x_star) <= rel_tol * scale,
    )


# ---------------------------------------------------------------------------
# matched filter bound
# ---------------------------------------------------------------------------


@dataclass
class MatchedFilterBound:
    variance: float
    ber: float


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def mfb(sum_h2: float, n0: float, constellation: Constellation) -> MatchedFilterBound:
    """Single-symbol perfect-interference-cancellation reference.

    Estimation variance n0 / sum_h2; the bit error rate is the Gray-mapped
    QPSK expression Q(sqrt(sum_h2 * Es / n0)).
    """
    if sum_h2 <= 0:
        raise ValueError(f"sum_h2 must be positive, got {sum_h2}")
    if constellation.kind != "qpsk":
        raise ValueError(f"BER reference only defined for QPSK, got {constellation.kind!r}")
    if n0 == 0:
        return MatchedFilterBound(variance=0.0, ber=0.0)
    variance = n0 / sum_h2
    ber = q_function(math.sqrt(sum_h2 * constellation.Es / n0))
    return MatchedFilterBound(variance=variance, ber=ber)
