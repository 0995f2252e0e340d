import os

for _k in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_k, "1")

import time
import warnings

import numpy as np
import pytest

from otfs_cdid import (
    ExperimentConfig,
    GGridWarning,
    OtfsParams,
    Path,
    build_effective_channels,
    estimate_g,
    make_constellation,
    run_bias,
    run_trajectory,
)

# The reference four-path channel driving the expensive end-to-end checks:
# equal gains 0.5, delays [0, 1, 3, 1], and either a high- or low-mobility
# Doppler profile, at 15 dB transmit SNR on a 32x16 grid.
REF_GAINS = [0.5, 0.5, 0.5, 0.5]
REF_DELAYS = [0.0, 1.0, 3.0, 1.0]
REF_DOPPLER_HIGH = [0.95, 4.9, 2.2, -1.5]
REF_DOPPLER_LOW = [0.2, 0.15, -0.18, -0.08]
REF_SNR_DB = 15.0
REF_N0 = 10.0 ** (-REF_SNR_DB / 10.0)


def ref_paths(doppler):
    return [Path(h=h, l=l, k=k) for h, l, k in zip(REF_GAINS, REF_DELAYS, doppler)]


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def qpsk():
    return make_constellation("qpsk", 1.0)


@pytest.fixture(scope="session")
def ref_params():
    return OtfsParams(M=32, N=16, L_cp=3, Es=1.0, N0=REF_N0)


@pytest.fixture(scope="session")
def chan_high(ref_params):
    return build_effective_channels(ref_paths(REF_DOPPLER_HIGH), ref_params)


@pytest.fixture(scope="session")
def chan_low(ref_params):
    return build_effective_channels(ref_paths(REF_DOPPLER_LOW), ref_params)


@pytest.fixture(scope="session")
def g_qpsk(qpsk):
    return estimate_g(qpsk, seed=11)


def _traj_config(doppler):
    return ExperimentConfig(
        params=OtfsParams(M=32, N=16, L_cp=3, Es=1.0),
        paths=ref_paths(doppler),
        constellation="qpsk",
        snr_db=[REF_SNR_DB],
        n_iters=5,
        n_frames=1000,
        seed=415,
        detector="both",
        experiment="trajectory",
    )


@pytest.fixture(scope="session")
def traj_high():
    """(rows, elapsed): both detectors, high-Doppler channel, 1000 frames."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GGridWarning)
        return timed(run_trajectory, _traj_config(REF_DOPPLER_HIGH))


@pytest.fixture(scope="session")
def traj_low():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GGridWarning)
        return timed(run_trajectory, _traj_config(REF_DOPPLER_LOW))


@pytest.fixture(scope="session")
def bias_runs():
    """((high records, low records), elapsed): 1000 noise draws each."""
    def both():
        out = []
        for doppler in (REF_DOPPLER_HIGH, REF_DOPPLER_LOW):
            config = ExperimentConfig(
                params=OtfsParams(M=32, N=16, L_cp=3, Es=1.0),
                paths=ref_paths(doppler),
                constellation="qpsk",
                snr_db=[REF_SNR_DB],
                n_iters=5,
                n_frames=1000,
                seed=808,
                detector="both",
                experiment="bias",
            )
            out.append(run_bias(config))
        return tuple(out)

    return timed(both)


def rows_where(rows, **match):
    out = [r for r in rows if all(r[k] == v for k, v in match.items())]
    assert out, f"no rows matching {match}"
    return out


def one_row(rows, **match):
    out = rows_where(rows, **match)
    assert len(out) == 1, f"expected a unique row for {match}, got {len(out)}"
    return out[0]


@pytest.fixture
def rng():
    return np.random.default_rng(2026)
