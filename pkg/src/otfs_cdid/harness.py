"""Monte-Carlo experiment drivers: BER sweeps, bias probes, error-state
trajectories, and pure state-evolution predictions.

Reproducibility contract: a (config, seed) pair fully determines every
output byte. Each frame gets its own RNG stream seeded by
SeedSequence((seed, snr_point_index, frame_index)); frame results are
reduced in frame order; early exit is decided at fixed chunk boundaries.
None of that depends on the worker count, so `workers=1` and `workers=4`
produce identical CSVs. Workers > 1 run in spawned subprocesses whose BLAS
is pinned to one thread through the environment (set before the children
import numpy); on multicore machines, pin the parent the same way if you
mix worker counts and expect bit-equal floats.
"""

from __future__ import annotations

import contextlib
import csv
import datetime
import json
import multiprocessing
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath

import numpy as np

from .analysis import (
    estimate_g,
    find_fixed_point,
    lower_bound_type1,
    lower_bound_type2,
    mfb,
    se_trajectory,
)
from .channel import ChannelMatrices, Path, add_awgn, apply_channel, build_effective_channels
from .core import Constellation, OtfsParams, db_to_linear, make_constellation, random_symbols
from .detection import DetectorType, run_cdid
from .transforms import idzt, time_to_freq

EXPERIMENTS = ("ber", "bias", "trajectory", "predict")
DETECTOR_CHOICES = ("type1", "type2", "both")

#: frames per scheduling chunk; early exit is evaluated at these boundaries
#: only, which keeps the processed frame count independent of the workers.
CHUNK_FRAMES = 100

BER_COLUMNS = ("snr_db", "detector", "n_iters", "frames", "bit_errors",
               "ber", "ci_low", "ci_high")
BIAS_COLUMNS = ("snr_db", "detector", "iteration", "mean_bias_sq", "max_bias_sq")
TRAJECTORY_COLUMNS = ("snr_db", "detector", "iteration",
                      "eta_z_emp", "eta_x_emp", "mse_z_emp", "mse_x_emp",
                      "eta_z_pred", "eta_x_pred", "lower_bound", "mfb_var")
PREDICT_COLUMNS = ("snr_db", "detector", "kind", "iteration", "eta_z", "eta_x")

CSV_COLUMNS = {
    "ber": BER_COLUMNS,
    "bias": BIAS_COLUMNS,
    "trajectory": TRAJECTORY_COLUMNS,
    "predict": PREDICT_COLUMNS,
}


class ConfigError(ValueError):
    """A configuration document is missing a field or holds a bad value."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    params: OtfsParams
    paths: list[Path]
    constellation: str
    snr_db: list[float]
    n_iters: int
    n_frames: int
    seed: int
    detector: str                 # "type1" | "type2" | "both"
    experiment: str               # "ber" | "bias" | "trajectory" | "predict"
    k_max: float | None = None    # BER: per-frame Doppler law; None = fixed paths
    l_max: float | None = None    # BER: per-frame delay law; None = L_cp
    n_groups: int = 8             # bias: symbol-vector trial groups
    min_errors: int | None = 400  # BER: per-cell early-exit threshold

    @property
    def detectors(self) -> list[DetectorType]:
        if self.detector == "both":
            return [DetectorType.TYPE1, DetectorType.TYPE2]
        return [DetectorType(self.detector)]


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing field '{where}{key}'")
    return doc[key]


def _as_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value, 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"field '{where}' must be a number or a [re, im] pair")


def load_config(source) -> ExperimentConfig:
    """Parse and validate a config from a JSON file path or a parsed dict."""
    if isinstance(source, (str, FsPath)):
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")

    pdoc = _require(doc, "params", "")
    if not isinstance(pdoc, dict):
        raise ConfigError("field 'params' must be an object")
    try:
        params = OtfsParams(
            M=int(_require(pdoc, "M", "params.")),
            N=int(_require(pdoc, "N", "params.")),
            L_cp=int(_require(pdoc, "L_cp", "params.")),
            Es=float(pdoc.get("Es", 1.0)),
            N0=float(pdoc.get("N0", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid 'params': {exc}") from exc

    pathdocs = _require(doc, "paths", "")
    if not isinstance(pathdocs, list) or not pathdocs:
        raise ConfigError("field 'paths' must be a non-empty list")
    paths = []
    for i, pd in enumerate(pathdocs):
        where = f"paths[{i}]."
        try:
            paths.append(Path(
                h=_as_complex(_require(pd, "h", where), where + "h"),
                l=float(_require(pd, "l", where)),
                k=float(_require(pd, "k", where)),
            ))
        except ValueError as exc:
            raise ConfigError(f"invalid 'paths[{i}]': {exc}") from exc
        if np.ceil(paths[-1].l) > params.L_cp:
            raise ConfigError(
                f"invalid 'paths[{i}]': delay {paths[-1].l} exceeds L_cp={params.L_cp}"
            )

    snr_db = _require(doc, "snr_db", "")
    if not isinstance(snr_db, list) or not snr_db:
        raise ConfigError("field 'snr_db' must be a non-empty list")
    snr_db = [float(v) for v in snr_db]

    detector = str(_require(doc, "detector", "")).lower()
    if detector not in DETECTOR_CHOICES:
        raise ConfigError(f"field 'detector' must be one of {DETECTOR_CHOICES}, got {detector!r}")
    experiment = str(_require(doc, "experiment", "")).lower()
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"field 'experiment' must be one of {EXPERIMENTS}, got {experiment!r}")

    n_iters = int(_require(doc, "n_iters", ""))
    n_frames = int(_require(doc, "n_frames", ""))
    seed = int(_require(doc, "seed", ""))
    if n_iters < 1:
        raise ConfigError(f"field 'n_iters' must be >= 1, got {n_iters}")
    if n_frames < 1:
        raise ConfigError(f"field 'n_frames' must be >= 1, got {n_frames}")
    if seed < 0:
        raise ConfigError(f"field 'seed' must be >= 0, got {seed}")

    k_max = doc.get("k_max")
    k_max = None if k_max is None else float(k_max)
    if k_max is not None and k_max <= 0:
        raise ConfigError(f"field 'k_max' must be positive, got {k_max}")
    l_max = doc.get("l_max")
    l_max = None if l_max is None else float(l_max)
    if l_max is not None and (l_max < 0 or l_max > params.L_cp):
        raise ConfigError(
            f"field 'l_max' must lie in [0, L_cp={params.L_cp}], got {l_max}"
        )
    n_groups = int(doc.get("n_groups", 8))
    if n_groups < 1:
        raise ConfigError(f"field 'n_groups' must be >= 1, got {n_groups}")
    min_errors = doc.get("min_errors", 400)
    min_errors = None if min_errors is None else int(min_errors)

    constellation = str(_require(doc, "constellation", "")).lower()
    try:
        make_constellation(constellation, params.Es)
    except ValueError as exc:
        raise ConfigError(f"invalid 'constellation': {exc}") from exc

    return ExperimentConfig(
        params=params, paths=paths, constellation=constellation, snr_db=snr_db,
        n_iters=n_iters, n_frames=n_frames, seed=seed, detector=detector,
        experiment=experiment, k_max=k_max, l_max=l_max, n_groups=n_groups,
        min_errors=min_errors,
    )


def dump_config(config: ExperimentConfig) -> dict:
    """JSON-compatible echo of a config; load_config inverts it exactly."""
    return {
        "params": {
            "M": config.params.M, "N": config.params.N,
            "L_cp": config.params.L_cp, "Es": config.params.Es,
            "N0": config.params.N0,
        },
        "paths": [{"h": [p.h.real, p.h.imag], "l": p.l, "k": p.k}
                  for p in config.paths],
        "constellation": config.constellation,
        "snr_db": list(config.snr_db),
        "n_iters": config.n_iters,
        "n_frames": config.n_frames,
        "seed": config.seed,
        "detector": config.detector,
        "experiment": config.experiment,
        "k_max": config.k_max,
        "l_max": config.l_max,
        "n_groups": config.n_groups,
        "min_errors": config.min_errors,
    }


# ---------------------------------------------------------------------------
# per-frame simulation (runs in workers)
# ---------------------------------------------------------------------------


@dataclass
class _WorkerContext:
    config: ExperimentConfig
    constellation: Constellation
    chan: ChannelMatrices | None            # fixed channel, if the law is fixed
    group_symbols: list[np.ndarray] = field(default_factory=list)


_CTX: _WorkerContext | None = None


def _init_worker(config: ExperimentConfig) -> None:
    global _CTX
    constellation = make_constellation(config.constellation, config.params.Es)
    random_law = config.experiment == "ber" and config.k_max is not None
    chan = None if random_law else build_effective_channels(config.paths, config.params)
    group_symbols = []
    if config.experiment == "bias":
        for g in range(config.n_groups):
            rng = np.random.default_rng(np.random.SeedSequence((config.seed, 2**32 + g)))
            x, _ = random_symbols(constellation, config.params.MN, rng)
            group_symbols.append(x)
    _CTX = _WorkerContext(config, constellation, chan, group_symbols)


def _draw_channel(config: ExperimentConfig, rng: np.random.Generator) -> ChannelMatrices:
    """Per-frame random channel: uniform fractional delays within the CP,
    uniform Doppler in [-k_max, k_max], equal-power paths with uniform phases."""
    n_paths = len(config.paths)
    l_max = config.params.L_cp if config.l_max is None else config.l_max
    delays = rng.uniform(0.0, l_max, n_paths)
    dopplers = rng.uniform(-config.k_max, config.k_max, n_paths)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_paths)
    gain = 1.0 / np.sqrt(n_paths)
    paths = [Path(h=gain * np.exp(1j * ph), l=float(l), k=float(k))
             for ph, l, k in zip(phases, delays, dopplers)]
    return build_effective_channels(paths, config.params)


def transmit_frame(
    x: np.ndarray, chan: ChannelMatrices, n0: float, rng: np.random.Generator
) -> np.ndarray:
    """Delay-Doppler symbols -> noisy frequency-domain observation."""
    r = apply_channel(idzt(x, chan.params), chan)
    return time_to_freq(add_awgn(r, n0, rng))


def _run_frame(task: tuple[int, int, float]):
    """Simulate one frame; the experiment kind comes from the worker context."""
    point_idx, frame_idx, n0 = task
    ctx = _CTX
    config = ctx.config
    params = replace(config.params, N0=n0)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, point_idx, frame_idx)))

    if config.experiment == "bias":
        group = frame_idx % config.n_groups
        x = ctx.group_symbols[group]
        chan = ctx.chan
    else:
        x, bits = random_symbols(ctx.constellation, params.MN, rng)
        chan = ctx.chan if ctx.chan is not None else _draw_channel(config, rng)
    q = transmit_frame(x, chan, n0, rng)

    detectors = config.detectors
    if config.experiment == "ber":
        errors = np.zeros((len(detectors), config.n_iters), dtype=np.int64)
        for di, det in enumerate(detectors):
            result = run_cdid(det, q, chan, ctx.constellation, params, config.n_iters)
            for rec in result.trace:
                wrong = ctx.constellation.bits[rec.hard] != bits
                errors[di, rec.iteration - 1] = np.count_nonzero(wrong)
        return errors

    if config.experiment == "bias":
        means = np.empty((len(detectors), config.n_iters, params.MN), dtype=np.complex128)
        for di, det in enumerate(detectors):
            result = run_cdid(det, q, chan, ctx.constellation, params, config.n_iters)
            for rec in result.trace:
                means[di, rec.iteration - 1] = rec.x_bar
        return group, means

    # trajectory: per-iteration scalar states
    states = np.empty((len(detectors), config.n_iters, 4))
    for di, det in enumerate(detectors):
        result = run_cdid(det, q, chan, ctx.constellation, params, config.n_iters, truth=x)
        for rec in result.trace:
            states[di, rec.iteration - 1] = (rec.eta_z, rec.eta_x, rec.mse_z, rec.mse_x)
    return states


# ---------------------------------------------------------------------------
# scheduling
# ---------------------------------------------------------------------------

_BLAS_KEYS = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS")


@contextlib.contextmanager
def _single_thread_blas_env():
    """Pin BLAS threading in the environment inherited by spawned workers."""
    saved = {k: os.environ.get(k) for k in _BLAS_KEYS}
    for k in _BLAS_KEYS:
        os.environ[k] = "1"
    try:
        yield
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


@contextlib.contextmanager
def _frame_runner(config: ExperimentConfig, workers: int):
    """Yields submit(tasks) -> results in task order, local or pooled."""
    if workers <= 1:
        _init_worker(config)
        yield lambda tasks: [_run_frame(t) for t in tasks]
        return
    with _single_thread_blas_env():
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(
            max_workers=workers, mp_context=ctx,
            initializer=_init_worker, initargs=(config,),
        ) as pool:
            def submit(tasks):
                chunksize = max(1, len(tasks) // (4 * workers))
                return list(pool.map(_run_frame, tasks, chunksize=chunksize))
            yield submit


def _point_noise(config: ExperimentConfig, snr_db: float) -> float:
    return config.params.Es / db_to_linear(snr_db)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _check_experiment(config: ExperimentConfig, expected: str) -> None:
    if config.experiment != expected:
        raise ConfigError(
            f"config is for experiment {config.experiment!r}, expected {expected!r}"
        )


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% binomial confidence interval (Wilson score)."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2.0 * trials)) / denom
    half = z * np.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    # the exact endpoints at the boundaries are 0 and 1; computing them as
    # centre -+ half would leave ~1e-18 of floating-point residue
    lo = 0.0 if errors == 0 else max(0.0, float(centre - half))
    hi = 1.0 if errors == trials else min(1.0, float(centre + half))
    return lo, hi


def run_ber(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    """Bit error rate per (SNR point, detector, iteration count).

    Every frame is detected once with n_iters iterations; the BER after i
    iterations reads the i-th hard-decision record, so one run covers all
    iteration counts. Frames stop early per point once every cell has
    min_errors bit errors (checked at chunk boundaries).
    """
    _check_experiment(config, "ber")
    bits_per_frame = config.params.MN * make_constellation(
        config.constellation, config.params.Es
    ).bits_per_symbol
    detectors = config.detectors
    rows = []
    with _frame_runner(config, workers) as submit:
        for point_idx, snr in enumerate(config.snr_db):
            n0 = _point_noise(config, snr)
            errors = np.zeros((len(detectors), config.n_iters), dtype=np.int64)
            frames = 0
            while frames < config.n_frames:
                chunk = min(CHUNK_FRAMES, config.n_frames - frames)
                tasks = [(point_idx, frames + j, n0) for j in range(chunk)]
                for res in submit(tasks):
                    errors += res
                frames += chunk
                if config.min_errors is not None and errors.min() >= config.min_errors:
                    break
            total_bits = frames * bits_per_frame
            for di, det in enumerate(detectors):
                for it in range(1, config.n_iters + 1):
                    nerr = int(errors[di, it - 1])
                    lo, hi = wilson_interval(nerr, total_bits)
                    rows.append({
                        "snr_db": snr, "detector": det.value, "n_iters": it,
                        "frames": frames, "bit_errors": nerr,
                        "ber": nerr / total_bits, "ci_low": lo, "ci_high": hi,
                    })
    return rows


@dataclass
class BiasRecord:
    """Squared estimation bias of the DD prior mean at one iteration."""

    snr_db: float
    detector: DetectorType
    iteration: int
    bias_sq: np.ndarray      # per-symbol |E{x_bar} - x|^2, averaged over groups
    mean_bias_sq: float

    @property
    def max_bias_sq(self) -> float:
        return float(self.bias_sq.max())


def run_bias(config: ExperimentConfig, workers: int = 1) -> list[BiasRecord]:
    """Estimate E{x_bar} per iteration on a fixed channel.

    Frame f belongs to trial group f % n_groups; each group holds one fixed
    symbol vector and averages the DD prior mean over its noise draws. The
    squared bias per symbol is then averaged across groups.
    """
    _check_experiment(config, "bias")
    detectors = config.detectors
    mn = config.params.MN
    n_groups = min(config.n_groups, config.n_frames)
    records = []
    with _frame_runner(config, workers) as submit:
        group_x = _CTX.group_symbols if workers <= 1 else None
        if group_x is None:
            constellation = make_constellation(config.constellation, config.params.Es)
            group_x = []
            for g in range(config.n_groups):
                rng = np.random.default_rng(np.random.SeedSequence((config.seed, 2**32 + g)))
                x, _ = random_symbols(constellation, mn, rng)
                group_x.append(x)
        for point_idx, snr in enumerate(config.snr_db):
            n0 = _point_noise(config, snr)
            sums = np.zeros((n_groups, len(detectors), config.n_iters, mn), dtype=np.complex128)
            counts = np.zeros(n_groups, dtype=np.int64)
            done = 0
            while done < config.n_frames:
                chunk = min(CHUNK_FRAMES, config.n_frames - done)
                tasks = [(point_idx, done + j, n0) for j in range(chunk)]
                for group, means in submit(tasks):
                    sums[group] += means
                    counts[group] += 1
                done += chunk
            for di, det in enumerate(detectors):
                for it in range(1, config.n_iters + 1):
                    per_group = [
                        np.abs(sums[g, di, it - 1] / counts[g] - group_x[g]) ** 2
                        for g in range(n_groups) if counts[g] > 0
                    ]
                    bias_sq = np.mean(per_group, axis=0)
                    records.append(BiasRecord(
                        snr_db=snr, detector=det, iteration=it,
                        bias_sq=bias_sq, mean_bias_sq=float(bias_sq.mean()),
                    ))
    return records


def bias_rows(records: list[BiasRecord]) -> list[dict]:
    return [{
        "snr_db": r.snr_db, "detector": r.detector.value, "iteration": r.iteration,
        "mean_bias_sq": r.mean_bias_sq, "max_bias_sq": r.max_bias_sq,
    } for r in records]


def run_trajectory(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    """Empirical per-iteration error states next to their predictions.

    Empirical states average the detectors' carried variances (and the true
    mean squared errors) over n_frames noise/symbol draws on the fixed
    channel; predictions run the scalar state recursions with a Monte-Carlo
    transfer function seeded from the config seed.
    """
    _check_experiment(config, "trajectory")
    detectors = config.detectors
    chan = build_effective_channels(config.paths, config.params)
    lam = chan.lam
    constellation = make_constellation(config.constellation, config.params.Es)
    g = estimate_g(constellation, seed=config.seed)
    sum_h2 = float(sum(abs(p.h) ** 2 for p in config.paths))
    rows = []
    with _frame_runner(config, workers) as submit:
        for point_idx, snr in enumerate(config.snr_db):
            n0 = _point_noise(config, snr)
            acc = np.zeros((len(detectors), config.n_iters, 4))
            done = 0
            while done < config.n_frames:
                chunk = min(CHUNK_FRAMES, config.n_frames - done)
                tasks = [(point_idx, done + j, n0) for j in range(chunk)]
                for states in submit(tasks):
                    acc += states
                done += chunk
            acc /= config.n_frames
            for di, det in enumerate(detectors):
                pred = se_trajectory(det, lam, n0, g, config.n_iters)
                for it in range(1, config.n_iters + 1):
                    eta_z_e, eta_x_e, mse_z_e, mse_x_e = acc[di, it - 1]
                    eta_z_p, eta_x_p = pred[it - 1]
                    if det is DetectorType.TYPE1:
                        bound = lower_bound_type1(eta_z_e, sum_h2, n0)
                    else:
                        bound = lower_bound_type2(sum_h2, n0)
                    rows.append({
                        "snr_db": snr, "detector": det.value, "iteration": it,
                        "eta_z_emp": eta_z_e, "eta_x_emp": eta_x_e,
                        "mse_z_emp": mse_z_e, "mse_x_emp": mse_x_e,
                        "eta_z_pred": eta_z_p, "eta_x_pred": eta_x_p,
                        "lower_bound": bound,
                        "mfb_var": mfb(sum_h2, n0, constellation).variance,
                    })
    return rows


def run_predict(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    """Pure state-evolution output: per-iteration states and fixed points."""
    _check_experiment(config, "predict")
    del workers  # no simulation; accepted for interface symmetry
    chan = build_effective_channels(config.paths, config.params)
    lam = chan.lam
    constellation = make_constellation(config.constellation, config.params.Es)
    g = estimate_g(constellation, seed=config.seed)
    rows = []
    for snr in config.snr_db:
        n0 = _point_noise(config, snr)
        for det in config.detectors:
            for it, (eta_z, eta_x) in enumerate(se_trajectory(det, lam, n0, g, config.n_iters), 1):
                rows.append({
                    "snr_db": snr, "detector": det.value, "kind": "step",
                    "iteration": it, "eta_z": eta_z, "eta_x": eta_x,
                })
            fp = find_fixed_point(det, lam, n0, g)
            rows.append({
                "snr_db": snr, "detector": det.value, "kind": "fixed_point",
                "iteration": 0, "eta_z": fp.eta_z, "eta_x": fp.eta_x,
            })
    return rows


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list[dict]:
    """Dispatch on config.experiment and return CSV-ready rows."""
    if config.experiment == "ber":
        return run_ber(config, workers)
    if config.experiment == "bias":
        return bias_rows(run_bias(config, workers))
    if config.experiment == "trajectory":
        return run_trajectory(config, workers)
    return run_predict(config, workers)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def emit_csv(rows: list[dict], path, columns: tuple[str, ...]) -> None:
    """Write rows with a fixed header; floats carry 9 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])


def _git_commit() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True,
            timeout=5, cwd=os.path.dirname(os.path.abspath(__file__)),
        )
    except OSError:
        return None
    return out.stdout.strip() if out.returncode == 0 else None


def write_metadata(config: ExperimentConfig, out_path, workers: int) -> FsPath:
    """Config echo + provenance sidecar next to the CSV."""
    out_path = FsPath(out_path)
    meta_path = out_path.with_suffix(out_path.suffix + ".meta.json")
    meta = {
        "config": dump_config(config),
        "workers": workers,
        "git_commit": _git_commit(),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "numpy_version": np.__version__,
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return meta_path
