"""Experiment drivers: config validation, the Monte-Carlo runners, CSV
emission, metadata sidecars, reproducibility, and the command line.

The identity channel (single unit path, no delay, no Doppler) turns the
receiver into a per-symbol matched filter whose BER has a closed form, so
the full transmit-detect-count pipeline is checked against Q(sqrt(SNR)).
"""

import csv
import datetime
import json
import math
import re
import warnings
from dataclasses import replace

import numpy as np
import pytest

from otfs_cdid import (
    BER_COLUMNS,
    BIAS_COLUMNS,
    TRAJECTORY_COLUMNS,
    ConfigError,
    DetectorType,
    GGridWarning,
    bias_rows,
    dump_config,
    emit_csv,
    load_config,
    lower_bound_type2,
    q_function,
    run_ber,
    run_bias,
    run_experiment,
    run_predict,
    run_trajectory,
    wilson_interval,
    write_metadata,
)
from otfs_cdid.cli import main


def base_doc(**over):
    """A minimal valid BER config on the identity channel."""
    doc = {
        "params": {"M": 4, "N": 4, "L_cp": 0},
        "paths": [{"h": [1.0, 0.0], "l": 0.0, "k": 0.0}],
        "constellation": "qpsk",
        "snr_db": [6.0],
        "n_iters": 2,
        "n_frames": 4,
        "seed": 7,
        "detector": "both",
        "experiment": "ber",
        "min_errors": None,
    }
    doc.update(over)
    return doc


def without(doc, key):
    doc = dict(doc)
    del doc[key]
    return doc


@pytest.fixture(scope="module")
def tiny_rows():
    config = load_config(base_doc(
        experiment="trajectory",
        params={"M": 4, "N": 4, "L_cp": 1},
        paths=[{"h": [0.8, 0.0], "l": 0.0, "k": 0.2},
               {"h": [0.0, 0.6], "l": 1.0, "k": -0.3}],
        snr_db=[10.0],
        n_iters=3,
        n_frames=50,
        seed=3,
    ))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GGridWarning)
        return config, run_trajectory(config)


@pytest.fixture(scope="module")
def predict_rows():
    config = load_config(base_doc(
        experiment="predict", snr_db=[0.0], n_iters=3, seed=2
    ))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GGridWarning)
        return config, run_predict(config)


@pytest.fixture(scope="module")
def random_law_config():
    return load_config(base_doc(
        params={"M": 4, "N": 2, "L_cp": 1},
        paths=[{"h": [0.7, 0.0], "l": 0.0, "k": 0.0},
               {"h": [0.7, 0.0], "l": 0.0, "k": 0.0}],
        k_max=2.0,
        l_max=1.0,
        snr_db=[5.0],
        n_frames=60,
        seed=11,
    ))


class TestLoadConfig:
    def test_round_trips_through_dump(self):
        doc = base_doc(
            paths=[{"h": [0.6, -0.2], "l": 0.0, "k": 0.4}],
            k_max=2.0, l_max=0.0, n_groups=3, min_errors=25,
        )
        config = load_config(doc)
        again = load_config(dump_config(config))
        assert again == config

    def test_accepts_file_path(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(base_doc()))
        assert load_config(path) == load_config(base_doc())
        assert load_config(str(path)) == load_config(base_doc())

    def test_defaults(self):
        config = load_config(base_doc())
        assert config.params.Es == 1.0
        assert config.params.N0 == 1.0
        assert config.k_max is None
        assert config.l_max is None
        assert config.n_groups == 8
        assert config.min_errors is None  # explicit null in base_doc
        assert load_config(without(base_doc(), "min_errors")).min_errors == 400

    def test_detectors_property(self):
        assert load_config(base_doc()).detectors == [
            DetectorType.TYPE1,
            DetectorType.TYPE2,
        ]
        assert load_config(base_doc(detector="type2")).detectors == [
            DetectorType.TYPE2
        ]

    def test_scalar_gain_means_real(self):
        config = load_config(base_doc(paths=[{"h": 0.5, "l": 0.0, "k": 0.0}]))
        assert config.paths[0].h == 0.5 + 0.0j

    @pytest.mark.parametrize(
        "doc,pattern",
        [
            (without(base_doc(), "paths"), "'paths'"),
            (without(base_doc(), "snr_db"), "'snr_db'"),
            (without(base_doc(), "detector"), "'detector'"),
            (without(base_doc(), "seed"), "'seed'"),
            ({**base_doc(), "params": {"N": 4, "L_cp": 0}}, "params.M"),
            (base_doc(params={"M": 0, "N": 4, "L_cp": 0}), "params"),
            (base_doc(params=3), "'params'"),
            (base_doc(paths=[]), "'paths'"),
            (base_doc(paths=[{"h": [1, 0, 0], "l": 0.0, "k": 0.0}]), r"paths\[0\]"),
            (base_doc(paths=[{"h": "big", "l": 0.0, "k": 0.0}]), r"paths\[0\]"),
            (base_doc(paths=[{"h": 1.0, "l": 1.0, "k": 0.0}]), "exceeds L_cp"),
            (base_doc(snr_db=[]), "'snr_db'"),
            (base_doc(snr_db="ten"), "'snr_db'"),
            (base_doc(detector="typex"), "'detector'"),
            (base_doc(experiment="sweep"), "'experiment'"),
            (base_doc(n_iters=0), "'n_iters'"),
            (base_doc(n_frames=0), "'n_frames'"),
            (base_doc(seed=-1), "'seed'"),
            (base_doc(k_max=0.0), "'k_max'"),
            (base_doc(l_max=-0.5), "'l_max'"),
            (base_doc(l_max=2.0), "'l_max'"),
            (base_doc(n_groups=0), "'n_groups'"),
            (base_doc(constellation="qam64"), "constellation"),
        ],
        ids=[
            "no-paths", "no-snr", "no-detector", "no-seed", "no-M", "bad-M",
            "params-not-object", "empty-paths", "h-triple", "h-string",
            "delay-beyond-cp", "empty-snr", "snr-not-list", "bad-detector",
            "bad-experiment", "bad-iters", "bad-frames", "bad-seed",
            "bad-kmax", "negative-lmax", "lmax-beyond-cp", "bad-groups",
            "bad-constellation",
        ],
    )
    def test_rejects_invalid_documents(self, doc, pattern):
        with pytest.raises(ConfigError, match=pattern):
            load_config(doc)

    def test_rejects_non_object_root(self):
        with pytest.raises(ConfigError, match="root"):
            load_config([1, 2, 3])

    def test_rejects_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_rejects_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")


class TestWilsonInterval:
    def test_contains_point_estimate(self):
        for errors, trials in [(0, 10), (3, 10), (50, 200), (199, 200)]:
            lo, hi = wilson_interval(errors, trials)
            assert lo <= errors / trials <= hi

    def test_edges(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0 and 0.0 < hi < 0.1
        lo, hi = wilson_interval(100, 100)
        assert 0.9 < lo < 1.0 and hi == 1.0
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_width_scales_with_sqrt_of_trials(self):
        lo1, hi1 = wilson_interval(100, 1000)
        lo2, hi2 = wilson_interval(400, 4000)
        ratio = (hi1 - lo1) / (hi2 - lo2)
        assert 1.9 < ratio < 2.1

    def test_coverage_is_near_nominal(self):
        rng = np.random.default_rng(5)
        p, trials, covered = 0.07, 500, 0
        for _ in range(2000):
            k = int(rng.binomial(trials, p))
            lo, hi = wilson_interval(k, trials)
            covered += lo <= p <= hi
        assert 0.93 <= covered / 2000 <= 0.97


class TestRunBer:
    def test_perfect_snr_gives_zero_errors(self):
        config = load_config(base_doc(snr_db=[300.0], n_frames=3))
        rows = run_ber(config)
        assert len(rows) == 2 * config.n_iters
        for row in rows:
            assert row["bit_errors"] == 0
            assert row["ber"] == 0.0
            assert row["ci_low"] == 0.0
            assert row["frames"] == 3

    def test_identity_channel_matches_closed_form(self):
        # per-symbol matched filtering: BER = Q(sqrt(Es/N0)) for Gray QPSK
        config = load_config(base_doc(n_frames=500))
        rows = run_ber(config)
        expected = q_function(math.sqrt(10.0 ** 0.6))
        bits = 500 * config.params.MN * 2
        band = 4.0 * math.sqrt(expected * (1 - expected) / bits)
        for row in rows:
            if row["n_iters"] == 1:
                assert abs(row["ber"] - expected) <= band

    def test_early_exit_at_chunk_boundary(self):
        config = load_config(base_doc(snr_db=[0.0], n_frames=5000, min_errors=10))
        rows = run_ber(config)
        assert all(row["frames"] == 100 for row in rows)

    def test_runs_all_frames_without_min_errors(self):
        config = load_config(base_doc(snr_db=[0.0], n_frames=120))
        rows = run_ber(config)
        assert all(row["frames"] == 120 for row in rows)

    def test_rows_cover_every_cell(self):
        config = load_config(base_doc(snr_db=[0.0, 5.0], n_frames=2))
        rows = run_ber(config)
        assert len(rows) == 2 * 2 * config.n_iters
        assert all(set(row) == set(BER_COLUMNS) for row in rows)
        cells = {(r["snr_db"], r["detector"], r["n_iters"]) for r in rows}
        assert cells == {
            (snr, det, it)
            for snr in (0.0, 5.0)
            for det in ("type1", "type2")
            for it in (1, 2)
        }

    def test_runners_reject_wrong_experiment(self):
        config = load_config(base_doc())
        with pytest.raises(ConfigError, match="experiment"):
            run_bias(config)
        with pytest.raises(ConfigError, match="experiment"):
            run_trajectory(config)
        with pytest.raises(ConfigError, match="experiment"):
            run_predict(config)
        with pytest.raises(ConfigError, match="experiment"):
            run_ber(load_config(base_doc(experiment="bias")))


class TestRunBias:
    def test_identity_channel_bias_is_noise_limited(self):
        config = load_config(base_doc(
            experiment="bias", snr_db=[20.0], n_frames=400, n_groups=4
        ))
        records = run_bias(config)
        assert len(records) == 2 * config.n_iters
        for rec in records:
            assert rec.bias_sq.shape == (config.params.MN,)
            assert rec.max_bias_sq >= rec.mean_bias_sq
            # ~100 noise draws per group at N0 = 0.01 leave ~1e-4 of
            # estimator variance masquerading as bias
            assert rec.mean_bias_sq <= 1e-3
        it2_type1 = [
            r for r in records
            if r.detector is DetectorType.TYPE1 and r.iteration == 2
        ]
        assert it2_type1[0].mean_bias_sq <= 1e-10  # converged exactly

    def test_bias_estimate_shrinks_with_noise_draws(self):
        # the residual squared bias is estimator variance, so doubling the
        # draws should halve it
        level = {}
        for n_frames in (2000, 4000):
            config = load_config(base_doc(
                experiment="bias", snr_db=[5.0], n_frames=n_frames,
                detector="type2", n_iters=1,
            ))
            level[n_frames] = run_bias(config)[0].mean_bias_sq
        ratio = level[2000] / level[4000]
        assert 1.5 <= ratio <= 2.7

    def test_groups_capped_by_frame_count(self):
        config = load_config(base_doc(
            experiment="bias", snr_db=[10.0], n_frames=3, n_groups=8
        ))
        records = run_bias(config)
        assert len(records) == 2 * config.n_iters
        assert all(np.isfinite(rec.bias_sq).all() for rec in records)

    def test_bias_rows_schema(self):
        config = load_config(base_doc(
            experiment="bias", snr_db=[10.0], n_frames=4, n_groups=2
        ))
        rows = bias_rows(run_bias(config))
        assert all(set(row) == set(BIAS_COLUMNS) for row in rows)
        assert {row["detector"] for row in rows} == {"type1", "type2"}


class TestRunTrajectory:
    def test_schema_and_iteration_order(self, tiny_rows):
        config, rows = tiny_rows
        assert len(rows) == 2 * config.n_iters
        assert all(set(row) == set(TRAJECTORY_COLUMNS) for row in rows)
        for det in ("type1", "type2"):
            iters = [r["iteration"] for r in rows if r["detector"] == det]
            assert iters == [1, 2, 3]

    def test_first_iteration_starts_uninformed(self, tiny_rows):
        _, rows = tiny_rows
        for row in rows:
            if row["iteration"] == 1:
                assert row["eta_z_emp"] == pytest.approx(1.0, rel=1e-12)
                assert row["eta_z_pred"] == pytest.approx(1.0, rel=1e-12)

    def test_reference_columns(self, tiny_rows):
        config, rows = tiny_rows
        n0 = 10.0 ** -1.0  # Es / linear SNR at 10 dB
        sum_h2 = 0.8**2 + 0.6**2
        for row in rows:
            assert row["mfb_var"] == pytest.approx(n0 / sum_h2, rel=1e-12)
            if row["detector"] == "type2":
                assert row["lower_bound"] == pytest.approx(
                    lower_bound_type2(sum_h2, n0), rel=1e-12
                )


class TestRunPredict:
    def test_row_counts_and_kinds(self, predict_rows):
        config, rows = predict_rows
        assert len(rows) == 2 * (config.n_iters + 1)
        steps = [r for r in rows if r["kind"] == "step"]
        fps = [r for r in rows if r["kind"] == "fixed_point"]
        assert len(steps) == 2 * config.n_iters
        assert len(fps) == 2
        assert all(r["iteration"] == 0 for r in fps)

    def test_identity_channel_first_step_is_exact(self, predict_rows):
        # lam = 1 everywhere and N0 = 1: the first frequency half-step is
        # eta_x = eta_z * n0 / (eta_z + n0) = 0.5 exactly
        _, rows = predict_rows
        for det in ("type1", "type2"):
            first = next(
                r for r in rows if r["detector"] == det and r["iteration"] == 1
            )
            assert first["eta_z"] == pytest.approx(1.0, rel=1e-12)
        t1 = next(
            r for r in rows if r["detector"] == "type1" and r["iteration"] == 1
        )
        assert t1["eta_x"] == pytest.approx(0.5, rel=1e-12)

    def test_type2_identity_channel_pins_noise_floor(self, predict_rows):
        # the extrinsic state equals N0 at every iteration on this channel
        _, rows = predict_rows
        for row in rows:
            if row["detector"] == "type2" and row["kind"] == "step":
                assert row["eta_x"] == pytest.approx(1.0, rel=1e-12)

    def test_workers_argument_is_inert(self, predict_rows):
        config, rows = predict_rows
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GGridWarning)
            assert run_predict(config, workers=3) == rows

    def test_run_experiment_dispatches(self, predict_rows):
        config, rows = predict_rows
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GGridWarning)
            assert run_experiment(config) == rows


class TestEmitCsv:
    def test_formatting_and_header(self, tmp_path):
        path = tmp_path / "out.csv"
        rows = [{"a": 0.123456789123456, "b": 7, "c": True, "d": "type1",
                 "e": 1e-9}]
        emit_csv(rows, path, ("a", "b", "c", "d", "e"))
        text = path.read_text()
        assert text == "a,b,c,d,e\n0.123456789,7,1,type1,1e-09\n"

    def test_round_trips_through_reader(self, tmp_path):
        path = tmp_path / "out.csv"
        rows = [{"x": 1.5, "y": -3}, {"x": 0.25, "y": 12}]
        emit_csv(rows, path, ("x", "y"))
        with open(path, newline="") as fh:
            parsed = list(csv.reader(fh))
        assert parsed == [["x", "y"], ["1.5", "-3"], ["0.25", "12"]]


class TestWriteMetadata:
    def test_sidecar_contents(self, tmp_path):
        config = load_config(base_doc())
        out = tmp_path / "run.csv"
        meta_path = write_metadata(config, out, workers=2)
        assert meta_path == tmp_path / "run.csv.meta.json"
        meta = json.loads(meta_path.read_text())
        assert meta["config"] == json.loads(json.dumps(dump_config(config)))
        assert meta["workers"] == 2
        assert meta["numpy_version"] == np.__version__
        datetime.datetime.fromisoformat(meta["created_utc"])
        assert meta["git_commit"] is None or re.fullmatch(
            r"[0-9a-f]{40}", meta["git_commit"]
        )


class TestReproducibility:
    def test_rerun_is_identical(self, random_law_config):
        assert run_ber(random_law_config) == run_ber(random_law_config)

    def test_worker_count_does_not_change_rows(self, random_law_config):
        serial = run_ber(random_law_config, workers=1)
        pooled = run_ber(random_law_config, workers=2)
        assert pooled == serial

    def test_csv_bytes_identical(self, random_law_config, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_ber(random_law_config), a, BER_COLUMNS)
        emit_csv(run_ber(random_law_config, workers=2), b, BER_COLUMNS)
        assert a.read_bytes() == b.read_bytes()


class TestCommandLine:
    def write_config(self, tmp_path, doc):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return path

    def test_predict_happy_path(self, tmp_path, capsys):
        config = self.write_config(
            tmp_path, base_doc(experiment="predict", n_iters=2)
        )
        out = tmp_path / "predict.csv"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GGridWarning)
            rc = main(["predict", "--config", str(config), "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert (tmp_path / "predict.csv.meta.json").exists()
        header = out.read_text().splitlines()[0]
        assert header == "snr_db,detector,kind,iteration,eta_z,eta_x"
        assert "wrote" in capsys.readouterr().out

    def test_ber_with_flag_overrides(self, tmp_path):
        config = self.write_config(tmp_path, base_doc())
        out = tmp_path / "ber.csv"
        rc = main([
            "ber", "--config", str(config), "--out", str(out),
            "--seed", "99", "--frames", "2", "--iters", "1",
        ])
        assert rc == 0
        meta = json.loads((tmp_path / "ber.csv.meta.json").read_text())
        assert meta["config"]["seed"] == 99
        assert meta["config"]["n_frames"] == 2
        assert meta["config"]["n_iters"] == 1
        assert len(out.read_text().splitlines()) == 1 + 2  # header + 2 cells

    def test_reports_config_errors(self, tmp_path, capsys):
        config = self.write_config(tmp_path, without(base_doc(), "paths"))
        rc = main(["ber", "--config", str(config), "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_rejects_experiment_mismatch(self, tmp_path, capsys):
        config = self.write_config(tmp_path, base_doc())  # a BER config
        rc = main(["predict", "--config", str(config), "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "ber" in err and "predict" in err

    def test_rejects_bad_worker_count(self, tmp_path, capsys):
        config = self.write_config(tmp_path, base_doc())
        rc = main([
            "ber", "--config", str(config), "--out", str(tmp_path / "x.csv"),
            "--workers", "0",
        ])
        assert rc == 2
        assert "--workers" in capsys.readouterr().err

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2
