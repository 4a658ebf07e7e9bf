"""Tests for spec loading, the replication engine and the runners."""

import json

import numpy as np
import pytest

from lqfsim import __version__
from lqfsim.errors import ConfigurationError
from lqfsim.experiments import (collect_f1_samples, collect_tradeoff_samples,
                                load_spec, run, sample_paths_d)
from lqfsim.seeding import replication_seed, replication_seeds


def write_spec(tmp_path, payload, name="spec.json"):
    target = tmp_path / name
    target.write_text(json.dumps(payload))
    return target


class TestLoadSpec:
    def test_minimal_file_gets_defaults(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "histogram", "n": [20], "d": [4]}))
        assert spec.lam_grid == (0.7,)
        assert spec.t == 50.0
        assert spec.replications == 1000
        assert spec.master_seed == 0
        assert spec.time_scale == "raw"

    def test_zero_replications_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_spec(write_spec(tmp_path, {
                "kind": "histogram", "n": [20], "d": [4],
                "replications": 0}))

    def test_unknown_key_named(self, tmp_path):
        with pytest.raises(ConfigurationError, match="lamda"):
            load_spec(write_spec(tmp_path, {
                "kind": "histogram", "n": [20], "d": [4], "lamda": [0.7]}))

    def test_kind_required(self, tmp_path):
        with pytest.raises(ConfigurationError, match="kind"):
            load_spec(write_spec(tmp_path, {"n": [20]}))

    def test_d_rejected_for_sample_paths(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_spec(write_spec(tmp_path, {
                "kind": "sample_paths", "n": [100], "d": [4]}))

    def test_lambda_range_checked(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_spec(write_spec(tmp_path, {
                "kind": "histogram", "n": [20], "d": [4], "lambda": [1.2]}))

    def test_grids_must_be_arrays(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_spec(write_spec(tmp_path, {
                "kind": "histogram", "n": 20, "d": [4]}))

    def test_sample_paths_default_record_grid(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "sample_paths", "n": [100]}))
        assert len(spec.t_record) == 500
        assert spec.t_record[0] == 0.0 and spec.t_record[-1] == 10.0
        assert spec.time_scale == "fluid"

    def test_time_scale_mismatch_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="time_scale"):
            load_spec(write_spec(tmp_path, {
                "kind": "histogram", "n": [20], "d": [4],
                "time_scale": "fluid"}))

    def test_tradeoff_needs_single_lambda(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_spec(write_spec(tmp_path, {
                "kind": "tradeoff", "n": [10], "d": [2],
                "lambda": [0.5, 0.7]}))

    def test_broken_json_reports_position(self, tmp_path):
        target = tmp_path / "broken.json"
        target.write_text('{"kind": "histogram",')
        with pytest.raises(ConfigurationError, match="line"):
            load_spec(target)


class TestSeeding:
    def test_deterministic(self):
        assert replication_seed(12345, 7) == replication_seed(12345, 7)

    def test_distinct_across_indices(self):
        seeds = replication_seeds(12345, 10000)
        assert len(set(seeds.tolist())) == 10000

    def test_vector_matches_scalar(self):
        seeds = replication_seeds(999, 50, start=10)
        assert [replication_seed(999, 10 + i) for i in range(50)] == \
            [int(s) for s in seeds]


class TestReplicationEngine:
    def test_worker_count_invariance(self):
        serial = collect_f1_samples(10, 2, 0.7, 2.0, 64, master_seed=5,
                                    workers=1)
        parallel = collect_f1_samples(10, 2, 0.7, 2.0, 64, master_seed=5,
                                      workers=2)
        assert serial.tobytes() == parallel.tobytes()

    def test_values_live_on_lattice(self):
        values = collect_f1_samples(10, 2, 0.7, 2.0, 100, master_seed=5)
        np.testing.assert_allclose(values * 10, np.round(values * 10),
                                   atol=1e-9)

    def test_tradeoff_samples_shapes(self):
        qlen, cpu = collect_tradeoff_samples(10, 3, 0.7, 2.0, 16,
                                             master_seed=3)
        assert qlen.shape == cpu.shape == (16,)
        assert np.all(cpu >= 0.0)


class TestSamplePathsD:
    def test_caption_formula(self):
        assert sample_paths_d(10000) == 40
        assert sample_paths_d(10) == 10
        assert sample_paths_d(100) == 20

    def test_too_small_n_rejected(self):
        with pytest.raises(ConfigurationError):
            sample_paths_d(1)


@pytest.fixture()
def tiny_histogram_spec(tmp_path):
    return load_spec(write_spec(tmp_path, {
        "kind": "histogram", "n": [20], "d": [4], "lambda": [0.7],
        "t": 5.0, "replications": 64, "master_seed": 11,
        "output_dir": str(tmp_path / "out")}))


class TestRunners:
    def test_histogram_outputs(self, tiny_histogram_spec, tmp_path):
        written = run(tiny_histogram_spec, workers=1)
        names = sorted(p.name for p in written)
        assert names == ["histogram_n20_d4_lam0.7.csv",
                         "overlay_n20_d4_lam0.7.csv"]
        head = written[0].read_text().splitlines()[0]
        assert head.startswith(f"# lqfsim {__version__} spec=")
        resolved = json.loads(head.split("spec=", 1)[1])
        assert resolved["replications"] == 64
        assert "output_dir" not in resolved

    def test_histogram_area(self, tiny_histogram_spec):
        written = run(tiny_histogram_spec, workers=1)
        hist_file = [p for p in written if p.name.startswith("histogram")][0]
        rows = np.loadtxt(hist_file, delimiter=",", skiprows=2)
        rows = np.atleast_2d(rows)
        area = np.sum((rows[:, 1] - rows[:, 0]) * rows[:, 2])
        assert area == pytest.approx(1.0, abs=1e-9)

    def test_sample_paths_outputs(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "sample_paths", "n": [100],
            "t_record": np.linspace(0.0, 2.0, 21).tolist(),
            "master_seed": 4, "output_dir": str(tmp_path / "out")}))
        written = run(spec, workers=1)
        names = sorted(p.name for p in written)
        assert names == ["sample_paths_fluid_lam0.7.csv",
                         "sample_paths_n100_lam0.7.csv"]
        fluid_rows = np.loadtxt(written[-1], delimiter=",", skiprows=2)
        assert fluid_rows[0, 1] == 0.0  # empty start
        path_rows = np.loadtxt(written[0], delimiter=",", skiprows=2)
        assert path_rows.shape == (21, 2)
        # scaled values are multiples of d/n = 20/100
        np.testing.assert_allclose(path_rows[:, 1] / 0.2,
                                   np.round(path_rows[:, 1] / 0.2), atol=1e-9)

    def test_ks_sweep_single_point(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "ks_sweep", "n": [50], "d": [5], "lambda": [0.8],
            "t": 5.0, "replications": 64, "master_seed": 2,
            "output_dir": str(tmp_path / "out")}))
        written = run(spec, workers=1)
        lines = written[0].read_text().splitlines()
        assert lines[1] == "n,d,lambda,mu,sigma,ks,region_accepts"
        assert len(lines) == 3
        row = lines[2].split(",")
        assert row[0] == "50" and row[1] == "5"
        assert 0.0 < float(row[5]) <= 1.0

    def test_ks_sweep_rows_sorted(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "ks_sweep", "n": [50, 20], "d": [4, 2],
            "lambda": [0.8], "t": 2.0, "replications": 16,
            "master_seed": 2, "output_dir": str(tmp_path / "out")}))
        written = run(spec, workers=1)
        rows = [line.split(",")[:2] for line
                in written[0].read_text().splitlines()[2:]]
        keys = [(int(a), int(b)) for a, b in rows]
        assert keys == sorted(keys)

    def test_tradeoff_outputs(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "tradeoff", "n": [10], "d": [2, 3], "lambda": [0.7],
            "t": 5.0, "replications": 16, "master_seed": 6,
            "output_dir": str(tmp_path / "out")}))
        written = run(spec, workers=1)
        lines = written[0].read_text().splitlines()
        assert lines[1] == "n,d,mean_queue_length,cpu_time_per_buffer"
        data = np.loadtxt(written[0], delimiter=",", skiprows=2)
        assert data.shape == (2, 4)
        assert np.all(data[:, 3] > 0)

    def test_rerun_byte_identical_across_workers(self, tmp_path):
        spec = load_spec(write_spec(tmp_path, {
            "kind": "ks_sweep", "n": [30], "d": [3], "lambda": [0.8],
            "t": 3.0, "replications": 48, "master_seed": 21,
            "output_dir": str(tmp_path / "unused")}))
        first = run(spec, out_dir=tmp_path / "a", workers=1)
        second = run(spec, out_dir=tmp_path / "b", workers=2)
        assert first[0].read_bytes() == second[0].read_bytes()
