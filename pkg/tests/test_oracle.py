"""Tests for the uniformization oracle."""

import math

import numpy as np
import pytest

from lqfsim.engine import CountState, SystemConfig
from lqfsim.errors import StateSpaceError
from lqfsim.experiments import collect_f1_samples
from lqfsim.oracle import (_count_states, _enumerate_states,
                           build_uniformized_matrix, uniformization_oracle)


def config(n, d, lam, horizon=1.0):
    return SystemConfig(n=n, d=d, lam=lam, horizon=horizon, seed=0)


class TestStateSpace:
    @pytest.mark.parametrize("n,max_total", [(1, 1), (2, 3), (3, 6), (3, 20)])
    def test_count_matches_enumeration(self, n, max_total):
        assert _count_states(n, max_total) == len(_enumerate_states(n, max_total))

    def test_states_are_canonical(self):
        for state in _enumerate_states(3, 5):
            assert sum(state) == 3
            assert state[-1] != 0 or state == (3,)

    def test_size_guard(self):
        with pytest.raises(StateSpaceError):
            build_uniformized_matrix(6, 2, 0.5, 2000)


class TestGenerator:
    def test_rows_sum_to_one_including_self_loop(self):
        _, matrix = build_uniformized_matrix(3, 2, 0.7, 9)
        row_sums = np.asarray(matrix.sum(axis=1)).ravel()
        np.testing.assert_allclose(row_sums, 1.0, atol=1e-12)

    def test_wasted_rate_appears_as_self_loop(self):
        states, matrix = build_uniformized_matrix(2, 3, 0.5, 4)
        dense = matrix.toarray()
        idx = states.index((2,))  # all empty: service is surely wasted
        # self-loop probability = n * (1 - F_1)^d / ((1+lam) n) = 1/(1+lam)
        assert dense[idx, idx] == pytest.approx(1.0 / 1.5, abs=1e-12)


class TestTransient:
    def test_time_zero_point_mass(self):
        result = uniformization_oracle(config(2, 2, 0.7), 0.0)
        assert result.state_probabilities[(2,)] == 1.0
        assert result.truncation_error_bound == 0.0

    def test_mm1_long_run_busy_probability(self):
        result = uniformization_oracle(config(1, 1, 0.5, 60.0), 60.0,
                                       max_total_tasks=25)
        assert result.expected_tail_fraction(1) == pytest.approx(0.5, abs=1e-3)
        assert result.truncation_error_bound < 1e-5

    def test_probabilities_nonnegative_and_deficit_bounded(self):
        result = uniformization_oracle(config(3, 2, 0.9), 3.0)
        assert result.probabilities.min() >= 0.0
        deficit = 1.0 - result.probabilities.sum()
        assert 0.0 <= deficit <= result.truncation_error_bound + 1e-15

    def test_bound_shrinks_with_truncation_level(self):
        bounds = [
            uniformization_oracle(config(2, 2, 0.9), 4.0,
                                  max_total_tasks=m).truncation_error_bound
            for m in (6, 10, 16)
        ]
        assert bounds[0] > bounds[1] > bounds[2]

    def test_nonempty_initial_state(self):
        initial = CountState([1, 1], 2)
        result = uniformization_oracle(config(2, 1, 0.5), 0.0, initial=initial)
        assert result.state_probabilities[(1, 1)] == 1.0

    def test_simulator_agreement(self):
        # mutual consistency at a transient time, small instance
        result = uniformization_oracle(config(2, 2, 0.7), 1.0)
        exact = result.expected_tail_fraction(1)
        values = collect_f1_samples(2, 2, 0.7, 1.0, 30000, master_seed=99)
        se = values.std(ddof=1) / math.sqrt(values.size)
        assert abs(values.mean() - exact) < 3 * se


class TestCsv:
    def test_state_encoding(self, tmp_path):
        result = uniformization_oracle(config(2, 2, 0.7), 0.5)
        target = tmp_path / "oracle.csv"
        result.to_csv(target, comment="meta")
        lines = target.read_text().splitlines()
        assert lines[0] == "# meta"
        assert lines[1] == "state,probability"
        first_state = lines[2].split(",")[0]
        assert all(part.isdigit() for part in first_state.split("|"))
