"""Smoothing-parameter selection: blending, binning, and the grid search."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptda.cvb import Hyperparameters, classify, fit_model, update_psi
from ptda.errors import DomainError, InputError
from ptda.smoothing import (
    DEFAULT_LADDER,
    SmoothingReport,
    assign_bins,
    column_pvalues,
    expected_pvalue,
    monotone_tuples,
    select_c,
)


def two_group_data(seed=0, n=40, p=6, shift=2.0):
    rng = np.random.default_rng(seed)
    y = np.array([1, 0] * (n // 2))
    x = rng.normal(size=(n, p))
    x[:, 0] += shift * y
    x[:, 1] = rng.exponential(size=n) + 0.5 * y
    return x, y


class TestExpectedPvalue:
    def test_equal_inputs(self):
        for p, u in ((10, 1.5), (500, 2.0)):
            assert expected_pvalue(0.5, 0.5, p, u) == 0.5

    def test_arithmetic_fixture(self):
        got = expected_pvalue(0.9, 0.01, 100, 2.0)
        assert got == pytest.approx((0.01 + 10000 * 0.9) / 10001, rel=1e-14)
        assert got == pytest.approx(0.899911, abs=1e-6)

    def test_large_p_limit(self):
        assert expected_pvalue(0.0, 1.0, 10 ** 6, 2.0) == pytest.approx(0.0, abs=1e-11)

    def test_limit_is_v0_as_u_grows(self):
        assert expected_pvalue(0.3, 0.9, 50, 30.0) == pytest.approx(0.3, abs=1e-12)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
    @settings(max_examples=100)
    def test_monotone_in_both(self, v0, v1, bump):
        base = expected_pvalue(v0, v1, 20, 1.5)
        assert expected_pvalue(min(v0 + bump, 1.0), v1, 20, 1.5) >= base
        assert expected_pvalue(v0, min(v1 + bump, 1.0), 20, 1.5) >= base

    def test_domain(self):
        with pytest.raises(DomainError):
            expected_pvalue(-0.1, 0.5, 10, 1.5)
        with pytest.raises(DomainError):
            expected_pvalue(0.5, 0.5, 10, 1.0)


class TestAssignBins:
    def test_sorted_eight(self):
        bins = assign_bins([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
        assert bins.tolist() == [1, 2, 2, 3, 3, 4, 4, 4]

    def test_all_equal_ties(self):
        assert assign_bins([0.4] * 10).tolist() == [4] * 10

    def test_four_values_literal_rule(self):
        # the minimum is never strictly below the first order statistic,
        # so nothing lands in bin 1 at p = 4 under the literal inequalities
        assert assign_bins([0.1, 0.2, 0.3, 0.4]).tolist() == [2, 3, 4, 4]

    def test_small_p_fallback(self):
        assert assign_bins([0.5, 0.9]).tolist() == [4, 4]

    @given(st.lists(st.floats(0.001, 0.999), min_size=4, max_size=30, unique=True))
    @settings(max_examples=100)
    def test_rank_invariance(self, values):
        e = np.array(values)
        transformed = np.exp(3.0 * e) - 0.5  # strictly increasing map
        assert assign_bins(e).tolist() == assign_bins(transformed).tolist()

    def test_permutation_consistency(self):
        e = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
        perm = np.array([3, 0, 7, 2, 5, 1, 6, 4])
        assert assign_bins(e[perm]).tolist() == assign_bins(e)[perm].tolist()


class TestMonotoneTuples:
    def test_default_ladder_count(self):
        tuples = monotone_tuples(DEFAULT_LADDER)
        assert len(tuples) == 70  # C(5 + 4 - 1, 4)
        assert tuples[0] == (1.0, 1.0, 1.0, 1.0)
        assert tuples == sorted(tuples)
        assert all(list(t) == sorted(t) for t in tuples)

    def test_validation(self):
        with pytest.raises(InputError):
            monotone_tuples([])
        with pytest.raises(DomainError):
            monotone_tuples([0.0, 1.0])
        with pytest.raises(DomainError):
            monotone_tuples([1.0, 200.0])


class TestColumnPvalues:
    def test_constant_column_scores_zero(self):
        x, y = two_group_data(seed=1)
        x[:, 3] = 2.0
        v0, v1 = column_pvalues(x, y)
        assert v0[3] == 0.0
        assert np.all((0.0 <= v0) & (v0 <= 1.0))
        assert np.all((0.0 <= v1) & (v1 <= 1.0))

    def test_signal_column_has_small_v1(self):
        x, y = two_group_data(seed=2, shift=3.0)
        _, v1 = column_pvalues(x, y)
        assert v1[0] < 0.01
        assert np.median(v1[2:]) > 0.05


class TestSelectC:
    def test_single_tuple_grid(self):
        x, y = two_group_data(seed=3)
        report = select_c(x, y, grid=[(2.0, 2.0, 5.0, 10.0)])
        assert report.chosen_a == (2.0, 2.0, 5.0, 10.0)
        assert report.v0.size == x.shape[1]
        assert set(report.bins.tolist()) <= {1, 2, 3, 4}
        assert np.all(np.isin(report.c, [2.0, 5.0, 10.0]))

    def test_tie_break_lexicographic(self):
        # strong signal: every tuple reaches zero resubstitution error
        x, y = two_group_data(seed=4, shift=8.0)
        report = select_c(x, y, grid=[(5.0, 5.0, 5.0, 5.0), (1.0, 1.0, 1.0, 1.0)])
        assert report.resubstitution_error == 0.0
        assert report.chosen_a == (1.0, 1.0, 1.0, 1.0)

    def test_empty_grid_rejected(self):
        x, y = two_group_data()
        with pytest.raises(InputError):
            select_c(x, y, grid=[])

    def test_invalid_tuple_rejected(self):
        x, y = two_group_data()
        with pytest.raises(DomainError):
            select_c(x, y, grid=[(5.0, 1.0, 1.0, 1.0)])

    def test_monotone_range_guaranteed(self):
        x, y = two_group_data(seed=5)
        report = select_c(x, y, grid=(1.0, 10.0))
        a = report.chosen_a
        assert list(a) == sorted(a)
        assert all(0.0 < v <= 100.0 for v in a)

    def test_exhaustive_oracle_on_small_grid(self):
        # independently refit every tuple through the public fit path and
        # check the cached grid search returns the minimiser
        x, y = two_group_data(seed=6, n=30, p=5)
        ladder = (1.0, 10.0)
        report = select_c(x, y, grid=ladder)
        hyper = Hyperparameters()
        errors = {}
        for candidate in monotone_tuples(ladder):
            c = np.asarray(candidate)[report.bins - 1]
            model = fit_model(x, y, c, hyper=hyper)
            predicted = classify(update_psi(model, x))
            errors[candidate] = float(np.mean(predicted != y))
        assert report.resubstitution_error == pytest.approx(errors[report.chosen_a], abs=1e-12)
        assert all(errors[report.chosen_a] <= e for e in errors.values())
        winners = sorted(t for t, e in errors.items() if e == errors[report.chosen_a])
        assert report.chosen_a == winners[0]

    def test_report_round_trip(self, tmp_path):
        x, y = two_group_data(seed=7)
        report = select_c(x, y, grid=(1.0, 5.0))
        path = tmp_path / "report.json"
        report.save(path)
        loaded = SmoothingReport.load(path)
        assert loaded.chosen_a == report.chosen_a
        np.testing.assert_allclose(loaded.expected, report.expected, rtol=1e-15)
        assert loaded.bins.tolist() == report.bins.tolist()
        csv_path = tmp_path / "report.csv"
        report.write_csv(csv_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "variable,v0,v1,expected,bin,c"
        assert len(lines) == x.shape[1] + 1
