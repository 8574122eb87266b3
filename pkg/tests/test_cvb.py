"""Selection sweeps, class probabilities, and model round-trips."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptda.cvb import (
    ClassProbabilities,
    FittedModel,
    Hyperparameters,
    classify,
    fit_model,
    log_path_probability_matrix,
    path_probability,
    update_omega,
    update_psi,
)
from ptda.errors import DomainError, InputError
from ptda.polya_tree import CellCounts, CentringGaussian, PolyaTreeSpec

from oracles import jacobi_omega

STD = CentringGaussian(0.0, 1.0)


def training_model(seed=0, n=40, p=6, c=1.0, shift=1.5, **kwargs):
    rng = np.random.default_rng(seed)
    y = np.array([1, 0] * (n // 2))
    x = rng.normal(size=(n, p))
    x[:, 0] += shift * y  # one informative variable
    return x, y, fit_model(x, y, c, **kwargs)


class TestHyperparameters:
    def test_validation(self):
        with pytest.raises(DomainError):
            Hyperparameters(u=1.0)
        with pytest.raises(DomainError):
            Hyperparameters(a_y=0.0)
        assert Hyperparameters().u == 1.5


class TestUpdateOmega:
    def test_zero_evidence_first_sweep(self):
        state = update_omega(np.zeros(4), Hyperparameters(u=2.0), tol=1e-30,
                             max_iter=1, omega0=np.zeros(4))
        assert state.omega[0] == pytest.approx(0.05, abs=1e-15)
        # later coordinates see the updated earlier ones within the sweep
        assert state.omega[1] == pytest.approx(1.05 / 20.0, abs=1e-12)

    def test_huge_evidence_saturates_open(self):
        state = update_omega(np.array([1e6]), Hyperparameters())
        assert 0.0 < state.omega[0] < 1.0
        assert state.omega[0] > 1.0 - 1e-12

    def test_matches_independent_fixed_point(self):
        # frozen from a Jacobi iteration and a root finder agreeing to 1e-16
        state = update_omega(np.array([2.0, -2.0]), Hyperparameters(u=1.5),
                             tol=1e-28, max_iter=10000, omega0=np.array([0.5, 0.5]))
        assert state.converged
        assert state.omega[0] == pytest.approx(0.6770553230012388, abs=1e-8)
        assert state.omega[1] == pytest.approx(0.0671823997359901, abs=1e-8)
        live = jacobi_omega([2.0, -2.0], 2, 1.5, [0.5, 0.5])
        np.testing.assert_allclose(state.omega, live, atol=1e-10)

    def test_determinism(self):
        rng = np.random.default_rng(2)
        bf = rng.normal(size=30)
        a = update_omega(bf, Hyperparameters())
        b = update_omega(bf, Hyperparameters())
        assert np.array_equal(a.omega, b.omega)
        assert a.iteration == b.iteration

    @given(st.floats(-5.0, 5.0), st.floats(0.1, 3.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_evidence(self, bf, bump):
        base = update_omega(np.array([bf, 0.3]), Hyperparameters(), max_iter=1,
                            omega0=np.array([0.5, 0.5]))
        more = update_omega(np.array([bf + bump, 0.3]), Hyperparameters(), max_iter=1,
                            omega0=np.array([0.5, 0.5]))
        assert more.omega[0] > base.omega[0]

    def test_penalty_decreasing_in_u(self):
        low = update_omega(np.full(5, 1.0), Hyperparameters(u=1.2), max_iter=1,
                           omega0=np.full(5, 0.5))
        high = update_omega(np.full(5, 1.0), Hyperparameters(u=3.0), max_iter=1,
                            omega0=np.full(5, 0.5))
        assert np.all(high.omega < low.omega)

    def test_open_interval_invariant(self):
        state = update_omega(np.array([800.0, -800.0]), Hyperparameters())
        assert np.all(state.omega > 0.0) and np.all(state.omega < 1.0)

    def test_preconditions(self):
        with pytest.raises(InputError):
            update_omega(np.array([]), Hyperparameters())
        with pytest.raises(DomainError):
            update_omega(np.zeros(3), Hyperparameters(), tol=0.0)


class TestPathProbability:
    def test_empty_counts_halving(self):
        cc = CellCounts.from_path_map({"": (0, 0)}, 3)
        spec = PolyaTreeSpec(STD, 1.0, 3)
        assert path_probability(0.4, cc, 1, spec) == pytest.approx(0.125, rel=1e-12)

    def test_single_shared_point(self):
        cc = CellCounts.from_path_map({"": (1, 0), "0": (1, 0)}, 1)
        spec = PolyaTreeSpec(STD, 7.0, 1)  # alpha at layer 1 is 1 regardless of c
        assert path_probability(-0.5, cc, 1, spec) == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_single_opposite_point(self):
        cc = CellCounts.from_path_map({"": (1, 0), "1": (1, 0)}, 1)
        spec = PolyaTreeSpec(STD, 7.0, 1)
        assert path_probability(-0.5, cc, 1, spec) == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_batch_matches_scalar(self):
        x, y, model = training_model(seed=3)
        rng = np.random.default_rng(9)
        new = rng.normal(size=(8, model.p))
        lp1, lp0 = log_path_probability_matrix(model.forest(), model.c, new)
        for r in range(8):
            for j in range(model.p):
                assert math.exp(lp1[r, j]) == pytest.approx(
                    path_probability(new[r, j], model.counts[j], 1, model.trees[j]), rel=1e-10)
                assert math.exp(lp0[r, j]) == pytest.approx(
                    path_probability(new[r, j], model.counts[j], 0, model.trees[j]), rel=1e-10)


class TestUpdatePsi:
    def _zero_omega_model(self, n1, n0, a_y=1.0, b_y=1.0):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(n1 + n0, 3))
        y = np.array([1] * n1 + [0] * n0)
        model = fit_model(x, y, 1.0, hyper=Hyperparameters(a_y, b_y, 1.5))
        model.selection.omega = np.zeros(model.p)
        return model

    def test_balanced_no_signal_is_half(self):
        model = self._zero_omega_model(12, 12)
        psi = update_psi(model, np.zeros((5, 3)))
        np.testing.assert_allclose(psi.psi, 0.5, atol=1e-15)

    def test_prior_odds_only_rule(self):
        model = self._zero_omega_model(300, 100)
        psi = update_psi(model, np.zeros((1, 3)))
        exact = 1.0 / (1.0 + (1.0 + 100) / (1.0 + 300))
        assert psi.psi[0] == pytest.approx(exact, abs=1e-14)
        assert psi.psi[0] == pytest.approx(0.75, abs=0.005)

    def test_single_variable_hand_evaluation(self):
        # depth-2 tree, one variable, omega forced to 1: psi must equal the
        # hand-evaluated expit of prior odds + log path-probability ratio
        x = np.array([[-1.2], [-0.8], [-1.0], [0.9], [1.1], [1.3]])
        y = np.array([1, 1, 1, 0, 0, 0])
        model = fit_model(x, y, 1.0, depth=2)
        model.selection.omega = np.ones(1)
        x_new = np.array([[-1.0]])
        tree, cc = model.trees[0], model.counts[0]
        pi1 = path_probability(-1.0, cc, 1, tree)
        pi0 = path_probability(-1.0, cc, 0, tree)
        expected = 1.0 / (1.0 + math.exp(-(math.log(4.0 / 4.0) + math.log(pi1) - math.log(pi0))))
        psi = update_psi(model, x_new)
        assert psi.psi[0] == pytest.approx(expected, rel=1e-12)
        assert psi.psi[0] > 0.8  # the new point sits with group 1

    def test_dimension_mismatch(self):
        _, _, model = training_model()
        with pytest.raises(InputError):
            update_psi(model, np.zeros((2, model.p + 1)))


class TestClassify:
    def test_tie_goes_to_group_one(self):
        assert classify(ClassProbabilities(np.array([0.5])))[0] == 1

    def test_threshold(self):
        out = classify(ClassProbabilities(np.array([0.49, 0.51])))
        assert out.tolist() == [0, 1]

    def test_threshold_domain(self):
        with pytest.raises(InputError):
            classify(ClassProbabilities(np.array([0.5])), threshold=0.0)
        with pytest.raises(InputError):
            classify(ClassProbabilities(np.array([0.5])), threshold=1.0)


class TestFittedModel:
    def test_json_round_trip_preserves_reals(self, tmp_path):
        x, y, model = training_model(seed=8, n=30, p=4, c=2.5)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = FittedModel.load(path)
        np.testing.assert_allclose(loaded.omega, model.omega, rtol=1e-15)
        # json round-trips repr floats exactly
        doc = json.loads(path.read_text())
        assert doc["variables"][0]["omega"] == model.omega[0]
        for j in range(model.p):
            assert loaded.counts[j].as_path_map() == model.counts[j].as_path_map()

    def test_loaded_model_predicts_identically(self, tmp_path):
        x, y, model = training_model(seed=12, n=40, p=5)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = FittedModel.load(path)
        rng = np.random.default_rng(1)
        new = rng.normal(size=(12, 5))
        a = update_psi(model, model.transform_new(new))
        b = update_psi(loaded, loaded.transform_new(new))
        np.testing.assert_allclose(a.psi, b.psi, rtol=1e-12)

    def test_standardization_folded_into_saved_centring(self, tmp_path):
        rng = np.random.default_rng(3)
        raw = rng.normal(loc=50.0, scale=9.0, size=(30, 2))
        y = np.array([1, 0] * 15)
        means = raw.mean(axis=0)
        sds = raw.std(axis=0, ddof=1)
        z = (raw - means) / sds
        model = fit_model(z, y, 1.0, standardization=(means, sds))
        path = tmp_path / "m.json"
        model.save(path)
        loaded = FittedModel.load(path)
        new = rng.normal(loc=50.0, scale=9.0, size=(6, 2))
        a = update_psi(model, model.transform_new(new))
        b = update_psi(loaded, loaded.transform_new(new))
        np.testing.assert_allclose(a.psi, b.psi, rtol=1e-9)

    def test_fit_converges_and_selects_signal(self):
        x, y, model = training_model(seed=5, n=60, p=8, shift=2.5)
        assert model.selection.converged
        assert model.selection.iteration <= 100
        assert model.omega[0] == max(model.omega)
