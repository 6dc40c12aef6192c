import numpy as np
import pytest
import scipy.linalg

from fcinet.egc import CausalNetwork, EgcResult
from fcinet.errors import InputError
from fcinet.fcix import fcix_pipeline
from fcinet.synth import (VarGroundTruth, edge_recovery_score,
                          simulate_price_panel, simulate_var)


def lyapunov_stationary_cov(truth):
    """Stationary covariance oracle from the discrete Lyapunov equation on
    the companion form of the reduced-form system."""
    k, p = truth.k, truth.p
    comp = np.zeros((k * p, k * p))
    comp[:k] = np.hstack(list(truth.reduced_form()))
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    inv = np.linalg.inv(np.eye(k) - truth.lag0)
    innov_cov = inv @ np.diag(truth.noise_sd ** 2) @ inv.T
    q = np.zeros((k * p, k * p))
    q[:k, :k] = innov_cov
    big = scipy.linalg.solve_discrete_lyapunov(comp, q)
    return big[:k, :k]


class TestVarGroundTruth:
    def test_rejects_upper_triangular_lag0(self):
        with pytest.raises(InputError, match="lower triangular"):
            VarGroundTruth(names=("a", "b"),
                           lagged=np.zeros((1, 2, 2)),
                           lag0=np.array([[0.0, 0.5], [0.0, 0.0]]),
                           noise_sd=np.ones(2))

    def test_rejects_unstable(self):
        with pytest.raises(InputError, match="spectral radius"):
            VarGroundTruth(names=("a", "b"),
                           lagged=np.array([[[1.1, 0.0], [0.0, 0.2]]]),
                           lag0=np.zeros((2, 2)),
                           noise_sd=np.ones(2))

    def test_edge_sets(self):
        lag = np.zeros((2, 3, 3))
        lag[0, 1, 0] = 0.3       # a -> b
        lag[1, 2, 1] = 0.2       # b -> c at lag 2
        np.fill_diagonal(lag[0], 0.4)
        lag0 = np.zeros((3, 3))
        lag0[2, 0] = 0.5         # a -> c instantaneous
        truth = VarGroundTruth(names=("a", "b", "c"), lagged=lag, lag0=lag0,
                               noise_sd=np.ones(3))
        assert truth.lagged_edges() == {("a", "b"), ("b", "c")}
        assert truth.instantaneous_edges() == {("a", "c")}

    def test_json_round_trip(self, recovery_truth):
        back = VarGroundTruth.from_json(recovery_truth.to_json())
        assert back.names == recovery_truth.names
        assert np.array_equal(back.lagged, recovery_truth.lagged)
        assert np.array_equal(back.lag0, recovery_truth.lag0)
        with pytest.raises(InputError):
            VarGroundTruth.from_json("{\"names\": [\"a\"]}")


class TestSimulateVar:
    def test_zero_coefficients_white_noise(self):
        truth = VarGroundTruth(names=("a", "b"), lagged=np.zeros((1, 2, 2)),
                               lag0=np.zeros((2, 2)), noise_sd=np.ones(2))
        t = 20_000
        table = simulate_var(truth, t, 100, seed=0)
        for row in table.values:
            r1 = np.corrcoef(row[:-1], row[1:])[0, 1]
            assert abs(r1) <= 5 / np.sqrt(t)

    def test_scalar_ar1_autocorrelation(self):
        truth = VarGroundTruth(names=("a", "b"),
                               lagged=np.array([[[0.7, 0.0], [0.0, 0.0]]]),
                               lag0=np.zeros((2, 2)), noise_sd=np.ones(2))
        table = simulate_var(truth, 10_000, 200, seed=1)
        row = table.values[0]
        r1 = np.corrcoef(row[:-1], row[1:])[0, 1]
        assert r1 == pytest.approx(0.7, abs=0.03)

    def test_seeded_determinism(self, recovery_truth):
        a = simulate_var(recovery_truth, 500, 100, seed=2)
        b = simulate_var(recovery_truth, 500, 100, seed=2)
        assert np.array_equal(a.values, b.values)
        c = simulate_var(recovery_truth, 500, 100, seed=3)
        assert not np.array_equal(a.values, c.values)

    def test_stationary_covariance_oracle(self):
        lag = np.array([[[0.5, 0.2, 0.0],
                         [0.0, 0.3, 0.1],
                         [0.0, 0.0, 0.4]]])
        lag0 = np.zeros((3, 3))
        lag0[1, 0] = 0.4
        truth = VarGroundTruth(names=("a", "b", "c"), lagged=lag, lag0=lag0,
                               noise_sd=np.array([1.0, 0.8, 1.2]))
        table = simulate_var(truth, 100_000, 500, seed=4)
        sample = np.cov(table.values)
        want = lyapunov_stationary_cov(truth)
        assert np.allclose(sample, want, rtol=0.05, atol=0.05 * want.max())

    def test_instantaneous_applied_in_order(self):
        # with x -> y at lag 0 and no noise on y, y must equal 0.8 x exactly
        truth = VarGroundTruth(names=("x", "y"),
                               lagged=np.zeros((1, 2, 2)),
                               lag0=np.array([[0.0, 0.0], [0.8, 0.0]]),
                               noise_sd=np.array([1.0, 1e-12]))
        table = simulate_var(truth, 200, 0, seed=5)
        x, y = table.values
        assert np.allclose(y, 0.8 * x, atol=1e-9)


class TestSimulatePricePanel:
    def test_zero_dispersion_single_path(self):
        panel = simulate_price_panel(5, 40, 0.0, seed=6)
        assert np.allclose(panel.prices, panel.prices[0], rtol=1e-12)
        series, _ = fcix_pipeline(panel)
        assert np.max(np.abs(series.values)) <= 1e-10

    def test_spike_day(self):
        disp = np.full(50, 0.01)
        disp[20] = 0.15
        panel = simulate_price_panel(12, 51, disp, seed=7)
        series, _ = fcix_pipeline(panel)
        assert int(np.argmax(series.values)) == 20

    def test_schedule_length_validation(self):
        with pytest.raises(InputError, match="length"):
            simulate_price_panel(4, 10, np.ones(5), seed=8)

    def test_deterministic(self):
        a = simulate_price_panel(4, 30, 0.02, seed=9)
        b = simulate_price_panel(4, 30, 0.02, seed=9)
        assert np.array_equal(a.prices, b.prices)


class TestEdgeRecovery:
    def net(self, edges):
        return CausalNetwork(
            nodes=tuple("ABCDE"), alpha=0.01,
            edges=tuple(EgcResult(s, d, kind, 0.1, 1, 1, p_value=0.001)
                        for s, d, kind in edges),
            self_loops=())

    def test_perfect_recovery(self, recovery_truth):
        edges = [(s, d, "lagged") for s, d in recovery_truth.lagged_edges()]
        edges += [(s, d, "instantaneous")
                  for s, d in recovery_truth.instantaneous_edges()]
        scores = edge_recovery_score(recovery_truth, self.net(edges))
        for kind in ("lagged", "instantaneous"):
            assert scores[kind]["precision"] == 1.0
            assert scores[kind]["recall"] == 1.0

    def test_empty_inferred_convention(self, recovery_truth):
        scores = edge_recovery_score(recovery_truth, self.net([]))
        assert scores["lagged"]["precision"] == 1.0
        assert scores["lagged"]["recall"] == 0.0
        assert scores["lagged"]["zero_denominator"]

    def test_hand_computed_sets(self, recovery_truth):
        # truth lagged: A->B, B->C, C->D; predict two right, one wrong
        edges = [("A", "B", "lagged"), ("B", "C", "lagged"), ("E", "A", "lagged")]
        scores = edge_recovery_score(recovery_truth, self.net(edges))
        assert scores["lagged"]["precision"] == pytest.approx(2 / 3)
        assert scores["lagged"]["recall"] == pytest.approx(2 / 3)
