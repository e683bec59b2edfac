import numpy as np
import pytest
from numpy.testing import assert_allclose
from pymanopt.manifolds import ComplexCircle
from pymanopt.optimizers.line_search import BackTrackingLineSearcher

from channel_engine.dictionaries import steering_matrix
from ris_engine import designer
from ris_engine.designer import (
    OptimizerOptions,
    design_objective,
    finite_difference_gradient,
    gradient_error,
    mutual_coherence,
    optimal_xi,
    optimize_schedule,
    riemannian_gradient,
)
from ris_engine.schedules import PhaseSchedule, random_schedule
from utils.errors import DegenerateInputError, DimensionError
from utils.helpers import Helpers


def pairwise_coherence(a):
    best = 0.0
    for m in range(a.shape[1]):
        for n in range(m + 1, a.shape[1]):
            c = abs(np.vdot(a[:, m], a[:, n])) / (np.linalg.norm(a[:, m]) * np.linalg.norm(a[:, n]))
            best = max(best, c)
    return best


class TestMutualCoherence:
    def test_identity(self):
        assert mutual_coherence(np.eye(4)) == 0.0

    def test_repeated_column(self, rng):
        a = Helpers.crandn(rng, 5, 3)
        a[:, 2] = 3j * a[:, 0]
        assert mutual_coherence(a) == pytest.approx(1.0)

    def test_matches_pairwise_loop(self, rng):
        a = Helpers.crandn(rng, 8, 12)
        assert mutual_coherence(a) == pytest.approx(pairwise_coherence(a), abs=1e-12)

    def test_row_permutation_invariance(self, rng):
        a = Helpers.crandn(rng, 10, 6)
        assert mutual_coherence(a[rng.permutation(10)]) == pytest.approx(mutual_coherence(a), abs=1e-12)

    def test_kronecker_decoupling(self, rng):
        """mu(kron(A, B)) = max(mu(A), mu(B))"""
        f_b = np.conj(steering_matrix(4, 16))
        for _ in range(100):
            psi = random_schedule(8, 6, rng).psi
            b = psi.T @ steering_matrix(8, 12)
            expected = max(mutual_coherence(f_b), mutual_coherence(b))
            assert mutual_coherence(np.kron(f_b, b)) == pytest.approx(expected, abs=1e-12)

    def test_zero_column(self):
        with pytest.raises(DegenerateInputError):
            mutual_coherence(np.array([[1.0, 0.0], [1.0, 0.0]]))

    def test_single_column(self):
        with pytest.raises(DimensionError):
            mutual_coherence(np.ones((3, 1)))


class TestObjective:
    def test_perfect_gram_is_zero(self):
        """Orthogonal equal-norm columns of A give a zero objective at xi*"""
        n = 4
        f = steering_matrix(n, n)
        psi = np.eye(n)   # A = F_R, unitary
        xi = optimal_xi(psi, f)
        value, _ = design_objective(psi, f, xi)
        assert xi == pytest.approx(1.0)
        assert value == pytest.approx(0.0, abs=1e-20)

    def test_scalar_case(self):
        f = np.array([[1.0 + 0.0j]])
        psi = np.array([[np.exp(0.3j)]])
        value, grad = design_objective(psi, f, 0.5)
        assert value == pytest.approx(0.25)
        assert_allclose(grad, finite_difference_gradient(psi, f, 0.5), rtol=1e-5)

    def test_gradient_matches_finite_differences(self, rng):
        f = steering_matrix(6, 10)
        for _ in range(20):
            psi = random_schedule(6, 4, rng).psi
            xi = optimal_xi(psi, f) * (0.5 + rng.random())
            assert gradient_error(psi, f, xi) < 1e-5

    def test_optimal_xi_is_trace_over_grid(self, rng):
        f = steering_matrix(8, 16)
        psi = random_schedule(8, 5, rng).psi
        a = psi.T @ f
        assert optimal_xi(psi, f) == pytest.approx(np.trace(a.conj().T @ a).real / 16)
        assert optimal_xi(psi, f) == pytest.approx(np.mean(np.diag(a.conj().T @ a).real))

    def test_all_ones_closed_form(self):
        """Psi all ones: tr(A^H A) = ||1^T F_R||^2 * J"""
        f = steering_matrix(8, 16)
        psi = np.ones((8, 3))
        expected = 3 * np.linalg.norm(np.ones(8) @ f) ** 2 / 16
        assert optimal_xi(psi, f) == pytest.approx(expected)

    def test_optimal_xi_minimizes(self, rng):
        f = steering_matrix(8, 16)
        psi = random_schedule(8, 5, rng).psi
        xi = optimal_xi(psi, f)
        best, _ = design_objective(psi, f, xi)
        for delta in (-0.1, 0.1):
            assert design_objective(psi, f, xi + delta)[0] >= best


class TestRiemannianGradient:
    def test_tangent(self, rng):
        f = steering_matrix(8, 16)
        psi = random_schedule(8, 5, rng).psi
        _, egrad = design_objective(psi, f, optimal_xi(psi, f))
        manifold = ComplexCircle(psi.size)
        rgrad = riemannian_gradient(manifold, psi.ravel(), egrad.ravel())
        assert_allclose(np.real(rgrad * np.conj(psi.ravel())), 0.0, atol=1e-10)


class TestOptimizeSchedule:
    def test_trace_non_increasing_and_unit_modulus(self, rng):
        f = steering_matrix(8, 16)
        init = random_schedule(8, 6, rng)
        result = optimize_schedule(f, 8, 6, init, OptimizerOptions(max_iters=100))
        trace = np.array(result.trace)
        assert np.all(np.diff(trace) <= 1e-12 * trace[:-1])
        assert result.schedule.max_modulus_error() < 1e-12
        assert result.schedule.origin == "optimized"
        assert trace[-1] < trace[0]

    def test_steps_come_from_backtracking_line_search(self, rng, monkeypatch):
        calls = []

        class RecordingSearcher(BackTrackingLineSearcher):
            def __init__(self, **kwargs):
                calls.append(kwargs)
                super().__init__(**kwargs)

            def search(self, objective, manifold, x, d, f0, df0):
                assert objective(x) == pytest.approx(f0)
                assert df0 == pytest.approx(-np.linalg.norm(d) ** 2)
                calls.append("search")
                return super().search(objective, manifold, x, d, f0, df0)

        monkeypatch.setattr(designer, "BackTrackingLineSearcher", RecordingSearcher)
        f = steering_matrix(8, 16)
        opts = OptimizerOptions(
            max_iters=5, initial_step=1.0, shrink=0.5, sufficient_decrease=1e-4,
            max_backtracks=60, check_gradient=False,
        )
        result = optimize_schedule(f, 8, 6, random_schedule(8, 6, rng), opts)
        assert calls[0] == {
            "contraction_factor": 0.5, "sufficient_decrease": 1e-4,
            "max_iterations": 60, "initial_step_size": 1.0,
        }
        assert calls.count("search") == result.iterations >= 1
        assert result.trace[-1] < result.trace[0]

    def test_zero_iterations_returns_init(self):
        f = steering_matrix(4, 4)
        init = PhaseSchedule(psi=np.ones((4, 4), dtype=np.complex128), origin="random")
        result = optimize_schedule(f, 4, 4, init, OptimizerOptions(max_iters=0, check_gradient=False))
        assert result.iterations == 0
        assert len(result.trace) == 1
        assert_allclose(result.schedule.psi, np.ones((4, 4)))

    def test_stationary_init_is_kept(self):
        """Psi = sqrt(N) conj(F_R) makes A a scaled identity, so the gradient vanishes"""
        f = steering_matrix(4, 4)
        init = PhaseSchedule(psi=2.0 * np.conj(f), origin="random")
        result = optimize_schedule(f, 4, 4, init, OptimizerOptions(check_gradient=False))
        assert result.converged
        assert result.iterations == 0
        assert result.trace[0] == pytest.approx(0.0, abs=1e-20)
        assert_allclose(result.schedule.psi, init.psi, atol=1e-12)

    def test_shape_checks(self, rng):
        f = steering_matrix(8, 16)
        with pytest.raises(DimensionError):
            optimize_schedule(f, 8, 5, random_schedule(8, 6, rng))

    def test_reduces_coherence(self):
        """The optimized pattern beats its random start in at least 90% of paired runs"""
        f = steering_matrix(32, 64)
        wins = 0
        runs = 10
        for seed in range(runs):
            init = random_schedule(32, 30, np.random.default_rng(seed))
            result = optimize_schedule(f, 32, 30, init, OptimizerOptions(max_iters=200, check_gradient=False))
            wins += mutual_coherence(result.schedule.psi.T @ f) < mutual_coherence(init.psi.T @ f)
        assert wins >= 0.9 * runs

    @pytest.mark.slow
    def test_reduces_coherence_fifty_runs(self):
        f = steering_matrix(32, 64)
        wins = 0
        for seed in range(50):
            init = random_schedule(32, 30, np.random.default_rng(1000 + seed))
            result = optimize_schedule(f, 32, 30, init)
            wins += mutual_coherence(result.schedule.psi.T @ f) < mutual_coherence(init.psi.T @ f)
        assert wins >= 45
