"""
Coherence-minimizing RIS pattern design on the complex-circle manifold.

The pattern minimizes ||A^H A - xi I||_F^2 with A = Psi^T F_R under
|Psi| = 1. Each outer iteration sets xi to its closed-form optimum and then
takes one Riemannian steepest-descent step with xi frozen. pymanopt's
backtracking line search sizes the step and retracts onto the circle.
"""

from dataclasses import dataclass, field
from functools import partial
from typing import List, Tuple

import numpy as np
from pymanopt.manifolds import ComplexCircle
from pymanopt.optimizers.line_search import BackTrackingLineSearcher

from config import Config
from ris_engine.schedules import PhaseSchedule
from utils.errors import DegenerateInputError, DimensionError, NumericalError
from utils.linalg import as_matrix
from utils.logger import logger

GRADIENT_CHECK_TOL = 1e-5


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = Config.RIS_MAX_ITERS
    tol: float = Config.RIS_TOL
    initial_step: float = Config.RIS_ARMIJO_STEP
    shrink: float = Config.RIS_ARMIJO_SHRINK
    sufficient_decrease: float = Config.RIS_ARMIJO_C
    max_backtracks: int = 60
    check_gradient: bool = True


@dataclass
class OptimizationResult:
    schedule: PhaseSchedule
    trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def mutual_coherence(a) -> float:
    """Largest normalized inner product between two distinct columns"""
    a = as_matrix(a)
    if a.shape[1] < 2:
        raise DimensionError("mutual coherence needs at least two columns")
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        raise DegenerateInputError("matrix has a zero column")
    unit = a / norms
    gram = np.abs(unit.conj().T @ unit)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def _psi(schedule) -> np.ndarray:
    return schedule.psi if isinstance(schedule, PhaseSchedule) else np.asarray(schedule, dtype=np.complex128)


def design_objective(schedule, f_ris: np.ndarray, xi: float) -> Tuple[float, np.ndarray]:
    """Objective value and its Wirtinger gradient with respect to conj(Psi).

    With A = Psi^T F_R and E = A^H A - xi I the gradient is 2 conj(F_R) (A E)^T.
    The steepest-ascent direction in real coordinates is twice this value.
    """
    psi = _psi(schedule)
    a = psi.T @ f_ris
    e = a.conj().T @ a - xi * np.eye(f_ris.shape[1])
    value = float(np.real(np.vdot(e, e)))
    grad = 2.0 * f_ris.conj() @ (a @ e).T
    return value, grad


def optimal_xi(schedule, f_ris: np.ndarray) -> float:
    """xi* = tr(A^H A) / G_R, the mean of the Gram diagonal"""
    a = _psi(schedule).T @ f_ris
    return float(np.real(np.vdot(a, a))) / f_ris.shape[1]


def finite_difference_gradient(schedule, f_ris: np.ndarray, xi: float, step: float = 1e-6) -> np.ndarray:
    """Central differences along real and imaginary parts, combined as (d/dx + i d/dy) / 2"""
    psi = np.array(_psi(schedule), dtype=np.complex128)
    grad = np.zeros_like(psi)
    for idx in np.ndindex(psi.shape):
        partials = []
        for direction in (1.0, 1j):
            plus = psi.copy()
            minus = psi.copy()
            plus[idx] += step * direction
            minus[idx] -= step * direction
            f_plus, _ = design_objective(plus, f_ris, xi)
            f_minus, _ = design_objective(minus, f_ris, xi)
            partials.append((f_plus - f_minus) / (2.0 * step))
        grad[idx] = 0.5 * (partials[0] + 1j * partials[1])
    return grad


def gradient_error(schedule, f_ris: np.ndarray, xi: float, step: float = 1e-6) -> float:
    """Relative Frobenius gap between analytic and finite-difference gradients"""
    _, analytic = design_objective(schedule, f_ris, xi)
    numeric = finite_difference_gradient(schedule, f_ris, xi, step)
    scale = max(np.linalg.norm(numeric), np.finfo(float).tiny)
    return float(np.linalg.norm(analytic - numeric) / scale)


def riemannian_gradient(manifold: ComplexCircle, point: np.ndarray, euclid_grad: np.ndarray) -> np.ndarray:
    """Tangent projection: egrad - Re{egrad * conj(psi)} * psi"""
    return manifold.projection(point, euclid_grad)


def _frozen_cost(flat_point: np.ndarray, f_ris: np.ndarray, shape: Tuple[int, int], xi: float) -> float:
    return design_objective(flat_point.reshape(shape), f_ris, xi)[0]


def optimize_schedule(f_ris: np.ndarray, n_ris: int, j_blocks: int, init: PhaseSchedule,
                      opts: OptimizerOptions = None) -> OptimizationResult:
    opts = opts or OptimizerOptions()
    if init.psi.shape != (n_ris, j_blocks):
        raise DimensionError(f"init is {init.psi.shape}, expected {(n_ris, j_blocks)}")
    if f_ris.shape[0] != n_ris:
        raise DimensionError("f_ris rows must equal n_ris")

    manifold = ComplexCircle(n_ris * j_blocks)
    shape = (n_ris, j_blocks)
    point = (init.psi / np.abs(init.psi)).ravel()

    def evaluate(flat_point):
        psi = flat_point.reshape(shape)
        xi = optimal_xi(psi, f_ris)
        value, egrad = design_objective(psi, f_ris, xi)
        if not np.isfinite(value):
            raise NumericalError("RIS design objective became non-finite")
        return value, xi, egrad.ravel()

    if opts.check_gradient:
        xi0 = optimal_xi(point.reshape(shape), f_ris)
        err = gradient_error(point.reshape(shape), f_ris, xi0)
        if err > GRADIENT_CHECK_TOL:
            raise NumericalError(f"analytic gradient disagrees with finite differences ({err:.2e})")
        logger.debug(f"RIS design gradient check passed, relative error {err:.2e}")

    searcher = BackTrackingLineSearcher(
        contraction_factor=opts.shrink,
        sufficient_decrease=opts.sufficient_decrease,
        max_iterations=opts.max_backtracks,
        initial_step_size=opts.initial_step,
    )
    value, xi, egrad = evaluate(point)
    trace = [value]
    converged = False
    iteration = 0

    for iteration in range(1, opts.max_iters + 1):
        # real-coordinate gradient is twice the Wirtinger one
        rgrad = 2.0 * riemannian_gradient(manifold, point, egrad)
        grad_norm = float(manifold.norm(point, rgrad))
        if grad_norm < opts.tol:
            converged = True
            iteration -= 1
            break

        cost = partial(_frozen_cost, f_ris=f_ris, shape=shape, xi=xi)
        step_size, candidate = searcher.search(cost, manifold, point, -rgrad, value, -grad_norm ** 2)
        if step_size <= 0.0:
            converged = True
            logger.debug(f"RIS design: line search found no decrease at iteration {iteration}")
            break

        point = candidate
        new_value, xi, egrad = evaluate(point)
        previous = value
        value = new_value
        trace.append(value)

        if (previous - new_value) <= opts.tol * max(abs(previous), np.finfo(float).tiny):
            converged = True
            break

    psi = point.reshape(shape)
    psi = psi / np.abs(psi)
    psi.setflags(write=False)
    logger.debug(
        f"RIS design finished after {iteration} iterations: "
        f"objective {trace[0]:.4g} -> {trace[-1]:.4g}"
    )
    return OptimizationResult(
        schedule=PhaseSchedule(psi=psi, origin="optimized"),
        trace=trace,
        iterations=iteration,
        converged=converged,
    )
