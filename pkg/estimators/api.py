from dataclasses import dataclass, field
from typing import Iterable, List

import numpy as np

from common_utils.logging_mixin import LoggingMixin
from estimators.errors import EstimatorError, InvalidSparsityError, InvalidSupportError
from numerics.api import TrainingModel, least_squares, masked_least_squares
from trellis_map.api import compute_quadratics, lambda_from_prior, map_detect_trellis
from trellis_map.oracle import map_detect_bruteforce

DEFAULT_EPS = 0.01
DEFAULT_MAX_ITER = 50
DESCENT_TOLERANCE = 1e-9

DETECTORS = ("trellis", "bruteforce")


@dataclass
class EstimatorOutput:
    """Channel estimate with its support and iteration record.

    ``objective_trace`` is the quantity each estimator minimizes, recorded per iteration.
    """
    h_hat: np.ndarray
    b_hat: np.ndarray
    iterations: int
    converged: bool
    objective_trace: List[float] = field(default_factory=list)


def joint_objective(model: TrainingModel, y, h, b, lambda_: float) -> float:
    """``J(h, b) = ||y - U (b * h)||^2 + lambda ||b||_0``."""
    b = np.asarray(b).ravel()
    residual = np.asarray(y, dtype=np.float64) - model.U @ (b * np.asarray(h, dtype=np.float64))
    return float(residual @ residual + lambda_ * np.count_nonzero(b))


def lse_estimate(model: TrainingModel, y) -> np.ndarray:
    """Unstructured least squares estimate of all ``M`` taps."""
    return least_squares(model.U, y)


def slse_genie(model: TrainingModel, y, support: Iterable[int]) -> np.ndarray:
    """Least squares on the true support columns only (genie-aided benchmark)."""
    support = np.unique(np.asarray(list(support), dtype=np.intp))
    if support.size and (support[0] < 0 or support[-1] >= model.M):
        raise InvalidSupportError(f"Support {support.tolist()} is outside [0, {model.M - 1}]")
    b = np.zeros(model.M, dtype=np.int8)
    b[support] = 1
    return masked_least_squares(model, b, y)


def omp_estimate(model: TrainingModel, y, K: int) -> EstimatorOutput:
    """Orthogonal matching pursuit with exactly ``K`` greedy selections.

    Each round picks the unused column most correlated with the residual (lowest index on
    ties) and refits all selected taps by least squares. Selection stops early only when
    the residual is exactly orthogonal to every column.

    OMP has no stopping test, so ``converged`` is always true and ``iterations`` counts the
    selections made. Its ``objective_trace`` holds the residual energy ``||y - U h||^2``
    after each selection; there is no penalty term.
    """
    if not 1 <= K <= model.M:
        raise InvalidSparsityError(f"OMP needs 1 <= K <= M, got K={K}, M={model.M}")
    y = np.asarray(y, dtype=np.float64).ravel()
    residual = y.copy()
    selected: List[int] = []
    trace: List[float] = []
    coefficients = np.zeros(0)
    for _ in range(K):
        correlation = np.abs(model.U.T @ residual)
        correlation[selected] = -1.0
        column = int(np.argmax(correlation))
        if correlation[column] == 0.0:
            break
        selected.append(column)
        coefficients = least_squares(model.columns(selected), y)
        residual = y - model.columns(selected) @ coefficients
        trace.append(float(residual @ residual))

    h_hat = np.zeros(model.M)
    b_hat = np.zeros(model.M, dtype=np.int8)
    if selected:
        h_hat[selected] = coefficients
        b_hat[selected] = 1
    return EstimatorOutput(
        h_hat=h_hat, b_hat=b_hat, iterations=len(selected), converged=True, objective_trace=trace
    )


class OMAPFGEstimator(LoggingMixin):
    """Alternating minimization of ``J(h, b)``.

    Starting from the unstructured LSE, each iteration detects the MAP support for the
    current taps and then refits the taps on that support by least squares. The loop stops
    when ``||h_i - h_{i-1}||^2 / ||h_i||^2 <= eps`` or after ``max_iter`` iterations.
    """

    def __init__(
            self,
            model: TrainingModel,
            sigma2: float,
            p_a: float,
            eps: float = DEFAULT_EPS,
            max_iter: int = DEFAULT_MAX_ITER,
            detector: str = "trellis",
            context=None,
    ) -> None:
        super().__init__(context)
        if detector not in DETECTORS:
            raise EstimatorError(f"detector must be one of {DETECTORS}, got {detector!r}")
        if max_iter < 1:
            raise EstimatorError(f"max_iter must be positive, got {max_iter}")
        self.model = model
        self.lambda_ = lambda_from_prior(sigma2, p_a)
        self.eps = eps
        self.max_iter = max_iter
        self.detector = detector

    def detect_support(self, h_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
        q = compute_quadratics(self.model, h_hat, y, self.lambda_)
        if self.detector == "bruteforce":
            support, _ = map_detect_bruteforce(q, self.model.M)
            return support
        return map_detect_trellis(q, self.model.M, keep_history=False).best_support

    def estimate(self, y) -> EstimatorOutput:
        y = np.asarray(y, dtype=np.float64).ravel()
        h_prev = lse_estimate(self.model, y)
        b_hat = np.zeros(self.model.M, dtype=np.int8)
        trace: List[float] = []
        converged = False
        iterations = 0

        while iterations < self.max_iter:
            iterations += 1
            b_hat = self.detect_support(h_prev, y)
            h_hat = masked_least_squares(self.model, b_hat, y)
            objective = joint_objective(self.model, y, h_hat, b_hat, self.lambda_)
            if trace and objective > trace[-1] + DESCENT_TOLERANCE:
                self.log.warning("Objective rose from %.12g to %.12g at iteration %d",
                                 trace[-1], objective, iterations)
            trace.append(objective)

            change = float(np.sum((h_hat - h_prev) ** 2))
            energy = float(h_hat @ h_hat)
            h_prev = h_hat
            if energy == 0.0:
                # zero estimate: converged only if nothing moved
                converged = change == 0.0
                break
            if change / energy <= self.eps:
                converged = True
                break

        self.log.debug("OMAPFG stopped after %d iterations (converged=%s, support size %d)",
                       iterations, converged, int(b_hat.sum()))
        return EstimatorOutput(
            h_hat=h_prev,
            b_hat=np.asarray(b_hat, dtype=np.int8),
            iterations=iterations,
            converged=converged,
            objective_trace=trace,
        )


def omapfg_estimate(
        model: TrainingModel,
        y,
        sigma2: float,
        p_a: float,
        eps: float = DEFAULT_EPS,
        max_iter: int = DEFAULT_MAX_ITER,
        detector: str = "trellis",
) -> EstimatorOutput:
    """Run the alternating MAP / least squares estimator once.

    :param model: training model
    :param y: observation, length N
    :param sigma2: noise variance (known)
    :param p_a: Bernoulli support prior, in (0, 1/2)
    :param eps: relative change threshold for convergence
    :param max_iter: iteration cap
    :param detector: ``trellis`` or ``bruteforce`` MAP step
    :return: EstimatorOutput
    """
    return OMAPFGEstimator(model, sigma2, p_a, eps=eps, max_iter=max_iter, detector=detector).estimate(y)
