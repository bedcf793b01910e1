"""Dense real linear algebra shared by the estimators."""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from numerics.errors import (
    DimensionMismatchError,
    InvalidTrainingError,
    RankDeficientError,
    SingularGramError,
)

logger = logging.getLogger(__name__)

# Smallest tolerated ratio min|R_ii| / max|R_ii| of the triangular QR factor.
RANK_TOLERANCE = 1e-10


def _frozen(array) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TrainingModel:
    """Training sequence ``u`` and its (L+M-1) x M convolution matrix ``U``."""
    u: np.ndarray
    M: int
    U: np.ndarray

    @property
    def L(self) -> int:
        return int(self.u.shape[0])

    @property
    def N(self) -> int:
        return self.L + self.M - 1

    def columns(self, support) -> np.ndarray:
        """Return ``U`` restricted to the given column indices."""
        return self.U[:, np.asarray(support, dtype=np.intp)]

    def scaled(self, h) -> np.ndarray:
        """Return ``U_h = U diag(h)``."""
        return self.U * np.asarray(h, dtype=np.float64)[np.newaxis, :]


def build_training_matrix(u, M: int) -> TrainingModel:
    """Build the convolution (Toeplitz) matrix of a training sequence.

    Column ``c`` is ``u`` shifted down by ``c`` rows, so ``U[r, c] = u[r - c]`` when
    ``0 <= r - c < L`` and zero otherwise.

    :param u: training symbols, length L
    :param M: channel memory, M >= L
    :return: TrainingModel
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    L = u.shape[0]
    if L == 0:
        raise InvalidTrainingError("Training sequence must contain at least one symbol")
    if M < L:
        raise InvalidTrainingError(f"Channel memory M={M} must be at least the training length L={L}")
    first_column = np.concatenate([u, np.zeros(M - 1)])
    first_row = np.zeros(M)
    first_row[0] = u[0]
    U = scipy.linalg.toeplitz(first_column, first_row)
    return TrainingModel(u=_frozen(u), M=int(M), U=_frozen(U))


def _qr(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    Q, R = scipy.linalg.qr(A, mode="economic")
    diagonal = np.abs(np.diag(R))
    largest = diagonal.max() if diagonal.size else 0.0
    if largest == 0.0 or diagonal.min() / largest < RANK_TOLERANCE:
        ratio = 0.0 if largest == 0.0 else diagonal.min() / largest
        logger.debug("QR of %s matrix rejected, diagonal ratio %.3e", A.shape, ratio)
        raise RankDeficientError(
            f"Matrix of shape {A.shape} is numerically rank deficient (|R| diagonal ratio {ratio:.3e})"
        )
    return Q, R


def least_squares(A, y) -> np.ndarray:
    """Solve ``min ||y - A x||_2`` through a thin QR factorization.

    :param A: N x P matrix with full column rank, P <= N
    :param y: length N observation
    :return: length P solution
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if A.ndim != 2 or A.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"A has shape {A.shape} but y has length {y.shape[0]}")
    if A.shape[1] > A.shape[0]:
        raise RankDeficientError(f"Underdetermined system: {A.shape[1]} unknowns, {A.shape[0]} equations")
    Q, R = _qr(A)
    try:
        return scipy.linalg.solve_triangular(R, Q.T @ y, lower=False)
    except Exception as exception:
        if isinstance(exception, np.linalg.LinAlgError):
            raise RankDeficientError(f"Triangular solve failed for a {A.shape} matrix: {exception}")
        raise exception


def masked_least_squares(model: TrainingModel, b, y) -> np.ndarray:
    """Least squares fit using only the columns of ``U`` where ``b`` is set.

    Entries off the support are exactly zero; an empty support gives the zero estimate.

    :param model: training model
    :param b: binary support vector, length M
    :param y: observation, length N
    :return: length M estimate
    """
    b = np.asarray(b).ravel()
    if b.shape[0] != model.M:
        raise DimensionMismatchError(f"Support has length {b.shape[0]}, expected M={model.M}")
    h_hat = np.zeros(model.M)
    support = np.flatnonzero(b)
    if support.size == 0:
        return h_hat
    h_hat[support] = least_squares(model.columns(support), y)
    return h_hat


def trace_inverse_gram(A) -> float:
    """Return ``Tr{(A^T A)^-1}``.

    With ``A = QR`` this is the squared Frobenius norm of ``R^-1``, which avoids
    forming the Gram matrix.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] > A.shape[0]:
        raise SingularGramError(f"Gram matrix of a {A.shape} matrix is singular")
    try:
        _, R = _qr(A)
    except RankDeficientError as exception:
        raise SingularGramError(f"Gram matrix of a {A.shape} matrix is singular") from exception
    R_inv = scipy.linalg.solve_triangular(R, np.eye(R.shape[0]), lower=False)
    return float(np.sum(R_inv * R_inv))
