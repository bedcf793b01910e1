"""Exact MAP support detection by a min-sum (Viterbi-style) recursion on a trellis.

The support cost ``g(b) = b^T X b - 2 z^T b + lambda ||b||_0`` splits into local terms
``f_i(b_i, s_i)`` that only see the newest bit and the previous ``L - 1`` bits. Those
``L - 1`` bits form the trellis state, so an add-compare-select pass over ``M`` stages
with ``2^(L-1)`` states finds the global minimum over ``{0, 1}^M``.

States are packed words: bit ``k`` holds ``b_{i-1-k}``, so advancing a stage is
``((state << 1) | b_i) & mask``.
"""
import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from numerics.api import TrainingModel
from numerics.errors import DimensionMismatchError
from trellis_map.errors import (
    InvalidPriorError,
    InvalidQuadraticError,
    NotBandedError,
    TrellisError,
)

logger = logging.getLogger(__name__)

# Absorbing under addition, identity under min.
UNREACHABLE = np.inf


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Banded quadratic support cost ``b^T X b - 2 z^T b + lambda_ ||b||_0``."""
    X: np.ndarray
    z: np.ndarray
    lambda_: float
    L: int
    y_energy: float

    @property
    def M(self) -> int:
        return int(self.z.shape[0])

    def cost(self, b) -> float:
        """Evaluate the support cost directly from the quadratic form."""
        b = np.asarray(b, dtype=np.float64).ravel()
        return float(b @ self.X @ b - 2.0 * self.z @ b + self.lambda_ * np.count_nonzero(b))

    def validate(self) -> None:
        """Check symmetry, bandedness and a nonnegative penalty.

        :raises NotBandedError: an entry with ``|i - j| >= L`` is nonzero
        :raises InvalidQuadraticError: shape, symmetry or penalty violations
        """
        M = self.M
        if self.X.shape != (M, M):
            raise InvalidQuadraticError(f"X has shape {self.X.shape}, expected {(M, M)}")
        if self.L < 1:
            raise InvalidQuadraticError(f"Bandwidth L must be positive, got {self.L}")
        if self.lambda_ < 0:
            raise InvalidQuadraticError(f"Penalty must be nonnegative, got {self.lambda_}")
        if not np.array_equal(self.X, self.X.T):
            raise InvalidQuadraticError("X is not symmetric")
        rows, cols = np.nonzero(self.X)
        off_band = np.abs(rows - cols) >= self.L
        if np.any(off_band):
            i, j = int(rows[off_band][0]), int(cols[off_band][0])
            raise NotBandedError(f"X[{i}][{j}] = {self.X[i, j]!r} lies outside the band |i - j| < {self.L}")


@dataclass(frozen=True)
class TrellisState:
    """Packed support history ``(b_{stage-1}, ..., b_{stage-L+1})``; newest bit lowest."""
    bits: int
    stage: int

    def bit(self, j: int) -> int:
        """Return the stored decision ``b_j``; indices outside the window read as 0."""
        lag = self.stage - 1 - j
        if j < 0 or lag < 0:
            return 0
        return (self.bits >> lag) & 1

    def successor(self, b: int, L: int) -> "TrellisState":
        mask = (1 << (L - 1)) - 1
        return TrellisState(bits=((self.bits << 1) | int(b)) & mask, stage=self.stage + 1)


def reachable_states(stage: int, M: int, L: int) -> Iterator[TrellisState]:
    """Enumerate the legal states at a stage.

    Bits referring to ``j < 0`` (leading boundary) or ``j >= M`` (tail merge) are zero.
    """
    width = L - 1
    for bits in range(1 << width):
        if all(0 <= stage - 1 - lag < M for lag in range(width) if (bits >> lag) & 1):
            yield TrellisState(bits=bits, stage=stage)


def _dimension_check(model: TrainingModel, h_hat: np.ndarray, y: np.ndarray) -> None:
    if h_hat.shape[0] != model.M:
        raise DimensionMismatchError(f"h_hat has length {h_hat.shape[0]}, expected M={model.M}")
    if y.shape[0] != model.N:
        raise DimensionMismatchError(f"y has length {y.shape[0]}, expected N={model.N}")


def compute_quadratics(model: TrainingModel, h_hat, y, lambda_: float) -> QuadraticForm:
    """Build ``X = U_h^T U_h`` and ``z = U_h^T y`` for ``U_h = U diag(h_hat)``.

    ``U^T U`` is Toeplitz with the training autocorrelation on its first ``L`` diagonals,
    so only those bands of ``X`` are filled; everything else stays exactly zero.
    """
    h_hat = np.asarray(h_hat, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    _dimension_check(model, h_hat, y)
    if lambda_ < 0:
        raise InvalidPriorError(f"Penalty must be nonnegative, got {lambda_}")

    M, L, u = model.M, model.L, model.u
    autocorrelation = np.correlate(u, u, mode="full")[L - 1:]
    X = np.zeros((M, M))
    for k in range(min(L, M)):
        rows = np.arange(k, M)
        values = autocorrelation[k] * h_hat[k:] * h_hat[:M - k]
        X[rows, rows - k] = values
        X[rows - k, rows] = values
    z = h_hat * np.correlate(y, u, mode="valid")
    return QuadraticForm(X=X, z=z, lambda_=float(lambda_), L=L, y_energy=float(y @ y))


def lambda_from_prior(sigma2: float, p_a: float) -> float:
    """Sparsity penalty ``2 sigma^2 ln((1 - p_a) / p_a)`` of an i.i.d. Bernoulli(p_a) support."""
    if not 0.0 < p_a < 0.5:
        raise InvalidPriorError(f"Support prior must lie in (0, 1/2), got p_a={p_a}")
    if not sigma2 > 0.0:
        raise InvalidPriorError(f"Noise variance must be positive, got sigma2={sigma2}")
    return float(2.0 * sigma2 * np.log((1.0 - p_a) / p_a))


def local_cost(q: QuadraticForm, i: int, b_i: int, state: TrellisState) -> float:
    """Local term ``f_i = b_i [b_i X_ii + sum_j 2 b_j X_ij - 2 z_i + lambda]``.

    ``j`` runs over ``[max(0, i - L + 1), i - 1]``.
    """
    if not b_i:
        return 0.0
    value = q.X[i, i] - 2.0 * q.z[i] + q.lambda_
    for j in range(max(0, i - q.L + 1), i):
        if state.bit(j):
            value += 2.0 * q.X[i, j]
    return float(value)


def map_objective(model: TrainingModel, h_hat, y, b, lambda_: float) -> float:
    """``||y - U_h b||^2 + lambda ||b||_0``: the support cost before ``||y||^2`` is dropped."""
    b = np.asarray(b, dtype=np.float64).ravel()
    residual = np.asarray(y, dtype=np.float64).ravel() - model.scaled(h_hat) @ b
    return float(residual @ residual + lambda_ * np.count_nonzero(b))


@dataclass
class TrellisRun:
    """Result of one detector pass.

    ``alpha[stage]`` holds the accumulated minimum weight per packed state (``inf`` when
    unreachable); it is ``None`` when the run was made without history. Survivor paths
    are stored as back-pointers and rebuilt by ``survivor``.
    """
    M: int
    L: int
    best_support: np.ndarray
    best_cost: float
    operations: int
    alpha: Optional[np.ndarray] = None
    _back_pointers: List[Tuple[np.ndarray, Optional[np.ndarray]]] = field(default_factory=list, repr=False)

    @property
    def n_states(self) -> int:
        return 1 << (self.L - 1)

    @property
    def n_stages(self) -> int:
        return len(self._back_pointers) + 1

    def survivor(self, stage: int, state: int) -> np.ndarray:
        """Return the surviving decisions ``b_0 .. b_{min(stage, M) - 1}`` ending in ``state``."""
        if not 0 <= stage < self.n_stages:
            raise TrellisError(f"Stage {stage} outside [0, {self.n_stages - 1}]")
        if self.alpha is not None and not np.isfinite(self.alpha[stage, state]):
            raise TrellisError(f"State {state:b} is unreachable at stage {stage}")
        return _trace(self._back_pointers, stage, state)


def _trace(back_pointers, stage: int, state: int) -> np.ndarray:
    decisions = []
    for predecessors, bits in reversed(back_pointers[:stage]):
        if bits is not None:
            decisions.append(bits[state])
        state = predecessors[state]
    return np.array(decisions[::-1], dtype=np.int8)


def _prefers(back_pointers, stage: int, challenger: int, incumbent: int) -> bool:
    """True when the challenger's survivor is lexicographically smaller than the incumbent's.

    Both paths are walked back only until they merge; everything before is shared.
    """
    challenger_bits, incumbent_bits = [], []
    for predecessors, bits in reversed(back_pointers[:stage]):
        if challenger == incumbent:
            break
        if bits is not None:
            challenger_bits.append(bits[challenger])
            incumbent_bits.append(bits[incumbent])
        challenger, incumbent = predecessors[challenger], predecessors[incumbent]
    for ours, theirs in zip(reversed(challenger_bits), reversed(incumbent_bits)):
        if ours != theirs:
            return bool(ours < theirs)
    return False


def _select(back_pointers, stage, cand_a, cand_b, pred_a, pred_b):
    """Compare-select between two incoming edges per next state.

    ``a`` wins exact ties unless ``b`` carries a lexicographically smaller survivor.
    """
    take_b = cand_b < cand_a
    ties = np.flatnonzero((cand_b == cand_a) & np.isfinite(cand_a) & (pred_a != pred_b))
    for t in ties:
        take_b[t] = _prefers(back_pointers, stage, int(pred_b[t]), int(pred_a[t]))
    return np.where(take_b, cand_b, cand_a), take_b


def map_detect_trellis(
        q: QuadraticForm,
        M: int,
        keep_history: bool = True,
        explicit_tail: bool = True,
) -> TrellisRun:
    """Minimize the support cost over ``{0, 1}^M`` with the min-sum recursion.

    Each decision stage adds the local term to the accumulated weight of the source state
    and keeps the cheaper of the two edges entering every next state. Exact ties keep the
    lexicographically smaller survivor, which prefers ``b_i = 0`` when ``L = 1``. The tail
    shifts in zeros with zero weight until every survivor merges into state 0; with
    ``explicit_tail=False`` the minimum is read off stage ``M`` directly, with the same result.

    :param q: quadratic form with bandwidth ``q.L``
    :param M: channel memory
    :param keep_history: store ``alpha`` for every stage
    :param explicit_tail: run the zero-weight merging stages
    :return: TrellisRun
    """
    if q.M != M:
        raise DimensionMismatchError(f"Quadratic form has M={q.M}, expected {M}")
    L = q.L
    width = L - 1
    n_states = 1 << width
    mask = n_states - 1
    states = np.arange(n_states)

    if width:
        next_bit = states & 1
        pred_a = states >> 1
        pred_b = pred_a | (1 << (width - 1))
        bit_a = bit_b = next_bit
        lags = np.arange(width)
        history_bits = ((states[:, np.newaxis] >> lags[np.newaxis, :]) & 1).astype(np.float64)
    else:
        pred_a = pred_b = np.zeros(1, dtype=np.int64)
        bit_a, bit_b = np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.int64)
        lags = np.arange(0)
        history_bits = np.zeros((1, 0))

    alpha = np.full(n_states, UNREACHABLE)
    alpha[0] = 0.0
    history = [alpha.copy()] if keep_history else None
    back_pointers: List[Tuple[np.ndarray, Optional[np.ndarray]]] = []
    operations = 0

    for i in range(M):
        neighbours = i - 1 - lags
        in_range = neighbours >= 0
        coupling = np.where(in_range, q.X[i, np.clip(neighbours, 0, None)], 0.0)
        gamma_one = q.X[i, i] - 2.0 * q.z[i] + q.lambda_ + 2.0 * (history_bits @ coupling)

        cand_a = alpha[pred_a] + np.where(bit_a == 1, gamma_one[pred_a], 0.0)
        cand_b = alpha[pred_b] + np.where(bit_b == 1, gamma_one[pred_b], 0.0)
        operations += 2 * n_states

        alpha, take_b = _select(back_pointers, i, cand_a, cand_b, pred_a, pred_b)
        back_pointers.append((np.where(take_b, pred_b, pred_a), np.where(take_b, bit_b, bit_a)))
        if keep_history:
            history.append(alpha.copy())

    if explicit_tail:
        tail_a = states >> 1
        tail_b = tail_a | (1 << (width - 1)) if width else tail_a
        even = (states & 1) == 0
        for stage in range(M, M + width):
            cand_a = np.where(even, alpha[tail_a], UNREACHABLE)
            cand_b = np.where(even, alpha[tail_b], UNREACHABLE)
            alpha, take_b = _select(back_pointers, stage, cand_a, cand_b, tail_a, tail_b)
            back_pointers.append((np.where(take_b, tail_b, tail_a), None))
            if keep_history:
                history.append(alpha.copy())
        final_state = 0
    else:
        final_state = _lexicographic_argmin(back_pointers, M, alpha)

    best_support = _trace(back_pointers, len(back_pointers), final_state)
    best_cost = float(alpha[final_state])
    logger.debug("Trellis M=%d L=%d: cost %.6g, support size %d, %d additions",
                 M, L, best_cost, int(best_support.sum()), operations)
    return TrellisRun(
        M=M,
        L=L,
        best_support=best_support,
        best_cost=best_cost,
        operations=operations,
        alpha=np.vstack(history) if keep_history else None,
        _back_pointers=back_pointers,
    )


def _lexicographic_argmin(back_pointers, stage: int, alpha: np.ndarray) -> int:
    best = int(np.argmin(alpha))
    for candidate in np.flatnonzero(alpha == alpha[best]):
        if candidate != best and _prefers(back_pointers, stage, int(candidate), best):
            best = int(candidate)
    return best
