"""Exhaustive support search, used to check the trellis detector."""
from typing import Tuple

import numpy as np

from numerics.errors import DimensionMismatchError
from trellis_map.api import QuadraticForm
from trellis_map.errors import OracleTooLargeError

BRUTEFORCE_MAX_M = 20
_BLOCK_BITS = 12


def _supports(start: int, stop: int, M: int) -> np.ndarray:
    # Row k is the binary expansion of k with b_0 as the most significant bit.
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(M - 1, -1, -1, dtype=np.int64)
    return ((codes[:, np.newaxis] >> shifts[np.newaxis, :]) & 1).astype(np.float64)


def map_detect_bruteforce(q: QuadraticForm, M: int) -> Tuple[np.ndarray, float]:
    """Enumerate all ``2^M`` supports and return the cheapest.

    Candidates are visited in lexicographic order and only a strictly lower cost replaces
    the incumbent, so ties resolve to the lexicographically smallest support.

    :param q: quadratic form
    :param M: channel memory, at most 20
    :return: (support, cost)
    """
    if M > BRUTEFORCE_MAX_M:
        raise OracleTooLargeError(f"Exhaustive search is limited to M <= {BRUTEFORCE_MAX_M}, got M={M}")
    if q.M != M:
        raise DimensionMismatchError(f"Quadratic form has M={q.M}, expected {M}")

    best_support, best_cost = None, np.inf
    block = 1 << _BLOCK_BITS
    for start in range(0, 1 << M, block):
        candidates = _supports(start, min(start + block, 1 << M), M)
        costs = (
            np.einsum("kj,kj->k", candidates @ q.X, candidates)
            - 2.0 * candidates @ q.z
            + q.lambda_ * candidates.sum(axis=1)
        )
        k = int(np.argmin(costs))
        if costs[k] < best_cost:
            best_cost = float(costs[k])
            best_support = candidates[k].astype(np.int8)
    return best_support, best_cost
