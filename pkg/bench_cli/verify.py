"""Oracle-equivalence and identity checks behind ``bench_cli verify``."""
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from common_utils.logging_mixin import LoggingMixin
from numerics.api import TrainingModel, build_training_matrix, least_squares
from simkit.api import generate_training_sequence
from trellis_map.api import (
    QuadraticForm,
    TrellisState,
    compute_quadratics,
    lambda_from_prior,
    local_cost,
    map_detect_trellis,
    map_objective,
)
from trellis_map.errors import NotBandedError
from trellis_map.oracle import map_detect_bruteforce

ORACLE_INSTANCES = 200
ORACLE_M_RANGE = (6, 12)
ORACLE_L_RANGE = (2, 4)
RELATIVE_TOLERANCE = 1e-9


@dataclass
class CheckResult:
    check: str
    passed: bool
    detail: str


@dataclass
class Instance:
    model: TrainingModel
    h_hat: np.ndarray
    y: np.ndarray
    q: QuadraticForm


def _close(a: float, b: float, rtol: float = RELATIVE_TOLERANCE) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def random_instance(rng: np.random.Generator, M: int, L: int) -> Instance:
    """Random training, taps, observation and a prior-derived penalty."""
    model = build_training_matrix(generate_training_sequence(L, rng), M)
    h_hat = rng.standard_normal(M)
    y = rng.standard_normal(model.N)
    lambda_ = lambda_from_prior(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.05, 0.45)))
    return Instance(model=model, h_hat=h_hat, y=y, q=compute_quadratics(model, h_hat, y, lambda_))


class VerificationSuite(LoggingMixin):
    """Runs each property check over seeded random instances."""

    def __init__(self, seed: int = 0, instances: int = ORACLE_INSTANCES, inject_offband: bool = False,
                 context=None):
        super().__init__(context)
        self.seed = seed
        self.instances = instances
        self.inject_offband = inject_offband
        self._generated: Dict[int, List[Instance]] = {}

    def _instances(self, salt: int) -> List[Instance]:
        """Seeded instances for one check, generated once per salt and treated as read-only."""
        if salt not in self._generated:
            rng = np.random.default_rng([self.seed, salt])
            generated = []
            for _ in range(self.instances):
                M = int(rng.integers(ORACLE_M_RANGE[0], ORACLE_M_RANGE[1] + 1))
                L = int(rng.integers(ORACLE_L_RANGE[0], ORACLE_L_RANGE[1] + 1))
                generated.append(random_instance(rng, M, L))
            self._generated[salt] = generated
        return self._generated[salt]

    def checks(self) -> List[Tuple[str, Callable[[], str]]]:
        return [
            ("oracle_exactness", self.check_oracle_exactness),
            ("decomposition_identity", self.check_decomposition_identity),
            ("bandedness", self.check_bandedness),
            ("cost_reconciliation", self.check_cost_reconciliation),
            ("lambda_spot_value", self.check_lambda_spot_value),
            ("tail_shortcut", self.check_tail_shortcut),
            ("monotone_penalty", self.check_monotone_penalty),
            ("operation_counter", self.check_operation_counter),
            ("ls_orthogonality", self.check_ls_orthogonality),
        ]

    def run(self) -> List[CheckResult]:
        results = []
        for name, check in self.checks():
            try:
                detail = check()
                results.append(CheckResult(check=name, passed=True, detail=detail))
            except AssertionError as exception:
                results.append(CheckResult(check=name, passed=False, detail=str(exception)))
            self.log.info("%s %s", "PASS" if results[-1].passed else "FAIL", name)
        return results

    def check_oracle_exactness(self) -> str:
        for index, instance in enumerate(self._instances(1)):
            run = map_detect_trellis(instance.q, instance.model.M, keep_history=False)
            _, oracle_cost = map_detect_bruteforce(instance.q, instance.model.M)
            assert _close(run.best_cost, oracle_cost), (
                f"instance {index}: trellis {run.best_cost!r} != exhaustive {oracle_cost!r}"
            )
            assert _close(instance.q.cost(run.best_support), run.best_cost), (
                f"instance {index}: support cost {instance.q.cost(run.best_support)!r} != {run.best_cost!r}"
            )
        return f"{self.instances} instances match exhaustive search"

    def check_decomposition_identity(self) -> str:
        rng = np.random.default_rng([self.seed, 2])
        for index, instance in enumerate(self._instances(2)):
            q, M = instance.q, instance.model.M
            b = rng.integers(0, 2, size=M)
            total = 0.0
            bits = 0
            for i in range(M):
                total += local_cost(q, i, int(b[i]), TrellisState(bits=bits, stage=i))
                bits = TrellisState(bits=bits, stage=i).successor(int(b[i]), q.L).bits
            assert _close(total, q.cost(b), 1e-10), f"instance {index}: {total!r} != {q.cost(b)!r}"
        return "sum of local terms equals the quadratic cost"

    def check_bandedness(self) -> str:
        for index, instance in enumerate(self._instances(3)):
            q = instance.q
            if self.inject_offband and index == 0 and q.M > q.L:
                X = q.X.copy()
                X[q.L, 0] = X[0, q.L] = 1.0
                q = QuadraticForm(X=X, z=q.z, lambda_=q.lambda_, L=q.L, y_energy=q.y_energy)
            try:
                q.validate()
            except NotBandedError as exception:
                raise AssertionError(f"instance {index}: {exception}")
        # the check must also reject a deliberately corrupted form
        q = self._instances(3)[0].q
        X = q.X.copy()
        X[q.M - 1, 0] = X[0, q.M - 1] = 1.0
        try:
            QuadraticForm(X=X, z=q.z, lambda_=q.lambda_, L=q.L, y_energy=q.y_energy).validate()
        except NotBandedError:
            return "X is zero outside |i - j| < L"
        raise AssertionError("an off-band entry went undetected")

    def check_cost_reconciliation(self) -> str:
        for index, instance in enumerate(self._instances(4)):
            run = map_detect_trellis(instance.q, instance.model.M, keep_history=False)
            direct = map_objective(instance.model, instance.h_hat, instance.y, run.best_support, instance.q.lambda_)
            assert _close(run.best_cost + instance.q.y_energy, direct), (
                f"instance {index}: {run.best_cost + instance.q.y_energy!r} != {direct!r}"
            )
        return "best cost + ||y||^2 equals the MAP objective"

    def check_lambda_spot_value(self) -> str:
        value = lambda_from_prior(1.0, 1.0 / 6.0)
        assert abs(value - 2.0 * np.log(5.0)) <= 1e-10, f"lambda(1, 1/6) = {value!r}"
        return f"lambda(sigma2=1, p_a=1/6) = {value:.6f}"

    def check_tail_shortcut(self) -> str:
        for index, instance in enumerate(self._instances(5)):
            explicit = map_detect_trellis(instance.q, instance.model.M, keep_history=False)
            shortcut = map_detect_trellis(instance.q, instance.model.M, keep_history=False, explicit_tail=False)
            assert explicit.best_cost == shortcut.best_cost, f"instance {index}: tail costs differ"
            assert np.array_equal(explicit.best_support, shortcut.best_support), f"instance {index}: supports differ"
        return "explicit tail and direct minimum agree"

    def check_monotone_penalty(self) -> str:
        grid = np.linspace(0.0, 20.0, 41)
        for index, instance in enumerate(self._instances(6)[:20]):
            q = instance.q
            sizes = []
            for lambda_ in grid:
                scaled = QuadraticForm(X=q.X, z=q.z, lambda_=float(lambda_), L=q.L, y_energy=q.y_energy)
                sizes.append(int(map_detect_trellis(scaled, q.M, keep_history=False).best_support.sum()))
            assert all(a >= b for a, b in zip(sizes, sizes[1:])), f"instance {index}: sizes {sizes}"
        return "support size never grows with lambda"

    def check_operation_counter(self) -> str:
        rng = np.random.default_rng([self.seed, 7])
        for M in (8, 16, 32):
            for L in (1, 2, 3, 4, 5):
                instance = random_instance(rng, M, L)
                operations = map_detect_trellis(instance.q, M, keep_history=False).operations
                assert operations == M * 2 ** L, f"M={M}, L={L}: {operations} additions, expected {M * 2 ** L}"
        return "additions = M * 2^L"

    def check_ls_orthogonality(self) -> str:
        rng = np.random.default_rng([self.seed, 8])
        for _ in range(50):
            A = rng.standard_normal((10, 4))
            y = rng.standard_normal(10)
            x = least_squares(A, y)
            gradient = np.max(np.abs(A.T @ (y - A @ x)))
            assert gradient <= 1e-8 * np.max(np.abs(A.T @ y)) + 1e-12, f"A^T r = {gradient!r}"
        return "least squares residual is orthogonal to the columns"
