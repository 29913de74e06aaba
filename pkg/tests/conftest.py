import numpy as np
import pytest

from cg_solver import cg_solve
from function_linalg import FunctionMatrix, FunctionVector
from problems import generate_problem
from riesz_algebra import MeasureSpace, make_space

SUITE_SIZE = 200


def spd_stack(rng: np.random.Generator, n: int, m: int, low: float = 0.5, high: float = 5.0) -> np.ndarray:
    """m random SPD matrices with eigenvalues in [low, high]"""
    mats = np.empty((m, n, n))
    for i in range(m):
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        mats[i] = (q * rng.uniform(low, high, size=n)) @ q.T
    return 0.5 * (mats + np.swapaxes(mats, 1, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture
def space4():
    return MeasureSpace.uniform(4)


@pytest.fixture
def null_space():
    """Three samples, the middle one of measure zero"""
    return make_space([0.5, 0.0, 0.5])


@pytest.fixture
def make_spd():
    def build(rng, space, n, low=0.5, high=5.0) -> FunctionMatrix:
        return FunctionMatrix.from_stacked(space, spd_stack(rng, n, space.m, low, high))
    return build


@pytest.fixture
def make_vector():
    def build(rng, space, n, low=-1.0, high=1.0) -> FunctionVector:
        return FunctionVector(space, rng.uniform(low, high, size=(n, space.m)))
    return build


@pytest.fixture
def small_system():
    """Constant [[4, 1], [1, 3]] x = [1, 2] on three samples; x* = [1, 7] / 11"""
    space = MeasureSpace.uniform(3)
    A = FunctionMatrix.constant(space, [[4.0, 1.0], [1.0, 3.0]])
    b = FunctionVector.constant(space, [1.0, 2.0])
    return space, A, b


@pytest.fixture(scope="session")
def solved_suite():
    """Seeded generated problems (n 2..8, m 1..64, kappa 1..100, perturbation <= 0.3) with their CG runs"""
    rng = np.random.default_rng(7)
    suite = []
    for i in range(SUITE_SIZE):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 65))
        kappa = float(rng.uniform(1.0, 100.0))
        perturbation = float(rng.uniform(0.0, 0.3))
        problem = generate_problem(n, m, kappa, perturbation, seed=1000 + i)
        suite.append((problem, cg_solve(problem.A, problem.b)))
    return suite
