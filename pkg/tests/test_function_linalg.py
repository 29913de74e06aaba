import numpy as np
import pytest

from errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric, SpaceMismatch
from function_linalg import (
    FunctionMatrix,
    FunctionVector,
    dot,
    dot_A,
    eigen_functions,
    is_positive_definite,
    is_symmetric,
    jacobi_eigh,
    matvec,
    norm_A,
    norm_A_pointwise,
    orthogonal_decompose,
    poly_apply,
    poly_apply_bound_check,
    scale,
)
from rate_bounds import AlgebraPolynomial, RealPolynomial
from riesz_algebra import AlgebraElement, MeasureSpace, ae_equal, constant, element, in_S, make_space


def _stack_with_spectrum(rng, n, m, spectrum):
    mats = np.empty((m, n, n))
    for i in range(m):
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        mats[i] = (q * spectrum(i)) @ q.T
    return 0.5 * (mats + np.swapaxes(mats, 1, 2))


class TestVectors:
    def test_vector_shape_checked(self):
        with pytest.raises(DimensionMismatch):
            FunctionVector(MeasureSpace.uniform(3), np.zeros((2, 4)))

    def test_arithmetic(self, space4):
        x = FunctionVector.constant(space4, [1.0, 2.0])
        y = FunctionVector.constant(space4, [3.0, -1.0])
        assert np.array_equal((x + y).values[:, 0], [4.0, 1.0])
        assert np.array_equal((x - y).values[:, 0], [-2.0, 3.0])
        assert np.array_equal((2 * x).values[:, 0], [2.0, 4.0])

    def test_scale_by_function(self):
        space = MeasureSpace.uniform(2)
        x = FunctionVector.constant(space, [1.0, 2.0])
        scaled = scale(element(space, [2.0, -1.0]), x)
        assert scaled.values.tolist() == [[2.0, -1.0], [4.0, -2.0]]

    def test_length_mismatch(self, space4):
        with pytest.raises(DimensionMismatch):
            FunctionVector.zeros(space4, 2) + FunctionVector.zeros(space4, 3)

    def test_from_elements(self, space4):
        x = FunctionVector.from_elements([constant(space4, 1.0), constant(space4, 2.0)])
        assert x.n == 2
        assert x[1].values.tolist() == [2.0] * 4


class TestMatvec:
    def test_identity(self, rng, space4, make_vector):
        x = make_vector(rng, space4, 3)
        assert np.array_equal(matvec(FunctionMatrix.identity(space4, 3), x).values, x.values)

    def test_constant_diagonal(self, space4):
        A = FunctionMatrix.constant(space4, [[2.0, 0.0], [0.0, 3.0]])
        y = matvec(A, FunctionVector.constant(space4, [1.0, 1.0]))
        assert y.values[:, 0].tolist() == [2.0, 3.0]

    def test_per_sample(self, rng, space4, make_spd, make_vector):
        A = make_spd(rng, space4, 4)
        x = make_vector(rng, space4, 4)
        y = matvec(A, x)
        for i in range(space4.m):
            np.testing.assert_allclose(y.at(i), A.at(i) @ x.at(i), rtol=1e-14, atol=1e-14)

    def test_dimension_mismatch(self, space4):
        with pytest.raises(DimensionMismatch):
            matvec(FunctionMatrix.identity(space4, 3), FunctionVector.zeros(space4, 2))

    def test_space_mismatch(self, space4):
        with pytest.raises(SpaceMismatch):
            matvec(FunctionMatrix.identity(space4, 2), FunctionVector.zeros(MeasureSpace.uniform(2), 2))


class TestInnerProduct:
    def test_identity_is_euclidean(self, rng, space4, make_vector):
        x, y = make_vector(rng, space4, 3), make_vector(rng, space4, 3)
        I = FunctionMatrix.identity(space4, 3)
        np.testing.assert_allclose(dot_A(x, y, I).values, dot(x, y).values, rtol=1e-15)

    def test_symmetric(self, rng, space4, make_spd, make_vector):
        A = make_spd(rng, space4, 3)
        x, y = make_vector(rng, space4, 3), make_vector(rng, space4, 3)
        assert ae_equal(dot_A(x, y, A), dot_A(y, x, A))

    def test_per_sample(self, rng, space4, make_spd, make_vector):
        A = make_spd(rng, space4, 3)
        x, y = make_vector(rng, space4, 3), make_vector(rng, space4, 3)
        value = dot_A(x, y, A)
        for i in range(space4.m):
            assert value.values[i] == pytest.approx(x.at(i) @ A.at(i) @ y.at(i), rel=1e-13, abs=1e-14)


class TestNorm:
    def test_zero_vector(self, space4):
        A = FunctionMatrix.identity(space4, 2)
        assert norm_A(FunctionVector.zeros(space4, 2), A).values.tolist() == [0.0] * 4

    def test_pythagoras(self, space4):
        A = FunctionMatrix.identity(space4, 2)
        assert ae_equal(norm_A(FunctionVector.constant(space4, [3.0, 4.0]), A), constant(space4, 5.0))

    def test_square_is_inner_product(self, rng, space4, make_spd, make_vector):
        A = make_spd(rng, space4, 3)
        x = make_vector(rng, space4, 3)
        norm = norm_A(x, A)
        assert ae_equal(norm * norm, dot_A(x, x, A))

    def test_indefinite(self, space4):
        A = FunctionMatrix.constant(space4, [[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(NotPositiveDefinite):
            norm_A(FunctionVector.constant(space4, [1.0, -1.0]), A)

    def test_pointwise_norm_is_total(self):
        space = MeasureSpace.uniform(2)
        A = FunctionMatrix.identity(space, 2)
        x = FunctionVector(space, np.array([[3.0, 0.0], [4.0, 0.0]]))
        assert norm_A_pointwise(x, A).values.tolist() == [5.0, 0.0]


class TestDefiniteness:
    def test_identity(self, space4):
        I = FunctionMatrix.identity(space4, 3)
        assert is_symmetric(I)
        assert is_positive_definite(I)

    def test_indefinite(self, space4):
        A = FunctionMatrix.constant(space4, [[1.0, 2.0], [2.0, 1.0]])
        assert is_symmetric(A)
        assert not is_positive_definite(A)

    def test_asymmetric_on_positive_measure(self):
        space = make_space([1.0, 1.0])
        values = np.repeat(np.eye(2)[:, :, None], 2, axis=2)
        values[0, 1, 1] = 0.5
        A = FunctionMatrix(space, values)
        assert not is_symmetric(A)
        assert not is_positive_definite(A)

    def test_asymmetric_on_null_set(self):
        space = make_space([1.0, 0.0])
        values = np.repeat(np.eye(2)[:, :, None], 2, axis=2)
        values[0, 1, 1] = 0.5
        assert is_symmetric(FunctionMatrix(space, values))

    def test_indefinite_on_null_set(self):
        space = make_space([1.0, 0.0])
        mats = np.stack([np.eye(2), -np.eye(2)])
        assert is_positive_definite(FunctionMatrix.from_stacked(space, mats))

    def test_matches_sampled_quadratic_form(self, rng):
        space = MeasureSpace.uniform(6)
        for trial in range(20):
            n = int(rng.integers(1, 5))
            negative = trial % 2 == 1

            def spectrum(i):
                values = rng.uniform(0.5, 2.0, size=n)
                if negative and i == 3:
                    values[0] = -rng.uniform(0.5, 2.0)
                return values

            A = FunctionMatrix.from_stacked(space, _stack_with_spectrum(rng, n, space.m, spectrum))
            y = rng.standard_normal((1000, n))
            y /= np.linalg.norm(y, axis=1, keepdims=True)
            brute = all(
                bool(np.all(np.einsum("vi,ij,vj->v", y, A.at(i), y) > 0.0)) for i in range(space.m)
            )
            assert is_positive_definite(A) == brute == (not negative)


class TestEigenFunctions:
    def test_diagonal_sorted(self, space4):
        A = FunctionMatrix.constant(space4, np.diag([3.0, 1.0, 2.0]))
        spectrum = eigen_functions(A)
        assert [lam.values[0] for lam in spectrum.lambdas] == pytest.approx([1.0, 2.0, 3.0])
        assert spectrum.eigvecs[0].values[:, 0].tolist() == [0.0, 1.0, 0.0]
        assert spectrum.lambda_under == pytest.approx(1.0)
        assert spectrum.lambda_over == pytest.approx(3.0)
        assert spectrum.kappa == pytest.approx(3.0)

    def test_identity(self, space4):
        spectrum = eigen_functions(FunctionMatrix.identity(space4, 3))
        for lam in spectrum.lambdas:
            assert np.allclose(lam.values, 1.0)
        assert spectrum.kappa == 1.0

    def test_two_by_two_closed_form(self, rng):
        space = MeasureSpace.uniform(16)
        mats = _stack_with_spectrum(rng, 2, space.m, lambda i: rng.uniform(-3.0, 3.0, size=2))
        spectrum = eigen_functions(FunctionMatrix.from_stacked(space, mats))
        tr = np.trace(mats, axis1=1, axis2=2)
        det = np.linalg.det(mats)
        disc = np.sqrt(tr * tr - 4.0 * det)
        np.testing.assert_allclose(spectrum.lambdas[0].values, (tr - disc) / 2, atol=1e-10)
        np.testing.assert_allclose(spectrum.lambdas[1].values, (tr + disc) / 2, atol=1e-10)

    def test_eigen_basis(self, rng, make_spd):
        space = MeasureSpace.uniform(8)
        for n in (1, 2, 3, 5, 8):
            A = make_spd(rng, space, n)
            spectrum = eigen_functions(A)
            Y = np.stack([v.values for v in spectrum.eigvecs], axis=1)  # (n, n, m)
            gram = np.einsum("ijm,ikm->jkm", Y, Y)
            np.testing.assert_allclose(gram, np.repeat(np.eye(n)[:, :, None], space.m, axis=2),
                                       atol=1e-10)
            for j, (lam, y) in enumerate(zip(spectrum.lambdas, spectrum.eigvecs)):
                np.testing.assert_allclose(matvec(A, y).values, scale(lam, y).values,
                                           rtol=1e-10, atol=1e-10 * np.max(np.abs(lam.values)))
            evals = np.linalg.eigvalsh(A.stacked())
            np.testing.assert_allclose(np.stack([lam.values for lam in spectrum.lambdas], axis=1),
                                       evals, atol=1e-10 * np.max(np.abs(evals)))

    def test_ordered_and_signed(self, rng, make_spd):
        space = MeasureSpace.uniform(8)
        spectrum = eigen_functions(make_spd(rng, space, 4))
        lambdas = np.stack([lam.values for lam in spectrum.lambdas])
        assert np.all(np.diff(lambdas, axis=0) >= 0)
        for y in spectrum.eigvecs:
            lead = y.values[np.argmax(np.abs(y.values), axis=0), np.arange(space.m)]
            assert np.all(lead > 0)

    def test_null_sample_ignored_for_extrema(self):
        space = make_space([1.0, 0.0])
        A = FunctionMatrix.diagonal([element(space, [2.0, 100.0]), element(space, [4.0, 0.001])])
        spectrum = eigen_functions(A)
        assert spectrum.lambda_under == pytest.approx(2.0)
        assert spectrum.lambda_over == pytest.approx(4.0)
        assert spectrum.pointwise_kappa().values[0] == pytest.approx(2.0)

    def test_not_symmetric(self, space4):
        with pytest.raises(NotSymmetric):
            eigen_functions(FunctionMatrix.constant(space4, [[1.0, 2.0], [0.0, 1.0]]))

    def test_jacobi_agrees_with_lapack(self, rng):
        mats = _stack_with_spectrum(rng, 6, 10, lambda i: rng.uniform(-5.0, 5.0, size=6))
        evals, evecs, converged = jacobi_eigh(mats)
        assert np.all(converged)
        np.testing.assert_allclose(evals, np.linalg.eigvalsh(mats), atol=1e-12)

    def test_jacobi_converges_on_random_spd(self, rng):
        mats = _stack_with_spectrum(rng, 4, 200, lambda i: rng.uniform(0.5, 50.0, size=4))
        evals, evecs, converged = jacobi_eigh(mats)
        assert np.all(converged)
        rebuilt = np.einsum("mij,mj,mkj->mik", evecs, evals, evecs)
        np.testing.assert_allclose(rebuilt, mats, atol=1e-11)
        spectrum = eigen_functions(FunctionMatrix.from_stacked(MeasureSpace.uniform(200), mats))
        assert spectrum.kappa >= 1.0


class TestInequalities:
    def test_schwartz_and_triangle(self, rng, make_spd, make_vector):
        for _ in range(1000):
            space = MeasureSpace.uniform(int(rng.integers(1, 9)))
            n = int(rng.integers(1, 7))
            A = make_spd(rng, space, n, low=0.1, high=10.0)
            x, y = make_vector(rng, space, n), make_vector(rng, space, n)
            nx, ny = norm_A_pointwise(x, A).values, norm_A_pointwise(y, A).values
            pairing = np.abs(dot_A(x, y, A).values)
            assert np.all(pairing <= nx * ny * (1 + 1e-10) + 1e-12)
            nxy = norm_A_pointwise(x + y, A).values
            assert np.all(nxy <= (nx + ny) * (1 + 1e-10) + 1e-12)

    def test_schwartz_strict_for_independent_vectors(self, rng, make_spd, make_vector):
        for _ in range(200):
            space = MeasureSpace.uniform(int(rng.integers(1, 9)))
            n = int(rng.integers(2, 7))
            A = make_spd(rng, space, n, low=0.1, high=10.0)
            x, y = make_vector(rng, space, n), make_vector(rng, space, n)
            nx, ny = norm_A_pointwise(x, A).values, norm_A_pointwise(y, A).values
            pairing = np.abs(dot_A(x, y, A).values)
            cosine = np.abs(np.sum(x.values * y.values, axis=0)) / (
                np.linalg.norm(x.values, axis=0) * np.linalg.norm(y.values, axis=0))
            # Euclidean sine >= 0.1 keeps the A-sine >= 0.1 / sqrt(kappa) = 0.01
            independent = cosine < np.sqrt(1.0 - 0.01)
            assert np.all(pairing[independent] <= (1.0 - 1e-6) * (nx * ny)[independent])

    def test_schwartz_equality_for_parallel_vectors(self, rng, make_spd, make_vector):
        space = MeasureSpace.uniform(5)
        A = make_spd(rng, space, 4)
        x = make_vector(rng, space, 4)
        c = AlgebraElement(space, rng.uniform(-3.0, 3.0, space.m))
        y = scale(c, x)
        nx, ny = norm_A_pointwise(x, A).values, norm_A_pointwise(y, A).values
        np.testing.assert_allclose(np.abs(dot_A(x, y, A).values), nx * ny, rtol=1e-10)


class TestPolynomialBound:
    def test_constant_one(self, rng, space4, make_spd, make_vector):
        A = make_spd(rng, space4, 3)
        x = make_vector(rng, space4, 3)
        q = AlgebraPolynomial.from_real(space4, RealPolynomial([1.0]))
        lhs, rhs = poly_apply_bound_check(q, A, x)
        np.testing.assert_allclose(lhs.values, norm_A(x, A).values, rtol=1e-14)
        assert rhs == 1.0

    def test_scalar_matrix(self, rng, space4, make_vector):
        c = 2.5
        A = FunctionMatrix.constant(space4, c * np.eye(3))
        x = make_vector(rng, space4, 3)
        q = AlgebraPolynomial.from_real(space4, RealPolynomial([0.0, 1.0]))
        lhs, rhs = poly_apply_bound_check(q, A, x)
        np.testing.assert_allclose(lhs.values, c * norm_A(x, A).values, rtol=1e-14)
        assert rhs == pytest.approx(c)

    def test_poly_apply_per_sample(self, rng, space4, make_spd, make_vector):
        A = make_spd(rng, space4, 3)
        x = make_vector(rng, space4, 3)
        coeffs = [AlgebraElement(space4, rng.standard_normal(space4.m)) for _ in range(3)]
        y = poly_apply(AlgebraPolynomial(coeffs), A, x)
        for i in range(space4.m):
            M = A.at(i)
            expected = (coeffs[0].values[i] * np.eye(3) + coeffs[1].values[i] * M
                        + coeffs[2].values[i] * M @ M) @ x.at(i)
            np.testing.assert_allclose(y.at(i), expected, rtol=1e-12, atol=1e-12)

    def test_random_degree_three(self, rng, make_spd, make_vector):
        space = MeasureSpace.uniform(6)
        A = make_spd(rng, space, 4)
        x = make_vector(rng, space, 4)
        q = AlgebraPolynomial([AlgebraElement(space, rng.uniform(-1, 1, space.m)) for _ in range(4)])
        lhs, rhs = poly_apply_bound_check(q, A, x, grid=4097)
        assert np.all(lhs.values <= rhs * norm_A(x, A).values + 1e-9)

    def test_sup_level_inequality(self, rng, make_spd, make_vector):
        for _ in range(100):
            space = MeasureSpace.uniform(int(rng.integers(1, 9)))
            n = int(rng.integers(1, 7))
            A = make_spd(rng, space, n)
            x = make_vector(rng, space, n)
            degree = int(rng.integers(0, 5))
            q = AlgebraPolynomial([AlgebraElement(space, rng.uniform(-1, 1, space.m))
                                   for _ in range(degree + 1)])
            lhs, rhs = poly_apply_bound_check(q, A, x, grid=4097)
            assert np.max(lhs.values) <= rhs * np.max(norm_A(x, A).values) + 1e-9


class TestOrthogonalDecompose:
    def _gram_is_diagonal(self, decomposition, B):
        gram = decomposition.gram_matrix(B)
        k = decomposition.rank
        scale_ = max(1.0, float(np.max(np.abs(gram)))) if k else 1.0
        off = gram * (1 - np.eye(k))[:, :, None] if k else gram
        assert np.all(np.abs(off) <= 1e-10 * scale_)
        for i in range(k):
            assert in_S(AlgebraElement(B.space, gram[i, i]))

    def test_identity(self, space4):
        decomposition = orthogonal_decompose(FunctionMatrix.identity(space4, 3))
        assert decomposition.rank == 3
        assert decomposition.radical_basis == []
        assert sorted(decomposition.pivots) == [0, 1, 2]
        for v in decomposition.ortho_basis:
            assert np.count_nonzero(v.values[:, 0]) == 1

    def test_zero_form(self, space4):
        B = FunctionMatrix.constant(space4, np.zeros((3, 3)))
        decomposition = orthogonal_decompose(B)
        assert decomposition.rank == 0
        assert len(decomposition.radical_basis) == 3
        assert decomposition.gram_matrix(B).shape == (0, 0, space4.m)

    def test_hand_computed(self, space4):
        B = FunctionMatrix.constant(space4, [[4.0, 1.0], [1.0, 3.0]])
        decomposition = orthogonal_decompose(B)
        assert decomposition.rank == 2
        assert decomposition.pivots == [0, 1]
        np.testing.assert_allclose(decomposition.ortho_basis[1].values[:, 0], [-0.25, 1.0])
        gram = decomposition.gram_matrix(B)[:, :, 0]
        np.testing.assert_allclose(gram, [[4.0, 0.0], [0.0, 2.75]], atol=1e-14)

    def test_not_symmetric(self, space4):
        with pytest.raises(NotSymmetric):
            orthogonal_decompose(FunctionMatrix.constant(space4, [[1.0, 2.0], [0.0, 1.0]]))

    def test_random_forms(self, rng, make_spd):
        for trial in range(100):
            space = MeasureSpace.uniform(int(rng.integers(1, 7)))
            n = int(rng.integers(1, 5))
            kind = trial % 3
            if kind == 0:
                B = make_spd(rng, space, n)
            elif kind == 1:
                L = np.eye(n) + np.tril(rng.uniform(-0.1, 0.1, size=(n, n)), k=-1)
                signs = rng.choice([-1.0, 1.0], size=n)
                D = signs[:, None] * rng.uniform(1.0, 2.0, size=(n, space.m))
                B = FunctionMatrix(space, np.einsum("ij,jm,kj->ikm", L, D, L))
            else:
                B = FunctionMatrix.constant(space, np.zeros((n, n)))

            decomposition = orthogonal_decompose(B)
            assert decomposition.rank + len(decomposition.radical_basis) == n
            if kind == 2:
                assert decomposition.rank == 0
            else:
                assert decomposition.rank == n
            self._gram_is_diagonal(decomposition, B)

            if decomposition.rank:
                gram = decomposition.gram_matrix(B)
                cu = rng.standard_normal((decomposition.rank, space.m))
                cv = rng.standard_normal((decomposition.rank, space.m))
                u = sum((scale(AlgebraElement(space, c), x)
                         for c, x in zip(cu, decomposition.ortho_basis)), FunctionVector.zeros(space, n))
                v = sum((scale(AlgebraElement(space, c), x)
                         for c, x in zip(cv, decomposition.ortho_basis)), FunctionVector.zeros(space, n))
                expected = np.einsum("im,im,iim->m", cu, cv, gram)
                np.testing.assert_allclose(dot_A(u, v, B).values, expected,
                                           rtol=1e-10, atol=1e-10 * np.max(np.abs(gram)))

    def test_radical_is_orthogonal_to_basis(self):
        space = MeasureSpace.uniform(3)
        B = FunctionMatrix.constant(space, np.diag([2.0, 0.0, -1.0]))
        decomposition = orthogonal_decompose(B)
        assert decomposition.rank == 2
        assert len(decomposition.radical_basis) == 1
        for x in decomposition.ortho_basis:
            for w in decomposition.radical_basis:
                assert np.allclose(dot_A(x, w, B).values, 0.0)
