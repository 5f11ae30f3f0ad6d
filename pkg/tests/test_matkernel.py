import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from icovsynth.matkernel import (
    DEFAULT_CONFIG,
    ImaginaryAxisError,
    RiccatiError,
    as_matrix,
    care,
    care_residual,
    hamiltonian_has_imaginary_eig,
    schur_ordered,
    stabilizing_solution,
)
from icovsynth.selfcheck import random_stabilizable


def _closed_loop(A, B, R, X):
    return np.asarray(A) - np.asarray(B) @ np.linalg.solve(np.asarray(R), np.asarray(B).T @ X)


class TestAsMatrix:
    def test_scalar_and_vector_shapes(self):
        assert as_matrix(3.0).shape == (1, 1)
        assert as_matrix([1, 2, 3]).shape == (1, 3)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            as_matrix([[1.0, np.nan]])
        with pytest.raises(ValueError):
            as_matrix([[np.inf]])

    def test_rejects_3d(self):
        with pytest.raises(ValueError):
            as_matrix(np.zeros((2, 2, 2)))


class TestSchur:
    def test_diagonal_is_unchanged(self):
        res = schur_ordered(np.diag([-1.0, -2.0]))
        np.testing.assert_allclose(np.abs(res.Q), np.eye(2), atol=1e-14)
        np.testing.assert_allclose(np.sort(np.diag(res.T)), [-2.0, -1.0])

    def test_rotation_eigenvalues(self):
        res = schur_ordered([[0.0, 1.0], [-1.0, 0.0]], "rhp")
        np.testing.assert_allclose(sorted(res.eig, key=lambda z: z.imag), [-1j, 1j], atol=1e-14)

    def test_random_reassembly(self, rng):
        M = rng.standard_normal((5, 5))
        res = schur_ordered(M)
        assert np.linalg.norm(res.Q @ res.T @ res.Q.T - M) <= 1e-8 * np.linalg.norm(M)
        assert np.linalg.norm(res.Q.T @ res.Q - np.eye(5)) <= 1e-10 * 5

    def test_stable_block_leads(self, rng):
        M = rng.standard_normal((6, 6))
        res = schur_ordered(M, "lhp")
        n_stable = int(np.sum(np.linalg.eigvals(M).real < 0))
        assert res.sdim == n_stable
        assert np.all(res.eig[:n_stable].real < 0)
        assert np.all(res.eig[n_stable:].real >= 0)

    def test_callable_selector(self, rng):
        M = rng.standard_normal((4, 4))
        res = schur_ordered(M, lambda z: abs(z) < 1.0)
        assert res.sdim == int(np.sum(np.abs(np.linalg.eigvals(M)) < 1.0))

    def test_non_square(self):
        with pytest.raises(ValueError):
            schur_ordered(np.zeros((2, 3)))

    def test_unknown_selector(self):
        with pytest.raises(ValueError):
            schur_ordered(np.eye(2), "left")

    def test_empty(self):
        assert schur_ordered(np.zeros((0, 0))).sdim == 0

    @given(st.integers(1, 4), st.integers(0, 10_000))
    def test_eigenvalues_match_characteristic_roots(self, n, seed):
        M = np.random.default_rng(seed).standard_normal((n, n))
        eig = np.sort_complex(schur_ordered(M).eig)
        roots = np.sort_complex(np.roots(np.poly(M)).astype(complex))
        assert np.allclose(eig, roots, rtol=1e-8, atol=1e-8 * max(1.0, np.abs(roots).max()))


class TestImaginaryAxis:
    def test_rotation(self):
        assert hamiltonian_has_imaginary_eig([[0.0, 1.0], [-1.0, 0.0]], 1e-9)

    def test_real_spectrum(self):
        assert not hamiltonian_has_imaginary_eig(np.diag([-1.0, 1.0]), 1e-9)

    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            hamiltonian_has_imaginary_eig(np.eye(3))

    @pytest.mark.parametrize("a", [-2.0, -0.5, 0.0, 1.5])
    def test_scalar_full_information_threshold(self, a):
        # x' = a x + w + u, z = [x; u]: H = [[a, g^-2 - 1], [-1, -a]],
        # whose eigenvalues are +-sqrt(a^2 + 1 - g^-2). The imaginary axis is
        # first hit at g_opt = 1/sqrt(a^2 + 1).
        g_opt = 1.0 / math.sqrt(a * a + 1.0)
        H = lambda g: np.array([[a, g**-2 - 1.0], [-1.0, -a]])  # noqa: E731
        assert hamiltonian_has_imaginary_eig(H(0.99 * g_opt))
        assert not hamiltonian_has_imaginary_eig(H(1.01 * g_opt))


class TestCare:
    def test_scalar_integrator(self):
        X = care([[0.0]], [[1.0]], [[1.0]], [[1.0]])
        assert X[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert _closed_loop([[0.0]], [[1.0]], [[1.0]], X)[0, 0] == pytest.approx(-1.0)

    def test_stable_zero_cost(self):
        X = care([[-1.0]], [[1.0]], [[0.0]], [[1.0]])
        assert X[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_random_3x3_residual(self, rng):
        A, B, Q, R = random_stabilizable(rng, 3, 2)
        X = care(A, B, Q, R)
        assert np.linalg.norm(care_residual(A, B, Q, R, X)) <= 1e-8 * np.linalg.norm(Q)
        assert np.linalg.eigvalsh(X).min() >= -1e-10
        assert np.all(np.linalg.eigvals(_closed_loop(A, B, R, X)).real < 0)

    @given(
        st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.01, 10), st.floats(0.1, 10)
    )
    def test_scalar_closed_form(self, a, b, q, r):
        x = (a * r + math.sqrt(a * a * r * r + b * b * q * r)) / (b * b)
        X = care([[a]], [[b]], [[q]], [[r]])
        assert X[0, 0] == pytest.approx(x, rel=1e-10, abs=1e-10)

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.lists(st.floats(0.1, 4), min_size=2, max_size=2))
    def test_diagonal_decouples(self, a, q):
        # Diagonal 2x2 data splits into two scalar equations.
        X = care(np.diag(a), np.eye(2), np.diag(q), np.eye(2))
        expect = [ai + math.sqrt(ai * ai + qi) for ai, qi in zip(a, q)]
        np.testing.assert_allclose(X, np.diag(expect), rtol=1e-10, atol=1e-10)

    @given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
    def test_random_matches_scipy(self, n, m, seed):
        m = min(m, n)
        A, B, Q, R = random_stabilizable(np.random.default_rng(seed), n, m)
        X = care(A, B, Q, R)
        assert np.linalg.norm(X - X.T) <= 1e-10 * max(1.0, np.linalg.norm(X))
        assert np.linalg.norm(care_residual(A, B, Q, R, X)) <= 1e-8 * max(1.0, np.linalg.norm(Q))
        assert np.all(np.linalg.eigvals(_closed_loop(A, B, R, X)).real < 0)
        Xs = sla.solve_continuous_are(A, B, Q, R)
        assert np.linalg.norm(X - Xs) <= 1e-7 * max(1.0, np.linalg.norm(Xs))

    def test_badly_scaled_units(self):
        # Henry/farad scale data: time constants across ten decades.
        A = np.array([[-100.0, -1e3], [4e4, 0.0]])
        B = np.array([[1e3], [0.0]])
        Q = np.diag([1.0, 1e-6])
        R = np.array([[1e-4]])
        X = care(A, B, Q, R)
        Xs = sla.solve_continuous_are(A, B, Q, R)
        assert np.linalg.norm(X - Xs) <= 1e-7 * np.linalg.norm(Xs)

    def test_indefinite_r(self):
        with pytest.raises(ValueError):
            care(np.eye(1), np.eye(1), np.eye(1), -np.eye(1))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            care(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))

    def test_unstabilizable_fails_loudly(self):
        # Unstable mode that B cannot reach and Q observes: no stabilizing X.
        with pytest.raises(RiccatiError):
            care(np.diag([1.0, -1.0]), [[0.0], [1.0]], np.eye(2), [[1.0]])

    def test_imaginary_axis_is_recoverable_error(self):
        # Undamped, unobserved, unreachable oscillator.
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        with pytest.raises(ImaginaryAxisError):
            care(A, np.zeros((2, 1)), np.zeros((2, 2)), np.eye(1))
        assert issubclass(ImaginaryAxisError, ArithmeticError)

    def test_stabilizing_solution_empty(self):
        assert stabilizing_solution(np.zeros((0, 0))).shape == (0, 0)

    def test_config_is_shared_record(self):
        assert DEFAULT_CONFIG.imag_axis_tol > 0
        with pytest.raises(Exception):
            DEFAULT_CONFIG.imag_axis_tol = 1.0
