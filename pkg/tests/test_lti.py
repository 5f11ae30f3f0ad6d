import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icovsynth.lti import (
    BEYOND_GRID,
    AlgebraicLoopError,
    FreqResponse,
    GeneralizedPlant,
    RationalTF,
    StateSpace,
    UnstableSystemError,
    append,
    as_ss,
    bandwidth_3db,
    crossover_frequency,
    default_grid,
    feedback,
    freq_response,
    hinf_norm,
    is_stable,
    lft,
    parallel,
    series,
    ss_inverse,
    static_gain,
    tf_to_ss,
)
from icovsynth.synth import sensitivity_set

W = np.logspace(-2, 4, 61)


def random_stable(seed: int, n: int, m: int = 1, p: int = 1) -> StateSpace:
    r = np.random.default_rng(seed)
    A = r.standard_normal((n, n))
    A -= (np.max(np.linalg.eigvals(A).real) + 0.5) * np.eye(n)
    return StateSpace(A, r.standard_normal((n, m)), r.standard_normal((p, n)), r.standard_normal((p, m)))


def values(g, w=W):
    return freq_response(g, w).values


seeds = st.integers(0, 100_000)
orders = st.integers(1, 3)


class TestRationalTF:
    def test_strips_leading_zeros(self):
        g = RationalTF([0.0, 0.0, 1.0], [0.0, 1.0, 1.0])
        assert g.num.tolist() == [1.0] and g.den.tolist() == [1.0, 1.0]

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            RationalTF([1.0], [0.0])

    def test_gains_and_properness(self):
        g = RationalTF([2.0, 4.0], [1.0, 1.0])
        assert g.dc_gain() == 4.0 and g.hf_gain() == 2.0
        assert g.is_proper and not g.is_strictly_proper
        assert RationalTF([1.0, 0.0, 0.0], [1.0, 1.0]).hf_gain() == math.inf

    def test_product(self):
        g = RationalTF([1.0], [1.0, 1.0]) * RationalTF([1.0, 2.0], [1.0, 3.0])
        s = 2j
        assert g(s) == pytest.approx(1 / (s + 1) * (s + 2) / (s + 3))


class TestTfToSs:
    def test_first_order_canonical(self):
        g = tf_to_ss(RationalTF([1.0], [1.0, 1.0]))
        assert (g.A.tolist(), g.B.tolist(), g.C.tolist(), g.D.tolist()) == ([[-1.0]], [[1.0]], [[1.0]], [[0.0]])

    def test_static(self):
        g = tf_to_ss(RationalTF.constant(3.5))
        assert g.n_states == 0 and g.D[0, 0] == 3.5

    def test_second_order_point(self):
        tf = RationalTF([1.0, 2.0], [1.0, 3.0, 4.0])
        got = tf_to_ss(tf).evaluate(1j)[0, 0]
        assert abs(got - (1j + 2) / ((1j) ** 2 + 3j + 4)) <= 1e-12

    def test_improper(self):
        with pytest.raises(ValueError):
            tf_to_ss(RationalTF([1.0, 0.0], [1.0]))

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.lists(st.floats(0.1, 5), min_size=1, max_size=3))
    def test_realization_matches_rational(self, num, roots):
        den = np.poly(-np.asarray(roots))
        num = num[: den.size]
        tf = RationalTF(num, den)
        got = freq_response(tf_to_ss(tf), W).values[:, 0, 0]
        ref = tf(1j * W)
        assert np.allclose(got, ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max() + 1e-14)


class TestStateSpace:
    def test_dimension_check(self):
        with pytest.raises(ValueError):
            StateSpace(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), [[0.0]])

    def test_label_count(self):
        with pytest.raises(ValueError):
            StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]], ["a", "b"])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            StateSpace([[np.nan]], [[1.0]], [[1.0]], [[0.0]])

    def test_subsystem_by_label(self):
        g = StateSpace(-np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)), ["a", "b"], ["x", "y"])
        s = g.subsystem(outputs="y", inputs=["b"])
        assert s.input_labels == ("b",) and s.output_labels == ("y",)
        assert s.dc_gain()[0, 0] == pytest.approx(1.0)

    def test_similarity_preserves_response(self, rng):
        g = random_stable(1, 3)
        T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        assert np.allclose(values(g.similarity(T)), values(g), rtol=1e-10, atol=1e-12)
        assert np.allclose(values(g.balanced()), values(g), rtol=1e-10, atol=1e-12)

    def test_generalized_plant_partition(self):
        sys = StateSpace(-np.eye(1), np.ones((1, 3)), np.ones((2, 1)), np.zeros((2, 3)), ["w1", "w2", "u"], ["z", "y"])
        P = GeneralizedPlant(sys, 2, 1, 1, 1)
        assert P.w_labels == ("w1", "w2") and P.u_labels == ("u",)
        assert P.z_labels == ("z",) and P.y_labels == ("y",)
        assert P.blocks()[1].shape == (1, 2)
        with pytest.raises(ValueError):
            GeneralizedPlant(sys, 1, 1, 1, 1)


class TestInterconnection:
    def test_series_identity(self):
        g = random_stable(3, 2)
        assert np.allclose(values(series(g, static_gain([[1.0]]))), values(g), rtol=1e-12)

    def test_integrator_unity_feedback(self):
        cl = feedback(tf_to_ss(RationalTF([1.0], [1.0, 0.0])), static_gain([[1.0]]))
        assert np.allclose(values(cl)[:, 0, 0], 1.0 / (1j * W + 1.0), rtol=1e-12)

    @given(seeds, st.floats(0.1, 10))
    def test_feedback_poles_are_characteristic_roots(self, seed, k):
        g = random_stable(seed, 2)
        g = StateSpace(g.A, g.B, g.C, [[0.0]])
        tf_num = np.poly(g.A - g.B @ g.C) - np.poly(g.A)  # numerator of C(sI-A)^-1 B
        char = np.poly(g.A) + k * tf_num
        poles = np.sort_complex(feedback(g, static_gain([[k]])).poles())
        roots = np.sort_complex(np.roots(char).astype(complex))
        assert np.allclose(poles, roots, rtol=1e-7, atol=1e-7)

    @given(seeds, seeds, orders, orders)
    def test_series_is_pointwise_product(self, s1, s2, n1, n2):
        g1, g2 = random_stable(s1, n1), random_stable(s2, n2)
        got = values(series(g1, g2))[:, 0, 0]
        ref = values(g1)[:, 0, 0] * values(g2)[:, 0, 0]
        assert np.allclose(got, ref, rtol=1e-10, atol=1e-10)

    @given(seeds, seeds, orders, orders)
    def test_parallel_is_pointwise_sum(self, s1, s2, n1, n2):
        g1, g2 = random_stable(s1, n1), random_stable(s2, n2)
        got = values(parallel(g1, g2))[:, 0, 0]
        assert np.allclose(got, values(g1)[:, 0, 0] + values(g2)[:, 0, 0], rtol=1e-10, atol=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            series(random_stable(0, 1, p=2), random_stable(1, 1))
        with pytest.raises(ValueError):
            parallel(random_stable(0, 1, p=2), random_stable(1, 1))

    def test_algebraic_loop(self):
        with pytest.raises(AlgebraicLoopError):
            feedback(static_gain([[1.0]]), static_gain([[1.0]]), sign=+1)

    def test_append_is_block_diagonal(self):
        g1, g2 = random_stable(5, 1), random_stable(6, 2)
        v = values(append(g1, g2))
        assert np.allclose(v[:, 0, 0], values(g1)[:, 0, 0]) and np.allclose(v[:, 1, 1], values(g2)[:, 0, 0])
        assert np.all(v[:, 0, 1] == 0) and np.all(v[:, 1, 0] == 0)

    def test_lft_matches_feedback(self):
        # P = [[G, G], [-G, -G]] closed by K reproduces r -> y under negative feedback.
        G = random_stable(7, 2)
        K = random_stable(8, 1)
        P = StateSpace(G.A, np.hstack([G.B, G.B]), np.vstack([G.C, -G.C]), np.block([[G.D, G.D], [-G.D, -G.D]]))
        via_lft = lft(P, K, 1, 1)
        H = feedback(G, K)  # r -> y with u = r - K y
        assert np.allclose(values(via_lft), values(H), rtol=1e-9, atol=1e-12)

    def test_lft_dimension_check(self):
        with pytest.raises(ValueError):
            lft(random_stable(0, 1, m=2, p=2), random_stable(1, 1, m=2), 1, 1)

    @given(seeds, orders)
    def test_inverse(self, seed, n):
        g = random_stable(seed, n)
        if abs(g.D[0, 0]) < 0.1:
            g = StateSpace(g.A, g.B, g.C, [[1.0]])
        prod = values(series(g, ss_inverse(g)))[:, 0, 0]
        assert np.allclose(prod, 1.0, rtol=1e-8, atol=1e-8)

    def test_inverse_needs_feedthrough(self):
        with pytest.raises(AlgebraicLoopError):
            ss_inverse(StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_as_ss(self):
        assert as_ss(2.0).D[0, 0] == 2.0
        chain = as_ss([RationalTF([1.0], [1.0, 1.0]), 3.0])
        assert chain.dc_gain()[0, 0] == pytest.approx(3.0)
        with pytest.raises(TypeError):
            as_ss("x")


class TestFrequencyResponse:
    def test_first_order_point(self):
        fr = freq_response(tf_to_ss(RationalTF([1.0], [1.0, 1.0])), [1.0])
        assert fr.magnitude()[0] == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert fr.phase_deg()[0] == pytest.approx(-45.0, abs=1e-10)

    def test_static(self):
        fr = freq_response(static_gain([[2.5]]), W)
        assert np.all(fr.magnitude() == 2.5) and np.all(fr.phase_deg() == 0.0)

    @given(seeds)
    def test_resolvent_matches_pole_zero_form(self, seed):
        g = random_stable(seed, 3)
        g = StateSpace(g.A, g.B, g.C, [[0.3]])
        zeros = np.linalg.eigvals(g.A - g.B @ g.C / 0.3)
        poles = np.linalg.eigvals(g.A)
        s = 1j * W
        ref = 0.3 * np.prod(s[:, None] - zeros[None], axis=1) / np.prod(s[:, None] - poles[None], axis=1)
        assert np.allclose(values(g)[:, 0, 0], ref, rtol=1e-9, atol=1e-10)

    def test_imaginary_pole_marked_invalid(self):
        osc = StateSpace([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
        fr = freq_response(osc, [0.5, 1.0, 2.0])
        assert fr.valid.tolist() == [True, False, True]
        assert np.isnan(fr.values[1, 0, 0])

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            FreqResponse(np.array([1.0, 0.5]), np.zeros((2, 1, 1)), np.ones(2, bool), ("u",), ("y",))
        with pytest.raises(ValueError):
            default_grid(10.0, 1.0)

    def test_default_grid(self):
        w = default_grid()
        assert w[0] == pytest.approx(1e-2) and w[-1] == pytest.approx(1e7)
        assert len(w) == 9 * 200 + 1

    def test_csv_round_trip(self, tmp_path):
        g = random_stable(11, 2, m=2, p=1).relabel(["a", "b"], ["y"])
        fr = freq_response(g, W)
        fr.to_csv(tmp_path / "f.csv")
        back = FreqResponse.from_csv(tmp_path / "f.csv")
        assert back.input_labels == ("a", "b") and back.output_labels == ("y",)
        assert np.array_equal(back.values, fr.values) and np.array_equal(back.omega, fr.omega)
        assert (tmp_path / "f.csv").read_text().splitlines()[0].startswith("omega_rad_s,re_y_from_a,im_y_from_a")


class TestStability:
    def test_basic(self):
        assert is_stable(StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]]))
        assert not is_stable(StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]]), margin=0.1)
        assert not is_stable(StateSpace([[-0.05]], [[1.0]], [[1.0]], [[0.0]]), margin=0.1)
        assert is_stable(static_gain([[1.0]]))


class TestBandwidth:
    @pytest.mark.parametrize("wc", [0.3, 10.0, 2.5e4])
    def test_first_order(self, wc):
        g = tf_to_ss(RationalTF([1.0], [1 / wc, 1.0]))
        assert bandwidth_3db(g) == pytest.approx(wc, rel=1e-4)

    @pytest.mark.parametrize("wc", [1.0, 377.0])
    def test_butterworth(self, wc):
        g = tf_to_ss(RationalTF([wc**2], [1.0, math.sqrt(2) * wc, wc**2]))
        assert bandwidth_3db(g) == pytest.approx(wc, rel=1e-4)

    def test_static_beyond_grid(self):
        assert bandwidth_3db(static_gain([[4.0]])) == BEYOND_GRID

    def test_unstable(self):
        with pytest.raises(UnstableSystemError):
            bandwidth_3db(StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_zero_dc(self):
        with pytest.raises(ValueError):
            bandwidth_3db(tf_to_ss(RationalTF([1.0, 0.0], [1.0, 1.0])))

    @given(seeds, st.floats(1e-3, 1e3))
    def test_output_scaling_invariance(self, seed, k):
        g = random_stable(seed, 2)
        if abs(g.dc_gain()[0, 0]) < 1e-3:
            return
        b1, b2 = bandwidth_3db(g), bandwidth_3db(g.scaled(k))
        assert b1 == b2 or b1 == pytest.approx(b2, rel=1e-6)

    def test_crossover_of_integrator(self):
        assert crossover_frequency(tf_to_ss(RationalTF([50.0], [1.0, 0.0]))) == pytest.approx(50.0, rel=1e-5)
        assert crossover_frequency(static_gain([[0.5]])) == BEYOND_GRID


class TestHinfNorm:
    def test_first_order(self):
        assert hinf_norm(tf_to_ss(RationalTF([1.0], [1.0, 1.0]))) == pytest.approx(1.0, rel=1e-6)

    def test_high_pass(self):
        assert hinf_norm(tf_to_ss(RationalTF([1.0, 0.0], [1.0, 1.0]))) == pytest.approx(1.0, rel=1e-6)

    def test_resonant_peak(self):
        zeta = 0.005
        peak = 1.0 / (2 * zeta * math.sqrt(1 - zeta**2))
        assert hinf_norm(tf_to_ss(RationalTF([1.0], [1.0, 0.01, 1.0]))) == pytest.approx(peak, rel=1e-2)

    def test_unstable(self):
        with pytest.raises(UnstableSystemError):
            hinf_norm(StateSpace([[0.5]], [[1.0]], [[1.0]], [[0.0]]))

    @given(seeds, orders)
    def test_bounds_every_grid_point(self, seed, n):
        g = random_stable(seed, n, m=2, p=2)
        nrm = hinf_norm(g)
        sig = np.linalg.svd(values(g, default_grid(1e-3, 1e4, 50)), compute_uv=False)[:, 0]
        assert nrm >= sig.max() * (1 - 1e-9)


class TestSensitivityIdentity:
    @given(seeds, orders, seeds, orders)
    def test_s_plus_t_is_one(self, s1, n1, s2, n2):
        G, K = random_stable(s1, n1), random_stable(s2, n2)
        if abs(1 + G.D[0, 0] * K.D[0, 0]) < 0.1:
            return
        S, T, _ = sensitivity_set(G, K)
        fs, ft = values(S, default_grid())[:, 0, 0], values(T, default_grid())[:, 0, 0]
        assert np.max(np.abs(fs + ft - 1.0)) <= 1e-10
