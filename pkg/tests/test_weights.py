import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icovsynth.lti import RationalTF, freq_response
from icovsynth.weights import (
    MAX_CASCADE_ORDER,
    OMEGA_R,
    CtrlWeightParams,
    ResonantSectionParams,
    SensWeightParams,
    Weight,
    cascade,
    cases_from_document,
    factor_from_dict,
    load_weight_cases,
    resonant_section,
    save_weight_cases,
    table2_cases,
    table2_document,
    variants_document,
    w_d_lowpass,
    w_d_static,
    w_s1_first_order,
    w_u,
    w_u_from_corners,
)

CTX = {"omega_LC": 6455.0, "omega_res": 9129.0}


def mag(g: RationalTF, w):
    return np.abs(g(1j * np.asarray(w, dtype=float)))


def is_stable_proper(g: RationalTF) -> bool:
    return g.is_proper and bool(np.all(g.poles().real < 0))


class TestSensitivityWeight:
    def test_comparison_setting(self):
        g = w_s1_first_order(SensWeightParams(2.0, 2 * math.pi * 100, 1e-3))
        assert g.dc_gain() == pytest.approx(1000.0, rel=1e-12)
        assert g.hf_gain() == pytest.approx(0.5, rel=1e-12)

    def test_degenerate_is_unity(self):
        g = w_s1_first_order(SensWeightParams(1.0, 5.0, 1.0))
        np.testing.assert_allclose(mag(g, np.logspace(-3, 3, 13)), 1.0, rtol=1e-12)

    def test_value_at_omega_b(self):
        M_s, wb, eps = 2.0, 600.0, 1e-3
        g = w_s1_first_order(SensWeightParams(M_s, wb, eps))
        assert mag(g, [wb])[0] == pytest.approx(abs(1 + 1j / M_s) / abs(eps + 1j), rel=1e-12)

    @given(st.floats(1.0, 10.0), st.floats(1e-1, 1e5), st.floats(1e-6, 1.0))
    def test_limits(self, M_s, wb, eps):
        g = w_s1_first_order(SensWeightParams(M_s, wb, eps))
        assert abs(g(0.0)) == pytest.approx(1 / eps, rel=1e-10)
        assert g.hf_gain() == pytest.approx(1 / M_s, rel=1e-10)
        assert is_stable_proper(g)

    @pytest.mark.parametrize("kw", [dict(M_s=0.5, omega_b=1, eps=1e-3), dict(M_s=2, omega_b=0, eps=1e-3), dict(M_s=2, omega_b=1, eps=0)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SensWeightParams(**kw)


class TestControlWeight:
    def test_table_form_via_corners(self):
        g = w_u(w_u_from_corners(0.01, 100.0, 1e6))
        assert g.dc_gain() == pytest.approx(0.01, rel=1e-12)
        assert g.hf_gain() == pytest.approx(100.0, rel=1e-12)
        ref = RationalTF([0.01 / 100, 0.01], [1e-6, 1.0])
        w = np.logspace(0, 8, 17)
        np.testing.assert_allclose(mag(g, w), mag(ref, w), rtol=1e-12)

    def test_degenerate_is_unity(self):
        g = w_u(CtrlWeightParams(1.0, 50.0, 1.0))
        np.testing.assert_allclose(mag(g, np.logspace(-2, 4, 7)), 1.0, rtol=1e-12)

    def test_geometric_mean_point(self):
        p = CtrlWeightParams(100.0, 1e4, 1e-2)
        g = w_u(p)
        w = math.sqrt(p.omega_bc / p.M_u * p.omega_bc / p.eps1)
        direct = abs(1j * w + p.omega_bc / p.M_u) / abs(p.eps1 * 1j * w + p.omega_bc)
        assert mag(g, [w])[0] == pytest.approx(direct, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            CtrlWeightParams(0.5, 1.0, 0.1)
        with pytest.raises(ValueError):
            CtrlWeightParams(2.0, 1.0, 2.0)


class TestResonantSection:
    def test_sixty_hertz_peak(self):
        g = resonant_section(ResonantSectionParams(OMEGA_R, 1.0, 0.001))
        assert mag(g, [OMEGA_R])[0] == pytest.approx(1000.0, rel=1e-6)
        assert OMEGA_R == pytest.approx(377.0, rel=1e-3)

    def test_equal_damping_is_all_pass(self):
        g = resonant_section(ResonantSectionParams(100.0, 0.3, 0.3))
        np.testing.assert_allclose(mag(g, np.logspace(0, 4, 9)), 1.0, rtol=1e-12)

    def test_grid_search_peak_location(self):
        w0 = 2500.0
        g = resonant_section(ResonantSectionParams(w0, 1.0, 0.01))
        w = np.logspace(np.log10(w0) - 1, np.log10(w0) + 1, 20001)
        assert w[np.argmax(mag(g, w))] == pytest.approx(w0, rel=1e-3)

    @given(st.floats(1.0, 1e5), st.floats(0.01, 10.0), st.floats(0.001, 10.0))
    def test_gain_at_centre_and_limits(self, w0, zn, zd):
        g = resonant_section(ResonantSectionParams(w0, zn, zd))
        assert mag(g, [w0])[0] == pytest.approx(zn / zd, rel=1e-6)
        assert g.dc_gain() == pytest.approx(1.0) and g.hf_gain() == pytest.approx(1.0)
        assert is_stable_proper(g)

    def test_validation(self):
        with pytest.raises(ValueError):
            ResonantSectionParams(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ResonantSectionParams(1.0, 0.0, 1.0)


class TestDisturbanceWeights:
    def test_static(self):
        assert w_d_static(120.0).dc_gain() == pytest.approx(1 / 120)
        with pytest.raises(ValueError):
            w_d_static(0.0)

    def test_lowpass_corner(self):
        assert mag(w_d_lowpass(3147.0), [3147.0])[0] == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        with pytest.raises(ValueError):
            w_d_lowpass(-1.0)

    def test_fast_pole_approaches_unity(self):
        w = np.logspace(-2, 4, 13)
        np.testing.assert_allclose(mag(w_d_lowpass(1e12), w), 1.0, rtol=1e-7)


class TestCascade:
    def test_one_is_identity(self):
        g = w_s1_first_order(SensWeightParams(2.0, 10.0, 1e-3))
        c = cascade(g, 1)
        assert np.array_equal(c.num, g.num) and np.array_equal(c.den, g.den)

    def test_square(self):
        g = w_s1_first_order(SensWeightParams(2.0, 10.0, 1e-3))
        c = cascade(g, 2)
        assert c.dc_gain() == pytest.approx(1e6, rel=1e-10)
        assert c.order == 2 * g.order
        w = np.logspace(-3, 4, 15)
        np.testing.assert_allclose(mag(c, w), mag(g, w) ** 2, rtol=1e-12)

    def test_guards(self):
        g = w_d_lowpass(1.0)
        with pytest.raises(ValueError):
            cascade(g, 0)
        with pytest.raises(ValueError):
            cascade(g, MAX_CASCADE_ORDER + 1)


class TestFactorDicts:
    @pytest.mark.parametrize(
        "entry",
        [
            {"type": "unity"},
            {"type": "gain", "k": 3.0},
            {"type": "lag", "gain": 50.0, "omega_p": 1e3},
            {"type": "w_s1", "M_s": 2, "omega_b": 600, "eps": 1e-3},
            {"type": "w_u", "M_u": 100, "omega_bc": 1e4, "eps1": 1e-2},
            {"type": "w_u_corners", "dc_gain": 0.01, "omega_zero": 100, "omega_pole": 1e6},
            {"type": "resonant", "omega_0": "omega_LC", "zeta_num": 1, "zeta_den": 10},
            {"type": "w_d_static", "v_max": 120},
            {"type": "w_d_lowpass", "omega_p": 3147},
            {"type": "lag", "omega_p": 10.0, "power": 3},
        ],
    )
    def test_every_factor_is_stable_and_proper(self, entry):
        assert is_stable_proper(factor_from_dict(entry, CTX))

    def test_symbolic_frequency(self):
        f = factor_from_dict({"type": "resonant", "omega_0": "omega_LC", "zeta_num": 1, "zeta_den": 0.1}, CTX)
        assert mag(f, [CTX["omega_LC"]])[0] == pytest.approx(10.0, rel=1e-6)
        with pytest.raises(KeyError):
            factor_from_dict({"type": "w_d_lowpass", "omega_p": "omega_x"}, CTX)

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            factor_from_dict({"type": "pid"})

    def test_power(self):
        f = factor_from_dict({"type": "lag", "omega_p": 10.0, "power": 2})
        assert f.order == 2


class TestWeightObject:
    def test_unity(self):
        assert Weight().is_unity and Weight().order == 0
        assert Weight().to_ss("a", "b").D[0, 0] == 1.0

    def test_realization_matches_product(self):
        fs = (w_d_lowpass(10.0), resonant_section(ResonantSectionParams(300.0, 1.0, 0.01)), RationalTF.constant(2.0))
        W = Weight(fs)
        w = np.logspace(0, 4, 41)
        ref = np.prod([f(1j * w) for f in fs], axis=0)
        got = freq_response(W.to_ss(), w).values[:, 0, 0]
        np.testing.assert_allclose(got, ref, rtol=1e-9)
        np.testing.assert_allclose(W(1j * w), ref, rtol=1e-12)
        np.testing.assert_allclose(W.tf()(1j * w), ref, rtol=1e-9)
        assert W.order == 3


class TestWeightFiles:
    def test_table2_structure(self):
        cases = table2_cases(CTX)
        assert [c.case_id for c in cases] == ["I", "II", "III", "IV"]
        by = {c.case_id: c for c in cases}
        assert by["I"].output_weights["z_vinv"].is_unity and by["I"].input_weights["i_d"].is_unity
        assert not by["II"].output_weights["z_vinv"].is_unity and by["II"].input_weights["i_d"].is_unity
        assert by["III"].output_weights["z_vinv"].is_unity and not by["III"].input_weights["i_d"].is_unity
        for c in cases:
            assert c.output_weights["z_err"].order == 5

    def test_table2_error_weight_shape(self):
        ws = table2_cases(CTX)[0].output_weights["z_err"]
        assert abs(ws(0.0)) == pytest.approx(50.0)
        assert abs(ws(1j * OMEGA_R)) > 100.0 * abs(ws(1j * 0.8 * OMEGA_R))
        assert abs(ws(1j * CTX["omega_LC"])) < abs(ws(1j * CTX["omega_LC"] / 3))

    def test_round_trip(self, tmp_path):
        doc = table2_document()
        save_weight_cases(doc, tmp_path / "w.json")
        back = load_weight_cases(tmp_path / "w.json", CTX)
        direct = cases_from_document(doc, CTX)
        w = np.logspace(0, 5, 11)
        for a, b in zip(back, direct):
            assert a.case_id == b.case_id
            for ch in a.output_weights:
                np.testing.assert_array_equal(a.output_weights[ch](1j * w), b.output_weights[ch](1j * w))

    def test_file_frequencies_do_not_override_plant(self, tmp_path):
        doc = {"frequencies": {"omega_LC": 1.0}, "cases": [{"id": "x", "outputs": {"z": [{"type": "w_d_lowpass", "omega_p": "omega_LC"}]}}]}
        c = cases_from_document(doc, CTX)[0]
        assert c.output_weights["z"].factors[0].poles()[0] == pytest.approx(-CTX["omega_LC"])

    def test_empty_document(self):
        assert cases_from_document({}, CTX) == []

    def test_variants_are_distinct_named_cases(self):
        cases = cases_from_document(variants_document(), CTX)
        assert [c.case_id for c in cases] == ["IV-gain100", "IV-res"]
        assert abs(cases[0].output_weights["z_err"](0.0)) == pytest.approx(100.0)
        notch = cases[1].output_weights["z_err"].factors[2]
        assert np.sqrt(notch.den[-1]) == pytest.approx(CTX["omega_res"])

    def test_shipped_files_match_builders(self):
        from icovsynth.cli import data_file

        shipped = json.loads(data_file("table2_weights.json").read_text())
        assert shipped["cases"] == table2_document()["cases"]
        shipped = json.loads(data_file("weight_variants.json").read_text())
        assert shipped["cases"] == variants_document()["cases"]
