import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from cpt_lab.core import (
    CptSpec,
    DomainError,
    ExtendedValue,
    Form,
    ValueKind,
    distortion_minus,
    distortion_plus,
    parse_exponent,
    reduce_reference,
    tk_distortion,
    utility_minus,
    utility_plus,
)

exponents = st.floats(min_value=0.01, max_value=1.0)
probs = st.floats(min_value=0.0, max_value=1.0)


def spec(a=0.5, b=0.8, g=0.6, d=0.7, **kw):
    return CptSpec(a, b, g, d, **kw)


class TestSpecValidation:
    @pytest.mark.parametrize("bad", [0.0, -0.1, 1.0000001, math.nan, math.inf])
    def test_exponent_range(self, bad):
        with pytest.raises(DomainError):
            spec(a=bad)

    def test_power_form_has_unit_scales(self):
        with pytest.raises(DomainError):
            spec(c_plus=2.0)

    def test_tk_scales_must_be_positive(self):
        with pytest.raises(DomainError):
            spec(form=Form.TK, c_minus=0.0)

    def test_form_from_string(self):
        assert spec(form="tk").form is Form.TK

    def test_fraction_exponents_are_kept_exact(self):
        s = CptSpec(Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1, 4))
        assert s.alpha == Fraction(1, 3)
        assert s.a == pytest.approx(1 / 3, rel=1e-15)

    def test_json_round_trip(self):
        s = CptSpec(Fraction(1, 3), 0.8, 0.6, 0.7, form=Form.TK, c_plus=1.5, c_minus=2.25, reference_point=-1.0)
        assert CptSpec.from_json(s.to_json()) == s

    def test_json_field_names(self):
        assert set(spec().to_json()) == {"alpha", "beta", "gamma", "delta", "form", "c_plus", "c_minus", "reference_point"}

    def test_json_rejects_unknown_keys(self):
        with pytest.raises(DomainError):
            CptSpec.from_json({"alpha": 0.5, "beta": 0.8, "gamma": 0.6, "delta": 0.7, "lambda": 2})

    def test_parse_exponent(self):
        assert parse_exponent("3/4") == Fraction(3, 4)
        assert parse_exponent("0.35") == Fraction(7, 20)
        assert parse_exponent(0.5) == 0.5
        with pytest.raises(DomainError):
            parse_exponent("x")

    def test_reference_reduction(self):
        s, x0 = reduce_reference(spec(reference_point=2.0), 5.0)
        assert s.reference_point == 0 and x0 == 3.0


class TestUtilities:
    def test_examples(self):
        assert utility_plus(spec(a=0.5), 4.0) == 2.0
        assert utility_plus(spec(a=1.0, b=1.0), 7.3) == 7.3
        assert utility_plus(spec(a=0.88, b=0.9), 10.0) == pytest.approx(O.POW_10_088, rel=1e-15)

    def test_scale(self):
        s = spec(form=Form.TK, c_plus=1.5, c_minus=2.25)
        assert utility_plus(s, 4.0) == 3.0
        assert utility_minus(s, 1.0) == 2.25

    def test_zero(self):
        assert utility_plus(spec(), 0.0) == 0.0
        assert utility_minus(spec(), 0.0) == 0.0

    def test_negative_argument(self):
        with pytest.raises(DomainError):
            utility_plus(spec(), -1.0)
        with pytest.raises(DomainError):
            utility_minus(spec(), np.array([1.0, -0.5]))

    @given(exponents, st.floats(0, 1e6), st.floats(0, 1e6))
    def test_monotone(self, a, x, y):
        s = spec(a=a, b=a)
        lo, hi = sorted((x, y))
        if lo < hi:
            assert utility_plus(s, lo) <= utility_plus(s, hi)
            assert utility_minus(s, lo) <= utility_minus(s, hi)

    @given(exponents, st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.01, 0.99))
    def test_concave(self, a, x, y, t):
        s = spec(a=a)
        mid = utility_plus(s, t * x + (1 - t) * y)
        chord = t * utility_plus(s, x) + (1 - t) * utility_plus(s, y)
        assert mid >= chord - 1e-12 * max(1.0, chord)


class TestDistortions:
    def test_examples(self):
        assert distortion_plus(spec(g=0.5), 0.25) == 0.5
        for form in Form:
            assert distortion_plus(spec(g=1.0, form=form), 0.37) == 0.37
        assert distortion_plus(spec(g=0.61, form=Form.TK), 0.1) == pytest.approx(O.TK_061_01, rel=1e-14)

    @pytest.mark.parametrize("form", list(Form))
    @given(g=exponents)
    def test_endpoints_exact(self, form, g):
        s = spec(g=g, d=g, form=form)
        for w in (distortion_plus, distortion_minus):
            assert w(s, 0.0) == 0.0
            assert w(s, 1.0) == 1.0

    @given(exponents, probs)
    def test_power_overweights(self, g, p):
        assert distortion_plus(spec(g=g), p) >= p

    @given(st.floats(min_value=0.28, max_value=1.0), probs, probs)
    def test_monotone_tk(self, g, p, q):
        lo, hi = sorted((p, q))
        assert tk_distortion(lo, g) <= tk_distortion(hi, g) + 1e-15

    def test_tk_not_monotone_for_small_exponent(self):
        # the ratio form stops being increasing once the exponent drops below about 0.279
        assert tk_distortion(0.25, 0.125) > tk_distortion(0.5, 0.125)

    def test_tk_log_space_no_underflow(self):
        w = tk_distortion(np.array([1e-300, 1e-200]), 0.05)
        assert np.all(np.isfinite(w)) and np.all(w > 0)

    @given(exponents, probs)
    def test_tk_bracketed_by_power(self, g, p):
        w = float(tk_distortion(p, g))
        upper = p**g
        lower = upper * 2.0 ** (-(1.0 - g) / g)
        assert lower * (1 - 1e-12) <= w <= upper * (1 + 1e-12)

    @pytest.mark.parametrize("bad", [-0.01, 1.01, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            distortion_plus(spec(), bad)


class TestExtendedValue:
    def test_finite(self):
        v = ExtendedValue.finite(2.0)
        assert v.is_finite and v.estimate == 2.0 and float(v) == 2.0
        with pytest.raises(ValueError):
            ExtendedValue.finite(math.inf)

    def test_infinite_carries_reason(self):
        v = ExtendedValue.infinite(0.8, "kappa gamma / alpha <= 1")
        assert v.is_infinite and v.estimate == math.inf and v.reason

    def test_suspected_carries_exponent(self):
        v = ExtendedValue.suspected(10.0, 1.01)
        assert v.kind is ValueKind.DIVERGENCE_SUSPECTED
        assert v.to_json() == {"kind": "DivergenceSuspected", "lower_bound": 10.0, "tail_exponent": 1.01}
