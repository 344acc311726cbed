from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpt_lab.core import CptSpec, Form
from cpt_lab.regime import Cause, Verdict, classify, rational_grid, sweep


def verdict_of(a, b, g, d):
    return classify(CptSpec(a, b, g, d))


class TestExamples:
    def test_well_posed(self):
        v = verdict_of(0.5, 0.8, 0.6, 0.7)
        assert (v.verdict, v.cause) == (Verdict.WELL_POSED, Cause.SUFFICIENT_HOLDS)

    def test_alpha_ge_beta(self):
        assert verdict_of(0.8, 0.5, 0.9, 0.9).cause is Cause.ALPHA_GE_BETA
        assert verdict_of(0.5, 0.5, 0.9, 0.4).cause is Cause.ALPHA_GE_BETA

    def test_alpha_eq_gamma(self):
        v = verdict_of(0.5, 0.6, 0.5, 0.7)
        # beta < delta here, so the loss-side cause comes first
        assert v.cause is Cause.BETA_DELTA_BELOW_ONE
        v = verdict_of(0.5, 0.6, 0.5, 0.5)
        assert (v.verdict, v.cause) == (Verdict.BOUNDARY, Cause.ALPHA_EQ_GAMMA)
        v = verdict_of(0.5, 0.6, 0.5, 0.55)
        assert (v.verdict, v.cause) == (Verdict.BOUNDARY, Cause.ALPHA_EQ_GAMMA)

    def test_beta_eq_delta(self):
        v = verdict_of(0.5, 0.6, 0.7, 0.6)
        assert (v.verdict, v.cause) == (Verdict.BOUNDARY, Cause.BETA_EQ_DELTA)

    def test_beta_delta_below_one(self):
        v = verdict_of(0.5, 0.6, 0.9, 0.8)
        assert (v.verdict, v.cause) == (Verdict.ILL_POSED, Cause.BETA_DELTA_BELOW_ONE)

    def test_alpha_gamma_above_one(self):
        assert verdict_of(0.9, 0.95, 0.3, 0.5).cause is Cause.ALPHA_GAMMA_ABOVE_ONE

    def test_tk_caveat(self):
        v = classify(CptSpec(0.5, 0.8, 0.6, 0.7, form=Form.TK))
        assert v.tk_caveat and v.to_json()["tk_caveat"] is True
        assert "tk_caveat" not in verdict_of(0.5, 0.8, 0.6, 0.7).to_json()

    def test_json(self):
        assert verdict_of(0.5, 0.8, 0.6, 0.7).to_json() == {"verdict": "WellPosed", "cause": "SufficientHolds"}


class TestProperties:
    def test_fraction_boundary_is_exact(self):
        v = classify(CptSpec(Fraction(1, 3), Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)))
        assert v.verdict is Verdict.BOUNDARY

    def test_float_boundary_is_strict(self):
        # 0.1 + 0.2 != 0.3 in IEEE arithmetic, and the classifier does not round
        assert verdict_of(0.1 + 0.2, 0.8, 0.3, 0.5).cause is Cause.ALPHA_GAMMA_ABOVE_ONE

    @given(st.floats(0.01, 1.0), st.floats(0.01, 0.999))
    def test_no_loss_distortion_never_well_posed(self, a, b):
        v = verdict_of(a, b, 0.5, 1.0)
        assert v.verdict is not Verdict.WELL_POSED

    def test_sweep_partition(self):
        counts = {v: 0 for v in Verdict}
        for spec, v in sweep(Fraction(1, 10)):
            a, b, g, d = spec.alpha, spec.beta, spec.gamma, spec.delta
            ill = a >= b or b / d < 1 or a / g > 1
            well = a < b and a / g < 1 < b / d
            assert ill != well or not ill
            expected = Verdict.ILL_POSED if ill else Verdict.WELL_POSED if well else Verdict.BOUNDARY
            assert v.verdict is expected
            if v.verdict is Verdict.BOUNDARY:
                assert a / g == 1 or b / d == 1
            counts[v.verdict] += 1
        assert sum(counts.values()) == 10**4 and all(counts.values())

    def test_rational_grid(self):
        assert rational_grid(Fraction(1, 4)) == [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
        with pytest.raises(ValueError):
            rational_grid(Fraction(2, 7))
