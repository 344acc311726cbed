import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpt_lab.core import DomainError
from cpt_lab.laws import (
    DiscreteAtoms,
    InconsistentTailError,
    PowerTail,
    QuantileGrid,
    law_from_json,
)


class TestDiscreteAtoms:
    def test_validation(self):
        with pytest.raises(DomainError):
            DiscreteAtoms([1.0, 0.0], [0.5, 0.5], [0.5, 0.5])
        with pytest.raises(DomainError):
            DiscreteAtoms([0.0, 1.0], [0.5, 0.6], [0.5, 0.5])
        with pytest.raises(DomainError):
            DiscreteAtoms([0.0, 1.0], [0.5, 0.5], [1.5, -0.5])

    def test_from_unsorted_merges_and_drops(self):
        law = DiscreteAtoms.from_unsorted([3.0, 1.0, 3.0, 2.0], [0.25, 0.25, 0.5, 0.0], [0.1, 0.3, 0.6, 0.0])
        assert law.values.tolist() == [1.0, 3.0]
        assert law.p_P.tolist() == [0.25, 0.75]
        assert law.p_Q.tolist() == pytest.approx([0.3, 0.7])

    def test_arrays_are_read_only(self):
        law = DiscreteAtoms.constant(2.0)
        with pytest.raises(ValueError):
            law.values[0] = 1.0

    def test_parts_and_mirror(self):
        law = DiscreteAtoms([-2.0, 1.0, 3.0], [0.2, 0.3, 0.5], [0.5, 0.3, 0.2])
        assert law.positive_part().values.tolist() == [0.0, 1.0, 3.0]
        neg = law.negative_part()
        assert neg.values.tolist() == [0.0, 2.0]
        assert neg.p_P.tolist() == pytest.approx([0.8, 0.2])
        assert law.mirror().values.tolist() == [-3.0, -1.0, 2.0]

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=20))
    def test_json_round_trip(self, values):
        p = np.full(len(values), 1.0 / len(values))
        law = DiscreteAtoms.from_unsorted(values, p)
        back = law_from_json(law.to_json())
        assert np.array_equal(back.values, law.values)
        assert np.allclose(back.p_P, law.p_P, rtol=0, atol=1e-15)


class TestQuantileGrid:
    def test_requires_tail_when_open(self):
        with pytest.raises(DomainError):
            QuantileGrid(levels=[0.0, 0.5], values=[1.0, 2.0])

    def test_tail_consistency(self):
        with pytest.raises(InconsistentTailError):
            QuantileGrid(levels=[0.0, 0.5], values=[1.0, 2.0], right_tail=PowerTail(1.0, 2.0))
        grid = QuantileGrid(levels=[0.0, 0.5], values=[1.0, 2.0], right_tail=PowerTail(1.0, 1.0))
        assert grid.survival(4.0)[0] == pytest.approx(0.25)

    def test_monotone_values(self):
        with pytest.raises(DomainError):
            QuantileGrid(levels=[0.0, 1.0], values=[2.0, 1.0])

    def test_pareto_survival(self):
        law = QuantileGrid.pareto(2.0, scale=3.0)
        assert law.survival([2.0, 3.0, 6.0]).tolist() == pytest.approx([1.0, 1.0, 0.25])

    def test_loglog_interpolation(self):
        # two nodes on S(x) = 1/x are reproduced exactly between the nodes
        law = QuantileGrid.from_nodes([(0.0, 1.0, 1.0), (0.9, 0.1, 10.0), (1.0, 0.0, 10.0)])
        assert law.survival(2.0)[0] == pytest.approx(0.5, rel=1e-14)

    def test_positive_part_inserts_zero(self):
        law = QuantileGrid.from_nodes([(0.0, 1.0, -1.0), (1.0, 0.0, 1.0)])
        pos = law.positive_part()
        assert pos.values[0] == 0.0
        assert pos.survival(0.0)[0] == pytest.approx(0.5)

    def test_mirror_swaps_tails(self):
        law = QuantileGrid.pareto(2.0)
        m = law.mirror()
        assert m.left_tail == law.right_tail and m.right_tail is None

    def test_truncate_above_through_tail(self):
        law = QuantileGrid.pareto(1.0)
        cut = law.truncate_above(4.0)
        assert cut.right_tail is None
        assert cut.values[-1] == 4.0
        assert cut.survival(2.0)[0] == pytest.approx(0.5)

    def test_json_round_trip(self):
        law = QuantileGrid(levels=[0.0, 0.5], values=[1.0, 2.0], right_tail=PowerTail(1.0, 1.0))
        back = law_from_json(law.to_json())
        assert np.array_equal(back.values, law.values) and back.right_tail == law.right_tail

    def test_json_spec_shape(self):
        obj = {"kind": "quantile", "grid": [[0.0, 1.0], [0.5, 2.0]], "tail": {"coef": 1.0, "exp": 1.0}}
        assert law_from_json(obj).right_tail == PowerTail(1.0, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            law_from_json({"kind": "histogram"})
