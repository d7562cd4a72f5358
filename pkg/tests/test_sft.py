import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gibbstriple as gt
from gibbstriple.errors import BadShape, Inadmissible, NotPrimitive


class TestBuildSubshift:
    def test_golden_mean_valid(self):
        spec = gt.build_subshift(2, [[1, 1], [1, 0]])
        # matrix-power oracle: A^2 is strictly positive
        assert (np.linalg.matrix_power(spec.adjacency, 2) > 0).all()

    def test_full_shift_valid(self):
        spec = gt.build_subshift(3, np.ones((3, 3), dtype=int))
        assert spec.alphabet_size == 3

    def test_identity_not_primitive(self):
        with pytest.raises(NotPrimitive):
            gt.build_subshift(2, [[1, 0], [0, 1]])

    def test_period_two_not_primitive(self):
        with pytest.raises(NotPrimitive):
            gt.build_subshift(2, [[0, 1], [1, 0]])

    def test_dead_symbol_rejected(self):
        with pytest.raises(NotPrimitive):
            gt.build_subshift(2, [[1, 1], [0, 0]])

    def test_bad_shapes(self):
        with pytest.raises(BadShape):
            gt.build_subshift(2, [[1, 1, 1], [1, 1, 1]])
        with pytest.raises(BadShape):
            gt.build_subshift(2, [[1, 2], [1, 1]])
        with pytest.raises(BadShape):
            gt.build_subshift(1, [[1]])

    def test_large_primitive_cycle_with_chord(self):
        # cycle with one chord is primitive but needs a high power
        n = 5
        a = np.zeros((n, n), dtype=int)
        for i in range(n):
            a[i, (i + 1) % n] = 1
        a[0, 0] = 1
        spec = gt.build_subshift(n, a)
        assert spec.alphabet_size == n


class TestChildren:
    def test_full_shift_all_children(self, full2):
        for w in [(1,), (2,), (1, 2), ()]:
            assert gt.children(full2, w) == [1, 2]
            assert gt.alpha(full2, w) == 2

    def test_golden_row_read(self, golden):
        # children are read off the adjacency row of the last symbol
        assert gt.children(golden, (1, 2)) == [1]
        assert gt.alpha(golden, (1, 2)) == 1
        assert gt.children(golden, (2, 1)) == [1, 2]
        assert gt.alpha(golden, (2, 1)) == 2

    def test_inadmissible_word(self, golden):
        with pytest.raises(Inadmissible):
            gt.children(golden, (2, 2))
        with pytest.raises(Inadmissible):
            gt.children(golden, (0,))


class TestEnumerateCylinders:
    def test_golden_level3(self, golden):
        words = gt.enumerate_cylinders(golden, 3)
        assert words == [(1, 1, 1), (1, 1, 2), (1, 2, 1), (2, 1, 1), (2, 1, 2)]

    def test_full2_level2(self, full2):
        assert len(gt.enumerate_cylinders(full2, 2)) == 4

    def test_level1_is_alphabet(self, full3):
        assert gt.enumerate_cylinders(full3, 1) == [(1,), (2,), (3,)]

    @pytest.mark.parametrize("k", range(1, 9))
    def test_count_matches_matrix_power(self, golden, full2, k):
        for spec in (golden, full2):
            words = gt.enumerate_cylinders(spec, k)
            assert len(words) == gt.count_cylinders_at(spec, k)

    def test_cardinality_recursion(self, golden, full2, full3):
        # card(level k+1) equals the sum of children counts over level k
        for spec, kmax in ((golden, 12), (full2, 12), (full3, 8)):
            for k in range(1, kmax):
                level = gt.enumerate_cylinders(spec, k)
                total = sum(gt.alpha(spec, w) for w in level)
                assert total == gt.count_cylinders_at(spec, k + 1)

    def test_children_extension_admissible(self, golden):
        for k in range(1, 7):
            for w in gt.enumerate_cylinders(golden, k):
                for b in gt.children(golden, w):
                    assert gt.is_admissible(golden, w + (b,))


class TestCommonPrefixMetric:
    def test_equal_words(self):
        assert gt.common_prefix_metric((1, 2, 1), (1, 2, 1)) == 2.0 ** -3

    def test_first_symbol_differs(self):
        assert gt.common_prefix_metric((1, 1), (2, 1)) == 1.0

    def test_two_symbol_prefix(self):
        assert gt.common_prefix_metric((1, 1, 2), (1, 1, 1)) == 0.25

    def test_ultrametric_exhaustive_golden(self, golden):
        words = [w for k in range(1, 7) for w in gt.enumerate_cylinders(golden, k)]
        for u, v, w in itertools.product(words, repeat=3):
            duw = gt.common_prefix_metric(u, w)
            assert duw <= max(gt.common_prefix_metric(u, v), gt.common_prefix_metric(v, w))

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_ultrametric_random_full3(self, full3, data):
        def word(draw):
            n = draw.draw(st.integers(0, 6))
            return tuple(draw.draw(st.integers(1, 3)) for _ in range(n))

        u, v, w = word(data), word(data), word(data)
        duw = gt.common_prefix_metric(u, w)
        assert duw <= max(gt.common_prefix_metric(u, v), gt.common_prefix_metric(v, w))
