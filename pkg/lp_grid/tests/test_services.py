import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from core.exceptions import AlignmentError, GridDomainError, ParameterError, SpecMismatchError
from lp_grid.services import (
    linear_combination,
    lp_norm,
    make_indicator,
    norming_functional,
    pair,
    restrict,
    snap_to_lattice,
    stack_functions,
    support_radius,
    translate,
)
from lp_grid.types import Exponents, GridFunction, GridSpec, SignVector

LINE = GridSpec(1, 0.25, ((-8.0, 8.0),))
PLANE = GridSpec(2, 0.25, ((-4.0, 4.0), (-4.0, 4.0)))


def random_function(seed, spec=LINE, cells=12, margin=16):
    rng = np.random.default_rng(seed)
    lower, upper = spec.index_bounds
    picked = rng.integers(lower + margin, upper - margin, size=(cells, spec.dimension))
    return GridFunction.from_cells(spec, picked, rng.standard_normal(cells))


class GridSpecTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the lattice description
    """

    def test_validation(self):
        """
        @atomic-test
        Test that non-dyadic widths and misaligned boxes are rejected
        """
        with self.assertRaises(ParameterError):
            GridSpec(1, 0.3, ((0.0, 1.0),))
        with self.assertRaises(ParameterError):
            GridSpec(0, 0.5, ())
        with self.assertRaises(AlignmentError):
            GridSpec(1, 0.25, ((0.1, 1.0),))

    def test_keys_round_trip_cells(self):
        """
        @atomic-test
        Test that keys follow lexicographic cell order
        """
        cells = np.array([[-3, 2], [0, 0], [5, -1]])
        keys = PLANE.keys(cells)
        self.assertTrue(np.all(np.diff(keys) > 0))
        np.testing.assert_array_equal(PLANE.cells_from_keys(keys), cells)


class LpGridServicesTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the discretized L_p operations
    """

    def test_make_indicator(self):
        """
        @atomic-test
        Test indicator norms on unit-measure boxes
        """
        unit = make_indicator(LINE, ((0.0, 1.0),))
        for p in (1.0, 1.5, 2.0, 4.0, 7.0):
            self.assertAlmostEqual(lp_norm(unit, p), 1.0, places=14)

        self.assertEqual(lp_norm(make_indicator(LINE, ((0.0, 1.0),), value=0.0), 3.0), 0.0)

        square = make_indicator(PLANE, ((0.0, 1.0), (0.0, 1.0)), value=2.0)
        self.assertAlmostEqual(lp_norm(square, 2.0), 2.0, places=14)

        with self.assertRaises(AlignmentError):
            make_indicator(LINE, ((0.0, 0.3),))
        with self.assertRaises(GridDomainError):
            make_indicator(LINE, ((0.0, 9.0),))

    def test_lp_norm(self):
        """
        @atomic-test
        Test direct cell sums for a Haar step and a scaled half indicator
        """
        step = linear_combination(
            [1.0, -1.0],
            [make_indicator(LINE, ((0.0, 0.5),)), make_indicator(LINE, ((0.5, 1.0),))],
        )
        self.assertAlmostEqual(lp_norm(step, 3.0), 1.0, places=14)

        half = make_indicator(LINE, ((0.0, 0.5),), value=2.0)
        self.assertAlmostEqual(lp_norm(half, 2.0), math.sqrt(2.0), places=14)
        self.assertEqual(lp_norm(half, math.inf), 2.0)

        with self.assertRaises(ParameterError):
            lp_norm(half, 0.5)

    def test_translate(self):
        """
        @atomic-test
        Test lattice translation, its isometry and its error cases
        """
        unit = make_indicator(LINE, ((0.0, 1.0),))
        self.assertIs(translate(unit, [0.0]), unit)

        moved = translate(unit, [1.0])
        self.assertEqual(pair(moved, make_indicator(LINE, ((1.0, 2.0),))), 1.0)
        self.assertEqual(pair(moved, unit), 0.0)

        with self.assertRaises(AlignmentError):
            translate(unit, [0.1])
        with self.assertRaises(GridDomainError):
            translate(unit, [7.5])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), shift=st.integers(-16, 16), p=st.sampled_from([1.0, 1.5, 3.0, 6.0]))
    def test_translation_isometry(self, seed, shift, p):
        """
        @atomic-test
        Test that translates carry the identical cell value multiset
        """
        f = random_function(seed)
        moved = translate(f, [shift * LINE.cell_width])
        np.testing.assert_array_equal(moved.values, f.values)
        self.assertEqual(lp_norm(moved, p), lp_norm(f, p))

    def test_linear_combination(self):
        """
        @atomic-test
        Test identity, cancellation and disjoint additivity
        """
        f = random_function(3)
        same = linear_combination([1.0], [f])
        np.testing.assert_array_equal(same.values, f.values)
        self.assertTrue(linear_combination([1.0, -1.0], [f, f]).is_zero)

        first = make_indicator(LINE, ((0.0, 1.0),))
        second = make_indicator(LINE, ((2.0, 3.0),))
        combined = linear_combination([3.0, -2.0], [first, second])
        self.assertAlmostEqual(lp_norm(combined, 3.0), (27.0 + 8.0) ** (1 / 3), places=13)

        other = make_indicator(PLANE, ((0.0, 1.0), (0.0, 1.0)))
        with self.assertRaises(SpecMismatchError):
            linear_combination([1.0, 1.0], [first, other])
        with self.assertRaises(ParameterError):
            linear_combination([1.0], [first, second])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), p=st.sampled_from([1.25, 2.0, 3.0, 5.0]))
    def test_disjoint_additivity(self, seed, p):
        """
        @atomic-test
        Test ||f + g||^p = ||f||^p + ||g||^p for disjoint supports
        """
        f = restrict(random_function(seed), ((-8.0, 0.0),))
        g = restrict(random_function(seed + 1), ((0.0, 8.0),))
        total = lp_norm(linear_combination([1.0, 1.0], [f, g]), p) ** p
        self.assertAlmostEqual(total, lp_norm(f, p) ** p + lp_norm(g, p) ** p, delta=1e-12 * max(1.0, total))

    def test_pair(self):
        """
        @atomic-test
        Test pairing of indicators and of a Haar step with its functional
        """
        unit = make_indicator(LINE, ((0.0, 1.0),))
        self.assertEqual(pair(unit, unit), 1.0)
        self.assertEqual(pair(unit, make_indicator(LINE, ((3.0, 4.0),))), 0.0)

        p = 3.0
        dual = p / (p - 1)
        halves = [make_indicator(LINE, ((0.0, 0.25),)), make_indicator(LINE, ((0.25, 0.5),))]
        scale = 0.5 ** (-1 / p)
        step = linear_combination([scale, -scale], halves)
        step_dual = linear_combination([0.5 ** (-1 / dual), -(0.5 ** (-1 / dual))], halves)
        self.assertAlmostEqual(pair(step_dual, step), 1.0, places=14)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), p=st.sampled_from([1.5, 2.0, 4.0]))
    def test_holder(self, seed, p):
        """
        @atomic-test
        Test |pair(f', g)| <= ||f'||_p' ||g||_p
        """
        exponents = Exponents(p)
        fprime, g = random_function(seed, cells=30), random_function(seed + 7, cells=30)
        bound = lp_norm(fprime, exponents.dual) * lp_norm(g, p)
        self.assertLessEqual(abs(pair(fprime, g)), bound * (1 + 1e-12))

    def test_restrict(self):
        """
        @atomic-test
        Test restriction to covering, disjoint and partial boxes
        """
        double = make_indicator(LINE, ((0.0, 2.0),))
        self.assertIs(restrict(double, ((-1.0, 3.0),)), double)
        self.assertTrue(restrict(double, ((4.0, 5.0),)).is_zero)
        part = restrict(double, ((0.0, 1.0),))
        self.assertAlmostEqual(lp_norm(part, 1.0), 1.0)
        self.assertIs(restrict(part, ((0.0, 1.0),)), part)

        f = random_function(11)
        region = ((-2.0, 2.0),)
        self.assertLessEqual(lp_norm(restrict(f, region), 2.0), lp_norm(f, 2.0))

    def test_norming_functional(self):
        """
        @atomic-test
        Test that the norming functional attains Holder's bound
        """
        p = 3.0
        f = random_function(5)
        functional = norming_functional(f, p)
        self.assertAlmostEqual(pair(functional, f), 1.0, places=12)
        self.assertAlmostEqual(lp_norm(functional, 1.5) * lp_norm(f, p), 1.0, places=12)

    def test_complex_mode(self):
        """
        @atomic-test
        Test complex values, bilinear pairing and unimodular sign vectors
        """
        f = GridFunction.from_cells(LINE, [[0], [1]], [1j, 1.0])
        self.assertTrue(f.is_complex)
        self.assertAlmostEqual(lp_norm(f, 2.0), math.sqrt(0.5))
        self.assertAlmostEqual(pair(f, f), (-1 + 1) * 0.25)
        self.assertAlmostEqual(pair(norming_functional(f, 2.0), f), 1.0)
        SignVector(np.exp(1j * np.array([0.1, 2.0])))
        with self.assertRaises(ParameterError):
            SignVector([1.0, 0.5])

    def test_serialization(self):
        """
        @atomic-test
        Test the canonical dict form keeps spec, offset and values
        """
        f = random_function(8, spec=PLANE, margin=4)
        data = f.to_dict()
        self.assertEqual(data['offset'], [float(v) for v in f.offset * PLANE.cell_width])
        restored = GridFunction.from_dict(data)
        self.assertEqual(restored.spec, PLANE)
        np.testing.assert_array_equal(restored.cells, f.cells)
        np.testing.assert_array_equal(restored.values, f.values)

    def test_support_radius_and_snap(self):
        """
        @atomic-test
        Test farthest-corner radius and lattice snapping
        """
        self.assertEqual(support_radius(make_indicator(LINE, ((0.0, 1.0),))), 1.0)
        self.assertEqual(support_radius(make_indicator(LINE, ((-2.0, 1.0),))), 2.0)

        snapped, distance = snap_to_lattice([[1.1], [2.0]], 0.25)
        np.testing.assert_array_equal(snapped, [[1.0], [2.0]])
        self.assertAlmostEqual(distance, 0.1)
        with self.assertRaises(AlignmentError):
            snap_to_lattice([[0.125]], 0.25)

    def test_stack_norms_match_functions(self):
        """
        @atomic-test
        Test stacked combination norms against direct evaluation
        """
        fs = [random_function(seed) for seed in range(4)]
        stack = stack_functions(fs)
        coefficients = np.array([[1.0, -2.0, 0.5, 0.0], [0.0, 1.0, 1.0, 1.0]])
        norms = stack.combination_norms(coefficients, 3.0)
        for row, norm in zip(coefficients, norms):
            self.assertAlmostEqual(norm, lp_norm(linear_combination(row, fs), 3.0), places=12)
        np.testing.assert_allclose(stack.pairings(fs[0]), [pair(f, fs[0]) for f in fs], rtol=1e-13, atol=1e-15)
