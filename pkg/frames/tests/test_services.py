import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from core.exceptions import AuxiliaryError, InversionError, ParameterError
from core.reporting import INFO
from frames.services import (
    apply_frame_operator,
    estimate_operator_norm,
    frame_constants,
    held_out_check,
    invert_frame_operator,
    perturbed_functionals,
    prepare_auxiliary,
    promote_to_schauder_frame,
    reconstruction_residual,
    seminormalize,
)
from frames.types import FrameConstants, FramePair
from haar_basis.services import haar_system, walsh_system
from lp_grid.services import linear_combination, lp_norm, make_indicator, norming_functional, translate
from lp_grid.types import Exponents, GridFunction, GridSpec

LINE = GridSpec(1, 2.0 ** -4, ((-2.0, 8.0),))


def basis_frame(p=4.0, count=4, scale=1.0):
    system = haar_system(LINE, p, count)
    functionals = [dual if scale == 1.0 else linear_combination([scale], [dual]) for dual in system.duals]
    return FramePair(Exponents(p), system.functions, functionals)


def bump_frame(p=3.0, count=6):
    bump = make_indicator(LINE, ((0.0, 0.5),))
    functions = [translate(bump, (float(i),)) for i in range(count)]
    return FramePair(Exponents(p), functions, [norming_functional(f, p) for f in functions])


def relative_gap(f, g, p):
    return lp_norm(linear_combination([1.0, -1.0], [f, g]), p) / lp_norm(g, p)


class FramePairTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the frame data model
    """

    def test_validation(self):
        """
        @atomic-test
        Test empty frames and count mismatches are rejected
        """
        system = haar_system(LINE, 3.0, 2)
        with self.assertRaises(ParameterError):
            FramePair(Exponents(3.0), (), ())
        with self.assertRaises(ParameterError):
            FramePair(Exponents(3.0), system.functions, system.duals[:1])
        with self.assertRaises(ParameterError):
            FrameConstants(K=2.0, K_u=1.5, mode='sampled', trials=1, seed=0)

    def test_bundle_round_trip(self):
        """
        @atomic-test
        Test the JSON bundle keeps every cell value
        """
        frame = bump_frame(count=3)
        restored = FramePair.from_dict(frame.to_dict())
        self.assertEqual(restored.n, 3)
        for before, after in zip(frame.functionals, restored.functionals):
            np.testing.assert_array_equal(before.values, after.values)
            np.testing.assert_array_equal(before.cells, after.cells)

    def test_working_space(self):
        """
        @atomic-test
        Test the working span dimension and the span membership test
        """
        frame = bump_frame(count=4)
        space = frame.working_space
        self.assertEqual(space.dimension, 4)
        self.assertTrue(space.in_span(frame.functions[2]))
        self.assertFalse(space.in_span(make_indicator(LINE, ((0.0, 0.25),))))
        self.assertFalse(space.in_span(make_indicator(LINE, ((6.0, 6.5),))))


class FrameOperatorTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for applying and inverting the frame operator
    """

    def test_basis_identity(self):
        """
        @atomic-test
        Test S(g) = g for a biorthogonal basis and S(0) = 0
        """
        frame = basis_frame()
        g = linear_combination([1.0, -2.0, 0.5, 3.0], frame.functions)
        self.assertLess(relative_gap(apply_frame_operator(frame, g), g, 4.0), 1e-13)
        self.assertTrue(apply_frame_operator(frame, GridFunction.zero(LINE)).is_zero)

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(-5, 5), b=st.floats(-5, 5))
    def test_linearity(self, a, b):
        """
        @atomic-test
        Test S(a g + b h) = a S(g) + b S(h)
        """
        frame = basis_frame(scale=0.7)
        g = linear_combination([1.0, 2.0, 0.0, -1.0], frame.functions)
        h = make_indicator(LINE, ((0.0, 0.75),))
        left = apply_frame_operator(frame, linear_combination([a, b], [g, h]))
        right = linear_combination([a, b], [apply_frame_operator(frame, g), apply_frame_operator(frame, h)])
        scale = max(1.0, lp_norm(right, 4.0))
        self.assertLessEqual(lp_norm(linear_combination([1.0, -1.0], [left, right]), 4.0), 1e-12 * scale)

    def test_inverse_of_identity(self):
        """
        @atomic-test
        Test S = I returns the right-hand side and rhs = 0 returns 0
        """
        frame = basis_frame()
        rhs = linear_combination([0.5, 1.0, -1.0, 2.0], frame.functions)
        self.assertLess(relative_gap(invert_frame_operator(frame, rhs), rhs, 4.0), 1e-12)
        self.assertTrue(invert_frame_operator(frame, GridFunction.zero(LINE)).is_zero)

    def test_neumann_branch(self):
        """
        @atomic-test
        Test a contraction ||S - I|| = 1/4 is inverted to the tolerance
        """
        frame = basis_frame(scale=0.75)
        rhs = linear_combination([1.0, -1.0, 2.0, 0.5], frame.functions)
        solution = invert_frame_operator(frame, rhs, tol=1e-8)
        expected = linear_combination([4.0 / 3.0], [rhs])
        self.assertLess(relative_gap(solution, expected, 4.0), 1e-7)

    def test_singular_operator(self):
        """
        @atomic-test
        Test S = 0 is reported with its condition estimate
        """
        frame = basis_frame(scale=0.0)
        with self.assertRaises(InversionError) as raised:
            invert_frame_operator(frame, frame.functions[0])
        self.assertIsNotNone(raised.exception.condition)

    def test_rhs_outside_span(self):
        """
        @atomic-test
        Test a right-hand side outside the working span is rejected
        """
        frame = bump_frame(count=2)
        with self.assertRaises(ParameterError):
            invert_frame_operator(frame, make_indicator(LINE, ((5.0, 5.5),)))

    def test_operator_norm_estimates(self):
        """
        @atomic-test
        Test scalar multiples and the exact L_2 branch
        """
        frame = basis_frame(p=3.0)
        space = frame.working_space
        self.assertAlmostEqual(estimate_operator_norm(space, np.eye(4), 3.0), 1.0, places=12)
        self.assertAlmostEqual(estimate_operator_norm(space, 3.0 * np.eye(4), 3.0), 3.0, places=12)
        self.assertEqual(estimate_operator_norm(space, np.zeros((4, 4)), 3.0), 0.0)
        self.assertAlmostEqual(estimate_operator_norm(space, np.diag([1.0, 2.0, 0.5, 1.5]), 2.0), 2.0, places=12)


class PromotionTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for promoting approximate frames
    """

    def test_identity_keeps_functionals(self):
        """
        @atomic-test
        Test that S = I leaves the functionals unchanged
        """
        frame = basis_frame()
        promoted = promote_to_schauder_frame(frame)
        for before, after in zip(frame.functionals, promoted.functionals):
            self.assertLess(relative_gap(after, before, 4.0 / 3.0), 1e-12)

    def test_reconstruction(self):
        """
        @atomic-test
        Test an approximate frame becomes a reconstructing frame
        """
        system = haar_system(LINE, 4.0, 4)
        shifted = [linear_combination([0.6, 0.1], [dual, system.duals[0]]) for dual in system.duals]
        frame = FramePair(Exponents(4.0), system.functions, shifted)
        promoted = promote_to_schauder_frame(frame, tol=1e-9)
        self.assertLessEqual(reconstruction_residual(promoted, trials=50).value, 1e-9)
        g = linear_combination([1.0, 0.0, -2.0, 1.0], system.functions)
        self.assertLess(relative_gap(apply_frame_operator(promoted, g), g, 4.0), 1e-9)

    def test_singular_promotion(self):
        """
        @atomic-test
        Test promotion refuses a singular operator
        """
        with self.assertRaises(InversionError):
            promote_to_schauder_frame(basis_frame(scale=0.0))


class FrameConstantsTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the sampled frame constants
    """

    def test_single_pair(self):
        """
        @atomic-test
        Test K = K_u = 1 for one normalized biorthogonal pair
        """
        constants = frame_constants(basis_frame(count=1), trials=10)
        self.assertEqual(constants.K, 1.0)
        self.assertEqual(constants.K_u, 1.0)

    def test_orthonormal_basis(self):
        """
        @atomic-test
        Test an orthonormal basis of L_2 has constants one
        """
        constants = frame_constants(basis_frame(p=2.0, count=8), trials=20)
        self.assertAlmostEqual(constants.K, 1.0, places=12)
        self.assertAlmostEqual(constants.K_u, 1.0, places=12)

    def test_disjoint_bumps(self):
        """
        @atomic-test
        Test exhaustive and sampled K_u agree on disjoint bumps
        """
        frame = bump_frame()
        exhaustive = frame_constants(frame, mode='exhaustive', trials=30)
        sampled = frame_constants(frame, mode='sampled', trials=30)
        self.assertGreaterEqual(exhaustive.K_u, sampled.K_u - 1e-12)
        self.assertAlmostEqual(exhaustive.K_u, sampled.K_u, delta=1e-12)

    def test_monotone_and_ordered(self):
        """
        @atomic-test
        Test K <= K_u and monotonicity in the number of trials
        """
        frame = basis_frame(p=4.0, count=6)
        results = [frame_constants(frame, trials=t) for t in (2, 8, 20)]
        for constants in results:
            self.assertLessEqual(constants.K, constants.K_u)
        self.assertEqual([c.K for c in results], sorted(c.K for c in results))
        self.assertEqual([c.K_u for c in results], sorted(c.K_u for c in results))

    def test_held_out_entry(self):
        """
        @atomic-test
        Test the generalization check is an info entry
        """
        frame = basis_frame(p=4.0, count=6)
        constants = frame_constants(frame, trials=20)
        entry = held_out_check(frame, constants, trials=20)
        self.assertEqual(entry.status, INFO)
        self.assertAlmostEqual(entry.bound, 1.05 * constants.K)


class SeminormalizationTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the seminormalizing perturbation
    """

    def test_no_perturbation_branch(self):
        """
        @atomic-test
        Test normalized functionals keep b_i = 0 and match plain promotion
        """
        frame = basis_frame(scale=0.8)
        auxiliary = prepare_auxiliary(frame, trials=20)
        self.assertFalse(np.any(auxiliary.coefficients))
        self.assertTrue(0 < auxiliary.delta0 < 1)
        self.assertGreaterEqual(auxiliary.K1, 1.0)

        result = seminormalize(frame, auxiliary, trials=20)
        plain = promote_to_schauder_frame(frame, trials=20)
        for ours, theirs in zip(result.functionals, plain.functionals):
            np.testing.assert_allclose(ours.values, theirs.values, rtol=1e-12, atol=1e-12)

    def test_zero_functional_branch(self):
        """
        @atomic-test
        Test a zero functional is lifted to norm at least 1/(2 K1^2)
        """
        system = haar_system(LINE, 4.0, 2)
        functions = system.functions + (system.functions[0],)
        functionals = system.duals + (GridFunction.zero(LINE, 4.0 / 3.0),)
        frame = FramePair(Exponents(4.0), functions, functionals)
        walsh = walsh_system(LINE, 2, exponent=4.0 / 3.0)

        # The constant Walsh function acts on h_1, so G_3' is nonzero on the working span
        auxiliary = prepare_auxiliary(frame, functionals=(walsh[0], walsh[1], walsh[0]), trials=20)
        np.testing.assert_array_equal(auxiliary.coefficients, [0.0, 0.0, 1.0 / auxiliary.K1])
        lifted = perturbed_functionals(frame, auxiliary)[2]
        self.assertGreaterEqual(lp_norm(lifted, 4.0 / 3.0), auxiliary.threshold)
        self.assertLessEqual(auxiliary.perturbation, auxiliary.delta0)

        result = seminormalize(frame, auxiliary, trials=20)
        self.assertLessEqual(reconstruction_residual(result, trials=20).value, 1e-6)
        self.assertGreater(result.labels['min_functional_norm'], 0.0)
        self.assertGreaterEqual(result.labels['min_functional_norm'], result.labels['functional_lower_bound'])
        self.assertGreaterEqual(result.labels['min_perturbed_norm'], auxiliary.threshold)

    def test_auxiliary_preconditions(self):
        """
        @atomic-test
        Test count, norm and square-summability violations
        """
        frame = basis_frame(count=4)
        walsh = walsh_system(LINE, 4, exponent=4.0 / 3.0)
        with self.assertRaises(AuxiliaryError):
            prepare_auxiliary(frame, functionals=walsh[:3])
        with self.assertRaises(AuxiliaryError):
            prepare_auxiliary(frame, functionals=(linear_combination([2.0], [walsh[0]]),) + walsh[1:])
        with self.assertRaises(AuxiliaryError):
            prepare_auxiliary(frame, functionals=walsh, trials=20, m0=1e-6)
