import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from construction.lambdas import alternating, lambda_sequence, linear, seeded_random_walk
from construction.services import (
    auxiliary_synthesis_constant,
    build_generator,
    choose_block_sizes,
    completed_frame,
    construct_frame,
    generator_checks,
    near_identity_checks,
    select_index_ladder,
    single_level_deviation,
    synthesis_l2_norm,
    verify_disjoint_supports,
    verify_l2_synthesis_bound,
    verify_tail_separation,
)
from construction.types import BlockPlan, ladder_from_points
from core.exceptions import AuxiliaryError, ParameterError, ScaleError, UnboundednessError
from core.reporting import FAIL, INFO, PASS, STRICT, SURROGATE, CheckEntry, VerificationReport
from frames.services import deviation_ratios, prepare_auxiliary
from haar_basis.services import haar_system
from lp_grid.services import lp_norm, pair
from lp_grid.types import GridSpec

LINE = GridSpec(1, 2.0 ** -4, ((-61.0, 61.0),))

SMALL_PLAN = BlockPlan(4.0, 0.1, (1, 2), 1.5, 625.0, provenance=SURROGATE)


class BlockSizeTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the block size rule
    """

    def test_strict_sizes(self):
        """
        @atomic-test
        Test p = 4 with K_u = 3 needs N = (5184, 10368) and the sum is exactly 1/3456
        """
        plan = choose_block_sizes(4.0, 3.0, 2)
        self.assertEqual(plan.sizes, (5184, 10368))
        self.assertTrue(plan.exact)
        self.assertEqual(plan.provenance, STRICT)
        self.assertAlmostEqual(plan.total, 1 / 3456, places=15)
        self.assertAlmostEqual(plan.bound, 1 / 1296, places=15)
        self.assertEqual(plan.translate_count, 15552)

    def test_demo_sizes(self):
        """
        @atomic-test
        Test the surrogate K_u = 1/2 gives N = (4, 8) with sum 0.375
        """
        plan = choose_block_sizes(4.0, 0.5, 2, SURROGATE)
        self.assertEqual(plan.sizes, (4, 8))
        self.assertAlmostEqual(plan.total, 0.375)
        self.assertEqual(plan.bound, 1.0)

    def test_non_integer_exponent(self):
        """
        @atomic-test
        Test p = 3 uses the floating point sum
        """
        plan = choose_block_sizes(3.0, 0.5, 2, SURROGATE)
        self.assertEqual(plan.sizes, (16, 64))
        self.assertFalse(plan.exact)
        self.assertAlmostEqual(plan.total, 0.375)
        self.assertLess(plan.total, plan.bound)

    def test_sizes_grow_with_levels(self):
        """
        @atomic-test
        Test each level at least doubles the block size bound for p = 4
        """
        plan = choose_block_sizes(4.0, 0.5, 5, SURROGATE)
        self.assertEqual(plan.sizes, (4, 8, 16, 32, 64))
        self.assertLess(plan.total, 0.5)

    def test_invalid_parameters(self):
        """
        @atomic-test
        Test p <= 2, non-positive K_u and oversize blocks are rejected
        """
        with self.assertRaises(ParameterError):
            choose_block_sizes(2.0, 1.0, 2)
        with self.assertRaises(ParameterError):
            choose_block_sizes(4.0, 0.0, 2)
        with self.assertRaises(ParameterError):
            choose_block_sizes(4.0, 1.0, 0)
        with self.assertRaises(ScaleError):
            choose_block_sizes(4.0, 3.0, 2, max_block_size=1000)


class IndexLadderTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the greedy index ladder
    """

    def test_small_ladder(self):
        """
        @atomic-test
        Test lambda_i = i with N = (1, 2) and rho = 1 selects indices 2, 9, 30
        """
        ladder = select_index_ladder(linear(100), SMALL_PLAN, [1.0, 1.0])
        self.assertEqual(ladder.indices, (2, 9, 30))
        self.assertEqual(ladder.blocks, (1, 2, 2))
        self.assertEqual(ladder.thresholds, (1.0, 8.0, 29.0))
        self.assertEqual(ladder.J, ((2,), (9, 30)))
        self.assertEqual(ladder.recursion_violations(), [])

    def test_demo_ladder(self):
        """
        @atomic-test
        Test the demo plan on lambda_i = i
        """
        plan = choose_block_sizes(4.0, 0.5, 2, SURROGATE)
        ladder = select_index_ladder(linear(700000), plan, [1.0, 1.0])
        self.assertEqual(
            ladder.indices,
            (2, 9, 30, 93, 282, 849, 2550, 7653, 22962, 68889, 206670, 620013),
        )

    def test_alternating_ladder(self):
        """
        @atomic-test
        Test the ladder uses |lambda| and skips small indices of either sign
        """
        ladder = select_index_ladder(alternating(100), SMALL_PLAN, [1.0, 1.0])
        self.assertEqual(ladder.indices, (2, 9, 30))
        np.testing.assert_array_equal(ladder.points[:, 0], [2.0, -9.0, 30.0])

    def test_exhausted_sequence(self):
        """
        @atomic-test
        Test a bounded sequence raises with the number of filled slots
        """
        plan = choose_block_sizes(4.0, 0.5, 2, SURROGATE)
        with self.assertRaises(UnboundednessError) as context:
            select_index_ladder(linear(50), plan, [1.0, 1.0])
        self.assertEqual(context.exception.filled, 3)
        with self.assertRaises(UnboundednessError) as context:
            select_index_ladder(np.full((20, 1), 0.5), plan, [1.0, 1.0])
        self.assertEqual(context.exception.filled, 0)

    def test_corrupted_ladder(self):
        """
        @atomic-test
        Test the recursion check names the offending slot
        """
        ladder = ladder_from_points([[2.0], [3.0]], [1, 2], [1.0, 8.0])
        violations = ladder.recursion_violations()
        self.assertEqual(len(violations), 1)
        self.assertEqual(violations[0]['slot'], 2)
        self.assertIn('threshold', violations[0]['reasons'])


class GeneratorTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the generator and its verification checks
    """

    def setUp(self):
        self.basis = haar_system(LINE, 4.0, 2)
        self.ladder = select_index_ladder(linear(100), SMALL_PLAN, [1.0, 1.0])
        self.constructed = build_generator(self.ladder, SMALL_PLAN, self.basis)

    def test_coordinate_pairings(self):
        """
        @atomic-test
        Test f_i'(T_lambda_i f) = 1/N_k and the off-diagonal pairings vanish
        """
        constructed = self.constructed
        expected = [1.0, 0.5, 0.5]
        for i in range(constructed.n):
            for j in range(constructed.n):
                value = pair(constructed.coordinates[i], constructed.translates[j])
                if i == j:
                    self.assertAlmostEqual(value, expected[i])
                elif constructed.ladder.blocks[i] != constructed.ladder.blocks[j]:
                    self.assertAlmostEqual(value, 0.0)

    def test_generator_norm(self):
        """
        @atomic-test
        Test ||f||_p^p equals sum N_k^(1-p/2)
        """
        self.assertAlmostEqual(lp_norm(self.constructed.generator, 4.0) ** 4, 1.5, places=12)
        for entry in generator_checks(self.constructed):
            self.assertEqual(entry.status, PASS, entry.name)

    def test_disjoint_supports(self):
        """
        @atomic-test
        Test the off-diagonal atoms of a valid ladder are disjoint and avoid the basis block
        """
        entry = verify_disjoint_supports(self.constructed)
        self.assertEqual(entry.status, PASS)
        self.assertGreater(entry.measured, 0.0)
        self.assertEqual(verify_tail_separation(self.constructed).status, PASS)

    def test_overlapping_atoms(self):
        """
        @atomic-test
        Test equally spaced points make two atoms coincide
        """
        plan = BlockPlan(4.0, 0.1, (3,), 3.0, 625.0, provenance=SURROGATE)
        ladder = ladder_from_points([[2.0], [3.0], [4.0]], [1, 1, 1], [1.0, 1.0, 1.0])
        constructed = build_generator(ladder, plan, haar_system(LINE, 4.0, 1))
        entry = verify_disjoint_supports(constructed)
        self.assertEqual(entry.status, FAIL)
        self.assertEqual(entry.witness['tuples'], [[1, 2], [2, 3]])
        self.assertEqual(entry.witness['indices'], [[1, 2], [2, 3]])

    def test_single_slot(self):
        """
        @atomic-test
        Test a one-slot ladder passes vacuously
        """
        plan = BlockPlan(4.0, 0.1, (1,), 1.0, 625.0, provenance=SURROGATE)
        ladder = ladder_from_points([[2.0]], [1], [1.0])
        constructed = build_generator(ladder, plan, haar_system(LINE, 4.0, 1))
        entry = verify_disjoint_supports(constructed)
        self.assertEqual(entry.status, PASS)
        self.assertIsNone(entry.measured)
        self.assertTrue(constructed.tail(0).is_zero)

    def test_box_too_small(self):
        """
        @atomic-test
        Test a grid box that cannot hold the translates raises ScaleError
        """
        basis = haar_system(GridSpec(1, 2.0 ** -4, ((-8.0, 8.0),)), 4.0, 2)
        with self.assertRaises(ScaleError):
            build_generator(self.ladder, SMALL_PLAN, basis)

    def test_l2_synthesis_bound(self):
        """
        @atomic-test
        Test the square-summable synthesis bound on seeded draws
        """
        entry = verify_l2_synthesis_bound(self.constructed, trials=50, seed=3)
        self.assertEqual(entry.status, PASS)
        self.assertEqual(entry.provenance, SURROGATE)
        self.assertLessEqual(entry.measured, entry.bound)

    def test_completed_frame(self):
        """
        @atomic-test
        Test completion adds one normalized tail pair per translate
        """
        frame = completed_frame(self.constructed)
        self.assertEqual(frame.n, 6)
        self.assertEqual(frame.translate_count, 3)
        for function in frame.functions[3:]:
            self.assertAlmostEqual(lp_norm(function, 4.0), 1.0)
        entries = near_identity_checks(frame, self.constructed, trials=20, seed=1)
        self.assertEqual([entry.status for entry in entries], [PASS, INFO])
        self.assertAlmostEqual(entries[0].bound, 1.5 ** 0.5)

    def test_near_identity_of_single_basis_functions(self):
        """
        @atomic-test
        Test ||S(h_k) - h_k||_p matches N_k^(1-p/2) (sigma - N_k^(-p/2)) to the power 1/p
        """
        frame = completed_frame(self.constructed)
        space = frame.working_space
        rows = np.stack([space.coordinates(space.align(h)) for h in self.basis.functions[:2]])
        np.testing.assert_allclose(deviation_ratios(frame, rows), [0.5 ** 0.25, 0.625 ** 0.25], rtol=1e-9)
        self.assertAlmostEqual(single_level_deviation(SMALL_PLAN), 0.625 ** 0.25, places=12)

    def test_auxiliary_synthesis_constant(self):
        """
        @atomic-test
        Test M0 dominates the completed frame on random index sets and a smaller M0 is rejected
        """
        frame = completed_frame(self.constructed)
        phi2 = synthesis_l2_norm(self.basis.functions[:2], 4.0)
        m0 = auxiliary_synthesis_constant(self.constructed, phi2)
        self.assertAlmostEqual(m0, phi2 + 1.25 ** 0.25 + 1.0, places=12)
        rng = np.random.default_rng(4)
        rows = rng.standard_normal((40, frame.n)) * (rng.random((40, frame.n)) < 0.5)
        norms = frame.function_stack.combination_norms(rows, 4.0)
        self.assertTrue(np.all(norms <= m0 * np.linalg.norm(rows, axis=1) + 1e-12))
        with self.assertRaises(AuxiliaryError):
            prepare_auxiliary(frame, trials=10, seed=2, m0=1e-3)


class SynthesisNormTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the truncated l_2 synthesis norm
    """

    def test_two_haar_functions(self):
        """
        @atomic-test
        Test ||Phi_2|| = 2^(1/4) for the first two Haar functions in L_4
        """
        functions = haar_system(LINE, 4.0, 2).functions
        self.assertAlmostEqual(synthesis_l2_norm(functions, 4.0), 2 ** 0.25, places=8)

    def test_orthonormal_case(self):
        """
        @atomic-test
        Test L_2-normalized Haar functions give exactly 1
        """
        functions = haar_system(LINE, 2.0, 4).functions
        self.assertAlmostEqual(synthesis_l2_norm(functions, 2.0), 1.0, places=12)


class ConstructFrameTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the end-to-end construction
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = VerificationReport('construct')
        cls.frame = construct_frame(lambda_sequence('linear', length=700000), 4.0, mode='demo', report=cls.report)

    def test_demo_report_passes(self):
        """
        @atomic-test
        Test every non-info entry of the demo run passes
        """
        self.assertEqual(self.report.failures, [])
        for name in ('construction.block_plan', 'construction.l2_synthesis_bound', 'construction.near_identity',
                     'frame.reconstruction', 'seminormalize.functional_lower_bound',
                     'seminormalize.translate_functional_lower_bound'):
            entry = self.report.entry(name)
            self.assertIsNotNone(entry, name)
            self.assertEqual(entry.provenance, SURROGATE)
        self.assertEqual(self.report.entry('construction.disjoint_supports').status, PASS)
        self.assertEqual({entry.provenance for entry in self.report.entries}, {SURROGATE})

    def test_demo_frame(self):
        """
        @atomic-test
        Test the final frame has 12 translates followed by 12 tail pairs
        """
        self.assertEqual(self.frame.n, 24)
        self.assertEqual(self.frame.translate_count, 12)
        self.assertTrue(self.frame.labels['seminormalized'])
        self.assertGreater(self.frame.labels['min_functional_norm'], 0.0)
        rows = self.report.tables['ladder'].rows
        self.assertEqual([row[2] for row in rows][:4], [2, 9, 30, 93])
        self.assertTrue(math.isclose(self.report.entry('construction.near_identity').bound, 0.375 ** 0.5))

    def test_pair_roles(self):
        """
        @atomic-test
        Test the report separates the 12 translates from the 12 tail pairs
        """
        roles = self.report.entry('frame.pair_roles')
        self.assertEqual(roles.measured, 12)
        self.assertEqual(roles.witness, {'translates': [1, 12], 'tails': [13, 24]})
        bound = self.report.entry('seminormalize.translate_functional_lower_bound')
        self.assertEqual(bound.status, PASS)
        self.assertGreaterEqual(bound.bound, self.frame.labels['min_functional_norm'])

    def test_near_identity_single_level(self):
        """
        @atomic-test
        Test h_1 alone has ||S(g) - g||_p / ||g||_p = (0.3125 / 4)^(1/4) in the demo plan
        """
        entry = self.report.entry('construction.near_identity_half')
        self.assertEqual(entry.status, INFO)
        self.assertAlmostEqual(entry.witness['single_level'], 0.078125 ** 0.25, places=12)
        self.assertGreater(entry.witness['single_level'], 0.5)

    def test_synthesis_constant(self):
        """
        @atomic-test
        Test the seminormalization runs with M0 from the construction, not the trivial default
        """
        entry = self.report.entry('seminormalize.synthesis_constant')
        self.assertEqual(entry.provenance, SURROGATE)
        phi2 = self.report.entry('construction.phi2_truncated').measured
        self.assertGreater(entry.measured, phi2 + 1.0)
        self.assertLess(entry.measured, phi2 + 2.0)

    def test_entries_inherit_report_provenance(self):
        """
        @atomic-test
        Test entries without a provenance take the report's
        """
        report = VerificationReport('construct', provenance=SURROGATE)
        self.assertEqual(report.add(CheckEntry(name='x', status=INFO)).provenance, SURROGATE)
        self.assertEqual(report.add(CheckEntry(name='y', status=INFO, provenance=STRICT)).provenance, STRICT)

    def test_invalid_exponent(self):
        """
        @atomic-test
        Test p = 2 is rejected before any work
        """
        with self.assertRaises(ParameterError):
            construct_frame(linear(10), 2.0)
        with self.assertRaises(ParameterError):
            construct_frame(linear(10), 4.0, mode='fast')

    def test_strict_plan_is_too_large(self):
        """
        @atomic-test
        Test strict mode at p = 4 reports the block plan and stops with ScaleError
        """
        report = VerificationReport('construct')
        with self.assertRaises(ScaleError):
            construct_frame(linear(10), 4.0, mode='strict', report=report)
        self.assertEqual(len(report.entries), 1)
        entry = report.entry('construction.block_plan')
        self.assertEqual(entry.status, PASS)
        self.assertEqual(entry.witness['sizes'], [5184, 10368])


class LambdaSequenceTestCase(SimpleTestCase):
    """
    @atomic-test-suite
    Test suite for the built-in translation sequences
    """

    def test_builtins(self):
        """
        @atomic-test
        Test linear and alternating sequences along e_1
        """
        np.testing.assert_array_equal(linear(3, 2), [[1, 0], [2, 0], [3, 0]])
        np.testing.assert_array_equal(alternating(4)[:, 0], [-1, 2, -3, 4])
        self.assertEqual(lambda_sequence('linear', dimension=2, length=5).shape, (5, 2))

    def test_random_walk(self):
        """
        @atomic-test
        Test the walk is seeded and unbounded along e_1
        """
        first = seeded_random_walk(200, 2, seed=5)
        np.testing.assert_array_equal(first, seeded_random_walk(200, 2, seed=5))
        self.assertTrue(np.all(np.diff(first[:, 0]) >= 0))
        self.assertFalse(np.array_equal(first, seeded_random_walk(200, 2, seed=6)))

    def test_points_file(self):
        """
        @atomic-test
        Test points load from a JSON file and bad sources are rejected
        """
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'points.json'
            path.write_text(json.dumps([[1.0, 0.0], [5.0, 2.0]]))
            points = lambda_sequence(str(path), dimension=2)
            np.testing.assert_array_equal(points, [[1.0, 0.0], [5.0, 2.0]])
            with self.assertRaises(ParameterError):
                lambda_sequence(str(path), dimension=1)
            broken = Path(directory) / 'broken.json'
            broken.write_text('[1, ')
            with self.assertRaises(ParameterError):
                lambda_sequence(str(broken))
        with self.assertRaises(ParameterError):
            lambda_sequence('spiral')
