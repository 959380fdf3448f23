import itertools
import logging
import math
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from scipy import optimize

from core.conf import frames_setting
from core.exceptions import GridDomainError, ParameterError, ScaleError, UnboundednessError
from core.reporting import FAIL, INFO, PASS, STRICT, SURROGATE, CheckEntry, Table, VerificationReport
from frames.services import (
    deviation_ratios,
    frame_constants,
    prepare_auxiliary,
    reconstruction_residual,
    sample_span,
    seminormalize,
)
from frames.types import FramePair
from haar_basis.services import haar_system, support_radii, with_unconditional_estimate
from haar_basis.types import BasisSystem
from lp_grid.services import (
    box_gap,
    linear_combination,
    lp_norm,
    norming_functional,
    shift_cells,
    snap_to_lattice,
    stack_functions,
)
from lp_grid.sweeps import EXHAUSTIVE, SAMPLED, SUBSET_STREAM, span_coefficients, trial_generator
from lp_grid.types import Exponents, GridFunction, GridSpec
from .types import BlockPlan, ConstructedFrame, IndexLadder

logger = logging.getLogger(__name__)

STRICT_MODE = 'strict'
DEMO_MODE = 'demo'
MODES = (STRICT_MODE, DEMO_MODE)
DEMO_SURROGATE = 0.5

L2_DRAWS = 200
FINAL_SIGN_SAMPLES = 500
SUBFRAME_SIZE = 12
GENERATOR_NORM_TOLERANCE = 1e-12


def default_ku_bound(p: float) -> float:
    """Haar unconditional constant bound max{p, p'} - 1, an external fact."""
    return max(p, p / (p - 1)) - 1


def _ceil(value: float) -> int:
    # Absorb rounding in the rule when it lands on an integer
    return math.ceil(value * (1 - 1e-12))


def choose_block_sizes(p: float, ku_bound: float, levels: int, provenance: str = STRICT,
                       max_block_size: Optional[int] = None) -> BlockPlan:
    """
    @atomic-function
    N_k = ceil((2^(k+1) (2 K_u)^p)^(1/(p/2 - 1))), k = 1..K

    Each N_k^(1-p/2) is at most 2^-(k+1) (2 K_u)^-p, so the sum stays
    strictly below (2 K_u)^-p. For even integer p the sum is checked in
    exact rational arithmetic.

    Args:
        p: exponent, p > 2
        ku_bound: K_u upper bound or demo surrogate
        levels: number of blocks K
        provenance: 'strict' or 'surrogate'

    Returns:
        BlockPlan

    Raises:
        ParameterError: p <= 2, non-positive bound or levels
        ScaleError: some N_k exceeds MAX_BLOCK_SIZE
    """
    if not p > 2:
        raise ParameterError(f"The construction needs p > 2, got p={p}")
    if not ku_bound > 0:
        raise ParameterError("The unconditional constant bound must be positive")
    if levels < 1:
        raise ParameterError("The construction needs at least one level")
    max_block = frames_setting('MAX_BLOCK_SIZE', max_block_size)
    exponent = 1.0 / (p / 2 - 1)
    sizes = []
    for k in range(1, levels + 1):
        try:
            value = (2.0 ** (k + 1) * (2.0 * ku_bound) ** p) ** exponent
        except OverflowError:
            value = math.inf
        if not math.isfinite(value) or value > max_block:
            raise ScaleError(f"N_{k} = {value:.6g} exceeds the maximum block size {max_block}; use demo mode")
        sizes.append(max(1, _ceil(value)))

    exact = float(p).is_integer() and int(p) % 2 == 0
    if exact:
        power = int(p) // 2 - 1
        total = sum(Fraction(1, n ** power) for n in sizes)
        bound = 1 / Fraction(2 * ku_bound) ** int(p)
        holds = total < bound
    else:
        total = math.fsum(n ** (1 - p / 2) for n in sizes)
        bound = (2.0 * ku_bound) ** -p
        holds = total < bound
    if not holds:
        raise ScaleError(f"Block sizes {sizes} do not meet the strict bound")
    plan = BlockPlan(p, float(ku_bound), tuple(sizes), float(total), float(bound), exact, provenance)
    logger.debug("Block plan %s: sum=%s bound=%s", plan.sizes, plan.total, plan.bound)
    return plan


def block_plan_entry(plan: BlockPlan) -> CheckEntry:
    return CheckEntry(
        name='construction.block_plan',
        status=PASS if plan.total < plan.bound else FAIL,
        measured=plan.total,
        bound=plan.bound,
        margin=plan.margin,
        provenance=plan.provenance,
        witness={'sizes': list(plan.sizes)},
        detail='exact rational check' if plan.exact else 'double precision check',
    )


def select_index_ladder(lambdas: np.ndarray, plan: BlockPlan, radii: Sequence[float],
                        source: str = '') -> IndexLadder:
    """
    @atomic-function
    Greedy scan for j_s^(k) in index order, block 1 first

    The first slot needs |lambda| > 1; every later slot of block k needs
    |lambda| > 3 max(previous |lambda|) + 2 rho_k.

    Args:
        lambdas: (L, d) translation points in index order
        plan: block sizes
        radii: rho_1..rho_K

    Returns:
        IndexLadder

    Raises:
        UnboundednessError: the sequence runs out before every slot is filled
    """
    points = np.asarray(lambdas, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    radii = np.asarray(radii, dtype=float)
    if len(radii) < plan.levels:
        raise ParameterError("One support radius per level is required")
    norms = np.linalg.norm(points, axis=1) if len(points) else np.zeros(0)
    indices, blocks, thresholds = [], [], []
    position, largest = 0, 0.0
    for k, size in enumerate(plan.sizes, start=1):
        for _ in range(size):
            threshold = 3.0 * largest + 2.0 * radii[k - 1] if indices else 1.0
            candidates = np.flatnonzero(norms[position:] > threshold)
            if not len(candidates):
                raise UnboundednessError(
                    f"Sequence exhausted after filling {len(indices)} of {plan.translate_count} slots",
                    filled=len(indices),
                )
            position += int(candidates[0])
            indices.append(position + 1)
            blocks.append(k)
            thresholds.append(threshold)
            largest = max(largest, float(norms[position]))
            position += 1
    return IndexLadder(tuple(indices), tuple(blocks), points[np.array(indices) - 1], tuple(thresholds), source)


def build_generator(ladder: IndexLadder, plan: BlockPlan, basis: BasisSystem) -> ConstructedFrame:
    """
    @atomic-function
    Assemble f, its translates T_lambda_i f and the coordinates N_k^-1/2 h_k'

    Raises:
        ScaleError: the grid box cannot hold some translate
    """
    if len(basis) < plan.levels:
        raise ParameterError("The basis has fewer elements than the plan has levels")
    if ladder.levels > plan.levels:
        raise ParameterError("The ladder uses more blocks than the plan")
    spec = basis.spec
    dual = basis.exponents.dual
    steps = np.stack([spec.lattice_point(point) for point in ladder.points])
    terms, coordinates = [], []
    try:
        for slot, block in enumerate(ladder.blocks):
            element = basis.elements[block - 1]
            scale = plan.sizes[block - 1] ** -0.5
            shifted = shift_cells(element.function, -steps[slot])
            terms.append(GridFunction.from_cells(spec, shifted.cells, scale * shifted.values, plan.p))
            coordinates.append(GridFunction.from_cells(spec, element.dual.cells, scale * element.dual.values, dual))
        generator = GridFunction.from_cells(
            spec,
            np.concatenate([term.cells for term in terms]),
            np.concatenate([term.values for term in terms]),
            plan.p,
        )
        translates = tuple(shift_cells(generator, step).with_exponent(plan.p) for step in steps)
    except GridDomainError as error:
        raise ScaleError(f"Grid box is too small for the translates: {error}") from error
    logger.info("Generator with %d terms on %d cells", len(terms), len(generator.values))
    return ConstructedFrame(
        spec, plan, ladder, basis, steps, tuple(terms), generator, translates, tuple(coordinates)
    )


def _offdiagonal_atoms(constructed: ConstructedFrame):
    pairs, keys, owners, lower, upper = [], [], [], [], []
    for i, j in itertools.permutations(range(constructed.n), 2):
        atom = constructed.atom(i, j)
        keys.append(atom.keys)
        owners.append(np.full(len(atom.keys), len(pairs)))
        bounds = atom.support_bounds()
        lower.append(bounds[0])
        upper.append(bounds[1])
        pairs.append((i, j))
    return pairs, keys, owners, np.array(lower), np.array(upper)


def _minimum_gap(lower: np.ndarray, upper: np.ndarray, limit: int = 4096) -> Optional[float]:
    if len(lower) < 2 or len(lower) > limit:
        return None
    separation = np.maximum(0.0, np.maximum(lower[None, :, :] - upper[:, None, :], lower[:, None, :] - upper[None, :, :]))
    gaps = np.linalg.norm(separation, axis=2)
    np.fill_diagonal(gaps, np.inf)
    return float(gaps.min())


def verify_disjoint_supports(constructed: ConstructedFrame) -> CheckEntry:
    """
    @atomic-function
    Exact lattice check that the atoms T_{lambda_i - lambda_j} h_kj, i != j, are pairwise disjoint

    Returns:
        CheckEntry: the minimum gap between atom bounding boxes, and the
        offending tuples (i, j), (i', j') on failure
    """
    pairs, keys, owners, lower, upper = _offdiagonal_atoms(constructed)
    name = 'construction.disjoint_supports'
    if not pairs:
        return CheckEntry(name=name, status=PASS, provenance=constructed.plan.provenance,
                          detail='no off-diagonal atoms')
    keys = np.concatenate(keys)
    owners = np.concatenate(owners)
    unique, counts = np.unique(keys, return_counts=True)
    gap = _minimum_gap(lower, upper)
    if (counts > 1).any():
        clash = unique[np.argmax(counts > 1)]
        first, second = (pairs[k] for k in owners[keys == clash][:2])
        return CheckEntry(
            name=name,
            provenance=constructed.plan.provenance,
            status=FAIL,
            measured=gap,
            bound=0.0,
            witness={
                'tuples': [[first[0] + 1, first[1] + 1], [second[0] + 1, second[1] + 1]],
                'indices': [[constructed.ladder.indices[s] for s in first],
                            [constructed.ladder.indices[s] for s in second]],
            },
            detail='supports of two atoms intersect',
        )
    return CheckEntry(
        name=name,
        provenance=constructed.plan.provenance,
        status=PASS,
        measured=gap,
        bound=0.0,
        margin=gap,
        detail=f'{len(pairs)} atoms pairwise disjoint',
    )


def verify_tail_separation(constructed: ConstructedFrame) -> CheckEntry:
    """Off-diagonal atoms avoid the cells of the basis block."""
    pairs, keys, _, lower, upper = _offdiagonal_atoms(constructed)
    name = 'construction.tail_origin_separation'
    if not pairs:
        return CheckEntry(name=name, status=PASS, provenance=constructed.plan.provenance,
                          detail='no off-diagonal atoms')
    block = np.unique(np.concatenate([f.keys for f in constructed.basis.functions]))
    overlap = np.intersect1d(np.concatenate(keys), block)
    side = constructed.basis.block_side
    origin = (np.zeros(constructed.spec.dimension), np.full(constructed.spec.dimension, side))
    gap = min(box_gap((lo, hi), origin) for lo, hi in zip(lower, upper))
    return CheckEntry(
        name=name,
        provenance=constructed.plan.provenance,
        status=PASS if len(overlap) == 0 else FAIL,
        measured=gap,
        bound=0.0,
        margin=gap,
        witness={} if len(overlap) == 0 else {'cells': len(overlap)},
        detail='off-diagonal atoms versus the basis block',
    )


def synthesis_l2_norm(functions: Sequence[GridFunction], p: float) -> float:
    """
    @atomic-function
    ||Phi_2|| = max ||sum a_k h_k||_p over the unit sphere of l_2, on the span of the given functions

    Exact in L_2; otherwise the best of multi-start Nelder-Mead runs from
    e_i and (e_i +- e_j)/sqrt(2).
    """
    stack = stack_functions(functions)
    count = stack.count
    if p == 2:
        return float(np.linalg.norm(stack.matrix, 2) * math.sqrt(stack.spec.cell_measure))

    def objective(a):
        size = np.linalg.norm(a)
        return 0.0 if size == 0 else -stack.combination_norms(a[None, :] / size, p)[0]

    identity = np.eye(count)
    starts = list(identity)
    for i, j in itertools.combinations(range(count), 2):
        starts.append((identity[i] + identity[j]) / math.sqrt(2))
        starts.append((identity[i] - identity[j]) / math.sqrt(2))
    best = max(-objective(start) for start in starts)
    for start in starts:
        result = optimize.minimize(
            objective, start, method='Nelder-Mead',
            options={'xatol': 1e-12, 'fatol': 1e-15, 'maxiter': 2000 * count},
        )
        best = max(best, -float(result.fun))
    return float(best)


def verify_l2_synthesis_bound(constructed: ConstructedFrame, trials: int = L2_DRAWS, seed: Optional[int] = None,
                              phi2: Optional[float] = None) -> CheckEntry:
    """
    @atomic-function
    ||sum_{i in A} b_i T_lambda_i f||_p <= (1 + ||Phi_2||) ||b||_2 on seeded draws

    The first draw is b = e_1 and the second b = 0; the rest pick a random
    index set A and normal coefficients on it.
    """
    seed = frames_setting('SEED', seed)
    slack = frames_setting('SYNTHESIS_SLACK')
    p = constructed.p
    if phi2 is None:
        phi2 = synthesis_l2_norm(constructed.basis.functions[:constructed.plan.levels], p)
    n = constructed.n
    rows = np.zeros((max(trials, 1), n))
    rows[0, 0] = 1.0
    for draw in range(2, trials):
        rng = trial_generator(seed, SUBSET_STREAM, draw)
        subset = rng.random(n) < 0.5
        if not subset.any():
            subset[rng.integers(n)] = True
        rows[draw] = np.where(subset, rng.standard_normal(n), 0.0)
    lhs = stack_functions(constructed.translates).combination_norms(rows, p)
    rhs = (1.0 + phi2) * np.linalg.norm(rows, axis=1)
    worst = int(np.argmax(lhs - rhs))
    support = np.flatnonzero(rows[worst])
    return CheckEntry(
        name='construction.l2_synthesis_bound',
        status=PASS if np.all(lhs <= rhs + slack) else FAIL,
        measured=float(lhs[worst]),
        bound=float(rhs[worst]),
        margin=float(rhs[worst] - lhs[worst]),
        provenance=constructed.plan.provenance,
        witness={'draw': worst, 'support': (support + 1).tolist(), 'coefficients': rows[worst, support].tolist()},
        detail=f'{len(rows)} draws, truncated ||Phi_2|| = {phi2!r}',
    )


def completed_frame(constructed: ConstructedFrame) -> FramePair:
    """
    @atomic-function
    Translate pairs {T_lambda_i f, N_k^-1/2 h_k'} followed by the tail pairs {u_i, u_i'}

    u_i is T_lambda_i f without its diagonal atom, normalized in L_p, and
    u_i' its norming functional. Zero tails are skipped.
    """
    p = constructed.p
    functions = list(constructed.translates)
    functionals = list(constructed.coordinates)
    for i in range(constructed.n):
        tail = constructed.tail(i)
        if tail.is_zero:
            continue
        unit = linear_combination([1.0 / lp_norm(tail, p)], [tail]).with_exponent(p)
        functions.append(unit)
        functionals.append(norming_functional(unit, p))
    return FramePair(
        Exponents(p), functions, functionals, translate_count=constructed.n, unconditional_claimed=True,
        provenance=constructed.plan.provenance,
    )


def auxiliary_synthesis_constant(constructed: ConstructedFrame, phi2: float) -> float:
    """
    M0 with ||sum_{i in A} c_i f_i||_p <= M0 ||c||_2 on the completed frame

    The translates contribute ||Phi_2|| from the basis block plus the largest
    tail norm, the tails being disjoint; the unit tail pairs contribute 1.
    """
    p = constructed.p
    tails = [lp_norm(constructed.tail(i), p) for i in range(constructed.n)]
    return phi2 + max(tails, default=0.0) + 1.0


def single_level_deviation(plan: BlockPlan) -> float:
    """
    Largest ||S(h_k) - h_k||_p over the normalized basis functions

    S(h_k) - h_k is N_k^-1/2 times the N_k disjoint tails of block k, so its
    p-th power is N_k^(1-p/2) (sigma - N_k^(-p/2)).
    """
    p = plan.p
    return max((n ** (1 - p / 2) * (plan.total - n ** (-p / 2))) ** (1 / p) for n in plan.sizes)


def near_identity_checks(frame: FramePair, constructed: ConstructedFrame, trials: Optional[int] = None,
                         seed: Optional[int] = None) -> List[CheckEntry]:
    """
    @atomic-function
    ||S(g) - g||_p / ||g||_p on seeded g = sum a_k h_k

    Checked against sigma^(2/p), sigma = sum N_k^(1-p/2); the ratio against
    the nominal 1/2 is reported as info, with the exact ratio of a single
    basis function as witness.
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    space = frame.working_space
    levels = constructed.plan.levels
    basis = np.stack([space.coordinates(space.align(h)) for h in constructed.basis.functions[:levels]])
    samples = span_coefficients(levels, trials, seed) @ basis
    ratios = deviation_ratios(frame, samples)
    worst = int(np.argmax(ratios))
    bound = constructed.plan.total ** (2.0 / constructed.p)
    provenance = constructed.plan.provenance
    return [
        CheckEntry.inequality(
            'construction.near_identity', ratios[worst], bound, provenance,
            witness={'sample': worst}, detail=f'{trials} samples, bound sigma^(2/p)',
            slack=frames_setting('SYNTHESIS_SLACK'),
        ),
        CheckEntry(
            name='construction.near_identity_half',
            status=INFO,
            measured=float(ratios[worst]),
            bound=0.5,
            margin=0.5 - float(ratios[worst]),
            provenance=provenance,
            witness={'single_level': single_level_deviation(constructed.plan)},
        ),
    ]


def generator_checks(constructed: ConstructedFrame) -> List[CheckEntry]:
    """||f||_p^p against sum N_k^(1-p/2), and ||f||_p against 1/(2 K_u)."""
    p = constructed.p
    plan = constructed.plan
    norm = lp_norm(constructed.generator, p)
    error = abs(norm ** p - plan.total) / plan.total
    return [
        CheckEntry.inequality(
            'construction.generator_norm_identity', error, GENERATOR_NORM_TOLERANCE, plan.provenance,
            detail=f'||f||_p^p = {norm ** p!r}, sum N_k^(1-p/2) = {plan.total!r}',
        ),
        CheckEntry.inequality(
            'construction.generator_norm_bound', norm, 1.0 / (2.0 * plan.ku_bound), plan.provenance,
        ),
    ]


def ladder_entry(ladder: IndexLadder) -> CheckEntry:
    violations = ladder.recursion_violations()
    margin = float(np.min(ladder.norms - np.array(ladder.thresholds)))
    return CheckEntry(
        name='construction.ladder_recursion',
        status=PASS if not violations else FAIL,
        measured=margin,
        bound=0.0,
        margin=margin,
        witness={'violations': violations} if violations else {},
        detail=f'{len(ladder)} slots in {ladder.levels} blocks',
    )


def ladder_table(ladder: IndexLadder) -> Table:
    return Table(('slot', 'k', 'index', 'lambda_norm', 'threshold'), ladder.rows())


def _grid_for(points: np.ndarray, cell_width: float) -> GridSpec:
    reach = np.abs(points).max(axis=0) if len(points) else np.zeros(points.shape[1])
    box = tuple((-float(math.ceil(2 * r) + 1), float(math.ceil(2 * r) + 1)) for r in reach)
    return GridSpec(points.shape[1], cell_width, box)


def _final_frame_entries(frame: FramePair, trials: int, seed: int, provenance: str) -> List[CheckEntry]:
    entries = []
    constants = frame_constants(frame, mode=SAMPLED, trials=trials, seed=seed, sign_samples=FINAL_SIGN_SAMPLES)
    entries.append(CheckEntry.inequality(
        'frame.constants_order', constants.K, constants.K_u, provenance,
        witness=constants.witness, detail=f'{FINAL_SIGN_SAMPLES} sampled sign vectors',
    ))
    entries.append(CheckEntry(
        name='frame.unconditional_constant',
        status=PASS if math.isfinite(constants.K_u) else FAIL,
        measured=constants.K_u,
        provenance=provenance,
        detail='sampled K_u of the final frame',
    ))
    size = min(SUBFRAME_SIZE, frame.n)
    subframe = FramePair(frame.exponents, frame.functions[:size], frame.functionals[:size])
    role = 'translates' if size <= (frame.translate_count or frame.n) else 'pairs'
    exhaustive = frame_constants(subframe, mode=EXHAUSTIVE, trials=trials, seed=seed)
    entries.append(CheckEntry.inequality(
        'frame.subframe_constants_order', exhaustive.K, exhaustive.K_u, provenance,
        witness=exhaustive.witness, detail=f'exhaustive sweep over the first {size} {role}',
    ))
    return entries


def _translate_entries(frame: FramePair, trials: int, seed: int) -> List[CheckEntry]:
    """Roles of the pairs, and the functional bound and expansion over the translates alone."""
    count = frame.translate_count or frame.n
    samples = sample_span(frame, trials, seed)
    partial = frame.synthesis_matrix()[:, :count] @ frame.analysis_matrix()[:count, :]
    space = frame.working_space
    reference = space.norms(samples, frame.p)
    errors = space.norms(samples @ (partial - np.eye(space.dimension)).T, frame.p)
    value = float(np.max(errors / reference)) if len(reference) else 0.0
    norms = np.array([lp_norm(f, frame.exponents.dual) for f in frame.functionals[:count]])
    worst = int(np.argmin(norms))
    return [
        CheckEntry(
            name='frame.pair_roles',
            status=INFO,
            measured=count,
            witness={'translates': [1, count], 'tails': [count + 1, frame.n] if frame.n > count else []},
            detail='translates T_lambda_i f first, then the normalized tails u_i',
        ),
        CheckEntry.inequality(
            'seminormalize.translate_functional_lower_bound', frame.labels['functional_lower_bound'],
            norms[worst], witness={'index': worst + 1},
            detail=f"1/(2 K1^2 ||T||) <= min ||F_i'|| over the {count} translates",
        ),
        CheckEntry(
            name='frame.translate_share',
            status=INFO,
            measured=value,
            detail=f'relative error of the expansion over the first {count} pairs only',
        ),
    ]


def _seminormalization_entries(frame: FramePair, tol: float, trials: int, seed: int,
                               provenance: str) -> List[CheckEntry]:
    labels = frame.labels
    residual = reconstruction_residual(frame, trials, seed)
    return [
        CheckEntry(
            name='seminormalize.K1',
            status=INFO,
            measured=labels['K1'],
            provenance=provenance,
            witness={'argmax': labels['K1_argmax'], 'delta0': labels['delta0']},
        ),
        CheckEntry.inequality(
            'seminormalize.perturbed_norms', 1.0 / (2.0 * labels['K1'] ** 2), labels['min_perturbed_norm'],
            provenance, detail='1/(2 K1^2) <= min ||G_i\'||',
        ),
        CheckEntry.inequality(
            'seminormalize.perturbation', labels['perturbation'], labels['delta0'], provenance,
            detail=f"{labels['perturbed_count']} perturbed functionals",
        ),
        CheckEntry.inequality(
            'seminormalize.functional_lower_bound', labels['functional_lower_bound'],
            labels['min_functional_norm'], provenance,
            detail='1/(2 K1^2 ||T||) <= min ||F_i\'||',
        ),
        CheckEntry.inequality(
            'frame.reconstruction', residual.value, tol, provenance,
            witness={'sample': residual.row}, detail=f'{trials} samples in the working span',
        ),
    ]


def construct_frame(lambdas: np.ndarray, p: float, ku_bound: Optional[float] = None, levels: int = 2,
                    grid_h: Optional[float] = None, tol: Optional[float] = None, mode: str = DEMO_MODE,
                    report: Optional[VerificationReport] = None, trials: Optional[int] = None,
                    seed: Optional[int] = None, source: str = '',
                    box: Optional[Sequence[Sequence[float]]] = None) -> FramePair:
    """
    @atomic-function
    Seminormalized unconditional frame of translates, end to end

    Pipeline: block plan, index ladder, generator, verification, completion
    with the tail pairs, seminormalization. Every stage appends its entries
    to the report before the next one starts, so a failing stage still
    leaves a partial report.

    Args:
        lambdas: (L, d) translation points in index order
        p: exponent, p > 2
        ku_bound: K_u upper bound (strict) or surrogate (demo)
        levels: number of blocks K
        grid_h: cell width (default DEMO_GRID_H)
        tol: reconstruction tolerance
        mode: 'strict' or 'demo'
        report: report receiving the check entries
        box: grid box (default: a box covering the ladder points twice over)

    Returns:
        FramePair: the final frame; its labels carry the seminormalization constants

    Raises:
        ParameterError: invalid parameters, p <= 2 included
        ScaleError: the plan or the ladder exceeds the configured limits
        UnboundednessError: the sequence cannot fill the ladder
    """
    if mode not in MODES:
        raise ParameterError(f"Unknown construction mode {mode!r}")
    if not p > 2:
        raise ParameterError(f"The construction needs p > 2, got p={p}")
    report = report if report is not None else VerificationReport('construct')
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    tol = frames_setting('TOL', tol)
    h = frames_setting('DEMO_GRID_H', grid_h)

    if mode == STRICT_MODE:
        provenance = STRICT
        ku_bound = default_ku_bound(p) if ku_bound is None else ku_bound
    else:
        provenance = SURROGATE
        ku_bound = DEMO_SURROGATE if ku_bound is None else ku_bound
        logger.warning("Demo mode: the block plan is checked against the surrogate K_u = %s only", ku_bound)
    report.provenance = provenance

    plan = choose_block_sizes(p, ku_bound, levels, provenance)
    report.add(block_plan_entry(plan))
    report.artifacts['block_plan'] = plan.to_dict()
    limit = frames_setting('MAX_TRANSLATES')
    if plan.translate_count > limit:
        raise ScaleError(
            f"The plan needs {plan.translate_count} translates, above the limit of {limit}; use demo mode"
        )

    points = np.asarray(lambdas, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    snapped, distance = snap_to_lattice(points, h)
    report.add(CheckEntry.inequality('construction.lambda_snap', distance, h / 2, provenance))

    dimension = points.shape[1]
    local = GridSpec.cube(dimension, h, -1.0, 1.0)
    radii = support_radii(haar_system(local, p, levels))
    ladder = select_index_ladder(snapped, plan, radii, source)
    report.add(ladder_entry(ladder))
    report.tables['ladder'] = ladder_table(ladder)
    if 4 * float(np.abs(ladder.points).max()) / h >= 2.0 ** 52:
        raise ScaleError("Ladder magnitudes leave the exactly representable lattice range; use demo mode")

    spec = GridSpec(dimension, h, box) if box is not None else _grid_for(ladder.points, h)
    basis = haar_system(spec, p, levels)
    basis = with_unconditional_estimate(
        basis,
        ku_upper=ku_bound if mode == STRICT_MODE else None,
        mode=EXHAUSTIVE if levels <= frames_setting('EXHAUSTIVE_LIMIT') else SAMPLED,
        trials=trials,
        seed=seed,
    )
    report.add(CheckEntry(
        name='haar.unconditional_lower',
        status=INFO,
        measured=basis.ku_lower,
        bound=ku_bound,
        margin=ku_bound - basis.ku_lower,
        provenance=provenance,
        detail='sampled lower bound against the supplied bound' if mode == STRICT_MODE
        else 'sampled lower bound against the demo surrogate',
    ))

    constructed = build_generator(ladder, plan, basis)
    report.extend(generator_checks(constructed))
    report.add(verify_disjoint_supports(constructed))
    report.add(verify_tail_separation(constructed))
    phi2 = synthesis_l2_norm(basis.functions[:levels], p)
    report.add(CheckEntry(name='construction.phi2_truncated', status=INFO, measured=phi2, provenance=provenance))
    report.add(verify_l2_synthesis_bound(constructed, seed=seed, phi2=phi2))

    approximate = completed_frame(constructed)
    report.extend(near_identity_checks(approximate, constructed, trials, seed))

    m0 = auxiliary_synthesis_constant(constructed, phi2)
    report.add(CheckEntry(
        name='seminormalize.synthesis_constant',
        status=INFO,
        measured=m0,
        provenance=SURROGATE,
        detail='M0 = ||Phi_2|| + max ||tail_i||_p + 1 from the sampled ||Phi_2||',
    ))
    auxiliary = prepare_auxiliary(approximate, trials=trials, seed=seed, m0=m0)
    final = seminormalize(approximate, auxiliary, tol, trials, seed)
    report.extend(_seminormalization_entries(final, tol, trials, seed, provenance))
    report.extend(_translate_entries(final, trials, seed))
    report.extend(_final_frame_entries(final, trials, seed, provenance))
    logger.info("Constructed a frame of %d pairs (%d translates)", final.n, constructed.n)
    return final
