import logging
from typing import List, Optional, Sequence

import numpy as np

from construction.types import TranslateSystem
from core.conf import frames_setting
from core.exceptions import ParameterError
from core.reporting import FAIL, INFO, PASS, CheckEntry, Table
from frames.services import inverse_operator_matrix, promote_to_schauder_frame, sample_span
from frames.types import FramePair
from lp_grid.services import lp_norm, restrict, stack_functions
from lp_grid.sweeps import EXHAUSTIVE, SAMPLED, sign_set, span_coefficients
from lp_grid.types import Exponents, GridFunction
from separation.services import is_uniformly_separated, partition_uniformly_separated
from separation.types import PointFamily
from .types import (
    TAG_2,
    TAG_P,
    TAG_Q,
    TAG_S,
    CoefficientProfile,
    DisjointnessCertificate,
    TailProfile,
    sequence_norm,
)

logger = logging.getLogger(__name__)

PROJECTION_TOL = 1e-8


def _analysis_tag(exponents: Exponents, r: float) -> str:
    if r == exponents.p:
        return TAG_P
    if r == exponents.s:
        return TAG_S
    if r == 2:
        return TAG_2
    raise ParameterError(f"Analysis exponent must be p, s or 2, got {r}")


def analysis_operator(frame: FramePair, g: GridFunction, r: Optional[float] = None) -> CoefficientProfile:
    """
    @atomic-function
    Psi_r(g) = (f_i'(g))_i with its l_r norm

    Args:
        frame: pairs {f_i, f_i'}
        g: function on the frame's grid
        r: p, s = max{2, p} or 2 (default p)

    Returns:
        CoefficientProfile: ratio ||Psi(g)||_r / ||g||_p, None for g = 0
    """
    r = frame.p if r is None else float(r)
    tag = _analysis_tag(frame.exponents, r)
    coefficients = stack_functions(frame.functionals).pairings(g)
    size = lp_norm(g, frame.p)
    ratio = sequence_norm(coefficients, r) / size if size > 0 else None
    return CoefficientProfile(coefficients, r, tag, ratio)


def analysis_norm_estimate(frame: FramePair, r: Optional[float] = None, trials: Optional[int] = None,
                           seed: Optional[int] = None) -> float:
    """Sampled lower bound for ||Psi_r|| over g in the working span."""
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    r = frame.p if r is None else float(r)
    _analysis_tag(frame.exponents, r)
    samples = sample_span(frame, trials, seed)
    coefficients = samples @ frame.analysis_matrix().T
    reference = frame.working_space.norms(samples, frame.p)
    ratios = [sequence_norm(row, r) / size for row, size in zip(coefficients, reference) if size > 0]
    return float(max(ratios, default=0.0))


def dual_analysis_operator(frame: FramePair, functional: GridFunction,
                           r: Optional[float] = None) -> CoefficientProfile:
    """Theta_q(h') = (h'(f_i))_i, measured in l_q with q = max{2, p'} by default."""
    r = frame.exponents.q if r is None else float(r)
    coefficients = frame.function_stack.pairings(functional)
    size = lp_norm(functional, frame.exponents.dual)
    ratio = sequence_norm(coefficients, r) / size if size > 0 else None
    return CoefficientProfile(coefficients, r, TAG_Q, ratio)


def synthesis_operator(frame: FramePair, coefficients: Sequence[complex], r: Optional[float] = None) -> GridFunction:
    """
    @atomic-function
    Phi_r(a) = sum a_i f_i

    Raises:
        ParameterError: len(a) differs from the frame size, or r < 1
    """
    if r is not None and not r >= 1:
        raise ParameterError("Sequence exponent must be at least 1")
    coefficients = np.asarray(coefficients).reshape(-1)
    if len(coefficients) != frame.n:
        raise ParameterError(f"Expected {frame.n} coefficients, got {len(coefficients)}")
    return frame.function_stack.combination(coefficients).with_exponent(frame.p)


def dual_synthesis_operator(frame: FramePair, coefficients: Sequence[complex]) -> GridFunction:
    """sum a_i f_i', the adjoint of the analysis operator."""
    coefficients = np.asarray(coefficients).reshape(-1)
    if len(coefficients) != frame.n:
        raise ParameterError(f"Expected {frame.n} coefficients, got {len(coefficients)}")
    return stack_functions(frame.functionals).combination(coefficients).with_exponent(frame.exponents.dual)


def _riesz_thorin(matrix: np.ndarray, p: float) -> float:
    """Upper bound ||A||_1^(1/p) ||A||_inf^(1-1/p) for the l_p operator norm."""
    if matrix.size == 0:
        return 0.0
    magnitudes = np.abs(matrix)
    column = float(magnitudes.sum(axis=0).max())
    row = float(magnitudes.sum(axis=1).max())
    return column ** (1.0 / p) * row ** (1.0 - 1.0 / p)


def projection_matrix(frame: FramePair) -> np.ndarray:
    """P = Psi_p S^-1 Phi_p on the coefficient space."""
    return frame.analysis_matrix() @ inverse_operator_matrix(frame) @ frame.synthesis_matrix()


def projection_check(frame: FramePair, trials: Optional[int] = None, seed: Optional[int] = None,
                     tol: float = PROJECTION_TOL) -> List[CheckEntry]:
    """
    @atomic-function
    P = Psi_p S^-1 Phi_p is a projection fixing the range of Psi_p

    ||P P - P|| is bounded on l_p^n through Riesz-Thorin; range fixedness
    is measured as ||P a - a||_p / ||a||_p for a = Psi_p(g) on seeded g.

    Raises:
        InversionError: S is not invertible on the working span
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    p = frame.p
    projection = projection_matrix(frame)
    idempotence = _riesz_thorin(projection @ projection - projection, p)

    samples = sample_span(frame, trials, seed)
    images = samples @ frame.analysis_matrix().T
    worst, row = 0.0, -1
    for index, a in enumerate(images):
        size = sequence_norm(a, p)
        if size > 0:
            value = sequence_norm(projection @ a - a, p) / size
            if value > worst or row < 0:
                worst, row = value, index
    logger.debug("Projection residuals: idempotence=%s range=%s", idempotence, worst)
    return [
        CheckEntry.inequality(
            'diagnostics.projection_idempotent', idempotence, tol,
            detail=f'Riesz-Thorin bound on l_p^{frame.n}',
        ),
        CheckEntry.inequality(
            'diagnostics.projection_range', worst, tol,
            witness={'sample': row} if row >= 0 else {}, detail=f'{trials} analysis images',
        ),
    ]


def disjoint_support_coefficient_bound(functions: Sequence[GridFunction], certificate: DisjointnessCertificate,
                                       coefficients: Sequence[complex], p: float, mode: Optional[str] = None,
                                       sign_samples: Optional[int] = None, seed: Optional[int] = None) -> CheckEntry:
    """
    @atomic-function
    sum |a_i|^p <= k0 K^p / epsilon with K = max_c ||sum c_i a_i f_i||_p over sign vectors

    Args:
        functions: f_1..f_n
        certificate: classes A_k with disjoint boxes D_i and mass bound epsilon
        coefficients: a_1..a_n
        p: exponent
        mode: 'exhaustive' (n <= EXHAUSTIVE_LIMIT) or 'sampled'

    Raises:
        CertificateError: the certificate does not hold for these functions
    """
    seed = frames_setting('SEED', seed)
    functions = list(functions)
    certificate.check(functions, p)
    a = np.asarray(coefficients).reshape(-1)
    if len(a) != len(functions):
        raise ParameterError("One coefficient per function is required")
    count = len(functions)
    mode = mode or (EXHAUSTIVE if count <= frames_setting('EXHAUSTIVE_LIMIT') else SAMPLED)
    signs = sign_set(count, mode, sign_samples or frames_setting('TRIALS'), seed, np.iscomplexobj(a))
    norms = stack_functions(functions).combination_norms(signs * a, p)
    best = int(np.argmax(norms))
    K = float(norms[best])
    lhs = float(np.sum(np.abs(a) ** p))
    bound = certificate.k0 * K ** p / certificate.epsilon
    return CheckEntry.inequality(
        'diagnostics.disjoint_coefficient_bound', lhs, bound,
        witness={'signs': np.real(signs[best]).tolist(), 'coefficients': np.abs(a).tolist()},
        detail=f'k0={certificate.k0}, K={K!r}, epsilon={certificate.epsilon!r}, {mode} sweep',
        slack=frames_setting('SYNTHESIS_SLACK'),
    )


def synthesis_norm_estimate(frame: FramePair, r: Optional[float] = None, trials: Optional[int] = None,
                            seed: Optional[int] = None) -> float:
    """
    @atomic-function
    Lower bound for the least M0 with ||sum a_i f_i||_p <= M0 ||a||_r

    The candidates are the unit vectors followed by seeded normal vectors,
    so the estimate never decreases with trials.
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    r = frame.p if r is None else float(r)
    if r not in (frame.p, 2.0):
        raise ParameterError(f"Synthesis exponent must be p or 2, got {r}")
    rows = np.vstack([np.eye(frame.n), span_coefficients(frame.n, trials, seed)])
    images = frame.function_stack.combination_norms(rows, frame.p)
    sizes = np.array([sequence_norm(row, r) for row in rows])
    return float(np.max(images / sizes))


def orlicz_sums(functions: Sequence[GridFunction], functionals: Sequence[GridFunction],
                exponents: Exponents) -> Table:
    """Partial sums of ||f_i||_p^s and ||f_i'||_p'^q, one row per n."""
    function_terms = np.array([lp_norm(f, exponents.p) ** exponents.s for f in functions])
    functional_terms = np.array([lp_norm(f, exponents.dual) ** exponents.q for f in functionals])
    if len(function_terms) != len(functional_terms):
        raise ParameterError("Function and functional counts differ")
    return Table(
        ('n', 'function_sum', 'functional_sum'),
        [(n + 1, float(a), float(b)) for n, (a, b) in enumerate(zip(np.cumsum(function_terms),
                                                                     np.cumsum(functional_terms)))],
    )


def orlicz_entries(table: Table) -> List[CheckEntry]:
    last = table.rows[-1] if table.rows else (0, 0.0, 0.0)
    return [
        CheckEntry(name='diagnostics.orlicz_function_sum', status=INFO, measured=last[1],
                   detail=f'sum of ||f_i||^s over {last[0]} terms'),
        CheckEntry(name='diagnostics.orlicz_functional_sum', status=INFO, measured=last[2],
                   detail=f"sum of ||f_i'||^q over {last[0]} terms"),
    ]


def restriction_tail_profile(system: TranslateSystem, region: Sequence[Sequence[float]], p: float,
                             trials: Optional[int] = None, seed: Optional[int] = None,
                             inflation: Optional[float] = None, tol: Optional[float] = None) -> TailProfile:
    """
    @atomic-function
    Tail sums of ||f_i|_D||^p and the finite-rank errors of the restriction R_D

    The translates are completed with their norming functionals and promoted
    to a frame on their span. For seeded g the error of the rank-n
    approximation T_n g = sum_{i<=n} F_i'(g) f_i|_D is compared with
    inflation * ||Psi_p||_est * ||g|| * (sum_{i>n} ||f_i|_D||^r)^(1/r),
    r = p for p <= 2 and r = p' otherwise.

    Args:
        system: translates f_i = T_lambda_i g_k
        region: lattice-aligned box D
        p: exponent
        inflation: factor on the sampled ||Psi_p|| (default CAUCHY_INFLATION)

    Returns:
        TailProfile
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    inflation = frames_setting('CAUCHY_INFLATION', inflation)
    exponents = Exponents(p)
    functions = system.functions(p)
    restricted = [restrict(f, region) for f in functions]
    norms = np.array([lp_norm(f, p) for f in restricted])
    tails = np.append(np.cumsum((norms ** p)[::-1])[::-1], 0.0)
    r = p if p <= 2 else exponents.dual
    factors = np.append(np.cumsum((norms ** r)[::-1])[::-1], 0.0) ** (1.0 / r)

    frame = promote_to_schauder_frame(
        FramePair(exponents, functions, system.canonical_functionals(p)), tol, trials, seed,
    )
    samples = sample_span(frame, trials, seed)
    coefficients = samples @ frame.analysis_matrix().T
    reference = frame.working_space.norms(samples, p)
    positive = reference > 0
    psi = max((sequence_norm(row, p) / size for row, size in zip(coefficients[positive], reference[positive])),
              default=0.0)
    bounds = inflation * psi * factors

    stack = stack_functions(restricted)
    errors = np.zeros(len(functions) + 1)
    for n in range(len(functions) + 1):
        remainder = coefficients[positive].copy()
        remainder[:, :n] = 0
        if len(remainder):
            errors[n] = float(np.max(stack.combination_norms(remainder, p) / reference[positive]))

    slack = frames_setting('SYNTHESIS_SLACK')
    excess = errors - bounds
    worst = int(np.argmax(excess))
    entries = [
        CheckEntry(
            name='diagnostics.cauchy_domination',
            status=PASS if np.all(errors <= bounds + slack) else FAIL,
            measured=float(errors[worst]),
            bound=float(bounds[worst]),
            margin=float(bounds[worst] - errors[worst]),
            witness={'n': worst},
            detail=f'{int(positive.sum())} samples, r={r!r}, inflation={inflation!r}',
        ),
        CheckEntry(name='diagnostics.analysis_norm', status=INFO, measured=float(psi),
                   detail='sampled ||Psi_p|| of the promoted translate frame'),
    ]
    logger.info("Tail profile over %d translates, t_0=%s", len(functions), tails[0])
    return TailProfile(norms, tails, bounds, errors, float(psi), float(inflation), entries)


def translate_frame_scenario_check(frame: FramePair, r_lower: float, trials: Optional[int] = None,
                                   seed: Optional[int] = None, tol: float = PROJECTION_TOL) -> List[CheckEntry]:
    """
    @atomic-function
    min_i |f_i'(f_i)| >= r_lower, followed by the analysis and projection checks when it holds

    Runs unchanged at p = 1.
    """
    slack = frames_setting('SYNTHESIS_SLACK')
    diagonal = np.abs(np.diag(frame.pairing_matrix()))
    smallest = float(diagonal.min())
    index = int(np.argmin(diagonal))
    entries = [CheckEntry(
        name='diagnostics.diagonal_pairing',
        status=PASS if smallest + slack >= r_lower else FAIL,
        measured=smallest,
        bound=float(r_lower),
        margin=smallest - float(r_lower),
        witness={'index': index + 1},
        detail='min |f_i\'(f_i)|',
    )]
    if smallest + slack >= r_lower:
        entries.append(CheckEntry(
            name='diagnostics.analysis_norm',
            status=INFO,
            measured=analysis_norm_estimate(frame, trials=trials, seed=seed),
            detail=f'sampled ||Psi_p|| at p={frame.p!r}',
        ))
        entries.extend(projection_check(frame, trials, seed, tol))
    return entries


def separation_diagnostic(frame: FramePair, points, threshold: float) -> CheckEntry:
    """Norm range of the coordinate functionals next to the greedy partition of the points."""
    norms = np.array([lp_norm(f, frame.exponents.dual) for f in frame.functionals])
    family = points if isinstance(points, PointFamily) else PointFamily(points)
    partition = partition_uniformly_separated(family, threshold)
    separated = all(is_uniformly_separated(family.points[list(members)], threshold) for members in partition.classes)
    return CheckEntry(
        name='diagnostics.separation',
        status=INFO,
        measured=float(norms.min()),
        witness={
            'max_functional_norm': float(norms.max()),
            'classes': partition.class_count,
            'separated': separated,
        },
        detail=f'greedy partition at t={threshold!r}',
    )
