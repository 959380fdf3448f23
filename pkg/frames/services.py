import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from core.conf import frames_setting
from core.exceptions import AuxiliaryError, InversionError, ParameterError, ScaleError, SpecMismatchError
from core.reporting import INFO, CheckEntry
from haar_basis.services import walsh_system
from lp_grid.services import linear_combination, lp_norm, stack_functions
from lp_grid.sweeps import (
    EXHAUSTIVE,
    HELD_OUT_STREAM,
    SAMPLED,
    SPAN_STREAM,
    SUBSET_STREAM,
    SweepResult,
    prefix_expansion_sup,
    sign_set,
    signed_expansion_sup,
    span_coefficients,
    trial_generator,
)
from lp_grid.types import GridFunction
from .types import FrameConstants, FramePair, SeminormalizationAuxiliary, WorkingSpace

logger = logging.getLogger(__name__)

# Assembled operators with a larger condition number are treated as singular
CONDITION_LIMIT = 1e12


def _is_complex(frame: FramePair) -> bool:
    return any(f.is_complex for f in frame.functions + frame.functionals)


def _default_mode(count: int) -> str:
    return EXHAUSTIVE if count <= frames_setting('EXHAUSTIVE_LIMIT') else SAMPLED


def _dense_space(frame: FramePair) -> WorkingSpace:
    space = frame.working_space
    limit = frames_setting('DENSE_LIMIT')
    if space.dimension > limit:
        raise ScaleError(f"Working span of dimension {space.dimension} exceeds the dense limit {limit}")
    return space


def apply_frame_operator(frame: FramePair, g: GridFunction) -> GridFunction:
    """
    @atomic-function
    S(g) = sum f_i'(g) f_i

    Args:
        frame: pairs {f_i, f_i'}
        g: function on the frame's grid

    Returns:
        GridFunction: S(g), zero when every coefficient vanishes

    Raises:
        SpecMismatchError: g lives on another grid
    """
    if g.spec != frame.spec:
        raise SpecMismatchError("Function and frame live on different grids")
    coefficients = stack_functions(frame.functionals).pairings(g)
    return frame.function_stack.combination(coefficients).with_exponent(frame.p)


def _sample_coefficients(frame: FramePair, trials: int, seed: int, stream: int = SPAN_STREAM) -> np.ndarray:
    return span_coefficients(frame.n, trials, seed, stream, _is_complex(frame))


def sample_span(frame: FramePair, trials: Optional[int] = None, seed: Optional[int] = None,
                stream: int = SPAN_STREAM) -> np.ndarray:
    """Working-span coordinates of seeded random combinations sum a_i f_i, one per row."""
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    coefficients = _sample_coefficients(frame, trials, seed, stream)
    return coefficients @ frame.synthesis_matrix().T


def _dual_map(vector: np.ndarray, r: float) -> np.ndarray:
    """Cell vector z with z . v = ||v||_r^r, the unnormalized norming functional of v."""
    magnitudes = np.abs(vector)
    phase = np.zeros_like(vector)
    nonzero = magnitudes > 0
    phase[nonzero] = np.conj(vector[nonzero]) / magnitudes[nonzero]
    return magnitudes ** (r - 1) * phase


def _norm_ratios(space: WorkingSpace, matrix: np.ndarray, rows: np.ndarray, p: float) -> np.ndarray:
    reference = space.norms(rows, p)
    image = space.norms(rows @ matrix.T, p)
    ratios = np.zeros(len(rows))
    positive = reference > 0
    ratios[positive] = image[positive] / reference[positive]
    return ratios


def estimate_operator_norm(space: WorkingSpace, matrix: np.ndarray, p: float,
                           trials: Optional[int] = None, seed: Optional[int] = None,
                           steps: int = 25) -> float:
    """
    @atomic-function
    Lower bound for the L_p operator norm of a map on W given in coordinates

    Seeded random starts and the coordinate vectors are evaluated first;
    for 1 < p < inf the best start is refined by dual-map ascent. In L_2
    the norm is the spectral norm of the coordinate matrix.

    Args:
        space: the working span W
        matrix: (r, r) coordinate matrix of the operator
        p: exponent of the norm on both sides

    Returns:
        float: sup of ||M x||_p / ||x||_p over the tested x
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    matrix = np.asarray(matrix)
    if space.dimension == 0 or not np.any(matrix):
        return 0.0
    if p == 2:
        return float(np.linalg.norm(matrix, 2))
    complex_mode = np.iscomplexobj(matrix) or np.iscomplexobj(space.basis)
    starts = np.vstack([
        np.eye(space.dimension),
        span_coefficients(space.dimension, trials, seed, SPAN_STREAM, complex_mode),
    ])
    ratios = _norm_ratios(space, matrix, starts, p)
    best_row = int(np.argmax(ratios))
    best = float(ratios[best_row])
    if 1 < p < math.inf:
        dual = p / (p - 1)
        x = starts[best_row]
        for _ in range(steps):
            functional = _dual_map(space.embed(matrix @ x), p)
            pulled = matrix.T @ (space.basis.T @ functional)
            candidate = space.coordinates(_dual_map(space.basis.conj() @ pulled, dual))
            if not np.any(candidate):
                break
            value = float(_norm_ratios(space, matrix, candidate[None, :], p)[0])
            if value <= best * (1 + 1e-12):
                break
            best, x = value, candidate
    logger.debug("Operator norm estimate over %d starts: %s", len(starts), best)
    return best


def _factorize(matrix: np.ndarray):
    if matrix.size == 0:
        raise InversionError("The working span is trivial", condition=math.inf)
    condition = float(np.linalg.cond(matrix))
    if not math.isfinite(condition) or condition > CONDITION_LIMIT:
        raise InversionError(
            f"Frame operator is singular or ill-conditioned on the working span (cond={condition:.3e})",
            condition=condition,
        )
    try:
        return lu_factor(matrix), condition
    except LinAlgError as error:
        raise InversionError(str(error), condition=condition) from error


def inverse_operator_matrix(frame: FramePair) -> np.ndarray:
    """Coordinate matrix of S^-1 on W."""
    _dense_space(frame)
    factor, _ = _factorize(frame.operator_matrix())
    return lu_solve(factor, np.eye(frame.working_space.dimension))


def _neumann(space: WorkingSpace, matrix: np.ndarray, rhs: np.ndarray, p: float,
             target: float, contraction: float) -> Tuple[Optional[np.ndarray], int]:
    """x = sum_k (I - S)^k rhs, stopped once ||S x - rhs||_p <= target."""
    if contraction > 0:
        limit = min(10000, int(math.ceil(math.log(max(target, 1e-300) / space.norms(rhs, p)[0])
                                         / math.log(contraction))) + 50)
    else:
        limit = 2
    solution = rhs.copy()
    term = rhs.copy()
    for count in range(1, max(limit, 2) + 1):
        if space.norms(matrix @ solution - rhs, p)[0] <= target:
            return solution, count
        term = term - matrix @ term
        solution = solution + term
    return None, limit


def invert_frame_operator(frame: FramePair, rhs: GridFunction, tol: Optional[float] = None,
                          trials: Optional[int] = None, seed: Optional[int] = None) -> GridFunction:
    """
    @atomic-function
    Solve S(x) = rhs on the working span

    A Neumann series is used when the estimated ||S - I|| is below 1 and it
    reaches the tolerance; otherwise S is assembled in the working basis and
    solved directly.

    Args:
        frame: approximate frame with operator S
        rhs: right-hand side in the working span
        tol: relative residual tolerance

    Returns:
        GridFunction: x with ||S(x) - rhs||_p <= tol ||rhs||_p

    Raises:
        InversionError: S is singular or ill-conditioned, or the residual misses tol
        ParameterError: rhs is not in the working span
    """
    tol = frames_setting('TOL', tol)
    space = _dense_space(frame)
    if rhs.spec != frame.spec:
        raise SpecMismatchError("Right-hand side and frame live on different grids")
    if not space.in_span(rhs):
        raise ParameterError("Right-hand side is not in the working span of the frame")
    b = space.coordinates(space.align(rhs))
    if rhs.is_zero or not np.any(b):
        return GridFunction.zero(frame.spec, frame.p)

    p = frame.p
    matrix = frame.operator_matrix()
    target = tol * space.norms(b, p)[0]
    deviation = estimate_operator_norm(space, matrix - np.eye(space.dimension), p, trials, seed)
    solution = None
    if deviation < 1:
        solution, terms = _neumann(space, matrix, b, p, target, deviation)
        logger.debug("Neumann branch (||S-I|| ~ %s): %s after %d terms",
                     deviation, 'converged' if solution is not None else 'stalled', terms)
    if solution is None:
        factor, condition = _factorize(matrix)
        logger.debug("Dense solve on a span of dimension %d, cond=%s", space.dimension, condition)
        solution = lu_solve(factor, b)

    residual = space.norms(matrix @ solution - b, p)[0]
    if residual > target:
        raise InversionError(
            f"Residual {residual:.3e} exceeds the tolerance {target:.3e}",
            condition=float(np.linalg.cond(matrix)),
        )
    return space.function(solution, p)


def deviation_ratios(frame: FramePair, coordinates: np.ndarray) -> np.ndarray:
    """||S(g) - g||_p / ||g||_p for g given by working-span coordinate rows."""
    space = frame.working_space
    return _norm_ratios(space, frame.operator_matrix() - np.eye(space.dimension), np.atleast_2d(coordinates), frame.p)


def reconstruction_residual(frame: FramePair, trials: Optional[int] = None,
                            seed: Optional[int] = None) -> SweepResult:
    """
    @atomic-function
    Largest relative error ||sum f_i'(g) f_i - g||_p / ||g||_p over seeded g in the working span

    Returns:
        SweepResult: the worst ratio and its sample row
    """
    ratios = deviation_ratios(frame, sample_span(frame, trials, seed))
    if len(ratios) == 0:
        return SweepResult(0.0, -1, -1)
    row = int(np.argmax(ratios))
    return SweepResult(float(ratios[row]), row, -1)


def promote_to_schauder_frame(approx_frame: FramePair, tol: Optional[float] = None,
                              trials: Optional[int] = None, seed: Optional[int] = None) -> FramePair:
    """
    @atomic-function
    Replace f_i' by F_i' = f_i' o S^-1

    One transposed system S^T y_i = a_i is solved per functional, where a_i
    holds the values of f_i' on the working basis; F_i' is materialized on
    the working-span cells.

    Args:
        approx_frame: approximate frame with invertible S on the working span
        tol: relative reconstruction tolerance

    Returns:
        FramePair: {f_i, F_i'} with reconstruction residual <= tol

    Raises:
        InversionError: S is not invertible or the reconstruction misses tol
    """
    tol = frames_setting('TOL', tol)
    space = _dense_space(approx_frame)
    factor, condition = _factorize(approx_frame.operator_matrix())
    coordinates = lu_solve(factor, approx_frame.analysis_matrix().T, trans=1)
    dual = approx_frame.exponents.dual
    functionals = tuple(space.functional(coordinates[:, i], dual) for i in range(approx_frame.n))
    promoted = approx_frame.with_functionals(functionals, promoted=True, condition=condition)

    residual = reconstruction_residual(promoted, trials, seed)
    if residual.value > tol:
        raise InversionError(
            f"Reconstruction residual {residual.value:.3e} exceeds the tolerance {tol:.3e}",
            condition=condition,
        )
    logger.debug("Promoted %d functionals, cond(S)=%s, residual=%s", approx_frame.n, condition, residual.value)
    return promoted


def frame_constants(frame: FramePair, mode: Optional[str] = None, trials: Optional[int] = None,
                    seed: Optional[int] = None, sign_samples: Optional[int] = None) -> FrameConstants:
    """
    @atomic-function
    Certified lower bounds for K and K_u over seeded g in the working span

    K is the largest prefix-sum ratio ||sum_{i<=m} f_i'(g) f_i|| / ||g||,
    K_u the largest sign-multiplied ratio. The sign set contains the all-ones
    vector and K_u is reported as max{1, K_u, K}.

    Args:
        frame: pairs {f_i, f_i'}
        mode: 'exhaustive' or 'sampled' (default: exhaustive up to EXHAUSTIVE_LIMIT)
        trials: number of random g
        seed: generator seed
        sign_samples: random sign vectors in sampled mode (default: trials)

    Returns:
        FrameConstants
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    mode = mode or _default_mode(frame.n)
    stack = frame.function_stack
    samples = _sample_coefficients(frame, trials, seed)
    reference = stack.combination_norms(samples, frame.p)
    coefficients = samples @ frame.pairing_matrix().T

    K, sample, prefix = prefix_expansion_sup(stack, coefficients, reference, frame.p)
    signs = sign_set(frame.n, mode, sign_samples or trials, seed, _is_complex(frame))
    signed = signed_expansion_sup(stack, coefficients, reference, signs, frame.p)
    K = max(1.0, K)
    K_u = max(1.0, signed.value, K)
    logger.debug("Frame constants over %d samples, %d sign vectors: K=%s K_u=%s", trials, len(signs), K, K_u)
    return FrameConstants(
        K=K,
        K_u=K_u,
        mode=mode,
        trials=trials,
        seed=seed,
        witness={'K': {'sample': sample, 'prefix': prefix}, 'K_u': signed.witness(signs)},
    )


def held_out_check(frame: FramePair, constants: FrameConstants, trials: Optional[int] = None,
                   seed: Optional[int] = None, slack: float = 0.05) -> CheckEntry:
    """
    @atomic-function
    Prefix bound on a fresh sample set against (1 + slack) K, reported as info
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    stack = frame.function_stack
    samples = _sample_coefficients(frame, trials, seed, HELD_OUT_STREAM)
    reference = stack.combination_norms(samples, frame.p)
    value, sample, prefix = prefix_expansion_sup(stack, samples @ frame.pairing_matrix().T, reference, frame.p)
    bound = (1 + slack) * constants.K
    return CheckEntry(
        name='frame.held_out_prefix_bound',
        status=INFO,
        measured=value,
        bound=bound,
        margin=bound - value,
        witness={'sample': sample, 'prefix': prefix},
        detail='within slack' if value <= bound else 'held-out prefix sums exceed the sampled K',
    )


def _nested_indicators(norms: np.ndarray) -> np.ndarray:
    """0/1 rows selecting the m smallest norms, m = 1..n."""
    order = np.argsort(norms, kind='stable')
    rows = np.zeros((len(norms), len(norms)))
    for m in range(len(norms)):
        rows[m, order[:m + 1]] = 1.0
    return rows


def prepare_auxiliary(frame: FramePair, functionals: Optional[Sequence[GridFunction]] = None,
                      mode: Optional[str] = None, trials: Optional[int] = None,
                      seed: Optional[int] = None, m0: Optional[float] = None) -> SeminormalizationAuxiliary:
    """
    @atomic-function
    Check an auxiliary system {g_i'} and derive K_1, delta_0 and the b_i

    Args:
        frame: approximate frame {f_i, f_i'}
        functionals: auxiliary g_i' (default: Walsh functions on the unit cube at the origin)
        mode: sign sweep mode of the K_u({f_i, g_i'}) estimate
        trials: number of random g
        seed: generator seed
        m0: synthesis constant of the square-summability check
            (default: sqrt(sum ||f_i||^2), which always holds)

    Returns:
        SeminormalizationAuxiliary

    Raises:
        AuxiliaryError: a norm or square-summability precondition fails
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    p, dual = frame.p, frame.exponents.dual
    space = _dense_space(frame)
    if functionals is None:
        functionals = walsh_system(frame.spec, frame.n, exponent=dual)
    functionals = tuple(functionals)
    if len(functionals) != frame.n:
        raise AuxiliaryError(f"Need {frame.n} auxiliary functionals, got {len(functionals)}")
    auxiliary_norms = np.array([lp_norm(g, dual) for g in functionals])
    if not np.allclose(auxiliary_norms, 1.0, rtol=0, atol=1e-12):
        worst = int(np.argmax(np.abs(auxiliary_norms - 1)))
        raise AuxiliaryError(f"Auxiliary functional {worst + 1} has norm {auxiliary_norms[worst]}, not 1")

    stack = frame.function_stack
    function_norms = stack.combination_norms(np.eye(frame.n), p)
    functional_norms = np.array([lp_norm(f, dual) for f in frame.functionals])
    auxiliary_pairings = stack_functions(functionals, keys=stack.keys).matrix @ stack.matrix.T * frame.spec.cell_measure

    samples = _sample_coefficients(frame, trials, seed)
    reference = stack.combination_norms(samples, p)
    coefficients = samples @ auxiliary_pairings.T

    # Square summability of the auxiliary expansion on random index sets
    m0 = float(np.sqrt(np.sum(function_norms ** 2))) if m0 is None else float(m0)
    for trial, row in enumerate(coefficients):
        subset = trial_generator(seed, SUBSET_STREAM, trial).random(frame.n) < 0.5
        selected = np.where(subset, row, 0)
        lhs = stack.combination_norms(selected, p)[0]
        rhs = m0 * float(np.linalg.norm(selected))
        if lhs > rhs * (1 + 1e-12):
            raise AuxiliaryError(
                f"Auxiliary expansion is not dominated by M0={m0} on sample {trial}",
                sample=trial, measured=lhs, bound=rhs,
            )

    mode = mode or _default_mode(frame.n)
    multipliers = np.vstack([
        sign_set(frame.n, mode, trials, seed, _is_complex(frame)),
        _nested_indicators(functional_norms),
    ])
    ku_auxiliary = max(1.0, signed_expansion_sup(stack, coefficients, reference, multipliers, p).value)

    operator = frame.operator_matrix()
    operator_norm = estimate_operator_norm(space, operator, p, trials, seed)
    inverse_norm = estimate_operator_norm(space, inverse_operator_matrix(frame), p, trials, seed)
    delta0 = min(0.9, 1.0 / (2.0 * inverse_norm))

    terms = np.vstack([auxiliary_norms, 1.0 / auxiliary_norms, function_norms, functional_norms])
    per_index = terms.max(axis=0)
    argmax = int(np.argmax(per_index))
    K1 = max(operator_norm, ku_auxiliary, float(per_index[argmax])) / delta0
    threshold = 1.0 / (2.0 * K1 ** 2)
    selected = functional_norms < threshold
    coefficients_b = np.where(selected, 1.0 / K1, 0.0)

    # ||(S - T) g|| = ||sum_{b_i != 0} g_i'(g) f_i|| / K1 on the same samples
    perturbation = 0.0
    if selected.any():
        shifted = stack.combination_norms(coefficients * coefficients_b, p)
        positive = reference > 0
        perturbation = float((shifted[positive] / reference[positive]).max(initial=0.0))

    logger.debug("Auxiliary system: K1=%s delta0=%s, %d perturbed functionals", K1, delta0, int(selected.sum()))
    return SeminormalizationAuxiliary(
        functionals=functionals,
        K1=K1,
        delta0=delta0,
        coefficients=coefficients_b,
        threshold=threshold,
        K1_argmax=argmax + 1,
        perturbation=perturbation,
        m0=m0,
        measurements={
            'operator_norm': operator_norm,
            'inverse_norm': inverse_norm,
            'ku_auxiliary': ku_auxiliary,
            'sup_norm_term': float(per_index[argmax]),
            'mode': mode,
        },
    )


def perturbed_functionals(frame: FramePair, auxiliary: SeminormalizationAuxiliary) -> Tuple[GridFunction, ...]:
    """G_i' = f_i' + b_i g_i'"""
    dual = frame.exponents.dual
    result = []
    for functional, extra, b in zip(frame.functionals, auxiliary.functionals, auxiliary.coefficients):
        if b == 0:
            result.append(functional)
        else:
            result.append(linear_combination([1.0, b], [functional, extra]).with_exponent(dual))
    return tuple(result)


def seminormalize(approx_frame: FramePair, auxiliary: SeminormalizationAuxiliary, tol: Optional[float] = None,
                  trials: Optional[int] = None, seed: Optional[int] = None) -> FramePair:
    """
    @atomic-function
    Seminormalized Schauder frame {f_i, G_i' o T^-1} from an approximate frame

    Args:
        approx_frame: approximate frame with operator S
        auxiliary: output of prepare_auxiliary for this frame
        tol: relative reconstruction tolerance

    Returns:
        FramePair: labels carry K1, delta0, ||S - T||, ||T||, min ||G_i'||,
        min ||F_i'|| and its lower bound threshold / ||T||

    Raises:
        AuxiliaryError: min ||G_i'|| < 1/(2 K1^2) or ||S - T|| > delta0
        InversionError: T is not invertible on the working span
    """
    if len(auxiliary.functionals) != approx_frame.n:
        raise AuxiliaryError("Auxiliary system does not match the frame size")
    dual = approx_frame.exponents.dual
    if auxiliary.perturbation > auxiliary.delta0 * (1 + 1e-12):
        raise AuxiliaryError(
            f"Measured ||S - T|| = {auxiliary.perturbation} exceeds delta0 = {auxiliary.delta0}",
        )
    perturbed = approx_frame.with_functionals(perturbed_functionals(approx_frame, auxiliary))
    perturbed_norms = np.array([lp_norm(g, dual) for g in perturbed.functionals])
    if perturbed_norms.min() < auxiliary.threshold * (1 - 1e-12):
        index = int(np.argmin(perturbed_norms))
        raise AuxiliaryError(
            f"||G_{index + 1}'|| = {perturbed_norms[index]} is below 1/(2 K1^2) = {auxiliary.threshold}",
        )

    space = _dense_space(perturbed)
    operator_norm = estimate_operator_norm(space, perturbed.operator_matrix(), approx_frame.p, trials, seed)
    promoted = promote_to_schauder_frame(perturbed, tol, trials, seed)
    final_norms = np.array([lp_norm(f, dual) for f in promoted.functionals])
    logger.info("Seminormalized %d functionals: min ||F_i'|| = %s", approx_frame.n, final_norms.min())
    return promoted.with_functionals(
        promoted.functionals,
        seminormalized=True,
        K1=auxiliary.K1,
        K1_argmax=auxiliary.K1_argmax,
        delta0=auxiliary.delta0,
        perturbation=auxiliary.perturbation,
        perturbed_count=int(np.count_nonzero(auxiliary.coefficients)),
        operator_norm=operator_norm,
        min_perturbed_norm=float(perturbed_norms.min()),
        min_functional_norm=float(final_norms.min()),
        max_functional_norm=float(final_norms.max()),
        functional_lower_bound=auxiliary.threshold / operator_norm,
    )
