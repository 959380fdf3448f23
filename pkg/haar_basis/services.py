import itertools
import logging
import math
from dataclasses import replace
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import hadamard

from core.conf import frames_setting
from core.exceptions import GridDomainError, ParameterError, ResolutionError
from lp_grid.services import stack_functions, support_diameter, support_radius
from lp_grid.sweeps import (
    EXHAUSTIVE,
    prefix_rows,
    sign_set,
    signed_expansion_sup,
    span_coefficients,
)
from lp_grid.types import Exponents, GridFunction, GridSpec
from .types import BasisElement, BasisSystem

logger = logging.getLogger(__name__)


def haar_block_side(dimension: int) -> float:
    """Side 2^-ceil(log2 sqrt d) of the dyadic block, so its diameter is at most 1."""
    return 2.0 ** -math.ceil(math.log2(math.sqrt(dimension)) - 1e-12)


def _cube_cells(origin: np.ndarray, width: int) -> np.ndarray:
    axes = [np.arange(lo, lo + width) for lo in origin]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([axis.reshape(-1) for axis in mesh], axis=1)


def _haar_layout(dimension: int, side_cells: int) -> Iterator[Tuple[int, np.ndarray, int, int]]:
    """Yield (level, cube origin, cube width, pattern) after the father element."""
    level = 0
    width = side_cells
    while width >= 2:
        per_side = side_cells // width
        for cube in itertools.product(range(per_side), repeat=dimension):
            for pattern in range(1, 2 ** dimension):
                yield level, np.array(cube) * width, width, pattern
        level += 1
        width //= 2


def _pattern_signs(local: np.ndarray, width: int, pattern: int) -> np.ndarray:
    halves = local // (width // 2)
    signs = np.ones(len(local))
    for axis in range(local.shape[1]):
        if pattern >> axis & 1:
            signs *= np.where(halves[:, axis] == 1, -1.0, 1.0)
    return signs


def haar_system(spec: GridSpec, p: float, count: int) -> BasisSystem:
    """
    @atomic-function
    L_p-normalized tensor Haar system on the dyadic block [0, s)^d

    Elements are ordered father first, then mother wavelets level by level,
    subcubes in lexicographic order and the 2^d - 1 sign patterns in binary
    order. Every support lies in the block, whose diameter is at most 1.

    Args:
        spec: grid resolving the block
        p: exponent of the normalization
        count: number of elements n

    Returns:
        BasisSystem: biorthogonal elements h_i with duals h_i'

    Raises:
        ResolutionError: the grid cannot resolve n elements
    """
    exponents = Exponents(p)
    if count < 1:
        raise ParameterError("A Haar system needs at least one element")
    side = haar_block_side(spec.dimension)
    side_cells = side / spec.cell_width
    if side_cells < 1 or side_cells != int(side_cells):
        raise ResolutionError(f"Cell width {spec.cell_width} does not resolve the block of side {side}")
    side_cells = int(side_cells)
    capacity = side_cells ** spec.dimension
    if count > capacity:
        raise ResolutionError(f"Grid resolves at most {capacity} Haar elements, {count} requested")
    if not spec.contains_cells(np.array([[0] * spec.dimension, [side_cells - 1] * spec.dimension])):
        raise GridDomainError("Haar block [0, s)^d is not inside the grid box")

    dual = exponents.dual
    block = _cube_cells(np.zeros(spec.dimension, dtype=np.int64), side_cells)
    measure = side ** spec.dimension
    elements = [_element(spec, 1, block, np.ones(len(block)), measure, p, dual, 0, 0)]
    for level, origin, width, pattern in _haar_layout(spec.dimension, side_cells):
        if len(elements) == count:
            break
        cells = _cube_cells(origin, width)
        signs = _pattern_signs(cells - origin, width, pattern)
        cube_measure = (width * spec.cell_width) ** spec.dimension
        elements.append(
            _element(spec, len(elements) + 1, cells, signs, cube_measure, p, dual, level, pattern)
        )
    logger.debug("Built %d Haar elements on a block of side %s", len(elements), side)
    return BasisSystem(spec, exponents, tuple(elements), block_side=side)


def _element(spec, index, cells, signs, measure, p, dual, level, pattern) -> BasisElement:
    function = GridFunction.from_cells(spec, cells, signs * measure ** (-1.0 / p), p)
    dual_scale = 1.0 if math.isinf(dual) else measure ** (-1.0 / dual)
    functional = GridFunction.from_cells(spec, cells, signs * dual_scale, dual)
    return BasisElement(index, function, functional, support_diameter(function), level, pattern)


def coordinate_functional(system: BasisSystem, index: int) -> GridFunction:
    """
    @atomic-function
    Coordinate functional h_i' (1-based index)
    """
    if not 1 <= index <= len(system):
        raise ParameterError(f"Index {index} outside 1..{len(system)}")
    return system.elements[index - 1].dual


def support_radii(system: BasisSystem) -> np.ndarray:
    """rho_k = max{|x| : x in the closed support of h_j, j <= k}."""
    return np.maximum.accumulate([support_radius(f) for f in system.functions])


def pairing_matrix(system: BasisSystem) -> np.ndarray:
    """Matrix of pair(h_i', h_j)."""
    functions = stack_functions(system.functions)
    duals = stack_functions(system.duals, keys=functions.keys)
    return duals.matrix @ functions.matrix.T * system.spec.cell_measure


def unconditional_constant_estimate(system: BasisSystem, mode: str = EXHAUSTIVE,
                                    trials: Optional[int] = None, seed: Optional[int] = None,
                                    sign_samples: Optional[int] = None) -> float:
    """
    @atomic-function
    Certified lower bound for K_u of the basis from a sign sweep

    The tested g are all truncations of seeded random expansions
    sum a_i h_i, so the estimate is nondecreasing in trials and in n.

    Args:
        system: basis with duals
        mode: 'exhaustive' (n <= EXHAUSTIVE_LIMIT) or 'sampled'
        trials: number of random expansions
        seed: generator seed
        sign_samples: random sign vectors in sampled mode (default: trials)

    Returns:
        float: max of ||sum c_i h_i'(g) h_i|| / ||g||, clamped at 1
    """
    trials = frames_setting('TRIALS', trials)
    seed = frames_setting('SEED', seed)
    count = len(system)
    functions = stack_functions(system.functions)
    rows = prefix_rows(span_coefficients(count, trials, seed))
    coefficients = rows @ pairing_matrix(system).T
    reference = functions.combination_norms(rows, system.exponents.p)
    signs = sign_set(count, mode, sign_samples or trials, seed)
    result = signed_expansion_sup(functions, coefficients, reference, signs, system.exponents.p)
    logger.debug("K_u sweep over %d expansions and %d sign vectors: %s", len(rows), len(signs), result.value)
    return max(1.0, result.value)


def with_unconditional_estimate(system: BasisSystem, ku_upper: Optional[float] = None, **options) -> BasisSystem:
    """Copy of the system carrying its sampled K_u and an optional rigorous upper bound."""
    return replace(system, ku_lower=unconditional_constant_estimate(system, **options), ku_upper=ku_upper)


def walsh_system(spec: GridSpec, count: int, origin: Optional[Sequence[float]] = None,
                 exponent: Optional[float] = None) -> Tuple[GridFunction, ...]:
    """
    @atomic-function
    Sequency-ordered tensor Walsh functions on a unit cube Q0

    Values are +-1 on Q0, so every element has norm exactly 1 in every
    L_r(Q0). Elements are ordered by total sequency, ties broken
    lexicographically.

    Args:
        spec: grid with h <= 1
        count: number of functions
        origin: lower corner of Q0 (default: the origin)

    Raises:
        ResolutionError: (1/h)^d is smaller than count
    """
    side_cells = 1.0 / spec.cell_width
    if side_cells < 1:
        raise ResolutionError("Walsh functions need a cell width of at most 1")
    side_cells = int(side_cells)
    capacity = side_cells ** spec.dimension
    if count > capacity:
        raise ResolutionError(f"Grid resolves at most {capacity} Walsh functions, {count} requested")
    corner = spec.lattice_point(np.zeros(spec.dimension) if origin is None else origin)
    cells = _cube_cells(corner, side_cells)
    if not spec.contains_cells(cells):
        raise GridDomainError("Walsh cube is not inside the grid box")

    rows = hadamard(side_cells).astype(float)
    sequency = (np.diff(rows, axis=1) != 0).sum(axis=1)
    rows = rows[np.argsort(sequency, kind='stable')]
    indices = _lowest_sequency_indices(spec.dimension, side_cells, count)
    local = cells - corner
    functions = []
    for index in indices[:count]:
        values = np.ones(len(cells))
        for axis, order in enumerate(index):
            values *= rows[order][local[:, axis]]
        functions.append(GridFunction.from_cells(spec, cells, values, exponent))
    return tuple(functions)


def _lowest_sequency_indices(dimension: int, side_cells: int, count: int):
    # Total sequency below t has fewer than count entries only while t < count
    bound = min(side_cells, count)
    candidates = itertools.product(range(bound), repeat=dimension)
    return sorted((k for k in candidates if sum(k) < count), key=lambda k: (sum(k), k))
