import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import AlignmentError, GridDomainError, ParameterError, SpecMismatchError
from .types import FunctionStack, GridFunction, GridSpec


def make_indicator(spec: GridSpec, box: Sequence[Sequence[float]], value: float = 1.0,
                   exponent: Optional[float] = None) -> GridFunction:
    """
    @atomic-function
    Constant function on a lattice-aligned box, zero elsewhere

    Args:
        spec: grid the function lives on
        box: ((lo, hi), ...) per dimension, endpoints multiples of h
        value: constant value on the box

    Returns:
        GridFunction: value * 1_box
    """
    lower, upper = spec.lattice_box(box)
    if np.any(upper < lower):
        raise ParameterError("Box upper endpoint lies below the lower endpoint")
    spec_lower, spec_upper = spec.index_bounds
    if np.any(lower < spec_lower) or np.any(upper > spec_upper):
        raise GridDomainError("Indicator box is not inside the grid box")
    if value == 0 or np.any(upper == lower):
        return GridFunction.zero(spec, exponent)
    axes = [np.arange(lo, hi) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing='ij')
    cells = np.stack([axis.reshape(-1) for axis in mesh], axis=1)
    return GridFunction._trusted(spec, cells, np.full(len(cells), value), exponent)


def lp_norm(f: GridFunction, p: float) -> float:
    """
    @atomic-function
    L_p norm of a piecewise-constant function, p in [1, inf]

    Args:
        f: function or functional representative
        p: exponent; inf gives the essential supremum

    Returns:
        float: (sum |value|^p * h^d)^(1/p)
    """
    if not p >= 1:
        raise ParameterError(f"Exponent {p} is below 1")
    if f.is_zero:
        return 0.0
    magnitudes = np.abs(f.values)
    if math.isinf(p):
        return float(magnitudes.max())
    return float((np.sum(magnitudes ** p) * f.spec.cell_measure) ** (1.0 / p))


def translate(f: GridFunction, shift: Sequence[float]) -> GridFunction:
    """
    @atomic-function
    T_lambda f(x) = f(x - lambda) for a lattice vector lambda

    Raises:
        AlignmentError: lambda is not a multiple of h in every coordinate
        GridDomainError: the translated support leaves the grid box
    """
    step = f.spec.lattice_point(shift)
    return shift_cells(f, step)


def shift_cells(f: GridFunction, step: np.ndarray) -> GridFunction:
    """Translate by an integer number of cells per coordinate."""
    step = np.asarray(step, dtype=np.int64).reshape(-1)
    if not step.any():
        return f
    cells = f.cells + step
    if not f.spec.contains_cells(cells):
        raise GridDomainError("Translate leaves the grid box")
    return GridFunction._trusted(f.spec, cells, f.values, f.exponent)


def _shared_spec(fs: Sequence[GridFunction]) -> GridSpec:
    spec = fs[0].spec
    if any(f.spec != spec for f in fs[1:]):
        raise SpecMismatchError("Functions live on different grids")
    return spec


def linear_combination(coefficients: Sequence[complex], fs: Sequence[GridFunction]) -> GridFunction:
    """
    @atomic-function
    Pointwise sum of a_i f_i over functions on one grid

    Raises:
        SpecMismatchError: the functions do not share a GridSpec
    """
    fs = list(fs)
    coefficients = np.asarray(coefficients).reshape(-1)
    if len(fs) != len(coefficients):
        raise ParameterError("Coefficient and function counts differ")
    if not fs:
        raise ParameterError("Linear combination of no functions")
    spec = _shared_spec(fs)
    cells = np.concatenate([f.cells for f in fs], axis=0)
    values = np.concatenate([a * f.values for a, f in zip(coefficients, fs)])
    return GridFunction.from_cells(spec, cells, values, fs[0].exponent)


def pair(fprime: GridFunction, g: GridFunction) -> complex:
    """
    @atomic-function
    Bilinear duality pairing: integral of fprime * g

    Returns:
        float (complex in complex mode): exact cell sum times h^d
    """
    if fprime.spec != g.spec:
        raise SpecMismatchError("Pairing across different grids")
    if fprime.is_zero or g.is_zero:
        return 0.0
    _, left, right = np.intersect1d(fprime.keys, g.keys, assume_unique=True, return_indices=True)
    total = np.sum(fprime.values[left] * g.values[right]) * fprime.spec.cell_measure
    return complex(total) if np.iscomplexobj(total) else float(total)


def restrict(f: GridFunction, region: Sequence[Sequence[float]]) -> GridFunction:
    """
    @atomic-function
    R_D f: f on the lattice-aligned box D, zero elsewhere
    """
    lower, upper = f.spec.lattice_box(region)
    if f.is_zero:
        return f
    inside = np.all((f.cells >= lower) & (f.cells < upper), axis=1)
    if inside.all():
        return f
    return GridFunction._trusted(f.spec, f.cells[inside], f.values[inside], f.exponent)


def norming_functional(f: GridFunction, p: float) -> GridFunction:
    """
    @atomic-function
    Functional f' with f'(f) = 1 and ||f'||_p' = 1/||f||_p

    The representative is |f|^(p-2) conj(f) / ||f||_p^p, which attains the
    Holder bound.
    """
    norm = lp_norm(f, p)
    if norm == 0:
        raise ParameterError("The zero function has no norming functional")
    magnitudes = np.abs(f.values)
    values = magnitudes ** (p - 1) * _phase(f.values) / norm ** p
    return GridFunction._trusted(f.spec, f.cells, values, _dual_exponent(p))


def _phase(values: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(values):
        return np.conj(values) / np.abs(values)
    return np.sign(values)


def _dual_exponent(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1)


def support_radius(f: GridFunction) -> float:
    """Largest |x| over the closure of the support (farthest cell corners)."""
    if f.is_zero:
        return 0.0
    h = f.spec.cell_width
    far = np.maximum(np.abs(f.cells * h), np.abs((f.cells + 1) * h))
    return float(np.sqrt((far ** 2).sum(axis=1)).max())


def support_diameter(f: GridFunction) -> float:
    """Euclidean diameter of the support's bounding box."""
    lower, upper = f.support_bounds()
    return float(np.linalg.norm(upper - lower))


def box_gap(first: Tuple[np.ndarray, np.ndarray], second: Tuple[np.ndarray, np.ndarray]) -> float:
    """Euclidean distance between two closed axis-parallel boxes."""
    separation = np.maximum(0.0, np.maximum(second[0] - first[1], first[0] - second[1]))
    return float(np.linalg.norm(separation))


def snap_to_lattice(points, cell_width: float) -> Tuple[np.ndarray, float]:
    """
    @atomic-function
    Round points to the nearest lattice points

    Returns:
        tuple: snapped points and the largest per-coordinate snap distance

    Raises:
        AlignmentError: some coordinate sits exactly halfway between lattice points
    """
    points = np.asarray(points, dtype=float)
    snapped = np.round(points / cell_width) * cell_width
    distance = float(np.abs(points - snapped).max()) if points.size else 0.0
    if distance >= cell_width / 2:
        raise AlignmentError("A point lies halfway between lattice points")
    return snapped, distance


def stack_functions(fs: Iterable[GridFunction], keys: Optional[np.ndarray] = None) -> FunctionStack:
    """
    @atomic-function
    Lay functions out as rows of a dense matrix over the union of their cells

    Args:
        fs: functions on one grid
        keys: optional sorted key set to align to instead of the union

    Returns:
        FunctionStack
    """
    fs = list(fs)
    if not fs:
        raise ParameterError("Cannot stack an empty function list")
    spec = _shared_spec(fs)
    if keys is None:
        keys = np.unique(np.concatenate([f.keys for f in fs]))
    keys = np.asarray(keys, dtype=np.int64)
    dtype = complex if any(f.is_complex for f in fs) else float
    matrix = np.zeros((len(fs), len(keys)), dtype=dtype)
    for row, f in enumerate(fs):
        if f.is_zero or len(keys) == 0:
            continue
        position = np.minimum(np.searchsorted(keys, f.keys), len(keys) - 1)
        hit = keys[position] == f.keys
        matrix[row, position[hit]] = f.values[hit]
    return FunctionStack(spec, keys, matrix)
