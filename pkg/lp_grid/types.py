"""
Discretized model of L_p(R^d).

Functions are piecewise constant on the cells of a dyadic lattice. Cell j
covers [j*h, (j+1)*h) in every coordinate. Only the nonzero cells are
stored, so translates by very large lattice vectors stay cheap.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import (
    AlignmentError,
    GridDomainError,
    ParameterError,
    ScaleError,
    SpecMismatchError,
)

Box = Tuple[Tuple[float, float], ...]

# Keys are raveled cell indices; the lattice must fit in a signed 64-bit key
MAX_LATTICE_CELLS = 2 ** 62


def _integral(values: np.ndarray, what: str) -> np.ndarray:
    rounded = np.round(values)
    if not np.all(np.abs(values - rounded) <= 1e-9 * np.maximum(1.0, np.abs(values))):
        raise AlignmentError(f"{what} is not aligned to the lattice")
    return rounded.astype(np.int64)


@dataclass(frozen=True)
class GridSpec:
    """
    @atomic-model
    Dyadic lattice of cell width h = 2^-m over a lattice-aligned box in R^d
    """
    dimension: int
    cell_width: float
    box: Box

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ParameterError("Dimension must be a positive integer")
        if not self.cell_width > 0:
            raise ParameterError("Cell width must be positive")
        level = math.log2(self.cell_width)
        if level != round(level):
            raise ParameterError(f"Cell width {self.cell_width} is not a power of two")
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.dimension:
            raise ParameterError("Box must have one interval per dimension")
        if any(lo >= hi for lo, hi in box):
            raise ParameterError("Box intervals must have positive length")
        object.__setattr__(self, 'dimension', int(self.dimension))
        object.__setattr__(self, 'cell_width', float(self.cell_width))
        object.__setattr__(self, 'box', box)
        lower, upper = self.lattice_box(box)
        if math.prod(int(n) for n in upper - lower) >= MAX_LATTICE_CELLS:
            raise ScaleError("Bounding box holds too many lattice cells")

    @classmethod
    def cube(cls, dimension: int, cell_width: float, lo: float, hi: float) -> 'GridSpec':
        return cls(dimension, cell_width, tuple((lo, hi) for _ in range(dimension)))

    @property
    def cell_measure(self) -> float:
        return self.cell_width ** self.dimension

    def lattice_box(self, box: Sequence[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-index bounds [lower, upper) of a lattice-aligned box."""
        box = np.asarray(box, dtype=float).reshape(self.dimension, 2)
        lower = _integral(box[:, 0] / self.cell_width, "Box endpoint")
        upper = _integral(box[:, 1] / self.cell_width, "Box endpoint")
        return lower, upper

    @cached_property
    def index_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.lattice_box(self.box)

    @cached_property
    def shape(self) -> Tuple[int, ...]:
        lower, upper = self.index_bounds
        return tuple(int(n) for n in upper - lower)

    def lattice_point(self, point: Sequence[float]) -> np.ndarray:
        """Integer cell shift of a lattice point given in real coordinates."""
        point = np.asarray(point, dtype=float).reshape(-1)
        if point.size != self.dimension:
            raise ParameterError("Point dimension does not match the grid")
        return _integral(point / self.cell_width, "Translation vector")

    def contains_cells(self, cells: np.ndarray) -> bool:
        if len(cells) == 0:
            return True
        lower, upper = self.index_bounds
        return bool(np.all(cells >= lower) and np.all(cells < upper))

    def keys(self, cells: np.ndarray) -> np.ndarray:
        """Row-major keys; sorted keys correspond to lexicographic cell order."""
        if len(cells) == 0:
            return np.zeros(0, dtype=np.int64)
        lower, _ = self.index_bounds
        return np.ravel_multi_index(tuple((cells - lower).T), self.shape).astype(np.int64)

    def cells_from_keys(self, keys: np.ndarray) -> np.ndarray:
        if len(keys) == 0:
            return np.zeros((0, self.dimension), dtype=np.int64)
        lower, _ = self.index_bounds
        return np.stack(np.unravel_index(keys, self.shape), axis=1).astype(np.int64) + lower

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dimension': self.dimension,
            'cell_width': self.cell_width,
            'box': [list(interval) for interval in self.box],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GridSpec':
        return cls(int(data['dimension']), float(data['cell_width']), tuple(tuple(b) for b in data['box']))


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    @atomic-model
    Piecewise-constant function with compact support on a GridSpec

    cells holds the lattice indices of the nonzero cells in lexicographic
    order, values the matching cell values. Functionals in L_p' use the same
    representation; the exponent is context only.
    """
    spec: GridSpec
    cells: np.ndarray
    values: np.ndarray
    exponent: Optional[float] = None

    @classmethod
    def from_cells(cls, spec: GridSpec, cells, values, exponent: Optional[float] = None) -> 'GridFunction':
        """Build from arbitrary cell/value lists: duplicates are summed, zeros pruned."""
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, spec.dimension)
        values = np.asarray(values)
        values = values.astype(complex if np.iscomplexobj(values) else float).reshape(-1)
        if len(cells) != len(values):
            raise ParameterError("Cell and value counts differ")
        if not spec.contains_cells(cells):
            raise GridDomainError("Function support leaves the grid box")
        if len(cells):
            unique, inverse = np.unique(cells, axis=0, return_inverse=True)
            summed = np.zeros(len(unique), dtype=values.dtype)
            np.add.at(summed, inverse.reshape(-1), values)
            keep = summed != 0
            cells, values = unique[keep], summed[keep]
        return cls._trusted(spec, cells, values, exponent)

    @classmethod
    def from_keys(cls, spec: GridSpec, keys: np.ndarray, values, exponent: Optional[float] = None) -> 'GridFunction':
        """Build from sorted unique keys (as produced by a FunctionStack)."""
        values = np.asarray(values).reshape(-1)
        keep = values != 0
        return cls._trusted(spec, spec.cells_from_keys(np.asarray(keys)[keep]), values[keep], exponent)

    @classmethod
    def _trusted(cls, spec, cells, values, exponent) -> 'GridFunction':
        # Caller guarantees sorted unique in-box cells with nonzero values
        cells = np.ascontiguousarray(cells, dtype=np.int64).reshape(-1, spec.dimension)
        values = np.ascontiguousarray(values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        return cls(spec, _frozen(cells), _frozen(values), exponent)

    @classmethod
    def zero(cls, spec: GridSpec, exponent: Optional[float] = None) -> 'GridFunction':
        return cls._trusted(spec, np.zeros((0, spec.dimension)), np.zeros(0), exponent)

    @cached_property
    def keys(self) -> np.ndarray:
        return _frozen(self.spec.keys(self.cells))

    @property
    def is_zero(self) -> bool:
        return len(self.values) == 0

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def offset(self) -> np.ndarray:
        """Lower corner (lattice indices) of the support's bounding block."""
        if self.is_zero:
            return self.spec.index_bounds[0].copy()
        return self.cells.min(axis=0)

    def support_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Closed bounding box of the support in real coordinates."""
        h = self.spec.cell_width
        if self.is_zero:
            origin = np.zeros(self.spec.dimension)
            return origin, origin
        return self.cells.min(axis=0) * h, (self.cells.max(axis=0) + 1) * h

    def on_spec(self, spec: GridSpec) -> 'GridFunction':
        """The same cells on another grid with the same lattice."""
        if spec.dimension != self.spec.dimension or spec.cell_width != self.spec.cell_width:
            raise SpecMismatchError("Target grid has a different lattice")
        if not spec.contains_cells(self.cells):
            raise GridDomainError("Function support leaves the target grid box")
        return GridFunction._trusted(spec, self.cells, self.values, self.exponent)

    def with_exponent(self, exponent: Optional[float]) -> 'GridFunction':
        return GridFunction._trusted(self.spec, self.cells, self.values, exponent)

    def to_dict(self) -> Dict[str, Any]:
        offset = self.offset
        if self.is_complex:
            values = [[float(v.real), float(v.imag)] for v in self.values]
        else:
            values = [float(v) for v in self.values]
        return {
            'spec': self.spec.to_dict(),
            'offset': [float(v) for v in offset * self.spec.cell_width],
            'cells': (self.cells - offset).tolist(),
            'values': values,
            'exponent': self.exponent,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], spec: Optional[GridSpec] = None) -> 'GridFunction':
        spec = spec or GridSpec.from_dict(data['spec'])
        offset = spec.lattice_point(data['offset'])
        cells = np.asarray(data['cells'], dtype=np.int64).reshape(-1, spec.dimension) + offset
        raw = data['values']
        if raw and isinstance(raw[0], (list, tuple)):
            values = np.array([complex(re, im) for re, im in raw])
        else:
            values = np.asarray(raw, dtype=float)
        return cls.from_cells(spec, cells, values, data.get('exponent'))


@dataclass(frozen=True)
class Exponents:
    """
    @atomic-model
    The exponent p with its conjugate p' and the type/cotype exponents s, q
    """
    p: float

    def __post_init__(self):
        if not (1 <= self.p < math.inf):
            raise ParameterError(f"Exponent p={self.p} must lie in [1, inf)")
        object.__setattr__(self, 'p', float(self.p))

    @property
    def dual(self) -> float:
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    @property
    def s(self) -> float:
        return max(2.0, self.p)

    @property
    def q(self) -> float:
        return max(2.0, self.dual)

    def to_dict(self) -> Dict[str, float]:
        return {'p': self.p, 'p_dual': self.dual, 's': self.s, 'q': self.q}


@dataclass(frozen=True, eq=False)
class SignVector:
    """Unimodular multipliers: +-1 entries, or |c| = 1 complex entries in complex mode."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries)
        entries = entries.astype(complex if np.iscomplexobj(entries) else float).reshape(-1)
        if not np.allclose(np.abs(entries), 1.0, rtol=0, atol=1e-12):
            raise ParameterError("Sign vector entries must have modulus one")
        object.__setattr__(self, 'entries', _frozen(entries))

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class FunctionStack:
    """
    @atomic-model
    Functions laid out as rows over one sorted set of cell keys

    Norms of linear combinations are evaluated over the distinct columns
    only, weighted by multiplicity, which keeps sign sweeps cheap for
    piecewise-constant data with many repeated cells.
    """
    spec: GridSpec
    keys: np.ndarray
    matrix: np.ndarray

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def distinct_columns(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.matrix.shape[1] == 0:
            return np.zeros((0, self.count), dtype=self.matrix.dtype), np.zeros(0)
        columns, counts = np.unique(self.matrix.T, axis=0, return_counts=True)
        return columns, counts.astype(float)

    def combination_norms(self, coefficients, p: float, chunk: int = 4096) -> np.ndarray:
        """L_p norms of rows of coefficients @ matrix, one per coefficient row."""
        coefficients = np.atleast_2d(np.asarray(coefficients))
        if coefficients.shape[1] != self.count:
            raise ParameterError("Coefficient length does not match the stack")
        columns, counts = self.distinct_columns
        norms = np.zeros(coefficients.shape[0])
        if len(counts) == 0:
            return norms
        for start in range(0, coefficients.shape[0], chunk):
            block = np.abs(coefficients[start:start + chunk] @ columns.T)
            if math.isinf(p):
                norms[start:start + chunk] = block.max(axis=1)
            else:
                norms[start:start + chunk] = ((block ** p) @ counts * self.spec.cell_measure) ** (1.0 / p)
        return norms

    def combination(self, coefficients) -> GridFunction:
        coefficients = np.asarray(coefficients).reshape(-1)
        if len(coefficients) != self.count:
            raise ParameterError("Coefficient length does not match the stack")
        return GridFunction.from_keys(self.spec, self.keys, coefficients @ self.matrix)

    def align(self, f: GridFunction) -> np.ndarray:
        """Values of f on this stack's keys; cells outside the key set are dropped."""
        if f.spec != self.spec:
            raise SpecMismatchError("Function lives on a different grid")
        vector = np.zeros(len(self.keys), dtype=complex if (f.is_complex or np.iscomplexobj(self.matrix)) else float)
        if f.is_zero or len(self.keys) == 0:
            return vector
        position = np.searchsorted(self.keys, f.keys)
        position = np.minimum(position, len(self.keys) - 1)
        hit = self.keys[position] == f.keys
        vector[position[hit]] = f.values[hit]
        return vector

    def pairings(self, f: GridFunction) -> np.ndarray:
        """Bilinear pairings of every row with f: (integral row_i * f)_i."""
        return (self.matrix @ self.align(f)) * self.spec.cell_measure
