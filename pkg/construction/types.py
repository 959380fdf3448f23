from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ParameterError
from core.reporting import STRICT, SURROGATE
from haar_basis.types import BasisSystem
from lp_grid.services import norming_functional, shift_cells, translate
from lp_grid.types import GridFunction, GridSpec


@dataclass(frozen=True)
class BlockPlan:
    """
    @atomic-model
    Block sizes N_1..N_K with sum N_k^(1-p/2) strictly below (2 K_u)^-p
    """
    p: float
    ku_bound: float
    sizes: Tuple[int, ...]
    total: float
    bound: float
    exact: bool = False
    provenance: str = STRICT

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(int(n) for n in self.sizes))
        if not self.sizes or min(self.sizes) < 1:
            raise ParameterError("Block sizes must be positive integers")
        if self.provenance not in (STRICT, SURROGATE):
            raise ParameterError(f"Unknown provenance {self.provenance!r}")
        if not self.total < self.bound:
            raise ParameterError(f"Block plan sum {self.total} does not stay below {self.bound}")

    @property
    def levels(self) -> int:
        return len(self.sizes)

    @property
    def margin(self) -> float:
        return self.bound - self.total

    @property
    def translate_count(self) -> int:
        return sum(self.sizes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p': self.p,
            'ku_bound': self.ku_bound,
            'levels': self.levels,
            'sizes': list(self.sizes),
            'total': self.total,
            'bound': self.bound,
            'margin': self.margin,
            'exact': self.exact,
            'provenance': self.provenance,
        }


@dataclass(frozen=True, eq=False)
class IndexLadder:
    """
    @atomic-model
    Selected indices j_s^(k) of a translation sequence, filled block by block

    indices are 1-based positions in the source sequence, one per slot;
    blocks holds the 1-based block label k of each slot.
    """
    indices: Tuple[int, ...]
    blocks: Tuple[int, ...]
    points: np.ndarray
    thresholds: Tuple[float, ...]
    source: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'indices', tuple(int(i) for i in self.indices))
        object.__setattr__(self, 'blocks', tuple(int(k) for k in self.blocks))
        object.__setattr__(self, 'thresholds', tuple(float(t) for t in self.thresholds))
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)
        size = len(self.indices)
        if not size or len(self.blocks) != size or len(points) != size or len(self.thresholds) != size:
            raise ParameterError("Ladder slots, blocks, points and thresholds must align")
        if list(self.blocks) != sorted(self.blocks) or self.blocks[0] < 1:
            raise ParameterError("Ladder blocks must be filled in order")

    def __len__(self):
        return len(self.indices)

    @cached_property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    @property
    def levels(self) -> int:
        return self.blocks[-1]

    @property
    def J(self) -> Tuple[Tuple[int, ...], ...]:
        """The index sets J_1..J_K."""
        return tuple(
            tuple(index for index, block in zip(self.indices, self.blocks) if block == k)
            for k in range(1, self.levels + 1)
        )

    @property
    def D(self) -> Tuple[int, ...]:
        """Union of the J_k in increasing order."""
        return tuple(sorted(self.indices))

    def recursion_violations(self) -> List[Dict[str, Any]]:
        """Slots breaking index order, the threshold recursion or threshold monotonicity."""
        violations = []
        for slot in range(len(self)):
            reasons = []
            if slot and self.indices[slot] <= self.indices[slot - 1]:
                reasons.append('index order')
            if not self.norms[slot] > self.thresholds[slot]:
                reasons.append('threshold')
            if slot and self.thresholds[slot] < self.thresholds[slot - 1]:
                reasons.append('threshold order')
            if reasons:
                violations.append({'slot': slot + 1, 'index': self.indices[slot], 'reasons': reasons})
        return violations

    def rows(self) -> List[Tuple[int, int, int, float, float]]:
        """(slot, k, index, |lambda|, threshold) per slot."""
        return [
            (slot + 1, block, index, float(norm), threshold)
            for slot, (block, index, norm, threshold)
            in enumerate(zip(self.blocks, self.indices, self.norms, self.thresholds))
        ]


@dataclass(frozen=True, eq=False)
class ConstructedFrame:
    """
    @atomic-model
    Generator f = sum_k sum_{j in J_k} N_k^-1/2 T_-lambda_j h_k with its translates and coordinates
    """
    spec: GridSpec
    plan: BlockPlan
    ladder: IndexLadder
    basis: BasisSystem
    steps: np.ndarray
    terms: Tuple[GridFunction, ...]
    generator: GridFunction
    translates: Tuple[GridFunction, ...]
    coordinates: Tuple[GridFunction, ...]

    @property
    def n(self) -> int:
        return len(self.translates)

    @property
    def p(self) -> float:
        return self.plan.p

    def scale(self, slot: int) -> float:
        """N_k^-1/2 for the block of a 0-based slot."""
        return self.plan.sizes[self.ladder.blocks[slot] - 1] ** -0.5

    def atom(self, i: int, j: int) -> GridFunction:
        """T_{lambda_i - lambda_j} applied to the j-th term, i.e. N_kj^-1/2 T_{lambda_i - lambda_j} h_kj."""
        return shift_cells(self.terms[j], self.steps[i])

    def tail(self, i: int) -> GridFunction:
        """T_lambda_i f without its diagonal atom."""
        parts = [self.atom(i, j) for j in range(self.n) if j != i]
        if not parts:
            return GridFunction.zero(self.spec, self.p)
        cells = np.concatenate([part.cells for part in parts])
        values = np.concatenate([part.values for part in parts])
        return GridFunction.from_cells(self.spec, cells, values, self.p)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'plan': self.plan.to_dict(),
            'ladder': [list(row) for row in self.ladder.rows()],
            'generator': self.generator.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class TranslateSystem:
    """
    @atomic-model
    Translates f_i = T_lambda_i g_k of finitely many generators, k = assignment[i]
    """
    generators: Tuple[GridFunction, ...]
    points: np.ndarray
    assignment: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        generators = tuple(self.generators)
        if not generators:
            raise ParameterError("A translate system needs a generator")
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        assignment = tuple(int(k) for k in self.assignment) or (0,) * len(points)
        if len(assignment) != len(points):
            raise ParameterError("One generator label per translation point")
        if assignment and not 0 <= min(assignment) <= max(assignment) < len(generators):
            raise ParameterError("Generator label out of range")
        object.__setattr__(self, 'generators', generators)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'assignment', assignment)

    def __len__(self):
        return len(self.points)

    @property
    def spec(self) -> GridSpec:
        return self.generators[0].spec

    def classes(self) -> Tuple[Tuple[int, ...], ...]:
        """The partition {Delta_k} as 0-based index tuples."""
        return tuple(
            tuple(i for i, label in enumerate(self.assignment) if label == k)
            for k in range(len(self.generators))
        )

    def functions(self, p: Optional[float] = None) -> Tuple[GridFunction, ...]:
        return tuple(
            translate(self.generators[k], point).with_exponent(p)
            for k, point in zip(self.assignment, self.points)
        )

    def canonical_functionals(self, p: float) -> Tuple[GridFunction, ...]:
        """Norming functionals of the translates."""
        return tuple(norming_functional(f, p) for f in self.functions(p))


def ladder_from_points(points: Sequence[Sequence[float]], blocks: Sequence[int], thresholds: Sequence[float],
                       indices: Optional[Sequence[int]] = None) -> IndexLadder:
    """Ladder over explicit points, indices default to 1..n."""
    points = np.asarray(points, dtype=float)
    indices = tuple(indices) if indices is not None else tuple(range(1, len(points) + 1))
    return IndexLadder(indices, tuple(blocks), points, tuple(thresholds), source='explicit')
