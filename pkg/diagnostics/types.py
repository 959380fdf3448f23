import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import CertificateError, ParameterError
from core.reporting import CheckEntry, Table
from lp_grid.services import lp_norm, restrict
from lp_grid.types import GridFunction

# Exponent tags of coefficient sequences
TAG_P = 'p'
TAG_S = 's'
TAG_Q = 'q'
TAG_Q_DUAL = "q'"
TAG_2 = '2'
TAGS = (TAG_P, TAG_S, TAG_Q, TAG_Q_DUAL, TAG_2)


def sequence_norm(values: np.ndarray, r: float) -> float:
    """l_r norm of a finite sequence, r in [1, inf]."""
    values = np.abs(np.asarray(values).reshape(-1))
    if not len(values):
        return 0.0
    if math.isinf(r):
        return float(values.max())
    return float(np.sum(values ** r) ** (1.0 / r))


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """
    @atomic-model
    Coefficient sequence (f_i'(g))_i or (h'(f_i))_i with the exponent it is measured in
    """
    coefficients: np.ndarray
    exponent: float
    tag: str = TAG_P
    ratio: Optional[float] = None

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients).reshape(-1)
        if not np.all(np.isfinite(coefficients)):
            raise ParameterError("Coefficient sequence is not finite")
        if self.tag not in TAGS:
            raise ParameterError(f"Unknown exponent tag {self.tag!r}")
        if not self.exponent >= 1:
            raise ParameterError("Sequence exponent must be at least 1")
        coefficients.setflags(write=False)
        object.__setattr__(self, 'coefficients', coefficients)

    def __len__(self):
        return len(self.coefficients)

    @property
    def norm(self) -> float:
        return sequence_norm(self.coefficients, self.exponent)


@dataclass(frozen=True)
class DisjointnessCertificate:
    """
    @atomic-model
    Index classes A_k with lattice boxes D_i, pairwise disjoint inside each class,
    on which every certified f_i carries at least epsilon of its p-th power mass
    """
    classes: Tuple[Tuple[int, ...], ...]
    regions: Tuple[Tuple[Tuple[float, float], ...], ...]
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, 'classes', tuple(tuple(int(i) for i in members) for members in self.classes))
        object.__setattr__(
            self, 'regions',
            tuple(tuple((float(lo), float(hi)) for lo, hi in region) for region in self.regions),
        )

    @property
    def k0(self) -> int:
        return len(self.classes)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(sorted(i for members in self.classes for i in members))

    def check(self, functions: Sequence[GridFunction], p: float) -> Dict[int, float]:
        """
        Validate the certificate against the functions

        Returns:
            dict: the mass int_{D_i} |f_i|^p per certified index

        Raises:
            CertificateError: overlapping boxes in a class, a light box or a bad layout
        """
        if not self.epsilon > 0:
            raise CertificateError("Certificate epsilon must be positive")
        indices = self.indices
        if len(set(indices)) != len(indices):
            raise CertificateError("An index belongs to two classes")
        if len(self.regions) != len(functions):
            raise CertificateError("One box per function is required")
        if any(not 0 <= i < len(functions) for i in indices):
            raise CertificateError("Certificate index out of range")
        for members in self.classes:
            for position, i in enumerate(members):
                for j in members[position + 1:]:
                    if _boxes_overlap(self.regions[i], self.regions[j]):
                        raise CertificateError(f"Boxes D_{i + 1} and D_{j + 1} intersect", indices=(i, j))
        masses = {}
        for i in indices:
            mass = lp_norm(restrict(functions[i], self.regions[i]), p) ** p
            if mass < self.epsilon * (1 - 1e-12):
                raise CertificateError(
                    f"f_{i + 1} has mass {mass} on its box, below epsilon = {self.epsilon}",
                    index=i,
                )
            masses[i] = mass
        return masses


def _boxes_overlap(first, second) -> bool:
    return all(max(a[0], b[0]) < min(a[1], b[1]) for a, b in zip(first, second))


@dataclass(frozen=True, eq=False)
class TailProfile:
    """
    @atomic-model
    Tail sums t_n = sum_{i>n} ||f_i|_D||^p with the finite-rank error bounds
    """
    restricted_norms: np.ndarray
    tails: np.ndarray
    bounds: np.ndarray
    errors: np.ndarray
    psi_estimate: float
    inflation: float
    entries: List[CheckEntry] = field(default_factory=list)

    @property
    def table(self) -> Table:
        return Table(
            ('n', 't_n', 'bound'),
            [(n, float(t), float(b)) for n, (t, b) in enumerate(zip(self.tails, self.bounds))],
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'restricted_norms': self.restricted_norms.tolist(),
            'tails': self.tails.tolist(),
            'bounds': self.bounds.tolist(),
            'errors': self.errors.tolist(),
            'psi_estimate': self.psi_estimate,
            'inflation': self.inflation,
        }
