from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from core.exceptions import ParameterError


@dataclass(frozen=True, eq=False)
class PointFamily:
    """
    @atomic-model
    Indexed finite family of points in R^d; duplicates are allowed
    """
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise ParameterError("Points must be a list of coordinate arrays")
        if len(points) and not np.all(np.isfinite(points)):
            raise ParameterError("Points must have finite coordinates")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @classmethod
    def from_json(cls, data: Sequence[Sequence[float]]) -> 'PointFamily':
        rows = [list(row) if isinstance(row, (list, tuple)) else [row] for row in data]
        if len({len(row) for row in rows}) > 1:
            raise ParameterError("Points have inconsistent dimensions")
        return cls(np.array(rows, dtype=float).reshape(len(rows), -1 if rows else 1))

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SeparationPartition:
    """
    @atomic-model
    Disjoint index classes covering a family, each uniformly separated at t
    """
    threshold: float
    classes: Tuple[Tuple[int, ...], ...]

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def labels(self, size: int) -> np.ndarray:
        labels = np.full(size, -1)
        for label, members in enumerate(self.classes):
            labels[list(members)] = label
        return labels

    def to_dict(self) -> Dict[str, Any]:
        return {'threshold': self.threshold, 'classes': [list(members) for members in self.classes]}
