"""
Built-in translation sequences and the JSON loader.

Every built-in sequence is indexed from i = 1 and lives on the integer
lattice, so it is aligned to every dyadic grid with h <= 1.
"""
import json
from pathlib import Path
from typing import Optional, Union

import numpy as np

from core.conf import frames_setting
from core.exceptions import ParameterError
from lp_grid.sweeps import trial_generator
from separation.types import PointFamily

LINEAR = 'linear'
ALTERNATING = 'alternating'
RANDOM_WALK = 'seeded-random-walk'
BUILTINS = (LINEAR, ALTERNATING, RANDOM_WALK)

# Stream of the random-walk steps, disjoint from the sweep streams
WALK_STREAM = 7


def _along_first_axis(values: np.ndarray, dimension: int) -> np.ndarray:
    points = np.zeros((len(values), dimension))
    points[:, 0] = values
    return points


def linear(length: int, dimension: int = 1) -> np.ndarray:
    """lambda_i = i e_1"""
    return _along_first_axis(np.arange(1, length + 1, dtype=float), dimension)


def alternating(length: int, dimension: int = 1) -> np.ndarray:
    """lambda_i = (-1)^i i e_1"""
    index = np.arange(1, length + 1, dtype=float)
    return _along_first_axis(np.where(index % 2 == 0, index, -index), dimension)


def seeded_random_walk(length: int, dimension: int = 1, seed: Optional[int] = None) -> np.ndarray:
    """Walk with steps in {0, 1, 2} along e_1 and {-1, 0, 1} along the other axes."""
    seed = frames_setting('SEED', seed)
    rng = trial_generator(seed, WALK_STREAM)
    steps = rng.integers(-1, 2, size=(length, dimension)).astype(float)
    steps[:, 0] += 1
    return np.cumsum(steps, axis=0)


def load_points(path: Union[str, Path]) -> np.ndarray:
    """Points from a JSON array of coordinate arrays."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as error:
        raise ParameterError(f"Cannot read points from {path}: {error}") from error
    except json.JSONDecodeError as error:
        raise ParameterError(f"Points file {path} is not valid JSON: {error}") from error
    return PointFamily.from_json(data).points


def lambda_sequence(source: str, dimension: int = 1, length: Optional[int] = None,
                    seed: Optional[int] = None) -> np.ndarray:
    """
    @atomic-function
    Translation points from a built-in generator name or a JSON file path

    Args:
        source: 'linear', 'alternating', 'seeded-random-walk' or a file path
        dimension: d of the built-in sequences
        length: number of built-in points (default LAMBDA_LENGTH)
        seed: seed of the random walk

    Returns:
        np.ndarray: (length, d) points in index order
    """
    length = frames_setting('LAMBDA_LENGTH', length)
    if dimension < 1:
        raise ParameterError("Dimension must be positive")
    if source == LINEAR:
        return linear(length, dimension)
    if source == ALTERNATING:
        return alternating(length, dimension)
    if source == RANDOM_WALK:
        return seeded_random_walk(length, dimension, seed)
    if not Path(source).exists():
        raise ParameterError(f"Unknown lambda source {source!r}: expected one of {', '.join(BUILTINS)} or a file")
    points = load_points(source)
    if len(points) and points.shape[1] != dimension:
        raise ParameterError(f"Points file has dimension {points.shape[1]}, expected {dimension}")
    return points
