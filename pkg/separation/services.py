import logging
import math
from typing import Union

import networkx as nx
import numpy as np
from scipy.spatial.distance import pdist, squareform

from core.exceptions import ParameterError
from .types import PointFamily, SeparationPartition

logger = logging.getLogger(__name__)

Points = Union[PointFamily, np.ndarray, list]


def _family(points: Points) -> PointFamily:
    return points if isinstance(points, PointFamily) else PointFamily(points)


def min_pairwise_distance(points: Points) -> float:
    """
    @atomic-function
    Smallest Euclidean distance between two distinct indices

    Args:
        points: indexed family of points

    Returns:
        float: min |x_i - x_j| over i != j, inf for families of size <= 1
    """
    family = _family(points)
    if len(family) <= 1:
        return math.inf
    return float(pdist(family.points).min())


def is_uniformly_separated(points: Points, delta: float) -> bool:
    """Definition check: every pair of indices is at distance >= delta."""
    return min_pairwise_distance(points) >= delta


def conflict_graph(points: Points, threshold: float) -> nx.Graph:
    """Indices as nodes, one edge per pair closer than threshold."""
    family = _family(points)
    graph = nx.Graph()
    graph.add_nodes_from(range(len(family)))
    if len(family) > 1:
        close = squareform(pdist(family.points)) < threshold
        rows, cols = np.nonzero(np.triu(close, k=1))
        graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return graph


def _index_order(graph, colors):
    return sorted(graph)


def partition_uniformly_separated(points: Points, threshold: float) -> SeparationPartition:
    """
    @atomic-function
    Greedy first-fit partition into classes separated at the threshold

    Indices are visited in order; each joins the lowest-numbered class whose
    members are all at distance >= threshold, or opens a new class.

    Args:
        points: indexed family
        threshold: t > 0; distances equal to t count as separated

    Returns:
        SeparationPartition: classes as sorted tuples of 0-based indices
    """
    if not threshold > 0:
        raise ParameterError("Separation threshold must be positive")
    family = _family(points)
    colors = nx.greedy_color(conflict_graph(family, threshold), strategy=_index_order)
    classes = {}
    for index in range(len(family)):
        classes.setdefault(colors[index], []).append(index)
    partition = SeparationPartition(
        float(threshold),
        tuple(tuple(classes[label]) for label in sorted(classes)),
    )
    logger.debug("Partitioned %d points into %d classes at t=%s", len(family), partition.class_count, threshold)
    return partition


def refine_partition(points: Points, partition: SeparationPartition, threshold: float) -> SeparationPartition:
    """
    @atomic-function
    Partition every class again at a larger threshold

    Returns:
        SeparationPartition: classes of the refinement in original indices
    """
    if threshold < partition.threshold:
        raise ParameterError("Refinement threshold must not decrease")
    family = _family(points)
    refined = []
    for members in partition.classes:
        inner = partition_uniformly_separated(family.points[list(members)], threshold)
        refined.extend(tuple(members[i] for i in subclass) for subclass in inner.classes)
    return SeparationPartition(float(threshold), tuple(refined))
