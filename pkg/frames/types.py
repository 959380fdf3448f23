"""
Finite frames and approximate frames of L_p functions.

All linear algebra happens on the working span W of the frame's functions:
an orthonormal (in cell l_2) basis U of the span, stored over the union of
the functions' cells. The frame operator S maps into span{f_i}, so it
restricts to W and is represented there by the square matrix U^* S U.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import orth

from core.exceptions import ParameterError, SpecMismatchError
from core.reporting import STRICT, SURROGATE
from lp_grid.services import stack_functions
from lp_grid.types import Exponents, FunctionStack, GridFunction, GridSpec


@dataclass(frozen=True, eq=False)
class WorkingSpace:
    """
    @atomic-model
    Orthonormal coordinates of the span of finitely many grid functions
    """
    stack: FunctionStack
    basis: np.ndarray

    @classmethod
    def from_functions(cls, functions: Sequence[GridFunction]) -> 'WorkingSpace':
        stack = stack_functions(functions)
        basis = orth(stack.matrix.T) if stack.matrix.size else np.zeros((0, 0))
        return cls(stack, basis)

    @property
    def spec(self) -> GridSpec:
        return self.stack.spec

    @property
    def keys(self) -> np.ndarray:
        return self.stack.keys

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def align(self, f: GridFunction) -> np.ndarray:
        return self.stack.align(f)

    def coordinates(self, vector: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ vector

    def embed(self, coordinates: np.ndarray) -> np.ndarray:
        return self.basis @ coordinates

    def function(self, coordinates: np.ndarray, exponent: Optional[float] = None) -> GridFunction:
        return GridFunction.from_keys(self.spec, self.keys, self.embed(coordinates), exponent)

    def functional(self, coordinates: np.ndarray, exponent: Optional[float] = None) -> GridFunction:
        """Representative on W's cells of the functional U x -> coordinates . x"""
        values = self.basis.conj() @ coordinates / self.spec.cell_measure
        return GridFunction.from_keys(self.spec, self.keys, values, exponent)

    def cell_norms(self, vectors: np.ndarray, p: float) -> np.ndarray:
        """L_p norms of cell vectors given as rows."""
        magnitudes = np.abs(np.atleast_2d(vectors))
        if magnitudes.shape[1] == 0:
            return np.zeros(len(magnitudes))
        if np.isinf(p):
            return magnitudes.max(axis=1)
        return ((magnitudes ** p).sum(axis=1) * self.spec.cell_measure) ** (1.0 / p)

    def norms(self, coordinates: np.ndarray, p: float) -> np.ndarray:
        """L_p norms of elements of W given by coordinate rows."""
        return self.cell_norms(np.atleast_2d(coordinates) @ self.basis.T, p)

    def in_span(self, f: GridFunction, tol: float = 1e-9) -> bool:
        if f.spec != self.spec:
            return False
        total = np.linalg.norm(f.values)
        if total == 0:
            return True
        vector = self.align(f)
        # Mass on cells outside W is lost by the alignment
        if np.linalg.norm(vector) < total * (1 - tol):
            return False
        residual = vector - self.embed(self.coordinates(vector))
        return bool(np.linalg.norm(residual) <= tol * total)


@dataclass(frozen=True, eq=False)
class FramePair:
    """
    @atomic-model
    Paired sequences {f_i, f_i'} on one grid with their exponent context

    translate_count marks how many leading pairs are translates of a
    generator; the remaining pairs complete a truncated construction.
    provenance says whether the constants behind the frame were strict or
    surrogate values.
    """
    exponents: Exponents
    functions: Tuple[GridFunction, ...]
    functionals: Tuple[GridFunction, ...]
    translate_count: Optional[int] = None
    unconditional_claimed: bool = False
    labels: Dict[str, Any] = field(default_factory=dict)
    provenance: str = STRICT

    def __post_init__(self):
        functions = tuple(self.functions)
        functionals = tuple(self.functionals)
        if not functions:
            raise ParameterError("A frame needs at least one pair")
        if len(functions) != len(functionals):
            raise ParameterError("Function and functional counts differ")
        spec = functions[0].spec
        if any(f.spec != spec for f in functions + functionals):
            raise SpecMismatchError("Frame elements live on different grids")
        if self.translate_count is not None and not 0 <= self.translate_count <= len(functions):
            raise ParameterError("Translate count exceeds the frame size")
        if self.provenance not in (STRICT, SURROGATE):
            raise ParameterError(f"Unknown provenance {self.provenance!r}")
        object.__setattr__(self, 'functions', functions)
        object.__setattr__(self, 'functionals', functionals)

    @property
    def spec(self) -> GridSpec:
        return self.functions[0].spec

    @property
    def n(self) -> int:
        return len(self.functions)

    @property
    def p(self) -> float:
        return self.exponents.p

    @cached_property
    def function_stack(self) -> FunctionStack:
        return self.working_space.stack

    @cached_property
    def working_space(self) -> WorkingSpace:
        return WorkingSpace.from_functions(self.functions)

    @cached_property
    def functional_matrix(self) -> np.ndarray:
        """Functionals aligned to the working-span cells, one per row."""
        return stack_functions(self.functionals, keys=self.working_space.keys).matrix

    def analysis_matrix(self) -> np.ndarray:
        """(f_i'(U e_j))_ij: analysis of the working-span basis vectors."""
        space = self.working_space
        return self.functional_matrix @ space.basis * space.spec.cell_measure

    def synthesis_matrix(self) -> np.ndarray:
        """Columns are the working-span coordinates of f_i."""
        return self.working_space.coordinates(self.function_stack.matrix.T)

    def operator_matrix(self) -> np.ndarray:
        """U^* S U, the frame operator on W."""
        return self.synthesis_matrix() @ self.analysis_matrix()

    def pairing_matrix(self) -> np.ndarray:
        """(f_i'(f_j))_ij"""
        return self.functional_matrix @ self.function_stack.matrix.T * self.spec.cell_measure

    def with_functionals(self, functionals: Sequence[GridFunction], **labels) -> 'FramePair':
        return FramePair(
            self.exponents,
            self.functions,
            tuple(functionals),
            self.translate_count,
            self.unconditional_claimed,
            {**self.labels, **labels},
            self.provenance,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'exponents': self.exponents.to_dict(),
            'spec': self.spec.to_dict(),
            'translate_count': self.translate_count,
            'unconditional_claimed': self.unconditional_claimed,
            'provenance': self.provenance,
            'functions': [_strip(f.to_dict()) for f in self.functions],
            'functionals': [_strip(f.to_dict()) for f in self.functionals],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FramePair':
        spec = GridSpec.from_dict(data['spec'])
        return cls(
            Exponents(data['exponents']['p']),
            tuple(GridFunction.from_dict(item, spec) for item in data['functions']),
            tuple(GridFunction.from_dict(item, spec) for item in data['functionals']),
            data.get('translate_count'),
            bool(data.get('unconditional_claimed', False)),
            provenance=data.get('provenance', STRICT),
        )


def _strip(data: Dict[str, Any]) -> Dict[str, Any]:
    # The bundle stores the grid once
    data.pop('spec', None)
    return data


@dataclass(frozen=True)
class FrameConstants:
    """
    @atomic-model
    Sampled frame constant K and unconditional frame constant K_u
    """
    K: float
    K_u: float
    mode: str
    trials: int
    seed: int
    witness: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.K <= self.K_u:
            raise ParameterError(f"Frame constants violate 1 <= K <= K_u: K={self.K}, K_u={self.K_u}")


@dataclass(frozen=True, eq=False)
class SeminormalizationAuxiliary:
    """
    @atomic-model
    Auxiliary functionals g_i' with the constants of the perturbation G_i' = f_i' + b_i g_i'
    """
    functionals: Tuple[GridFunction, ...]
    K1: float
    delta0: float
    coefficients: np.ndarray
    threshold: float
    K1_argmax: int = -1
    perturbation: float = 0.0
    m0: Optional[float] = None
    measurements: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=float)
        if len(coefficients) != len(self.functionals):
            raise ParameterError("One perturbation coefficient per auxiliary functional")
        if not 0 < self.delta0 < 1:
            raise ParameterError("delta0 must lie in (0, 1)")
        if not np.all((coefficients == 0) | np.isclose(coefficients, 1.0 / self.K1, rtol=1e-15, atol=0)):
            raise ParameterError("Perturbation coefficients must be 0 or 1/K1")
        coefficients.setflags(write=False)
        object.__setattr__(self, 'functionals', tuple(self.functionals))
        object.__setattr__(self, 'coefficients', coefficients)
