from dataclasses import dataclass, field
from typing import Optional, Tuple

from core.exceptions import ParameterError
from lp_grid.types import Exponents, GridFunction, GridSpec


@dataclass(frozen=True, eq=False)
class BasisElement:
    """
    @atomic-model
    One normalized Haar element h_i with its coordinate functional h_i'
    """
    index: int
    function: GridFunction
    dual: GridFunction
    diameter: float
    level: int = 0
    pattern: int = 0


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """
    @atomic-model
    Ordered Haar elements with the sampled and the user-supplied unconditional constants
    """
    spec: GridSpec
    exponents: Exponents
    elements: Tuple[BasisElement, ...]
    block_side: float = 1.0
    ku_lower: Optional[float] = None
    ku_upper: Optional[float] = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'elements', tuple(self.elements))
        if not self.elements:
            raise ParameterError("A basis system needs at least one element")
        if self.ku_lower is not None and self.ku_lower < 1:
            raise ParameterError("Sampled unconditional constant is below 1")
        if self.ku_lower is not None and self.ku_upper is not None and self.ku_lower > self.ku_upper:
            raise ParameterError(
                f"Sampled constant {self.ku_lower} exceeds the supplied bound {self.ku_upper}"
            )

    def __len__(self):
        return len(self.elements)

    @property
    def functions(self) -> Tuple[GridFunction, ...]:
        return tuple(element.function for element in self.elements)

    @property
    def duals(self) -> Tuple[GridFunction, ...]:
        return tuple(element.dual for element in self.elements)
