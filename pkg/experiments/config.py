"""
Experiment configuration of the management commands.

A JSON file given with --config supplies values; explicit flags override
them. Keys are the field names below, with '-' accepted for '_' and
'lambda' accepted for 'lambda_source'.
"""
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from core.conf import frames_setting
from core.exceptions import ParameterError
from .models import SUBCOMMANDS

MODES = ('strict', 'demo')

# Fields that only locate output files; they never enter a report
OUTPUT_FIELDS = ('out', 'bundle')

ALIASES = {'lambda': 'lambda_source'}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    @atomic-model
    Parameters of one pipeline run
    """
    subcommand: str
    p: float = 4.0
    d: int = 1
    levels: int = 2
    mode: str = 'demo'
    ku_bound: Optional[float] = None
    lambda_source: str = 'linear'
    lambda_length: Optional[int] = None
    grid_h: Optional[float] = None
    box: Optional[Tuple[Tuple[float, float], ...]] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    bundle: Optional[str] = None
    frame: Optional[str] = None
    points: Optional[str] = None
    t: Optional[float] = None
    count: int = 20
    width: float = 1.0
    r_lower: float = 0.0

    def __post_init__(self):
        if self.box is not None:
            object.__setattr__(self, 'box', tuple((float(lo), float(hi)) for lo, hi in self.box))

    @classmethod
    def from_sources(cls, subcommand: str, path: Optional[str] = None, **overrides) -> 'ExperimentConfig':
        """
        @atomic-function
        Merge a JSON config file with flag overrides

        Args:
            subcommand: pipeline name
            path: optional JSON config file
            overrides: flag values; None means "not given"

        Returns:
            ExperimentConfig: validated config

        Raises:
            ParameterError: unreadable file, unknown key or invalid value
        """
        values: Dict[str, Any] = {}
        if path:
            values.update(_read_config(path))
        values.update({key: value for key, value in overrides.items() if value is not None})
        values = {ALIASES.get(key.replace('-', '_'), key.replace('-', '_')): value for key, value in values.items()}
        known = {item.name for item in fields(cls)} - {'subcommand'}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ParameterError(f"Unknown config keys: {', '.join(unknown)}")
        try:
            config = cls(subcommand, **values)
            config.validate()
        except (TypeError, ValueError) as error:
            raise ParameterError(f"Invalid config: {error}") from error
        return config

    def validate(self) -> None:
        """
        Raises:
            ParameterError: the first violated constraint
        """
        if self.subcommand not in SUBCOMMANDS:
            raise ParameterError(f"Unknown subcommand {self.subcommand!r}")
        if not self.p >= 1 or math.isinf(self.p):
            raise ParameterError(f"p must be finite and at least 1, got {self.p}")
        if self.subcommand != 'verify' and not self.p > 1:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if self.subcommand == 'construct' and not self.p > 2:
            raise ParameterError(f"The construction needs p > 2, got p={self.p}")
        if self.mode not in MODES:
            raise ParameterError(f"Mode must be one of {', '.join(MODES)}")
        if self.subcommand == 'construct' and self.mode == 'strict' and self.ku_bound is None:
            raise ParameterError("Strict mode needs an explicit --ku-bound")
        if self.ku_bound is not None and not self.ku_bound > 0:
            raise ParameterError("The K_u bound must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError("Dimension must be a positive integer")
        if int(self.levels) != self.levels or self.levels < 1:
            raise ParameterError("Levels must be a positive integer")
        if self.grid_h is not None:
            if not self.grid_h > 0 or not math.log2(self.grid_h).is_integer():
                raise ParameterError(f"Grid width must be a power of two, got {self.grid_h}")
        if self.tol is not None and not self.tol > 0:
            raise ParameterError("Tolerance must be positive")
        if self.trials is not None and self.trials < 1:
            raise ParameterError("Trials must be positive")
        if self.box is not None and len(self.box) != self.d:
            raise ParameterError(f"Box needs {self.d} intervals")
        if self.count < 1 or not self.width > 0:
            raise ParameterError("Compactness needs a positive count and width")
        if self.subcommand == 'partition':
            if not self.points:
                raise ParameterError("Partition needs --points")
            if self.t is None or not self.t > 0:
                raise ParameterError("Partition needs a positive --t")
        if self.subcommand == 'verify' and not self.frame:
            raise ParameterError("Verify needs a --frame bundle")

    def resolved(self) -> 'ExperimentConfig':
        """Copy with the library defaults filled in, so reports echo the values actually used."""
        return replace(
            self,
            seed=frames_setting('SEED', self.seed),
            trials=frames_setting('TRIALS', self.trials),
            tol=frames_setting('TOL', self.tol),
            grid_h=frames_setting('DEMO_GRID_H', self.grid_h),
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for name in OUTPUT_FIELDS:
            data.pop(name)
        return data


def _read_config(path: str) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as error:
        raise ParameterError(f"Cannot read config {path}: {error}") from error
    except json.JSONDecodeError as error:
        raise ParameterError(f"Config {path} is not valid JSON: {error}") from error
    if not isinstance(data, dict):
        raise ParameterError(f"Config {path} must hold a JSON object")
    return data


def parse_box(intervals) -> Optional[Tuple[Tuple[float, float], ...]]:
    """Intervals given as 'lo,hi' strings, one per axis."""
    if not intervals:
        return None
    box = []
    for interval in intervals:
        try:
            lo, hi = (float(part) for part in interval.split(','))
        except ValueError as error:
            raise ParameterError(f"Box interval {interval!r} must read 'lo,hi'") from error
        box.append((lo, hi))
    return tuple(box)
