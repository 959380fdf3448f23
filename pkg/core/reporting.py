"""
Verification reports and their canonical file forms.

JSON output uses sorted keys and 17 significant digits for every float so
that two runs with the same config and seed produce identical bytes.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

PASS = 'pass'
FAIL = 'fail'
INFO = 'info'
STATUSES = (PASS, FAIL, INFO)

STRICT = 'strict'
SURROGATE = 'surrogate'


@dataclass
class CheckEntry:
    """
    @atomic-model
    One inequality or identity check with its measured side, bound and margin

    An entry without a provenance takes the one of the report it is added to.
    """
    name: str
    status: str
    measured: Any = None
    bound: Any = None
    margin: Any = None
    provenance: Optional[str] = None
    witness: Dict[str, Any] = field(default_factory=dict)
    detail: str = ''

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"Unknown check status {self.status!r}")
        if self.provenance not in (None, STRICT, SURROGATE):
            raise ValueError(f"Unknown provenance {self.provenance!r}")

    @classmethod
    def inequality(cls, name, measured, bound, provenance=None, witness=None, detail='', slack=0.0):
        """Pass iff measured <= bound + slack; the margin is bound - measured."""
        measured = float(measured)
        bound = float(bound)
        status = PASS if measured <= bound + slack else FAIL
        return cls(
            name=name,
            status=status,
            measured=measured,
            bound=bound,
            margin=bound - measured,
            provenance=provenance,
            witness=witness or {},
            detail=detail,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'status': self.status,
            'measured': self.measured,
            'bound': self.bound,
            'margin': self.margin,
            'provenance': self.provenance,
            'witness': self.witness,
            'detail': self.detail,
        }


@dataclass
class Table:
    columns: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)


@dataclass
class VerificationReport:
    """
    @atomic-model
    Ordered check entries plus the config and environment that produced them
    """
    subcommand: str
    provenance: str = STRICT
    config: Dict[str, Any] = field(default_factory=dict)
    entries: List[CheckEntry] = field(default_factory=list)
    tables: Dict[str, Table] = field(default_factory=dict)
    environment: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, Any] = field(default_factory=dict)

    def add(self, entry: CheckEntry) -> CheckEntry:
        if entry.provenance is None:
            entry.provenance = self.provenance
        self.entries.append(entry)
        return entry

    def extend(self, entries: Sequence[CheckEntry]) -> None:
        for entry in entries:
            self.add(entry)

    def entry(self, name: str) -> Optional[CheckEntry]:
        for item in self.entries:
            if item.name == name:
                return item
        return None

    @property
    def failures(self) -> List[CheckEntry]:
        return [item for item in self.entries if item.status == FAIL]

    @property
    def passed(self) -> bool:
        # Info entries never affect the status
        return not self.failures

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand,
            'status': PASS if self.passed else FAIL,
            'config': self.config,
            'environment': self.environment,
            'checks': [item.to_dict() for item in self.entries],
            'tables': sorted(self.tables),
            'artifacts': self.artifacts,
        }


def format_float(value: float) -> str:
    if math.isnan(value):
        return 'NaN'
    if math.isinf(value):
        return 'Infinity' if value > 0 else '-Infinity'
    return format(value, '.17g')


def _plain(value: Any) -> Any:
    """Turn numpy scalars and arrays into builtin Python values."""
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, tuple):
        return [_plain(item) for item in value]
    return value


def _encode(value: Any) -> str:
    value = _plain(value)
    if value is None:
        return 'null'
    if value is True:
        return 'true'
    if value is False:
        return 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        items = sorted((str(key), item) for key, item in value.items())
        return '{' + ','.join(f'{json.dumps(key)}:{_encode(item)}' for key, item in items) + '}'
    if isinstance(value, (list, set, frozenset)):
        return '[' + ','.join(_encode(item) for item in value) + ']'
    raise TypeError(f"Cannot encode {type(value).__name__} in a report")


def canonical_json(value: Any) -> str:
    """
    @atomic-function
    Canonical JSON text: sorted keys, no whitespace, floats at 17 significant digits

    Args:
        value: nested dicts/lists of builtin or numpy values

    Returns:
        str: JSON document terminated by a newline
    """
    return _encode(value) + '\n'


def table_csv(table: Table) -> str:
    """
    @atomic-function
    Render a table as CSV with a header row and LF line endings
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([
            format_float(item) if isinstance(item, float) else item
            for item in (_plain(cell) for cell in row)
        ])
    return buffer.getvalue()
