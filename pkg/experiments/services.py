import hashlib
import json
import logging
import math
import platform
from pathlib import Path
from typing import Callable, Dict, List, Optional

import django
import networkx
import numpy as np
import scipy
from django.conf import settings

from construction.lambdas import lambda_sequence, load_points
from construction.services import STRICT_MODE, construct_frame, default_ku_bound
from construction.types import TranslateSystem
from core.conf import frames_setting
from core.exceptions import FrameError, ParameterError
from core.reporting import (
    FAIL,
    INFO,
    PASS,
    STRICT,
    SURROGATE,
    CheckEntry,
    Table,
    VerificationReport,
    canonical_json,
    table_csv,
)
from diagnostics.services import (
    orlicz_entries,
    orlicz_sums,
    restriction_tail_profile,
    synthesis_norm_estimate,
    translate_frame_scenario_check,
)
from frames.services import frame_constants, held_out_check, reconstruction_residual
from frames.types import FramePair
from haar_basis.services import haar_system, pairing_matrix, unconditional_constant_estimate
from lp_grid.services import make_indicator
from lp_grid.sweeps import EXHAUSTIVE, SAMPLED
from lp_grid.types import GridSpec
from separation.services import min_pairwise_distance, partition_uniformly_separated, refine_partition
from .config import ExperimentConfig
from .models import ExperimentRun

logger = logging.getLogger(__name__)

# Default region D = [0, 10)^d of the compactness pipeline
DEFAULT_REGION_SIDE = 10.0

# Cell sums of the Haar pairings are exact up to rounding of the normalizations
BIORTHOGONALITY_TOL = 1e-12


def environment() -> Dict[str, str]:
    """Library versions echoed into every report."""
    return {
        'python': platform.python_version(),
        'django': django.get_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'networkx': networkx.__version__,
    }


def load_bundle(path: str) -> FramePair:
    """
    @atomic-function
    Read a FramePair bundle written by the construct pipeline

    Raises:
        ParameterError: the file is missing or is not a bundle
    """
    try:
        data = json.loads(Path(path).read_text())
        return FramePair.from_dict(data)
    except OSError as error:
        raise ParameterError(f"Cannot read frame bundle {path}: {error}") from error
    except (ValueError, KeyError, TypeError, AttributeError) as error:
        raise ParameterError(f"{path} is not a frame bundle: {error}") from error


def write_bundle(frame: FramePair, path: str) -> None:
    try:
        Path(path).write_text(canonical_json(frame.to_dict()))
    except OSError as error:
        raise FrameError(f"Cannot write frame bundle {path}: {error}", code='io', path=path) from error


def _construct(config: ExperimentConfig, report: VerificationReport) -> None:
    lambdas = lambda_sequence(config.lambda_source, config.d, config.lambda_length, config.seed)
    frame = construct_frame(
        lambdas,
        config.p,
        ku_bound=config.ku_bound,
        levels=config.levels,
        grid_h=config.grid_h,
        tol=config.tol,
        mode=config.mode,
        report=report,
        trials=config.trials,
        seed=config.seed,
        source=config.lambda_source,
        box=config.box,
    )
    report.artifacts['frame'] = {'n': frame.n, 'translate_count': frame.translate_count, 'p': frame.p}
    if config.bundle:
        write_bundle(frame, config.bundle)


def _verify(config: ExperimentConfig, report: VerificationReport) -> None:
    frame = load_bundle(config.frame)
    report.provenance = frame.provenance
    report.artifacts['frame'] = {'n': frame.n, 'translate_count': frame.translate_count, 'p': frame.p}
    residual = reconstruction_residual(frame, config.trials, config.seed)
    report.add(CheckEntry.inequality(
        'frame.reconstruction', residual.value, config.tol,
        witness={'sample': residual.row} if residual.row >= 0 else {},
        detail='relative residual over seeded g in the working span',
    ))
    constants = frame_constants(frame, trials=config.trials, seed=config.seed)
    report.add(CheckEntry.inequality(
        'frame.constants_order', constants.K, constants.K_u, witness=constants.witness,
        detail=f'{constants.mode} sweep',
    ))
    report.add(held_out_check(frame, constants, config.trials, config.seed))
    for r in sorted({frame.p, 2.0}):
        report.add(CheckEntry(
            name=f'diagnostics.synthesis_norm_l{r!r}',
            status=INFO,
            measured=synthesis_norm_estimate(frame, r, config.trials, config.seed),
            detail='sampled lower bound of the least M0',
        ))
    report.extend(orlicz_entries(orlicz_sums(frame.functions, frame.functionals, frame.exponents)))
    report.extend(translate_frame_scenario_check(frame, config.r_lower, config.trials, config.seed))


def _partition(config: ExperimentConfig, report: VerificationReport) -> None:
    points = load_points(config.points)
    partition = partition_uniformly_separated(points, config.t)
    report.artifacts['partition'] = partition.to_dict()
    report.tables['partition'] = Table(
        ('index', 'class'),
        [(i + 1, int(label) + 1) for i, label in enumerate(partition.labels(len(points)))],
    )
    report.add(CheckEntry(
        name='separation.min_distance', status=INFO, measured=min_pairwise_distance(points),
        detail='over the whole family',
    ))
    report.add(CheckEntry(
        name='separation.class_count', status=INFO, measured=partition.class_count,
        detail=f'greedy first fit at t={config.t!r}',
    ))
    report.add(_classes_entry('separation.classes_separated', points, partition.classes, config.t))

    refined = refine_partition(points, partition, 2 * config.t)
    report.artifacts['refinement'] = refined.to_dict()
    report.add(_classes_entry('separation.refinement', points, refined.classes, config.t))


def _classes_entry(name: str, points: np.ndarray, classes, threshold: float) -> CheckEntry:
    distances = [min_pairwise_distance(points[list(members)]) for members in classes]
    smallest = min(distances, default=math.inf)
    worst = int(np.argmin(distances)) if distances else -1
    return CheckEntry(
        name=name,
        status=PASS if smallest >= threshold else FAIL,
        measured=smallest,
        bound=float(threshold),
        margin=smallest - threshold,
        witness={'class': worst + 1, 'indices': [i + 1 for i in classes[worst]]} if smallest < threshold else {},
        detail=f'{len(classes)} classes',
    )


def _constants(config: ExperimentConfig, report: VerificationReport) -> None:
    if config.frame:
        frame = load_bundle(config.frame)
        report.provenance = frame.provenance
        constants = frame_constants(frame, trials=config.trials, seed=config.seed)
        report.add(CheckEntry.inequality(
            'frame.constants_order', constants.K, constants.K_u, witness=constants.witness,
            detail=f'{constants.mode} sweep',
        ))
        report.add(held_out_check(frame, constants, config.trials, config.seed))
        return

    spec = GridSpec.cube(config.d, config.grid_h, -1.0, 1.0)
    system = haar_system(spec, config.p, config.levels)
    deviation = float(np.abs(pairing_matrix(system) - np.eye(len(system))).max())
    report.add(CheckEntry.inequality('haar.biorthogonality', deviation, BIORTHOGONALITY_TOL))
    mode = EXHAUSTIVE if len(system) <= frames_setting('EXHAUSTIVE_LIMIT') else SAMPLED
    estimate = unconditional_constant_estimate(system, mode, config.trials, config.seed)
    bound = default_ku_bound(config.p) if config.ku_bound is None else config.ku_bound
    report.add(CheckEntry.inequality(
        'haar.unconditional_lower', estimate, bound,
        STRICT if config.ku_bound is None or config.mode == STRICT_MODE else SURROGATE,
        detail=f'{mode} sweep over {len(system)} elements',
        slack=frames_setting('SYNTHESIS_SLACK'),
    ))


def _compactness(config: ExperimentConfig, report: VerificationReport) -> None:
    points = lambda_sequence(config.lambda_source, config.d, config.count, config.seed)
    region = config.box or tuple((0.0, DEFAULT_REGION_SIDE) for _ in range(config.d))
    lower = min(0.0, float(points.min()), min(lo for lo, _ in region))
    upper = max(float(points.max()) + config.width, max(hi for _, hi in region))
    spec = GridSpec.cube(config.d, config.grid_h, math.floor(lower) - 1.0, math.ceil(upper) + 1.0)
    generator = make_indicator(spec, tuple((0.0, config.width) for _ in range(config.d)))
    system = TranslateSystem((generator,), points)

    profile = restriction_tail_profile(system, region, config.p, config.trials, config.seed, tol=config.tol)
    report.extend(profile.entries)
    vanishing = np.flatnonzero(profile.tails == 0)
    report.add(CheckEntry(
        name='diagnostics.tail_vanishing', status=INFO,
        measured=int(vanishing[0]) if len(vanishing) else None,
        detail='first n with t_n = 0',
    ))
    report.tables['tails'] = profile.table
    report.artifacts['tails'] = profile.to_dict()


PIPELINES: Dict[str, Callable[[ExperimentConfig, VerificationReport], None]] = {
    'construct': _construct,
    'verify': _verify,
    'partition': _partition,
    'constants': _constants,
    'compactness': _compactness,
}


def run(config: ExperimentConfig) -> VerificationReport:
    """
    @atomic-function
    Execute the named pipeline and collect its report

    A pipeline error is recorded as a failed 'pipeline.error' entry after
    the entries already produced, so the partial report survives.

    Args:
        config: validated experiment config

    Returns:
        VerificationReport

    Raises:
        ParameterError: invalid parameters discovered while running
    """
    config = config.resolved()
    report = VerificationReport(config.subcommand, config=config.to_dict(), environment=environment())
    logger.info("Running the %s pipeline", config.subcommand)
    try:
        PIPELINES[config.subcommand](config, report)
    except ParameterError:
        raise
    except FrameError as error:
        logger.error("The %s pipeline stopped: %s", config.subcommand, error)
        report.add(CheckEntry(
            name='pipeline.error',
            status=FAIL,
            witness={'code': error.code, **error.context},
            detail=str(error),
        ))
    return report


def emit_report(report: VerificationReport, path: Optional[str], tables_dir: Optional[str] = None) -> List[Path]:
    """
    @atomic-function
    Write the canonical JSON report and one CSV file per table

    Tables go next to the report as '<stem>.<table>.csv' unless tables_dir
    is given. Without a path nothing is written.

    Args:
        report: the finished report
        path: JSON report path
        tables_dir: directory for the CSV tables

    Returns:
        list: written paths, report first

    Raises:
        FrameError: a file cannot be written; the message names the path
    """
    if not path:
        return []
    target = Path(path)
    directory = Path(tables_dir) if tables_dir else target.parent
    outputs = [(target, canonical_json(report.to_dict()))]
    outputs.extend(
        (directory / f'{target.stem}.{name}.csv', table_csv(report.tables[name]))
        for name in sorted(report.tables)
    )
    written = []
    for destination, text in outputs:
        try:
            destination.parent.mkdir(parents=True, exist_ok=True)
            with open(destination, 'w', newline='', encoding='utf-8') as handle:
                handle.write(text)
        except OSError as error:
            raise FrameError(f"Cannot write {destination}: {error}", code='io', path=str(destination)) from error
        written.append(destination)
    return written


def report_digest(report: VerificationReport) -> str:
    return hashlib.sha256(canonical_json(report.to_dict()).encode('utf-8')).hexdigest()


def record_run(report: VerificationReport) -> Optional[ExperimentRun]:
    """Persist the run when RECORD_RUNS is on."""
    if not settings.FRAMES['RECORD_RUNS']:
        return None
    return ExperimentRun.objects.create(
        subcommand=report.subcommand,
        config=report.config,
        status=ExperimentRun.STATUS_PASS if report.passed else ExperimentRun.STATUS_FAIL,
        report_digest=report_digest(report),
    )


def recent_runs(limit: int = 10) -> List[ExperimentRun]:
    """
    @atomic-function
    Latest recorded runs, newest first
    """
    return list(ExperimentRun.objects.all()[:limit])
