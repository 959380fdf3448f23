from django.core.management.base import BaseCommand, CommandError

from core.exceptions import FrameError, ParameterError
from experiments.config import ExperimentConfig, parse_box
from experiments.services import emit_report, record_run, run

# Exit status of invalid parameters, matching argparse usage errors
USAGE_STATUS = 2


class PipelineCommand(BaseCommand):
    """
    Shared flags and the run / emit / record sequence of every pipeline command
    """
    subcommand = ''

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON config file; flags override its values')
        parser.add_argument('--p', type=float, help='exponent p')
        parser.add_argument('--d', type=int, help='dimension of R^d')
        parser.add_argument('--levels', type=int, help='number of blocks K or basis elements n')
        parser.add_argument('--mode', choices=('strict', 'demo'))
        parser.add_argument('--ku-bound', dest='ku_bound', type=float,
                            help='K_u upper bound (strict) or surrogate (demo)')
        parser.add_argument('--lambda', dest='lambda_source', help='built-in sequence name or JSON points file')
        parser.add_argument('--grid-h', dest='grid_h', type=float, help='cell width, a power of two')
        parser.add_argument('--box', action='append', help="one 'lo,hi' interval per axis")
        parser.add_argument('--seed', type=int)
        parser.add_argument('--trials', type=int)
        parser.add_argument('--tol', type=float)
        parser.add_argument('--out', help='JSON report path; CSV tables are written next to it')
        self.add_pipeline_arguments(parser)

    def add_pipeline_arguments(self, parser):
        pass

    def overrides(self, options):
        names = ('p', 'd', 'levels', 'mode', 'ku_bound', 'lambda_source', 'grid_h', 'seed', 'trials', 'tol', 'out')
        values = {name: options.get(name) for name in names}
        values['box'] = parse_box(options.get('box'))
        return values

    def handle(self, *args, **options):
        try:
            config = ExperimentConfig.from_sources(
                self.subcommand, options.get('config'), **self.overrides(options),
            )
            report = run(config)
        except ParameterError as error:
            raise CommandError(str(error), returncode=USAGE_STATUS) from error

        try:
            written = emit_report(report, config.out)
        except FrameError as error:
            raise CommandError(str(error), returncode=1) from error
        record_run(report)

        for path in written:
            self.stdout.write(f"wrote {path}")
        failures = report.failures
        if failures:
            names = ', '.join(entry.name for entry in failures)
            raise CommandError(f"{len(failures)} check(s) failed: {names}", returncode=1)
        self.stdout.write(self.style.SUCCESS(f"{self.subcommand}: {len(report.entries)} checks, all passed"))
