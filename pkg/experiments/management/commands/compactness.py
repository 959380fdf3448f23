from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Tail sums of restricted translates and the finite-rank error of the restriction operator'
    subcommand = 'compactness'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--count', type=int, help='number of translates')
        parser.add_argument('--width', type=float, help='side of the generator cube [0, width)^d')

    def overrides(self, options):
        return {**super().overrides(options), 'count': options.get('count'), 'width': options.get('width')}
