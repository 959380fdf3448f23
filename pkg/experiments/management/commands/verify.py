from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Check reconstruction, frame constants, projection and summability diagnostics of a frame bundle'
    subcommand = 'verify'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--frame', help='frame bundle written by construct')
        parser.add_argument('--r-lower', dest='r_lower', type=float, help="lower bound for min |f_i'(f_i)|")

    def overrides(self, options):
        return {**super().overrides(options), 'frame': options.get('frame'), 'r_lower': options.get('r_lower')}
