from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Estimate K and K_u of a frame bundle, or K_u of the Haar basis when no bundle is given'
    subcommand = 'constants'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--frame', help='frame bundle written by construct')

    def overrides(self, options):
        return {**super().overrides(options), 'frame': options.get('frame')}
