from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Partition a point family into uniformly separated classes'
    subcommand = 'partition'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--points', help='JSON array of coordinate arrays')
        parser.add_argument('--t', type=float, help='separation threshold')

    def overrides(self, options):
        return {**super().overrides(options), 'points': options.get('points'), 't': options.get('t')}
