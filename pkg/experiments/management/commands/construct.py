from ._base import PipelineCommand


class Command(PipelineCommand):
    help = 'Build a seminormalized unconditional frame of translates and verify every inequality of the construction'
    subcommand = 'construct'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--bundle', help='write the final frame as a JSON bundle')

    def overrides(self, options):
        return {**super().overrides(options), 'bundle': options.get('bundle')}
