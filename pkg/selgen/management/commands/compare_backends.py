from selgen.embedding import BACKEND_KINDS, EmbeddingBackendSpec
from selgen.exceptions import InvalidArgument
from selgen.harness import compare_backends

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compare embedding backends used for relevance labels.'

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--backends', default='bag_mean,model_encoder',
                            help='Comma separated backend kinds.')
        parser.add_argument('--vectors',
                            help='Token table for precomputed_file.')

    def run(self, config, options):
        specs = []
        for kind in options['backends'].split(','):
            kind = kind.strip()
            if kind not in BACKEND_KINDS:
                raise InvalidArgument('unknown backend %r' % kind)
            specs.append(EmbeddingBackendSpec(
                kind=kind, dimension=config.backend.dimension,
                source=options.get('vectors') if (
                    kind == 'precomputed_file') else None,
                seed=config.seed))
        table = compare_backends(config, specs)
        self.stdout.write('%d row(s), %d error(s)' % (
            len(table.rows), len(table.errors)))
