from django.core.management.base import BaseCommand, CommandError

from selgen.embedding import BACKEND_KINDS
from selgen.exceptions import InvalidArgument, SelgenError
from selgen.harness import load_experiment_config
from selgen.training import MODES


def parse_k_list(value):
    try:
        return [int(k) for k in value.split(',') if k.strip()]
    except ValueError:
        raise InvalidArgument('--k-list expects comma separated integers')


class ExperimentCommand(BaseCommand):
    """Shared flags; subclasses implement ``run(config, options)``."""

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON experiment config.')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--mode', choices=MODES)
        parser.add_argument('--k', type=int, help='Selector top-k.')
        parser.add_argument('--k-list', dest='k_list',
                            help='Comma separated k values for sweeps.')
        parser.add_argument('--lambda', dest='lam', type=float,
                            help='Selection loss weight.')
        parser.add_argument('--beam', type=int, help='Beam size (1-5).')
        parser.add_argument('--backend', choices=BACKEND_KINDS)
        parser.add_argument('--out', help='Output directory.')

    def get_config(self, options):
        overrides = dict((name, options.get(name)) for name in (
            'seed', 'mode', 'k', 'lam', 'beam', 'backend', 'out'))
        if options.get('k_list'):
            overrides['k_list'] = parse_k_list(options['k_list'])
        return load_experiment_config(options.get('config'), overrides)

    def handle(self, *args, **options):
        try:
            self.run(self.get_config(options), options)
        except (SelgenError, IOError) as e:
            raise CommandError(str(e))

    def run(self, config, options):
        raise NotImplementedError


class StageCommand(ExperimentCommand):
    """Runs one pipeline stage over ``--run-dir``."""
    stage = None

    def add_arguments(self, parser):
        super(StageCommand, self).add_arguments(parser)
        parser.add_argument('--run-dir', required=True,
                            help='Run directory shared by the stages.')

    def run(self, config, options):
        self.stage(config, options['run_dir'])
        self.stdout.write('%s done: %s' % (
            self.stage.__name__, options['run_dir']))
