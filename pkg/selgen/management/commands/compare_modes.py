from selgen.harness import compare_modes

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compare training modes under the same seed and data.'

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--modes', default='joint,two_step',
                            help='Comma separated modes, first is the base.')

    def run(self, config, options):
        modes = [m.strip() for m in options['modes'].split(',') if m.strip()]
        table = compare_modes(config, modes)
        for row in table.rows + table.deltas:
            self.stdout.write('%(mode)s bleu4=%(bleu4).4f '
                              'meteor_lite=%(meteor_lite).4f '
                              'rouge_l=%(rouge_l).4f' % row)
