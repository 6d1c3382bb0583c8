from selgen.harness import sweep_top_k

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'One pipeline run per selector top-k; writes a CSV table.'

    def run(self, config, options):
        table = sweep_top_k(config)
        self.stdout.write('%d row(s), %d error(s)' % (
            len(table.rows), len(table.errors)))
