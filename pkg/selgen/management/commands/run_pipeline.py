from selgen.harness import run_pipeline

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run prepare, label, train, generate and evaluate end to end.'

    def run(self, config, options):
        report = run_pipeline(config)
        self.stdout.write('bleu4=%.4f rouge_l=%.4f meteor_lite=%.4f (n=%d)' % (
            report.bleu4, report.rouge_l, report.meteor_lite,
            report.n_examples))
