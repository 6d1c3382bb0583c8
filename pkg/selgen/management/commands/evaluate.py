from selgen.harness import evaluate_stage

from ._base import StageCommand


class Command(StageCommand):
    help = 'Score predictions and write report.json.'
    stage = staticmethod(evaluate_stage)
