from selgen.harness import train_stage

from ._base import StageCommand


class Command(StageCommand):
    help = 'Train a checkpoint on the labeled training split.'
    stage = staticmethod(train_stage)
