from selgen.harness import prepare_stage

from ._base import StageCommand


class Command(StageCommand):
    help = 'Load, split and index a SQuAD file into a run directory.'
    stage = staticmethod(prepare_stage)
