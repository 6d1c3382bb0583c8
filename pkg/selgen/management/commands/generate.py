from selgen.harness import generate_stage

from ._base import StageCommand


class Command(StageCommand):
    help = 'Decode questions for the evaluation split.'
    stage = staticmethod(generate_stage)
