from selgen.harness import label_stage

from ._base import StageCommand


class Command(StageCommand):
    help = 'Write top-k relevance labels for every split.'
    stage = staticmethod(label_stage)
