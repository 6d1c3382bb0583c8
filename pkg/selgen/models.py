from django.db import models
from django_extensions.db.models import TimeStampedModel


class ExperimentRun(TimeStampedModel):
    PIPELINE = 'pipeline'
    SWEEP_K = 'sweep_k'
    COMPARE_MODES = 'compare_modes'
    COMPARE_BACKENDS = 'compare_backends'
    KIND_CHOICES = ((PIPELINE, 'Pipeline'), (SWEEP_K, 'Top-k sweep'),
                    (COMPARE_MODES, 'Mode comparison'),
                    (COMPARE_BACKENDS, 'Backend comparison'))
    RUNNING = 'running'
    FINISHED = 'finished'
    FAILED = 'failed'
    STATUS_CHOICES = ((RUNNING, 'Running'), (FINISHED, 'Finished'),
                      (FAILED, 'Failed'))

    name = models.CharField(max_length=100, help_text='Experiment name.')
    kind = models.CharField(
        max_length=20, choices=KIND_CHOICES, default=PIPELINE,
        help_text='Which command started this run.')
    mode = models.CharField(max_length=20, help_text='Training mode.')
    config = models.JSONField(
        default=dict, help_text='Fully resolved experiment config.')
    config_hash = models.CharField(max_length=12, db_index=True)
    data_hash = models.CharField(
        max_length=64, blank=True,
        help_text='sha256 over the input data files.')
    run_dir = models.CharField(max_length=500, unique=True)
    status = models.CharField(
        max_length=10, choices=STATUS_CHOICES, default=RUNNING)
    failed_stage = models.CharField(
        max_length=20, blank=True,
        help_text='Pipeline stage that raised, for failed runs.')
    bleu4 = models.FloatField(null=True, blank=True)
    rouge_l = models.FloatField(null=True, blank=True)
    meteor_lite = models.FloatField(null=True, blank=True)
    n_examples = models.IntegerField(null=True, blank=True)

    def __str__(self):
        return '%s %s [%s]' % (self.name, self.mode, self.status)
