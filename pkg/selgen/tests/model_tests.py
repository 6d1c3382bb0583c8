from django.contrib.auth.models import User
from django.test import TestCase

from selgen.models import ExperimentRun


class ExperimentRunModelTest(TestCase):
    def create(self, run_dir, **kwargs):
        return ExperimentRun.objects.create(
            name='squad', mode='joint', config_hash='0123456789ab',
            run_dir=run_dir, **kwargs)

    def test_str(self):
        run = self.create('runs/a')
        self.assertEqual(str(run), 'squad joint [running]')

    def test_defaults(self):
        run = ExperimentRun.objects.get(id=self.create('runs/a').id)
        self.assertEqual(run.kind, ExperimentRun.PIPELINE)
        self.assertEqual(run.status, ExperimentRun.RUNNING)
        self.assertEqual(run.config, {})
        self.assertIsNone(run.bleu4)

    def test_latest_is_last_modified(self):
        first = self.create('runs/a')
        self.create('runs/b')
        first.status = ExperimentRun.FINISHED
        first.save()
        self.assertEqual(ExperimentRun.objects.latest().run_dir, 'runs/a')


class ExperimentRunAdminTest(TestCase):
    def setUp(self):
        User.objects.create_superuser('admin', 'admin@example.com', 'secret')
        self.client.login(username='admin', password='secret')
        ExperimentRun.objects.create(
            name='squad', mode='two_step', config_hash='0123456789ab',
            run_dir='runs/a', bleu4=0.25)

    def test_changelist(self):
        response = self.client.get('/admin/selgen/experimentrun/')
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, 'squad')
