import io
import json
import os
import tempfile
from unittest import mock

from django.test import TestCase

from selgen import harness
from selgen.embedding import EmbeddingBackendSpec
from selgen.exceptions import (InvalidArgument, NumericError, RunLockedError,
                               StageError)
from selgen.harness import (ExperimentConfig, compare_backends, compare_modes,
                            load_experiment_config, prepare_stage,
                            run_pipeline, sweep_top_k)
from selgen.models import ExperimentRun
from selgen.utils import read_jsonl

from .factories import (OVERLAP_VECTORS, SMALL_SQUAD, experiment_dict,
                        memorization_dict, memorization_payload,
                        write_payload)


def read_json(path):
    with io.open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def read_lines(path):
    with io.open(path, 'r', encoding='utf-8') as f:
        return f.read().splitlines()


def loss_increases(losses, warmup):
    """Epochs past ``warmup`` whose loss rose over the previous epoch."""
    return [i for i in range(max(warmup, 1), len(losses))
            if losses[i] > losses[i - 1] + max(1e-3, 0.05 * losses[i - 1])]


class HarnessTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def config(self, train_path=SMALL_SQUAD, **train):
        return ExperimentConfig.from_dict(
            experiment_dict(train_path, self.out, **train))

    def run_dir(self, name):
        return os.path.join(self.out, name)


class MemorizationTest(HarnessTestCase):
    def test_memorizes_training_questions(self):
        path = write_payload(memorization_payload(), self.out)
        config = ExperimentConfig.from_dict(memorization_dict(path, self.out))
        report = run_pipeline(config, run_dir=self.run_dir('memorized'))
        self.assertGreaterEqual(report.bleu4, 0.9)
        self.assertEqual(report.n_examples, 50)
        history = read_jsonl(
            os.path.join(self.run_dir('memorized'), harness.TRAIN_LOG_FILE))
        self.assertLess(history[-1]['loss_gen'], 0.1)
        losses = [record['loss_gen'] for record in history]
        warmup = len(losses) // 10
        self.assertLessEqual(len(loss_increases(losses, warmup)),
                             0.05 * (len(losses) - warmup))

        untrained = ExperimentConfig.from_dict(
            memorization_dict(path, self.out, epochs=0))
        baseline = run_pipeline(untrained, run_dir=self.run_dir('untrained'))
        for score in baseline.scores().values():
            self.assertTrue(0.0 <= score <= 1.0)
        self.assertLess(baseline.bleu4, report.bleu4)

        record = ExperimentRun.objects.get(run_dir=self.run_dir('memorized'))
        self.assertEqual(record.status, ExperimentRun.FINISHED)
        self.assertEqual(record.bleu4, report.bleu4)
        self.assertEqual(record.config_hash, config.hash())
        self.assertEqual(len(record.data_hash), 64)


class RunPipelineTest(HarnessTestCase):
    def test_artifacts(self):
        run_dir = self.run_dir('run')
        run_pipeline(self.config(), run_dir=run_dir)
        for name in ('vocab.txt', 'train.jsonl', 'dev.jsonl', 'test.jsonl',
                     'labels.train.jsonl', 'data.json', 'config.json',
                     'checkpoint.bin', 'train_log.jsonl', 'predictions.jsonl',
                     'report.json'):
            self.assertTrue(os.path.exists(os.path.join(run_dir, name)), name)
        self.assertFalse(os.path.exists(os.path.join(run_dir, '.lock')))
        report = read_json(os.path.join(run_dir, 'report.json'))
        self.assertEqual(report['n_examples'], 5)
        self.assertEqual(report['mode'], 'joint')
        self.assertTrue(0.0 <= report['selector_f1'] <= 1.0)
        self.assertEqual(report['config_hash'], self.config().hash())

    def test_deterministic(self):
        config = self.config(epochs=2)
        first, second = self.run_dir('first'), self.run_dir('second')
        run_pipeline(config, run_dir=first)
        run_pipeline(config, run_dir=second)
        self.assertEqual(
            read_lines(os.path.join(first, 'predictions.jsonl')),
            read_lines(os.path.join(second, 'predictions.jsonl')))

        def without(records, key):
            return [dict((k, v) for k, v in r.items() if k != key)
                    for r in records]
        self.assertEqual(
            without(read_jsonl(os.path.join(first, 'train_log.jsonl')),
                    'seconds'),
            without(read_jsonl(os.path.join(second, 'train_log.jsonl')),
                    'seconds'))
        self.assertEqual(
            without([read_json(os.path.join(first, 'report.json'))],
                    'created'),
            without([read_json(os.path.join(second, 'report.json'))],
                    'created'))

    def test_aux_qtc(self):
        run_dir = self.run_dir('aux')
        report = run_pipeline(self.config(mode='aux_qtc'), run_dir=run_dir)
        self.assertEqual(report.n_examples, 5)
        written = read_json(os.path.join(run_dir, 'report.json'))
        self.assertEqual(written['mode'], 'aux_qtc')
        self.assertIsNone(written['selector_f1'])

    def test_empty_eval_split_fails_in_generate(self):
        values = experiment_dict(SMALL_SQUAD, self.out)
        values['eval_split'] = 'test'
        run_dir = self.run_dir('empty')
        with self.assertRaises(StageError) as raised:
            run_pipeline(ExperimentConfig.from_dict(values), run_dir=run_dir)
        self.assertEqual(raised.exception.stage, 'generate')
        record = ExperimentRun.objects.get(run_dir=run_dir)
        self.assertEqual(record.status, ExperimentRun.FAILED)
        self.assertEqual(record.failed_stage, 'generate')
        self.assertTrue(
            os.path.exists(os.path.join(run_dir, 'checkpoint.bin')))

    def test_locked_run_dir(self):
        run_dir = self.run_dir('locked')
        os.makedirs(run_dir)
        open(os.path.join(run_dir, '.lock'), 'w').close()
        self.assertRaises(RunLockedError, run_pipeline, self.config(),
                          run_dir=run_dir)
        self.assertFalse(ExperimentRun.objects.exists())

    def test_prepare_stage_alone(self):
        splits = prepare_stage(self.config(), self.run_dir('prepared'))
        self.assertEqual(len(splits['train']), 5)
        data = read_json(os.path.join(self.run_dir('prepared'), 'data.json'))
        self.assertEqual(data['counts'], {'train': 5, 'dev': 0, 'test': 0})


class SweepTest(HarnessTestCase):
    def test_sweep_top_k(self):
        config = self.config()
        table = sweep_top_k(config, [1, 2, 3, 4, 5])
        self.assertEqual([row['k'] for row in table.rows], [1, 2, 3, 4, 5])
        for row in table.rows:
            self.assertEqual(set(row), set(['k', 'bleu4', 'meteor_lite',
                                            'rouge_l']))
        path = os.path.join(self.out, 'sweep_k-%s.csv' % config.hash())
        lines = read_lines(path)
        self.assertEqual(lines[0], 'k,bleu4,meteor_lite,rouge_l')
        self.assertEqual(len(lines), 6)
        self.assertEqual(read_lines(path + '.errors.jsonl'), [])
        self.assertEqual(ExperimentRun.objects.filter(
            kind=ExperimentRun.SWEEP_K).count(), 5)

    def test_single_k(self):
        self.assertEqual(len(sweep_top_k(self.config(), [1]).rows), 1)

    def test_failed_rows_go_to_sidecar(self):
        config = self.config()
        with mock.patch.object(harness, 'train',
                               side_effect=NumericError('boom', step=3)):
            table = sweep_top_k(config, [1, 2])
        self.assertEqual(table.rows, [])
        self.assertEqual([e['stage'] for e in table.errors],
                         ['train', 'train'])
        path = os.path.join(self.out, 'sweep_k-%s.csv' % config.hash())
        self.assertEqual(len(read_lines(path)), 1)
        self.assertEqual(len(read_jsonl(path + '.errors.jsonl')), 2)
        self.assertEqual(ExperimentRun.objects.filter(
            status=ExperimentRun.FAILED, failed_stage='train').count(), 2)

    def test_empty_k_list(self):
        values = experiment_dict(SMALL_SQUAD, self.out)
        values['k_list'] = []
        self.assertRaises(InvalidArgument, sweep_top_k,
                          ExperimentConfig.from_dict(values))


class CompareTest(HarnessTestCase):
    def test_compare_modes(self):
        table = compare_modes(self.config())
        self.assertEqual([row['mode'] for row in table.rows],
                         ['joint', 'two_step'])
        self.assertEqual(len(table.deltas), 1)
        delta = table.deltas[0]
        self.assertEqual(delta['mode'], 'two_step-joint')
        self.assertAlmostEqual(
            delta['bleu4'], table.rows[1]['bleu4'] - table.rows[0]['bleu4'])

    def test_lambda_zero_joint_matches_generation_only(self):
        table = compare_modes(self.config(lam=0.0),
                              ('joint', 'generation_only'))
        for column in harness.METRIC_COLUMNS:
            self.assertEqual(table.deltas[0][column], 0.0)

    def test_compare_backends(self):
        table = compare_backends(self.config(), [
            EmbeddingBackendSpec(kind='bag_mean', dimension=16),
            EmbeddingBackendSpec(kind='precomputed_file', dimension=3,
                                 source=OVERLAP_VECTORS),
        ])
        self.assertEqual([row['backend'] for row in table.rows],
                         ['bag_mean', 'precomputed_file:overlap_vectors.txt'])

    def test_compare_backends_needs_backends(self):
        self.assertRaises(InvalidArgument, compare_backends, self.config(),
                          [])


class ExperimentConfigTest(HarnessTestCase):
    def write_config(self, values):
        path = os.path.join(self.out, 'config.json')
        with io.open(path, 'w', encoding='utf-8') as f:
            json.dump(values, f)
        return path

    def test_overrides(self):
        path = self.write_config(experiment_dict(SMALL_SQUAD, self.out))
        config = load_experiment_config(path, {
            'seed': 3, 'mode': 'two_step', 'k': 2, 'lam': 0.25, 'beam': 3,
            'k_list': [1, 3], 'backend': 'model_encoder', 'out': 'elsewhere',
            'epochs': None})
        self.assertEqual(config.seed, 3)
        self.assertEqual(config.train.seed, 3)
        self.assertEqual(config.backend.seed, 3)
        self.assertEqual(config.train.mode, 'two_step')
        self.assertEqual(config.train.k, 2)
        self.assertEqual(config.train.lam, 0.25)
        self.assertEqual(config.train.epochs, 1)
        self.assertEqual(config.decode.beam_size, 3)
        self.assertEqual(config.k_list, (1, 3))
        self.assertEqual(config.backend.kind, 'model_encoder')
        self.assertEqual(config.out_dir, 'elsewhere')

    def test_settings_defaults(self):
        config = ExperimentConfig.from_dict({'train_path': SMALL_SQUAD})
        self.assertEqual(config.train.max_len, 128)
        self.assertEqual(config.backend.dimension, 16)
        self.assertEqual(config.decode.beam_size, 5)

    def test_hash_ignores_output_location(self):
        config = self.config()
        self.assertEqual(config.hash(),
                         config.with_overrides(out='other').hash())
        self.assertNotEqual(config.hash(),
                            config.with_overrides(seed=99).hash())

    def test_errors(self):
        self.assertRaises(InvalidArgument, load_experiment_config, None)
        self.assertRaises(InvalidArgument, load_experiment_config,
                          self.write_config({'train_path': SMALL_SQUAD,
                                             'colour': 'red'}))
        self.assertRaises(InvalidArgument, load_experiment_config,
                          self.write_config({'train_path': SMALL_SQUAD}),
                          {'beam': 6})
        self.assertRaises(InvalidArgument, load_experiment_config,
                          self.write_config({'train_path': SMALL_SQUAD}),
                          {'mode': 'multitask'})
        path = os.path.join(self.out, 'broken.json')
        with io.open(path, 'w', encoding='utf-8') as f:
            f.write(u'{"train_path": ')
        self.assertRaises(InvalidArgument, load_experiment_config, path)
