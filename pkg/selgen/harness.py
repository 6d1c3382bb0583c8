"""Experiment orchestration over run directories.

Each stage reads its inputs from and writes its outputs to one run
directory, so stages can run one at a time from the command line or
chained by ``run_pipeline``.
"""
import contextlib
import csv
import hashlib
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace

from django.conf import settings
from django.utils import timezone

from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (load_squad_json, read_examples_jsonl, split_examples,
                     write_examples_jsonl)
from .decoding import predict, write_predictions_jsonl
from .embedding import EmbeddingBackendSpec, build_backend
from .exceptions import (EmptyDatasetError, InvalidArgument, RunLockedError,
                         SelgenError, StageError)
from .labeler import label_examples, read_labels_jsonl, write_labels_jsonl
from .metrics import score_corpus
from .models import ExperimentRun
from .network import ModelConfig, build_model
from .tokenizer import Vocabulary, build_vocab
from .training import (TrainConfig, evaluate_selector, make_training_items,
                       train)
from .utils import (config_hash, ensure_dir, file_hash, read_jsonl,
                    write_json, write_jsonl)


logger = logging.getLogger(__name__)

SPLITS = ('train', 'dev', 'test')
SELECTOR_MODES = ('joint', 'two_step')
METRIC_COLUMNS = ('bleu4', 'meteor_lite', 'rouge_l')
VOCAB_FILE = 'vocab.txt'
DATA_FILE = 'data.json'
CONFIG_FILE = 'config.json'
CHECKPOINT_FILE = 'checkpoint.bin'
TRAIN_LOG_FILE = 'train_log.jsonl'
PREDICTIONS_FILE = 'predictions.jsonl'
REPORT_FILE = 'report.json'
LOCK_FILE = '.lock'

# flag name -> (section, field) of the resolved config
OVERRIDES = {
    'seed': (None, 'seed'),
    'mode': ('train', 'mode'),
    'k': ('train', 'k'),
    'lam': ('train', 'lam'),
    'epochs': ('train', 'epochs'),
    'k_list': (None, 'k_list'),
    'beam': ('decode', 'beam_size'),
    'backend': ('backend', 'kind'),
    'out': (None, 'out_dir'),
}


def _train_defaults():
    return TrainConfig(
        lam=settings.SELGEN_LAMBDA, k=settings.SELGEN_TOP_K,
        seed=settings.SELGEN_SEED, max_len=settings.SELGEN_MAX_LEN,
        max_question_len=settings.SELGEN_MAX_QUESTION_LEN)


@dataclass
class DecodeConfig:
    beam_size: int = field(
        default_factory=lambda: settings.SELGEN_BEAM_SIZE)
    max_question_len: int = field(
        default_factory=lambda: settings.SELGEN_MAX_QUESTION_LEN)
    length_alpha: float = field(
        default_factory=lambda: settings.SELGEN_LENGTH_ALPHA)

    def __post_init__(self):
        if not 1 <= self.beam_size <= 5:
            raise InvalidArgument('beam size must lie in 1..5')
        if self.max_question_len < 1:
            raise InvalidArgument('max_question_len must be positive')


@dataclass
class ExperimentConfig:
    train_path: str
    test_path: str = None
    out_dir: str = field(default_factory=lambda: settings.SELGEN_OUTPUT_DIR)
    name: str = 'experiment'
    eval_split: str = 'test'
    dev_fraction: float = 0.1
    test_fraction: float = 0.1
    vocab_size: int = field(default_factory=lambda: settings.SELGEN_VOCAB_SIZE)
    min_freq: int = field(default_factory=lambda: settings.SELGEN_MIN_FREQ)
    seed: int = field(default_factory=lambda: settings.SELGEN_SEED)
    k_list: tuple = (1, 2, 3, 4, 5)
    train: TrainConfig = field(default_factory=_train_defaults)
    model: dict = field(default_factory=dict)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    backend: EmbeddingBackendSpec = field(
        default_factory=lambda: EmbeddingBackendSpec(
            dimension=settings.SELGEN_EMBEDDING_DIM))

    def __post_init__(self):
        if not self.train_path:
            raise InvalidArgument('train_path is required')
        if self.eval_split not in SPLITS:
            raise InvalidArgument('unknown evaluation split %r' % (
                self.eval_split,))
        self.k_list = tuple(int(k) for k in self.k_list)
        # one seed drives splitting, labeling and training
        self.train = replace(self.train, seed=self.seed)
        self.backend = replace(self.backend, seed=self.seed)

    def to_dict(self):
        values = asdict(self)
        values['k_list'] = list(self.k_list)
        return values

    def identity(self):
        """Everything that determines results."""
        values = self.to_dict()
        values.pop('out_dir')
        values.pop('name')
        return values

    def hash(self):
        return config_hash(self.identity())

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        known = set(f.name for f in fields(cls))
        unknown = set(values) - known
        if unknown:
            raise InvalidArgument('unknown config keys: %s' % ', '.join(
                sorted(unknown)))
        if not values.get('train_path'):
            raise InvalidArgument('train_path is required')
        train = _train_defaults().to_dict()
        train.update(values.pop('train', None) or {})
        values['train'] = TrainConfig.from_dict(train)
        values['decode'] = DecodeConfig(**(values.pop('decode', None) or {}))
        backend = {'dimension': settings.SELGEN_EMBEDDING_DIM}
        backend.update(values.pop('backend', None) or {})
        values['backend'] = EmbeddingBackendSpec(**backend)
        return cls(**values)

    def with_overrides(self, **overrides):
        values = self.to_dict()
        for name, value in overrides.items():
            if value is None:
                continue
            if name not in OVERRIDES:
                raise InvalidArgument('unknown override %r' % name)
            section, key = OVERRIDES[name]
            if name == 'backend' and isinstance(value, dict):
                values['backend'] = dict(value)
            elif section is None:
                values[key] = value
            else:
                values[section][key] = value
        return ExperimentConfig.from_dict(values)


def load_experiment_config(path=None, overrides=None):
    """Resolve a JSON config file plus flag overrides."""
    values = {}
    if path:
        with io.open(path, 'r', encoding='utf-8') as f:
            try:
                values = json.load(f)
            except ValueError as e:
                raise InvalidArgument('%s: invalid JSON (%s)' % (path, e))
    config = ExperimentConfig.from_dict(values)
    return config.with_overrides(**(overrides or {}))


def model_config_for(config, vocab):
    return ModelConfig(vocab_size=len(vocab), max_len=config.train.max_len,
                       **config.model)


def data_hash(config):
    digest = hashlib.sha256()
    for path in (config.train_path, config.test_path):
        if path:
            digest.update(file_hash(path).encode('ascii'))
    return digest.hexdigest()


def _path(run_dir, name):
    return os.path.join(run_dir, name)


def _split_file(split):
    return '%s.jsonl' % split


def _labels_file(split):
    return 'labels.%s.jsonl' % split


def prepare_stage(config, run_dir):
    """Load, split and index the data; writes splits, vocabulary and hashes."""
    ensure_dir(run_dir)
    examples = load_squad_json(config.train_path)
    if config.test_path:
        splits = split_examples(examples, config.dev_fraction, 0.0,
                                config.seed)
        splits['test'] = load_squad_json(config.test_path)
    else:
        splits = split_examples(examples, config.dev_fraction,
                                config.test_fraction, config.seed)
    if not splits['train']:
        raise EmptyDatasetError('the training split is empty')
    vocab = build_vocab(splits['train'], config.vocab_size, config.min_freq)
    for split in SPLITS:
        write_examples_jsonl(_path(run_dir, _split_file(split)), splits[split])
    vocab.save(_path(run_dir, VOCAB_FILE))
    digest = data_hash(config)
    write_json(_path(run_dir, DATA_FILE), {
        'data_hash': digest,
        'counts': dict((split, len(splits[split])) for split in SPLITS),
    })
    write_json(_path(run_dir, CONFIG_FILE), config.to_dict())
    logger.info('prepared %s: %s', run_dir, ', '.join(
        '%s=%d' % (split, len(splits[split])) for split in SPLITS))
    return splits


def label_stage(config, run_dir):
    vocab = Vocabulary.load(_path(run_dir, VOCAB_FILE))
    model = None
    if config.backend.kind == 'model_encoder':
        model = build_model(model_config_for(config, vocab), config.seed)
    backend = build_backend(config.backend, model=model, vocab=vocab)
    labeled = {}
    for split in SPLITS:
        examples = read_examples_jsonl(_path(run_dir, _split_file(split)))
        labels = label_examples(examples, backend, config.train.k)
        write_labels_jsonl(_path(run_dir, _labels_file(split)), examples,
                           labels)
        labeled[split] = (examples, labels)
    return labeled


def train_stage(config, run_dir):
    vocab = Vocabulary.load(_path(run_dir, VOCAB_FILE))
    examples, labels = read_labels_jsonl(
        _path(run_dir, _labels_file('train')))
    checkpoint = train(examples, labels, config.train, vocab=vocab,
                       model_config=model_config_for(config, vocab))
    save_checkpoint(checkpoint, _path(run_dir, CHECKPOINT_FILE))
    write_jsonl(_path(run_dir, TRAIN_LOG_FILE), checkpoint.history)
    return checkpoint


def generate_stage(config, run_dir):
    checkpoint = load_checkpoint(_path(run_dir, CHECKPOINT_FILE))
    examples = read_examples_jsonl(
        _path(run_dir, _split_file(config.eval_split)))
    if not examples:
        raise EmptyDatasetError('the %s split is empty' % config.eval_split)
    records = predict(
        checkpoint, examples, beam_size=config.decode.beam_size,
        max_len=config.decode.max_question_len,
        length_alpha=config.decode.length_alpha)
    write_predictions_jsonl(_path(run_dir, PREDICTIONS_FILE), records)
    return records


def _selector_f1(config, run_dir):
    if config.train.mode not in SELECTOR_MODES:
        return None
    checkpoint = load_checkpoint(_path(run_dir, CHECKPOINT_FILE))
    model = checkpoint.build_selector_model() if (
        checkpoint.has_selector) else checkpoint.build_model()
    examples, labels = read_labels_jsonl(
        _path(run_dir, _labels_file(config.eval_split)))
    items = make_training_items(examples, labels, checkpoint.vocab,
                                config.train)
    return evaluate_selector(model, items, config.train.selector_threshold)


def evaluate_stage(config, run_dir):
    records = read_jsonl(_path(run_dir, PREDICTIONS_FILE))
    report = score_corpus(
        [r['prediction'].split() for r in records],
        [r['gold'].split() for r in records],
        ids=[r['id'] for r in records])
    with io.open(_path(run_dir, DATA_FILE), 'r', encoding='utf-8') as f:
        data = json.load(f)
    write_json(_path(run_dir, REPORT_FILE), report.to_dict(
        config.hash(),
        config=config.identity(),
        data_hash=data['data_hash'],
        mode=config.train.mode,
        eval_split=config.eval_split,
        selector_f1=_selector_f1(config, run_dir),
        created=timezone.now().isoformat()))
    return report


STAGES = (
    ('prepare', prepare_stage),
    ('label', label_stage),
    ('train', train_stage),
    ('generate', generate_stage),
    ('evaluate', evaluate_stage),
)


@contextlib.contextmanager
def run_lock(run_dir):
    path = _path(run_dir, LOCK_FILE)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunLockedError('%s is owned by another process' % run_dir)
    try:
        os.write(fd, str(os.getpid()).encode('ascii'))
        os.close(fd)
        yield path
    finally:
        os.remove(path)


def new_run_dir(config):
    stamp = timezone.now().strftime('%Y%m%dT%H%M%S%f')
    return os.path.join(config.out_dir, '%s-%s' % (stamp, config.hash()))


def _open_record(config, run_dir, kind):
    if not settings.SELGEN_RECORD_RUNS:
        return None
    return ExperimentRun.objects.create(
        name=config.name, kind=kind, mode=config.train.mode,
        config=config.to_dict(), config_hash=config.hash(), run_dir=run_dir,
        status=ExperimentRun.RUNNING)


def _close_record(record, run_dir, report=None, failed_stage=''):
    if record is None:
        return
    if report is None:
        record.status = ExperimentRun.FAILED
        record.failed_stage = failed_stage
    else:
        record.status = ExperimentRun.FINISHED
        record.bleu4 = report.bleu4
        record.rouge_l = report.rouge_l
        record.meteor_lite = report.meteor_lite
        record.n_examples = report.n_examples
    data_file = _path(run_dir, DATA_FILE)
    if os.path.exists(data_file):
        with io.open(data_file, 'r', encoding='utf-8') as f:
            record.data_hash = json.load(f)['data_hash']
    record.save()


def run_pipeline(config, kind=ExperimentRun.PIPELINE, run_dir=None):
    """prepare -> label -> train -> generate -> evaluate in one directory.

    A failing stage raises StageError; artifacts written so far stay in the
    run directory.
    """
    run_dir = run_dir or new_run_dir(config)
    ensure_dir(run_dir)
    logger.info('running %s (%s) in %s', config.name, config.train.mode,
                run_dir)
    with run_lock(run_dir):
        record = _open_record(config, run_dir, kind)
        stage = None
        try:
            for stage, function in STAGES:
                logger.info('stage %s', stage)
                result = function(config, run_dir)
        except Exception as e:
            logger.error('stage %s failed in %s: %s', stage, run_dir, e)
            _close_record(record, run_dir, failed_stage=stage)
            raise StageError(stage, e) from e
        _close_record(record, run_dir, report=result)
    return result


@dataclass
class ResultTable:
    key: str
    rows: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def write_csv(self, path):
        with io.open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.DictWriter(
                f, (self.key,) + METRIC_COLUMNS, extrasaction='ignore',
                lineterminator='\n')
            writer.writeheader()
            writer.writerows(self.rows + self.deltas)

    def write_errors(self, path):
        write_jsonl(path, self.errors)

    def write(self, out_dir, name):
        ensure_dir(out_dir)
        path = os.path.join(out_dir, '%s.csv' % name)
        self.write_csv(path)
        self.write_errors(path + '.errors.jsonl')
        logger.info('wrote %d row(s) and %d error(s) to %s', len(self.rows),
                    len(self.errors), path)
        return path


def _run_rows(config, key, variants, kind):
    table = ResultTable(key)
    for label, overrides in variants:
        try:
            report = run_pipeline(config.with_overrides(**overrides), kind)
        except SelgenError as e:
            logger.warning('%s=%s failed: %s', key, label, e)
            table.errors.append({key: label,
                                 'stage': getattr(e, 'stage', 'config'),
                                 'error': str(e)})
            continue
        table.rows.append(dict({key: label}, **report.scores()))
    return table


def sweep_top_k(config, k_list=None):
    """One pipeline run per selector top-k, same seed and data."""
    k_list = list(k_list or config.k_list)
    if not k_list:
        raise InvalidArgument('k_list must not be empty')
    table = _run_rows(config, 'k', [(k, {'k': k}) for k in k_list],
                      ExperimentRun.SWEEP_K)
    table.write(config.out_dir, 'sweep_k-%s' % config.hash())
    return table


def compare_modes(config, modes=('joint', 'two_step')):
    """Rows per training mode plus deltas against the first mode."""
    table = _run_rows(config, 'mode', [(m, {'mode': m}) for m in modes],
                      ExperimentRun.COMPARE_MODES)
    if table.rows:
        base = table.rows[0]
        for row in table.rows[1:]:
            delta = {'mode': '%s-%s' % (row['mode'], base['mode'])}
            for column in METRIC_COLUMNS:
                delta[column] = row[column] - base[column]
            table.deltas.append(delta)
    table.write(config.out_dir, 'compare_modes-%s' % config.hash())
    return table


def compare_backends(config, backends):
    """Rows per labeling backend, everything else held fixed."""
    if not backends:
        raise InvalidArgument('no embedding backends to compare')
    variants = []
    for spec in backends:
        label = spec.kind if not spec.source else '%s:%s' % (
            spec.kind, os.path.basename(spec.source))
        variants.append((label, {'backend': asdict(spec)}))
    table = _run_rows(config, 'backend', variants,
                      ExperimentRun.COMPARE_BACKENDS)
    table.write(config.out_dir, 'compare_backends-%s' % config.hash())
    return table
