"""Losses and the training loop for every training mode.

``joint`` minimises ``lam * selection + (1 - lam) * generation`` in one model,
``generation_only`` is the same loop with ``lam = 0``, ``aux_qtc`` swaps the
selection term for question-type cross-entropy and ``two_step`` trains a
selector first and a fresh generator on the sentences it keeps.
"""
import logging
import time
from dataclasses import asdict, dataclass, fields

import numpy as np
import torch
import torch.nn.functional as F
from tqdm import tqdm

from .checkpoint import Checkpoint
from .embedding import ModelEncoderBackend
from .exceptions import InvalidArgument, NumericError
from .labeler import QUESTION_TYPES, make_relevance_labels, question_type_of
from .network import ModelConfig, build_model, encoder_forward
from .tokenizer import (BOS, EOS, NO_SENTENCE, PAD, assemble_model_input,
                        build_vocab, encode_text)


logger = logging.getLogger(__name__)

MODES = ('joint', 'two_step', 'aux_qtc', 'generation_only')
PROB_EPSILON = 1e-7


@dataclass
class TrainConfig:
    lam: float = 0.5
    learning_rate: float = 2e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    weight_decay: float = 0.01
    epochs: int = 10
    batch_size: int = 16
    seed: int = 13
    mode: str = 'joint'
    k: int = 4
    max_len: int = 256
    max_question_len: int = 32
    selector_threshold: float = 0.5
    refresh_labels: bool = False
    teacher_forcing: bool = True
    progress: bool = False

    def __post_init__(self):
        if not 0 <= self.lam <= 1:
            raise InvalidArgument('lambda must lie in [0, 1]')
        if self.mode not in MODES:
            raise InvalidArgument('unknown training mode %r' % self.mode)
        if self.epochs < 0:
            raise InvalidArgument('epochs must not be negative')
        if self.batch_size <= 0:
            raise InvalidArgument('batch_size must be positive')
        if self.k < 1:
            raise InvalidArgument('k must be at least 1')
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise InvalidArgument(
                'learning rate and weight decay must be >= 0')
        if self.max_question_len < 2:
            raise InvalidArgument('max_question_len must be at least 2')
        if not self.teacher_forcing:
            raise InvalidArgument('training always uses teacher forcing')

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        known = set(f.name for f in fields(cls))
        return cls(**dict((k, v) for k, v in values.items() if k in known))


def selection_loss(probs, labels, mask=None):
    """Mean binary cross-entropy over (masked) sentences."""
    probs = torch.as_tensor(probs, dtype=torch.get_default_dtype()) if (
        not torch.is_tensor(probs)) else probs
    labels = torch.as_tensor(labels, dtype=probs.dtype)
    if probs.shape != labels.shape:
        raise InvalidArgument('%d probabilities for %d labels' % (
            probs.numel(), labels.numel()))
    p = probs.clamp(PROB_EPSILON, 1 - PROB_EPSILON)
    losses = -(labels * torch.log(p) + (1 - labels) * torch.log(1 - p))
    if mask is not None:
        losses = losses[mask]
    return losses.mean()


def generation_nll(log_probs, gold):
    """Per-sequence mean NLL of ``gold`` without PAD, batch-averaged."""
    if log_probs.dim() == 2:
        log_probs, gold = log_probs.unsqueeze(0), gold.unsqueeze(0)
    if log_probs.shape[:-1] != gold.shape:
        raise InvalidArgument('%s distributions for gold of shape %s' % (
            tuple(log_probs.shape[:-1]), tuple(gold.shape)))
    mask = (gold != PAD).to(log_probs.dtype)
    picked = log_probs.gather(-1, gold.unsqueeze(-1)).squeeze(-1)
    per_sequence = -(picked * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
    return per_sequence.mean()


def generation_loss(step_distributions, gold):
    """Teacher-forced NLL from per-step probability distributions."""
    distributions = torch.as_tensor(
        np.asarray(step_distributions, dtype=np.float64)) if (
        not torch.is_tensor(step_distributions)) else step_distributions
    gold = torch.as_tensor(gold, dtype=torch.long)
    return generation_nll(torch.log(distributions), gold)


def joint_loss(l_sel, l_gen, lam):
    return lam * l_sel + (1 - lam) * l_gen


@dataclass
class TrainingItem:
    example: object
    model_input: object
    selector_labels: tuple
    qtype: int
    question_ids: tuple


def question_ids(question, vocab, max_question_len):
    return tuple(encode_text(question, vocab)[:max_question_len - 1] + [EOS])


def make_training_items(examples, labels, vocab, config, keep=None):
    items = []
    for position, (example, relevance) in enumerate(zip(examples, labels)):
        model_input = assemble_model_input(
            example, vocab, config.max_len,
            keep_sentences=None if keep is None else keep[position])
        items.append(TrainingItem(
            example=example,
            model_input=model_input,
            selector_labels=tuple(
                relevance.labels[i] for i in model_input.sentence_map),
            qtype=QUESTION_TYPES.index(
                question_type_of(example.document.question)),
            question_ids=question_ids(
                example.document.question, vocab, config.max_question_len)))
    return items


@dataclass
class Batch:
    token_ids: torch.Tensor
    sentence_index: torch.Tensor
    selector_labels: torch.Tensor
    sentence_mask: torch.Tensor
    target_in: torch.Tensor
    target_out: torch.Tensor
    qtypes: torch.Tensor

    def __len__(self):
        return self.token_ids.size(0)


def _pad(rows, value):
    width = max(len(row) for row in rows)
    return torch.tensor([list(row) + [value] * (width - len(row))
                         for row in rows])


def collate(items):
    sentence_counts = [item.model_input.sentence_count for item in items]
    width = max(sentence_counts)
    selector_labels = torch.zeros(len(items), width)
    sentence_mask = torch.zeros(len(items), width, dtype=torch.bool)
    for row, item in enumerate(items):
        count = sentence_counts[row]
        selector_labels[row, :count] = torch.tensor(
            item.selector_labels, dtype=torch.float)
        sentence_mask[row, :count] = True
    return Batch(
        token_ids=_pad([i.model_input.token_ids for i in items], PAD),
        sentence_index=_pad(
            [i.model_input.sentence_index for i in items], NO_SENTENCE),
        selector_labels=selector_labels,
        sentence_mask=sentence_mask,
        target_in=_pad([(BOS,) + i.question_ids[:-1] for i in items], PAD),
        target_out=_pad([i.question_ids for i in items], PAD),
        qtypes=torch.tensor([i.qtype for i in items]))


def batch_losses(model, batch, objective, lam):
    """``(total, auxiliary, generation)`` losses for one batch.

    ``objective`` is ``selection`` or ``qtype``; it names the auxiliary term.
    """
    encoded, log_probs = model(
        batch.token_ids, batch.sentence_index, batch.target_in)
    l_gen = generation_nll(log_probs, batch.target_out)
    if objective == 'qtype':
        l_aux = F.cross_entropy(
            model.classify_question(encoded), batch.qtypes)
    else:
        l_aux = selection_loss(model.select(encoded).to(log_probs.dtype),
                               batch.selector_labels.to(log_probs.dtype),
                               batch.sentence_mask)
    return joint_loss(l_aux, l_gen, lam), l_aux, l_gen


def build_optimizer(model, config):
    return torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
        weight_decay=config.weight_decay)


def relabel_items(model, items, vocab, config):
    """Recompute selector labels from the live encoder."""
    backend = ModelEncoderBackend(model, vocab)
    for item in items:
        relevance = make_relevance_labels(item.example, backend, config.k)
        item.selector_labels = tuple(
            relevance.labels[i] for i in item.model_input.sentence_map)
    return items


def fit(model, items, config, mode, objective='selection', lam=None,
        relabel=None):
    """Run ``config.epochs`` passes of AdamW; returns ``(history, steps)``."""
    lam = config.lam if lam is None else lam
    optimizer = build_optimizer(model, config)
    generator = torch.Generator().manual_seed(config.seed)
    history = []
    step = 0
    for epoch in range(1, config.epochs + 1):
        started = time.time()
        if relabel is not None:
            items = relabel(model, items)
        order = torch.randperm(len(items), generator=generator).tolist()
        model.train()
        sums = np.zeros(3)
        starts = range(0, len(order), config.batch_size)
        for start in tqdm(starts, desc='epoch %d' % epoch,
                          disable=not config.progress):
            batch = collate(
                [items[i] for i in order[start:start + config.batch_size]])
            total, l_aux, l_gen = batch_losses(model, batch, objective, lam)
            if not bool(torch.isfinite(total)):
                raise NumericError(
                    'non-finite loss at step %d' % step, step=step)
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            step += 1
            sums += len(batch) * np.array(
                [total.item(), l_aux.item(), l_gen.item()])
        means = sums / len(items)
        record = {
            'epoch': epoch,
            'mode': mode,
            'loss_total': float(means[0]),
            'loss_sel': float(means[1]),
            'loss_gen': float(means[2]),
            'lr': config.learning_rate,
            'seconds': round(time.time() - started, 3),
        }
        logger.info('epoch %d (%s): loss %.4f sel %.4f gen %.4f', epoch, mode,
                    record['loss_total'], record['loss_sel'],
                    record['loss_gen'])
        history.append(record)
    model.eval()
    return history, step


def select_sentences(model, model_input, threshold=0.5, k=4):
    """Original indices of sentences with p > threshold, else the top k."""
    with torch.no_grad():
        probs = model.select(encoder_forward(model_input, model))[0]
    probs = probs[:model_input.sentence_count].tolist()
    chosen = [i for i, p in enumerate(probs) if p > threshold]
    if not chosen:
        chosen = sorted(range(len(probs)), key=lambda i: (-probs[i], i))[:k]
    return sorted(model_input.sentence_map[i] for i in chosen)


def selector_f1(predicted, gold):
    predicted = np.asarray(predicted, dtype=bool)
    gold = np.asarray(gold, dtype=bool)
    if predicted.shape != gold.shape:
        raise InvalidArgument('prediction and label counts differ')
    tp = int((predicted & gold).sum())
    fp = int((predicted & ~gold).sum())
    fn = int((~predicted & gold).sum())
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2 * tp + fp + fn)


def evaluate_selector(model, items, threshold=0.5):
    predicted = []
    gold = []
    model.eval()
    with torch.no_grad():
        for item in items:
            probs = model.select(encoder_forward(item.model_input, model))[0]
            predicted.extend(
                (probs[:item.model_input.sentence_count] > threshold).tolist())
            gold.extend(item.selector_labels)
    return selector_f1(predicted, gold)


def _two_step(examples, labels, vocab, model_config, config):
    selector = build_model(model_config, config.seed)
    items = make_training_items(examples, labels, vocab, config)
    logger.info('two-step stage 1: training the selector')
    selector_history, selector_steps = fit(
        selector, items, config, 'two_step', lam=1.0)
    keep = [select_sentences(selector, item.model_input,
                             config.selector_threshold, config.k)
            for item in items]
    logger.info('two-step stage 2: training a fresh generator')
    generator = build_model(model_config, config.seed)
    history, steps = fit(
        generator,
        make_training_items(examples, labels, vocab, config, keep=keep),
        config, 'two_step', lam=0.0)
    return Checkpoint(
        model_config=model_config, state=generator.state_dict(), vocab=vocab,
        mode='two_step', step=selector_steps + steps, seed=config.seed,
        train_config=config.to_dict(),
        history=[dict(r, stage=1) for r in selector_history] +
        [dict(r, stage=2) for r in history],
        selector_state=selector.state_dict())


def train(dataset, labels, config, vocab=None, model_config=None):
    """Train per ``config.mode`` and return the resulting Checkpoint."""
    if not dataset:
        raise InvalidArgument('cannot train on an empty dataset')
    if len(labels) != len(dataset):
        raise InvalidArgument('%d label sets for %d examples' % (
            len(labels), len(dataset)))
    vocab = vocab or build_vocab(dataset)
    model_config = model_config or ModelConfig(
        vocab_size=len(vocab), max_len=config.max_len)
    if model_config.vocab_size != len(vocab):
        raise InvalidArgument('model vocab_size %d != vocabulary size %d' % (
            model_config.vocab_size, len(vocab)))
    logger.info('training %s on %d examples for %d epochs', config.mode,
                len(dataset), config.epochs)
    if config.mode == 'two_step':
        return _two_step(dataset, labels, vocab, model_config, config)

    model = build_model(model_config, config.seed)
    items = make_training_items(dataset, labels, vocab, config)
    relabel = None
    if config.refresh_labels:
        def relabel(live, current):
            return relabel_items(live, current, vocab, config)
    history, steps = fit(
        model, items, config, config.mode,
        objective='qtype' if config.mode == 'aux_qtc' else 'selection',
        lam=0.0 if config.mode == 'generation_only' else config.lam,
        relabel=relabel)
    return Checkpoint(
        model_config=model_config, state=model.state_dict(), vocab=vocab,
        mode=config.mode, step=steps, seed=config.seed,
        train_config=config.to_dict(), history=history)
