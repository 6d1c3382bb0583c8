"""Greedy and beam-search decoding.

Both decoders drive a scorer: ``start(model_input)`` returns decoder state
and ``log_probs(state, prefix)`` returns next-token log-probabilities over
the vocabulary as a 1-d float64 array.
"""
import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .exceptions import InvalidArgument
from .network import encoder_forward
from .tokenizer import (BOS, EOS, PAD, assemble_model_input, decode_ids,
                        tokenize)
from .training import select_sentences
from .utils import write_jsonl


logger = logging.getLogger(__name__)

MAX_BEAM_SIZE = 5
# never generated
BLOCKED_TOKENS = (PAD, BOS)


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple
    log_prob: float = 0.0
    finished: bool = False

    @property
    def generated(self):
        return self.tokens[1:]

    def extend(self, token, log_prob, eos=EOS):
        return Hypothesis(self.tokens + (token,), self.log_prob + log_prob,
                          eos is not None and token == eos)

    def score(self, alpha):
        length = len(self.generated)
        return self.log_prob / length ** alpha if length else self.log_prob


class ModelScorer(object):
    def __init__(self, model):
        self.model = model.eval()

    def start(self, model_input):
        with torch.no_grad():
            return encoder_forward(model_input, self.model)

    def log_probs(self, state, prefix):
        with torch.no_grad():
            logits = self.model.decode(state, torch.tensor([list(prefix)]))
            logits = logits[0, -1].double()
            logits[list(BLOCKED_TOKENS)] = float('-inf')
            return F.log_softmax(logits, dim=-1).numpy()


def as_scorer(model_or_scorer):
    if hasattr(model_or_scorer, 'log_probs'):
        return model_or_scorer
    return ModelScorer(model_or_scorer)


def _check_max_len(max_len):
    if max_len < 1:
        raise InvalidArgument('max_len must be at least 1')


def _greedy(scorer, state, max_len, bos, eos):
    hypothesis = Hypothesis((bos,))
    while len(hypothesis.generated) < max_len and not hypothesis.finished:
        log_probs = scorer.log_probs(state, hypothesis.tokens)
        # argmax returns the first maximum, so ties go to the lowest id
        token = int(np.argmax(log_probs))
        hypothesis = hypothesis.extend(token, float(log_probs[token]), eos)
    return hypothesis


def greedy_decode(model, model_input, max_len=32, bos=BOS, eos=EOS):
    """Generated ids after BOS, including the EOS when one is produced."""
    _check_max_len(max_len)
    scorer = as_scorer(model)
    hypothesis = _greedy(scorer, scorer.start(model_input), max_len, bos, eos)
    return list(hypothesis.generated)


def beam_search(scorer, model_input, beam_size=5, max_len=32,
                length_alpha=0.7, bos=BOS, eos=EOS):
    """Best hypothesis by ``log_prob / length ** length_alpha``.

    Every step keeps ``beam_size`` unfinished hypotheses; those ending in
    EOS above the cut move to the finished pool. The best finished
    hypothesis wins, or the best partial one when nothing finished. A
    finished greedy hypothesis always joins the pool. Equal scores resolve
    to the lexicographically smaller token sequence.
    """
    if not 1 <= beam_size <= MAX_BEAM_SIZE:
        raise InvalidArgument('beam size must lie in 1..%d, got %r' % (
            MAX_BEAM_SIZE, beam_size))
    _check_max_len(max_len)
    state = scorer.start(model_input)
    live = [Hypothesis((bos,))]
    finished = []
    for _ in range(max_len):
        candidates = []
        for hypothesis in live:
            log_probs = scorer.log_probs(state, hypothesis.tokens)
            # one extra so an EOS among them cannot starve the beam
            best = np.argsort(-log_probs, kind='stable')[:beam_size + 1]
            candidates.extend(
                hypothesis.extend(int(t), float(log_probs[t]), eos)
                for t in best if np.isfinite(log_probs[t]))
        candidates.sort(key=lambda h: (-h.log_prob, h.tokens))
        live = []
        for hypothesis in candidates:
            if len(live) == beam_size:
                break
            (finished if hypothesis.finished else live).append(hypothesis)
        if not live:
            break

    greedy = _greedy(scorer, state, max_len, bos, eos)
    if greedy.finished:
        finished.append(greedy)
    pool = finished or live + [greedy]
    return min(pool, key=lambda h: (-h.score(length_alpha), h.tokens))


def beam_search_decode(model, model_input, beam_size=5, max_len=32,
                       length_alpha=0.7, bos=BOS, eos=EOS):
    hypothesis = beam_search(as_scorer(model), model_input, beam_size,
                             max_len, length_alpha, bos, eos)
    return list(hypothesis.generated)


def predict(checkpoint, examples, beam_size=5, max_len=32, length_alpha=0.7,
            max_input_len=None):
    """One prediction record per example.

    Two-step checkpoints first restrict each input to the sentences their
    selector keeps.
    """
    model = checkpoint.build_model()
    scorer = ModelScorer(model)
    selector = checkpoint.build_selector_model() if (
        checkpoint.has_selector) else None
    train_config = checkpoint.train_config
    max_input_len = max_input_len or checkpoint.model_config.max_len
    records = []
    for example in examples:
        model_input = assemble_model_input(
            example, checkpoint.vocab, max_input_len)
        if selector is not None:
            keep = select_sentences(
                selector, model_input,
                train_config.get('selector_threshold', 0.5),
                train_config.get('k', 4))
            model_input = assemble_model_input(
                example, checkpoint.vocab, max_input_len, keep_sentences=keep)
        hypothesis = beam_search(scorer, model_input, beam_size, max_len,
                                 length_alpha)
        records.append({
            'id': example.id,
            'prediction': decode_ids(hypothesis.generated, checkpoint.vocab),
            'gold': ' '.join(tokenize(example.document.question)),
            'beam_size': beam_size,
            'score': hypothesis.score(length_alpha),
        })
    logger.info('decoded %d examples with beam size %d', len(records),
                beam_size)
    return records


def write_predictions_jsonl(path, records):
    write_jsonl(path, records)
