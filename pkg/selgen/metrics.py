"""BLEU-4, ROUGE-L and METEOR-lite over lowercased word tokens.

METEOR-lite matches exact tokens, then Porter stems. It has no
synonym or paraphrase stage and is always reported under its own name.
"""
import collections
import logging
import math
from dataclasses import asdict, dataclass, field

from nltk.stem.porter import PorterStemmer

from .exceptions import InvalidArgument


logger = logging.getLogger(__name__)

MAX_ORDER = 4
ROUGE_BETA = 1.2
BLEU_SMOOTHING = (
    'corpus BLEU-4; unigram precision unsmoothed; for n >= 2 a zero matched '
    'count is replaced by add-one smoothing (1 / (total + 1))')
METEOR_VARIANT = 'meteor_lite: exact + Porter-stem matching, no synonyms'

_stemmer = PorterStemmer()


def ngrams(tokens, n):
    return collections.Counter(
        tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_statistics(candidate, reference):
    """Clipped matches and totals per order, plus both lengths."""
    matches = []
    totals = []
    for n in range(1, MAX_ORDER + 1):
        counts = ngrams(candidate, n)
        clip = ngrams(reference, n)
        matches.append(sum(min(c, clip[g]) for g, c in counts.items()))
        totals.append(max(len(candidate) - n + 1, 0))
    return matches, totals, len(candidate), len(reference)


def bleu_from_statistics(matches, totals, candidate_length, reference_length):
    if candidate_length == 0 or matches[0] == 0:
        return 0.0
    log_precision = 0.0
    for n in range(MAX_ORDER):
        matched, total = matches[n], totals[n]
        if n > 0 and matched == 0:
            matched, total = 1, total + 1
        log_precision += math.log(float(matched) / total)
    if candidate_length > reference_length:
        brevity = 1.0
    else:
        brevity = math.exp(1 - float(reference_length) / candidate_length)
    return brevity * math.exp(log_precision / MAX_ORDER)


def _check_corpus(candidates, references):
    if not candidates:
        raise InvalidArgument('cannot score an empty corpus')
    if len(candidates) != len(references):
        raise InvalidArgument('%d candidates for %d references' % (
            len(candidates), len(references)))


def bleu4(candidates, references):
    _check_corpus(candidates, references)
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    c_total = r_total = 0
    for candidate, reference in zip(candidates, references):
        m, t, c, r = bleu_statistics(list(candidate), list(reference))
        matches = [a + b for a, b in zip(matches, m)]
        totals = [a + b for a, b in zip(totals, t)]
        c_total += c
        r_total += r
    return bleu_from_statistics(matches, totals, c_total, r_total)


def sentence_bleu4(candidate, reference):
    return bleu_from_statistics(
        *bleu_statistics(list(candidate), list(reference)))


def lcs_length(a, b):
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b):
            current.append(previous[j] + 1 if x == y else
                           max(previous[j + 1], current[j]))
        previous = current
    return previous[-1]


def rouge_l(candidate, reference, beta=ROUGE_BETA):
    if not candidate or not reference:
        return 0.0
    lcs = lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = float(lcs) / len(candidate)
    recall = float(lcs) / len(reference)
    return ((1 + beta ** 2) * precision * recall /
            (recall + beta ** 2 * precision))


def stem(token):
    return _stemmer.stem(token)


def align(candidate, reference):
    """Greedy left-to-right alignment; returns sorted (cand, ref) pairs."""
    pairs = {}
    used = set()
    for key in (lambda t: t, stem):
        for i, token in enumerate(candidate):
            if i in pairs:
                continue
            for j, other in enumerate(reference):
                if j not in used and key(token) == key(other):
                    pairs[i] = j
                    used.add(j)
                    break
    return sorted(pairs.items())


def count_chunks(pairs):
    chunks = 0
    previous = None
    for i, j in pairs:
        if previous is None or (i, j) != (previous[0] + 1, previous[1] + 1):
            chunks += 1
        previous = (i, j)
    return chunks


def meteor_lite(candidate, reference):
    if not candidate or not reference:
        return 0.0
    pairs = align(candidate, reference)
    matches = len(pairs)
    if not matches:
        return 0.0
    precision = float(matches) / len(candidate)
    recall = float(matches) / len(reference)
    f_mean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (float(count_chunks(pairs)) / matches) ** 3
    return f_mean * (1 - penalty)


@dataclass
class MetricReport:
    bleu4: float
    rouge_l: float
    meteor_lite: float
    n_examples: int
    per_example: list = field(default_factory=list)

    def __post_init__(self):
        if self.n_examples != len(self.per_example):
            raise InvalidArgument('n_examples does not match per_example')

    def scores(self):
        return {'bleu4': self.bleu4, 'rouge_l': self.rouge_l,
                'meteor_lite': self.meteor_lite}

    def to_dict(self, config_hash=None, **extra):
        report = asdict(self)
        report.update({
            'config_hash': config_hash,
            'bleu_smoothing': BLEU_SMOOTHING,
            'meteor_variant': METEOR_VARIANT,
        })
        report.update(extra)
        return report


def score_corpus(candidates, references, ids=None):
    _check_corpus(candidates, references)
    per_example = []
    for position, (candidate, reference) in enumerate(
            zip(candidates, references)):
        candidate, reference = list(candidate), list(reference)
        record = {
            'bleu4': sentence_bleu4(candidate, reference),
            'rouge_l': rouge_l(candidate, reference),
            'meteor_lite': meteor_lite(candidate, reference),
        }
        if ids is not None:
            record['id'] = ids[position]
        if not candidate:
            record['empty_prediction'] = True
        per_example.append(record)
    n = len(per_example)
    report = MetricReport(
        bleu4=bleu4(candidates, references),
        rouge_l=sum(r['rouge_l'] for r in per_example) / n,
        meteor_lite=sum(r['meteor_lite'] for r in per_example) / n,
        n_examples=n, per_example=per_example)
    logger.info('scored %d examples: bleu4 %.4f rouge_l %.4f meteor_lite %.4f',
                n, report.bleu4, report.rouge_l, report.meteor_lite)
    return report
