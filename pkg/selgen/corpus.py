"""SQuAD ingestion, sentence splitting and answer alignment.

Offsets are character offsets into the NFC-normalized context.
"""
import collections
import io
import json
import logging
import re
import unicodedata
from dataclasses import dataclass

import numpy as np

from .exceptions import (AlignmentError, CorpusParseError, EmptyDatasetError,
                         InvalidArgument)
from .utils import read_jsonl, write_jsonl


logger = logging.getLogger(__name__)

ABBREVIATIONS = frozenset([
    'mr', 'mrs', 'ms', 'dr', 'prof', 'sr', 'jr', 'st', 'mt', 'vs', 'no',
    'gen', 'col', 'lt', 'sgt', 'capt', 'rev', 'gov', 'sen', 'rep', 'inc',
    'ltd', 'co', 'corp', 'jan', 'feb', 'mar', 'apr', 'aug', 'sept', 'oct',
    'nov', 'dec', 'e.g', 'i.e', 'cf', 'approx', 'fig'])
OPENING_QUOTES = '"\'“‘'
_TERMINATOR = re.compile(
    r'[.!?]+["\'”’)\]]*(?=\s+(\S))')
_INITIALISM = re.compile(r'^(?:[A-Za-z]\.)+[A-Za-z]$')


@dataclass(frozen=True)
class RawDocument:
    id: str
    context: str
    question: str
    answer_text: str
    answer_start: int

    @property
    def answer_end(self):
        return self.answer_start + len(self.answer_text)


@dataclass(frozen=True)
class SentenceSpan:
    index: int
    start: int
    end: int

    def text(self, context):
        return context[self.start:self.end]


@dataclass(frozen=True)
class QAExample:
    document: RawDocument
    sentences: tuple
    answer_sentence_index: int
    multi_sentence: bool = False

    @property
    def id(self):
        return self.document.id

    def sentence_text(self, index):
        return self.sentences[index].text(self.document.context)


Alignment = collections.namedtuple('Alignment', 'index multi_sentence')


def normalize(text):
    return unicodedata.normalize('NFC', text)


def _is_abbreviation(text, sentence_start, period_at):
    words = text[sentence_start:period_at].split()
    if not words:
        return False
    word = words[-1].lstrip('([' + OPENING_QUOTES)
    if not word:
        return False
    if len(word) == 1 and word.isupper():
        return True
    return word.lower() in ABBREVIATIONS or bool(_INITIALISM.match(word))


def _next_non_space(text, position):
    while position < len(text) and text[position].isspace():
        position += 1
    return position


def split_sentences(text):
    """Split ``text`` into sentence spans.

    A sentence ends after '.', '!' or '?' (plus any closing quotes or
    brackets) when the next non-space character is uppercase, a digit or
    an opening quote. A period ending a known abbreviation or a single
    capital letter ("J.") never ends a sentence.
    """
    if not text or not text.strip():
        raise InvalidArgument('cannot split empty text into sentences')

    spans = []
    start = _next_non_space(text, 0)
    for match in _TERMINATOR.finditer(text):
        if match.start() < start:
            continue
        following = match.group(1)
        if not (following.isupper() or following.isdigit() or
                following in OPENING_QUOTES):
            continue
        if (match.group().startswith('.') and
                len(match.group().rstrip('"\'”’)]')) == 1 and
                _is_abbreviation(text, start, match.start())):
            continue
        spans.append(SentenceSpan(len(spans), start, match.end()))
        start = _next_non_space(text, match.end())

    end = len(text.rstrip())
    if start < end:
        spans.append(SentenceSpan(len(spans), start, end))
    return spans


def align_answer(document, sentences):
    """Return the sentence holding the answer start.

    ``multi_sentence`` is set when the answer runs past that sentence.
    """
    for span in sentences:
        if span.start <= document.answer_start < span.end:
            return Alignment(span.index, document.answer_end > span.end)
    raise AlignmentError(
        'answer offset %d of %r lies outside every sentence' % (
            document.answer_start, document.id))


def _expect(value, kind, path):
    if not isinstance(value, kind):
        raise CorpusParseError(
            path, 'expected %s, got %s' % (
                getattr(kind, '__name__', kind), type(value).__name__))
    return value


def _make_document(qid, context, question, answer):
    raw_start = answer['answer_start']
    if raw_start < 0 or raw_start > len(context):
        return None
    document = RawDocument(
        id=qid,
        context=normalize(context),
        question=normalize(question),
        answer_text=normalize(answer['text']),
        answer_start=len(normalize(context[:raw_start])))
    end = document.answer_end
    if not document.answer_text.strip() or end > len(document.context):
        return None
    if document.context[document.answer_start:end] != document.answer_text:
        return None
    return document


def parse_squad(payload, source='<payload>'):
    """Walk a SQuAD v1.1 payload; returns ``(examples, dropped)``."""
    _expect(payload, dict, source)
    articles = _expect(payload.get('data'), list, '%s:data' % source)
    examples = []
    dropped = 0
    for i, article in enumerate(articles):
        article_path = '%s:data[%d]' % (source, i)
        _expect(article, dict, article_path)
        paragraphs = _expect(
            article.get('paragraphs'), list, article_path + '.paragraphs')
        for j, paragraph in enumerate(paragraphs):
            para_path = '%s.paragraphs[%d]' % (article_path, j)
            _expect(paragraph, dict, para_path)
            context = _expect(
                paragraph.get('context'), str, para_path + '.context')
            qas = _expect(paragraph.get('qas'), list, para_path + '.qas')
            sentences = None
            for q, qa in enumerate(qas):
                qa_path = '%s.qas[%d]' % (para_path, q)
                _expect(qa, dict, qa_path)
                qid = _expect(qa.get('id'), str, qa_path + '.id')
                question = _expect(
                    qa.get('question'), str, qa_path + '.question')
                answers = _expect(
                    qa.get('answers'), list, qa_path + '.answers')
                if not answers:
                    raise CorpusParseError(
                        qa_path + '.answers', 'at least one answer required')
                answer = _expect(answers[0], dict, qa_path + '.answers[0]')
                _expect(answer.get('text'), str, qa_path + '.answers[0].text')
                start = answer.get('answer_start')
                if isinstance(start, bool) or not isinstance(start, int):
                    raise CorpusParseError(
                        qa_path + '.answers[0].answer_start',
                        'expected int, got %s' % type(start).__name__)

                document = _make_document(qid, context, question, answer)
                if document is None or not document.context.strip():
                    logger.debug('dropping unalignable answer %s', qid)
                    dropped += 1
                    continue
                if sentences is None:
                    sentences = tuple(split_sentences(document.context))
                try:
                    alignment = align_answer(document, sentences)
                except AlignmentError:
                    logger.debug('dropping answer outside sentences %s', qid)
                    dropped += 1
                    continue
                examples.append(QAExample(
                    document, sentences, alignment.index,
                    alignment.multi_sentence))
    return examples, dropped


def load_squad_json(path):
    """Load one QAExample per (paragraph, qa) pair of a SQuAD v1.1 file."""
    with io.open(path, 'r', encoding='utf-8') as f:
        try:
            payload = json.load(f)
        except ValueError as e:
            raise CorpusParseError(str(path), 'invalid JSON (%s)' % e)

    examples, dropped = parse_squad(payload, str(path))
    if dropped:
        logger.warning('%s: dropped %d unalignable example(s), kept %d',
                       path, dropped, len(examples))
    if not examples:
        raise EmptyDatasetError('%s contains no usable examples' % path)
    logger.info('loaded %d examples from %s', len(examples), path)
    return examples


def split_examples(examples, dev_fraction=0.1, test_fraction=0.1, seed=13):
    """Deterministic paragraph-grouped train/dev/test split.

    All questions about one context land in the same split; each split keeps
    file order.
    """
    if dev_fraction < 0 or test_fraction < 0 or (
            dev_fraction + test_fraction) >= 1:
        raise InvalidArgument('split fractions must be >= 0 and sum below 1')
    groups = collections.OrderedDict()
    for position, example in enumerate(examples):
        groups.setdefault(example.document.context, []).append(position)
    keys = list(groups)
    order = np.random.default_rng(seed).permutation(len(keys))
    n_test = int(round(test_fraction * len(keys)))
    n_dev = int(round(dev_fraction * len(keys)))

    assignment = {}
    for rank, group in enumerate(order):
        if rank < n_test:
            name = 'test'
        elif rank < n_test + n_dev:
            name = 'dev'
        else:
            name = 'train'
        for position in groups[keys[group]]:
            assignment[position] = name

    splits = {'train': [], 'dev': [], 'test': []}
    for position, example in enumerate(examples):
        splits[assignment[position]].append(example)
    return splits


def example_to_record(example):
    document = example.document
    return {
        'id': document.id,
        'context': document.context,
        'question': document.question,
        'answer_text': document.answer_text,
        'answer_start': document.answer_start,
        'sentences': [[s.start, s.end] for s in example.sentences],
        'answer_sentence': example.answer_sentence_index,
        'multi_sentence': example.multi_sentence,
    }


def example_from_record(record):
    document = RawDocument(
        id=record['id'], context=record['context'],
        question=record['question'], answer_text=record['answer_text'],
        answer_start=record['answer_start'])
    sentences = tuple(SentenceSpan(i, start, end)
                      for i, (start, end) in enumerate(record['sentences']))
    return QAExample(document, sentences, record['answer_sentence'],
                     record.get('multi_sentence', False))


def write_examples_jsonl(path, examples):
    write_jsonl(path, (example_to_record(e) for e in examples))


def read_examples_jsonl(path):
    return [example_from_record(r) for r in read_jsonl(path)]
