import logging
from dataclasses import dataclass

from .corpus import example_from_record, example_to_record
from .embedding import cosine_similarity, embed_tokens
from .exceptions import InvalidArgument
from .tokenizer import tokenize
from .utils import read_jsonl, write_jsonl


logger = logging.getLogger(__name__)

QUESTION_TYPES = (
    'what', 'who', 'when', 'where', 'why', 'how', 'which', 'other')
WH_WORDS = {
    'what': 'what', 'who': 'who', 'whom': 'who', 'whose': 'who',
    'when': 'when', 'where': 'where', 'why': 'why', 'how': 'how',
    'which': 'which'}


@dataclass(frozen=True)
class RelevanceLabels:
    labels: tuple
    scores: tuple
    k: int

    @property
    def positives(self):
        return [i for i, label in enumerate(self.labels) if label]


def labels_from_scores(scores, k):
    """Top ``min(k, n)`` scores get label 1; ties go to the lower index."""
    if k < 1:
        raise InvalidArgument('k must be at least 1')
    ranked = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    chosen = set(ranked[:min(k, len(scores))])
    return RelevanceLabels(
        tuple(1 if i in chosen else 0 for i in range(len(scores))),
        tuple(float(s) for s in scores), k)


def make_relevance_labels(example, backend, k=4):
    if not example.sentences:
        raise InvalidArgument('example %r has no sentences' % example.id)
    answer = embed_tokens(tokenize(example.document.answer_text), backend)
    scores = [
        cosine_similarity(
            embed_tokens(tokenize(example.sentence_text(i)), backend),
            answer).score
        for i in range(len(example.sentences))]
    return labels_from_scores(scores, k)


def question_type_of(question):
    """First wh-word scanning left to right, ``other`` when none."""
    if not question or not question.strip():
        raise InvalidArgument('question is empty')
    for token in tokenize(question):
        if token in WH_WORDS:
            return WH_WORDS[token]
    return 'other'


def label_examples(examples, backend, k=4):
    labels = [make_relevance_labels(e, backend, k) for e in examples]
    logger.info('labeled %d examples with top-%d relevance', len(labels), k)
    return labels


def write_labels_jsonl(path, examples, labels):
    def records():
        for example, relevance in zip(examples, labels):
            record = example_to_record(example)
            record['relevance'] = list(relevance.labels)
            record['scores'] = list(relevance.scores)
            record['k'] = relevance.k
            record['qtype'] = question_type_of(example.document.question)
            yield record
    write_jsonl(path, records())


def read_labels_jsonl(path):
    """Returns ``(examples, labels)`` from a label file."""
    examples = []
    labels = []
    for record in read_jsonl(path):
        examples.append(example_from_record(record))
        labels.append(RelevanceLabels(
            tuple(record['relevance']), tuple(record['scores']),
            record['k']))
    return examples, labels
