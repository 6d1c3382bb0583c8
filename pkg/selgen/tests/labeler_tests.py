import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from selgen.corpus import load_squad_json
from selgen.embedding import BagMeanBackend, PrecomputedBackend
from selgen.exceptions import InvalidArgument
from selgen.labeler import (label_examples, labels_from_scores,
                            make_relevance_labels, question_type_of,
                            read_labels_jsonl, write_labels_jsonl)

from .factories import IBM_SQUAD, OVERLAP_VECTORS, SMALL_SQUAD


class ScaledBackend(object):
    def __init__(self, backend, factor):
        self.backend = backend
        self.factor = factor

    def token_vectors(self, tokens):
        return self.factor * self.backend.token_vectors(tokens)


class MakeRelevanceLabelsTest(SimpleTestCase):
    def setUp(self):
        self.passage = load_squad_json(IBM_SQUAD)[0]

    def test_ibm_overlap(self):
        labels = make_relevance_labels(
            self.passage, PrecomputedBackend(OVERLAP_VECTORS), k=2)
        self.assertEqual(labels.labels, (0, 1, 1, 0))
        self.assertEqual(labels.positives, [1, 2])
        self.assertAlmostEqual(labels.scores[0], 1 / np.sqrt(3), places=9)
        self.assertEqual(labels.scores[3], 0.0)

    def test_saturation(self):
        labels = make_relevance_labels(self.passage, BagMeanBackend(16), k=9)
        self.assertEqual(labels.labels, (1, 1, 1, 1))

    def test_scale_invariance(self):
        backend = BagMeanBackend(16, seed=4)
        self.assertEqual(
            make_relevance_labels(self.passage, backend, k=2).labels,
            make_relevance_labels(
                self.passage, ScaledBackend(backend, 7.5), k=2).labels)


class LabelsFromScoresTest(SimpleTestCase):
    def test_hand_set_scores(self):
        self.assertEqual(labels_from_scores([0.9, 0.2, 0.9], 2).labels,
                         (1, 0, 1))
        self.assertEqual(labels_from_scores([0.9, 0.9, 0.2], 2).labels,
                         (1, 1, 0))

    def test_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            k = int(rng.integers(1, 7))
            scores = rng.integers(0, 4, size=n) / 4.0
            labels = labels_from_scores(scores, k).labels
            self.assertEqual(len(labels), n)
            self.assertEqual(sum(labels), min(k, n))
            chosen = [s for s, y in zip(scores, labels) if y]
            others = [s for s, y in zip(scores, labels) if not y]
            if others:
                self.assertGreaterEqual(min(chosen), max(others))

    def test_permutation(self):
        scores = [0.1, 0.7, 0.4, 0.9, 0.3]
        order = [3, 0, 4, 1, 2]
        labels = labels_from_scores(scores, 2).labels
        permuted = labels_from_scores([scores[i] for i in order], 2).labels
        self.assertEqual([permuted[order.index(i)] for i in range(5)],
                         list(labels))

    def test_bad_k(self):
        self.assertRaises(InvalidArgument, labels_from_scores, [0.5], 0)


class QuestionTypeTest(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(question_type_of('What does IBM stand for?'), 'what')
        self.assertEqual(question_type_of('?'), 'other')
        self.assertEqual(
            question_type_of('In what year was CTR renamed?'), 'what')
        self.assertEqual(question_type_of('Whom did she call?'), 'who')
        self.assertEqual(question_type_of('Is it red?'), 'other')

    def test_empty(self):
        self.assertRaises(InvalidArgument, question_type_of, '')
        self.assertRaises(InvalidArgument, question_type_of, '  ')


class LabelsJsonlTest(SimpleTestCase):
    def test_written_labels_read_back(self):
        examples = load_squad_json(SMALL_SQUAD)
        labels = label_examples(examples, BagMeanBackend(16), k=1)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'labels.jsonl')
            write_labels_jsonl(path, examples, labels)
            read_examples, read_labels = read_labels_jsonl(path)
        self.assertEqual(read_examples, examples)
        self.assertEqual(read_labels, labels)
