import itertools
import math
import random

from django.test import SimpleTestCase

from selgen.exceptions import InvalidArgument
from selgen.metrics import (BLEU_SMOOTHING, METEOR_VARIANT, ROUGE_BETA,
                            MetricReport, bleu4, meteor_lite, rouge_l,
                            score_corpus, sentence_bleu4, stem)

ALPHABET = ['a', 'b', 'c', 'd', 'walks', 'walked', 'walking', 'ibm']
# Porter stems of ALPHABET, written out
STEMS = {'walks': 'walk', 'walked': 'walk', 'walking': 'walk'}


def brute_bleu(pairs):
    matched = [0] * 4
    total = [0] * 4
    c_length = r_length = 0
    for candidate, reference in pairs:
        c_length += len(candidate)
        r_length += len(reference)
        for n in range(1, 5):
            grams = [tuple(candidate[i:i + n])
                     for i in range(len(candidate) - n + 1)]
            ref_grams = [tuple(reference[i:i + n])
                         for i in range(len(reference) - n + 1)]
            for gram in set(grams):
                matched[n - 1] += min(grams.count(gram),
                                      ref_grams.count(gram))
            total[n - 1] += len(grams)
    if c_length == 0 or matched[0] == 0:
        return 0.0
    product = 1.0
    for n in range(4):
        if n > 0 and matched[n] == 0:
            product *= 1.0 / (total[n] + 1)
        else:
            product *= float(matched[n]) / total[n]
    brevity = 1.0 if c_length > r_length else math.exp(
        1 - float(r_length) / c_length)
    return brevity * product ** 0.25


def brute_lcs(a, b):
    best = 0
    for size in range(len(a), 0, -1):
        for chosen in itertools.combinations(a, size):
            position = 0
            for token in chosen:
                while position < len(b) and b[position] != token:
                    position += 1
                if position == len(b):
                    break
                position += 1
            else:
                return size
    return best


def brute_rouge(candidate, reference, beta=1.2):
    lcs = brute_lcs(candidate, reference)
    if not lcs:
        return 0.0
    p = float(lcs) / len(candidate)
    r = float(lcs) / len(reference)
    return (1 + beta * beta) * p * r / (r + beta * beta * p)


def known_stem(token):
    return STEMS.get(token, token)


def brute_meteor(candidate, reference):
    mapping = {}
    for same in (lambda x, y: x == y,
                 lambda x, y: known_stem(x) == known_stem(y)):
        for i in range(len(candidate)):
            if i in mapping:
                continue
            for j in range(len(reference)):
                if j not in mapping.values() and same(candidate[i],
                                                      reference[j]):
                    mapping[i] = j
                    break
    if not mapping:
        return 0.0
    m = len(mapping)
    p = float(m) / len(candidate)
    r = float(m) / len(reference)
    f_mean = 10 * p * r / (r + 9 * p)
    chunks = 1
    ordered = sorted(mapping.items())
    for (i, j), (k, l) in zip(ordered, ordered[1:]):
        if k != i + 1 or l != j + 1:
            chunks += 1
    return f_mean * (1 - 0.5 * (float(chunks) / m) ** 3)


def random_pairs(count, seed=17):
    rng = random.Random(seed)
    for _ in range(count):
        yield ([rng.choice(ALPHABET) for _ in range(rng.randint(1, 6))],
               [rng.choice(ALPHABET) for _ in range(rng.randint(1, 6))])


class Bleu4Test(SimpleTestCase):
    def test_identity(self):
        tokens = 'what does ibm stand for ?'.split()
        self.assertAlmostEqual(bleu4([tokens], [tokens]), 1.0, places=12)

    def test_no_shared_unigrams(self):
        self.assertEqual(bleu4([['a', 'b']], [['c', 'd']]), 0.0)

    def test_worked_example(self):
        candidate = 'the cat sat on the mat'.split()
        reference = 'the cat is on the mat'.split()
        self.assertAlmostEqual(sentence_bleu4(candidate, reference),
                               32 ** -0.25, delta=1e-9)
        self.assertAlmostEqual(sentence_bleu4(candidate, reference),
                               brute_bleu([(candidate, reference)]),
                               delta=1e-9)

    def test_brevity_penalty(self):
        self.assertAlmostEqual(
            sentence_bleu4('a b c d'.split(), 'a b c d e f'.split()),
            math.exp(1 - 6.0 / 4), delta=1e-12)

    def test_random_pairs_match_brute_force(self):
        for candidate, reference in random_pairs(200):
            self.assertAlmostEqual(
                sentence_bleu4(candidate, reference),
                brute_bleu([(candidate, reference)]), delta=1e-9)

    def test_corpus_matches_brute_force(self):
        pairs = list(random_pairs(40, seed=3))
        self.assertAlmostEqual(
            bleu4([c for c, _ in pairs], [r for _, r in pairs]),
            brute_bleu(pairs), delta=1e-9)

    def test_order_invariant(self):
        pairs = list(random_pairs(30, seed=5))
        shuffled = list(pairs)
        random.Random(1).shuffle(shuffled)
        self.assertEqual(
            bleu4([c for c, _ in pairs], [r for _, r in pairs]),
            bleu4([c for c, _ in shuffled], [r for _, r in shuffled]))

    def test_errors(self):
        self.assertRaises(InvalidArgument, bleu4, [], [])
        self.assertRaises(InvalidArgument, bleu4, [['a']], [['a'], ['b']])


class RougeLTest(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(rouge_l(['a', 'b'], ['a', 'b']), 1.0)
        self.assertEqual(rouge_l(['a', 'b'], ['c', 'd']), 0.0)
        self.assertAlmostEqual(rouge_l('a b c'.split(), 'a x c'.split()),
                               2.0 / 3, delta=1e-9)

    def test_empty_is_zero(self):
        self.assertEqual(rouge_l([], ['a']), 0.0)
        self.assertEqual(rouge_l(['a'], []), 0.0)

    def test_swap_exchanges_precision_and_recall(self):
        a, b = 'a b c d e'.split(), 'a c e'.split()
        p, r = 3.0 / 5, 3.0 / 3
        beta2 = ROUGE_BETA ** 2
        self.assertAlmostEqual(rouge_l(a, b),
                               (1 + beta2) * p * r / (r + beta2 * p),
                               delta=1e-12)
        self.assertAlmostEqual(rouge_l(b, a),
                               (1 + beta2) * r * p / (p + beta2 * r),
                               delta=1e-12)
        self.assertAlmostEqual(rouge_l(a, b, beta=1.0),
                               rouge_l(b, a, beta=1.0), delta=1e-12)

    def test_random_pairs_match_brute_force(self):
        for candidate, reference in random_pairs(200):
            self.assertAlmostEqual(rouge_l(candidate, reference),
                                   brute_rouge(candidate, reference),
                                   delta=1e-9)


class MeteorLiteTest(SimpleTestCase):
    def test_identity(self):
        tokens = 'a b c d'.split()
        self.assertAlmostEqual(meteor_lite(tokens, tokens),
                               1 - 0.5 * (1.0 / 4) ** 3, delta=1e-12)

    def test_no_overlap(self):
        self.assertEqual(meteor_lite(['a'], ['b']), 0.0)

    def test_worked_example(self):
        f_mean = 10 * 1.0 * 0.75 / (0.75 + 9 * 1.0)
        expected = f_mean * (1 - 0.5 * (2.0 / 3) ** 3)
        self.assertAlmostEqual(
            meteor_lite('what is ibm'.split(), 'what is the ibm'.split()),
            expected, delta=1e-9)

    def test_stem_match(self):
        self.assertAlmostEqual(
            meteor_lite(['walking'], ['walked']), 1 - 0.5, delta=1e-12)

    def test_porter_stems(self):
        self.assertEqual(stem('running'), 'run')
        self.assertEqual(stem('studies'), stem('study'))
        for candidate, reference in (('running', 'run'), ('studies', 'study'),
                                     ('stopped', 'stop')):
            self.assertAlmostEqual(meteor_lite([candidate], [reference]), 0.5,
                                   delta=1e-12, msg=candidate)

    def test_random_pairs_match_brute_force(self):
        for candidate, reference in random_pairs(200):
            self.assertAlmostEqual(meteor_lite(candidate, reference),
                                   brute_meteor(candidate, reference),
                                   delta=1e-9)


class ScoreCorpusTest(SimpleTestCase):
    def test_report(self):
        candidates = ['what is ibm ?'.split(), []]
        references = ['what is ibm ?'.split(), 'who founded ibm ?'.split()]
        report = score_corpus(candidates, references, ids=['a', 'b'])
        self.assertIsInstance(report, MetricReport)
        self.assertEqual(report.n_examples, 2)
        self.assertEqual([r['id'] for r in report.per_example], ['a', 'b'])
        self.assertTrue(report.per_example[1]['empty_prediction'])
        self.assertNotIn('empty_prediction', report.per_example[0])
        self.assertAlmostEqual(report.rouge_l, 0.5, delta=1e-12)
        for score in report.scores().values():
            self.assertTrue(0.0 <= score <= 1.0)

    def test_to_dict(self):
        report = score_corpus([['a']], [['a']])
        values = report.to_dict('abc123', mode='joint')
        self.assertEqual(values['config_hash'], 'abc123')
        self.assertEqual(values['mode'], 'joint')
        self.assertEqual(values['bleu_smoothing'], BLEU_SMOOTHING)
        self.assertEqual(values['meteor_variant'], METEOR_VARIANT)
        self.assertEqual(values['n_examples'], 1)

    def test_count_mismatch(self):
        self.assertRaises(InvalidArgument, MetricReport, 0.0, 0.0, 0.0, 2,
                          [{}])
