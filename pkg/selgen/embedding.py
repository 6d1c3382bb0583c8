"""Sentence/answer vectors for relevance labeling.

Three interchangeable backends share one contract: mean-pool per-token
vectors into a fixed-width vector. ``bag_mean`` hashes tokens to seeded
Gaussian vectors, ``precomputed_file`` reads a token table, and
``model_encoder`` pools the live encoder's token states.
"""
import collections
import functools
import hashlib
import io
import logging
import os
from dataclasses import dataclass

import numpy as np
import torch
from django.core.cache import cache

from .exceptions import InvalidArgument
from .tokenizer import CLS, SEP
from .utils import EMBEDDING_TABLE_KEY


logger = logging.getLogger(__name__)

BACKEND_KINDS = ('bag_mean', 'precomputed_file', 'model_encoder')
DEGENERATE_NORM = 1e-12
UNK_ROW = '<unk>'

Similarity = collections.namedtuple('Similarity', 'score degenerate')


@dataclass(frozen=True)
class EmbeddingBackendSpec:
    kind: str = 'bag_mean'
    dimension: int = 64
    source: str = None
    seed: int = 13

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise InvalidArgument('unknown embedding backend %r' % self.kind)
        if self.dimension <= 0:
            raise InvalidArgument('embedding dimension must be positive')
        if self.kind == 'precomputed_file' and not self.source:
            raise InvalidArgument('precomputed_file backend needs a source')


@functools.lru_cache(maxsize=65536)
def _hashed_vector(token, seed, dimension):
    digest = hashlib.blake2b(
        ('%d:%s' % (seed, token)).encode('utf-8'), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, 'little'))
    vector = rng.standard_normal(dimension)
    vector.setflags(write=False)
    return vector


class BagMeanBackend(object):
    def __init__(self, dimension=64, seed=13):
        self.dimension = dimension
        self.seed = seed

    def token_vectors(self, tokens):
        return np.stack([_hashed_vector(t, self.seed, self.dimension)
                         for t in tokens])


def read_vector_table(path):
    """Parse a ``dim d`` headed, tab separated token table."""
    with io.open(path, 'r', encoding='utf-8') as f:
        header = f.readline().split()
        if len(header) != 2 or header[0] != 'dim':
            raise InvalidArgument('%s: missing "dim d" header' % path)
        dimension = int(header[1])
        table = {}
        for number, line in enumerate(f, 2):
            line = line.rstrip('\n')
            if not line:
                continue
            token, _, values = line.partition('\t')
            vector = np.array(values.split(), dtype=np.float64)
            if vector.shape != (dimension,):
                raise InvalidArgument('%s:%d: expected %d values, got %d' % (
                    path, number, dimension, vector.size))
            table[token] = vector
    return dimension, table


def load_vector_table(path):
    key = EMBEDDING_TABLE_KEY % (path, os.path.getmtime(path))
    loaded = cache.get(key)
    if loaded is None:
        loaded = read_vector_table(path)
        cache.add(key, loaded)
        logger.info('loaded %d vectors from %s', len(loaded[1]), path)
    return loaded


class PrecomputedBackend(object):
    def __init__(self, source):
        if not os.path.exists(source):
            raise IOError('embedding table %s does not exist' % source)
        self.source = source
        self.dimension, self.table = load_vector_table(source)
        self.unknown = self.table.get(UNK_ROW, np.zeros(self.dimension))

    def token_vectors(self, tokens):
        return np.stack([self.table.get(t, self.unknown) for t in tokens])


class ModelEncoderBackend(object):
    """Mean of the encoder's states over ``[CLS] tokens [SEP]``."""

    def __init__(self, model, vocab):
        self.model = model
        self.vocab = vocab
        self.dimension = model.config.d_model

    def token_vectors(self, tokens):
        ids = [CLS] + [self.vocab.id_of(t) for t in tokens]
        ids = ids[:self.model.config.max_len - 1] + [SEP]
        token_ids = torch.tensor([ids])
        sentence_index = torch.full_like(token_ids, -1)
        was_training = self.model.training
        self.model.eval()
        try:
            with torch.no_grad():
                states = self.model.encode(token_ids, sentence_index)
        finally:
            self.model.train(was_training)
        return states.token_states[0, 1:-1].double().numpy()


def build_backend(spec, model=None, vocab=None):
    if spec.kind == 'bag_mean':
        return BagMeanBackend(spec.dimension, spec.seed)
    if spec.kind == 'precomputed_file':
        return PrecomputedBackend(spec.source)
    if model is None or vocab is None:
        raise InvalidArgument('model_encoder backend needs a model and vocab')
    return ModelEncoderBackend(model, vocab)


def embed_tokens(tokens, backend):
    """Mean-pooled vector of ``tokens`` under ``backend``."""
    if not tokens:
        raise InvalidArgument('cannot embed an empty token list')
    return backend.token_vectors(list(tokens)).mean(axis=0)


def cosine_similarity(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise InvalidArgument('dimension mismatch %s vs %s' % (
            u.shape, v.shape))
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u < DEGENERATE_NORM or norm_v < DEGENERATE_NORM:
        return Similarity(0.0, True)
    score = float(np.dot(u, v) / (norm_u * norm_v))
    return Similarity(score, False)
