"""Word-level vocabulary and model input assembly."""
import collections
import hashlib
import io
import logging
import re
from dataclasses import dataclass

from .corpus import normalize
from .exceptions import InputTooLongError, InvalidArgument


logger = logging.getLogger(__name__)

VOCAB_FORMAT_VERSION = 1
PAD, UNK, BOS, EOS, SEP, CLS = range(6)
SPECIAL_TOKENS = ('<pad>', '<unk>', '<bos>', '<eos>', '<sep>', '<cls>')
NO_SENTENCE = -1
_TOKEN = re.compile(r'\w+|[^\w\s]', re.UNICODE)


def tokenize(text):
    """Lowercased whitespace + punctuation tokenization."""
    return _TOKEN.findall(normalize(text).lower())


class Vocabulary(object):
    def __init__(self, tokens=()):
        self.id_to_token = list(SPECIAL_TOKENS)
        self.token_to_id = dict(
            (token, i) for i, token in enumerate(SPECIAL_TOKENS))
        for token in tokens:
            if token in self.token_to_id:
                raise InvalidArgument('duplicate vocabulary entry %r' % token)
            self.token_to_id[token] = len(self.id_to_token)
            self.id_to_token.append(token)

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    @property
    def tokens(self):
        """Non-special entries in id order."""
        return self.id_to_token[len(SPECIAL_TOKENS):]

    def id_of(self, token):
        return self.token_to_id.get(token, UNK)

    def header(self):
        specials = ' '.join('%s=%d' % (name, i) for i, name in enumerate(
            ('pad', 'unk', 'bos', 'eos', 'sep', 'cls')))
        return '#selgen-vocab v%d %s' % (VOCAB_FORMAT_VERSION, specials)

    def content_hash(self):
        payload = '\n'.join([self.header()] + self.tokens)
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()

    def save(self, path):
        with io.open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.header() + '\n')
            for token in self.tokens:
                f.write(token + '\n')

    @classmethod
    def load(cls, path):
        with io.open(path, 'r', encoding='utf-8') as f:
            lines = f.read().split('\n')
        header = lines[0].split()
        if not header or header[0] != '#selgen-vocab':
            raise InvalidArgument('%s is not a vocabulary file' % path)
        if header[1] != 'v%d' % VOCAB_FORMAT_VERSION:
            raise InvalidArgument('unsupported vocabulary version %s' % (
                header[1],))
        return cls(line for line in lines[1:] if line)


def build_vocab(examples, max_size=30000, min_freq=1):
    """Vocabulary over contexts and questions, most frequent first."""
    if not examples:
        raise InvalidArgument('cannot build a vocabulary from no examples')
    if max_size <= 10:
        raise InvalidArgument('max_size must be greater than 10')
    counts = collections.Counter()
    for example in examples:
        counts.update(tokenize(example.document.context))
        counts.update(tokenize(example.document.question))
    kept = sorted((token for token, n in counts.items()
                   if n >= min_freq and token not in SPECIAL_TOKENS),
                  key=lambda token: (-counts[token], token))
    vocab = Vocabulary(kept[:max_size])
    logger.info('built vocabulary of %d entries from %d distinct tokens',
                len(vocab), len(counts))
    return vocab


def encode_text(text, vocab):
    return [vocab.id_of(token) for token in tokenize(text)]


def decode_ids(ids, vocab):
    """Render ids as text, skipping PAD/BOS and stopping at the first EOS."""
    words = []
    for i in ids:
        i = int(i)
        if i < 0 or i >= len(vocab):
            raise InvalidArgument('token id %d outside vocabulary' % i)
        if i == EOS:
            break
        if i in (PAD, BOS):
            continue
        words.append(vocab.id_to_token[i])
    return ' '.join(words)


@dataclass(frozen=True)
class ModelInput:
    token_ids: tuple
    sentence_index: tuple
    answer_mask: tuple
    sentence_map: tuple

    @property
    def length(self):
        return len(self.token_ids)

    @property
    def sentence_count(self):
        return len(self.sentence_map)


def _drop_order(kept, anchor):
    """Farthest from the anchor sentence first; later sentence on ties."""
    return sorted((i for i in kept if i != anchor),
                  key=lambda i: (-abs(i - anchor), -i))


def assemble_model_input(example, vocab, max_len=256, keep_sentences=None):
    """Lay out ``[CLS] context [SEP] answer [SEP]`` with a sentence map.

    Only ``keep_sentences`` are laid out when given. Sentences are dropped
    whole, farthest from the answer sentence first, until the sequence
    fits ``max_len``.
    """
    if max_len < 8:
        raise InvalidArgument('max_len must be at least 8')
    answer_ids = encode_text(example.document.answer_text, vocab)
    if not answer_ids:
        raise InvalidArgument('answer of %r has no tokens' % example.id)
    budget = max_len - 3 - len(answer_ids)
    if budget < 1:
        raise InputTooLongError(
            'answer of %r needs %d positions, max_len is %d' % (
                example.id, len(answer_ids) + 3, max_len))

    if keep_sentences is None:
        kept = list(range(len(example.sentences)))
    else:
        kept = sorted(set(keep_sentences))
        if not kept or not all(
                0 <= i < len(example.sentences) for i in kept):
            raise InvalidArgument('keep_sentences of %r must name sentences '
                                  'of its context, got %r' % (
                                      example.id, keep_sentences))
    # the kept sentence nearest the answer, earlier one on ties
    anchor = min(kept, key=lambda i: (
        abs(i - example.answer_sentence_index), i))
    sentence_ids = dict(
        (i, encode_text(example.sentence_text(i), vocab)) for i in kept)
    used = sum(len(ids) for ids in sentence_ids.values())
    for i in _drop_order(kept, anchor):
        if used <= budget:
            break
        used -= len(sentence_ids.pop(i))
    if used > budget:
        logger.debug('clipping anchor sentence of %r to %d tokens',
                     example.id, budget)
        sentence_ids[anchor] = sentence_ids[anchor][:budget]

    token_ids = [CLS]
    sentence_index = [NO_SENTENCE]
    sentence_map = sorted(sentence_ids)
    for ordinal, original in enumerate(sentence_map):
        ids = sentence_ids[original]
        token_ids.extend(ids)
        sentence_index.extend([ordinal] * len(ids))
    token_ids.append(SEP)
    token_ids.extend(answer_ids)
    token_ids.append(SEP)
    sentence_index.extend([NO_SENTENCE] * (len(answer_ids) + 2))
    context_length = len(sentence_index) - len(answer_ids) - 2
    answer_mask = ([0] * (context_length + 1) + [1] * len(answer_ids) + [0])
    return ModelInput(tuple(token_ids), tuple(sentence_index),
                      tuple(answer_mask), tuple(sentence_map))
