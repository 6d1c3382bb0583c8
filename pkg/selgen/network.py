"""Transformer encoder, sentence reconstruction, selector head and decoder.

The encoder reads ``[CLS] context [SEP] answer [SEP]``; sentence vectors are
grouped means of its token states; the selector scores each sentence and the
decoder generates the question conditioned on the encoder.
"""
import logging
import math
from dataclasses import asdict, dataclass, fields

import torch
import torch.nn.functional as F
from torch import nn

from .exceptions import InvalidArgument, InvariantViolation, NumericError
from .tokenizer import BOS, NO_SENTENCE, PAD


logger = logging.getLogger(__name__)

CONDITIONING_MODES = ('pooled', 'token_attention')


@dataclass
class ModelConfig:
    vocab_size: int
    d_model: int = 128
    encoder_layers: int = 2
    decoder_layers: int = 2
    attention_heads: int = 4
    feedforward_dim: int = 256
    max_len: int = 256
    selector_hidden: int = 128
    dropout: float = 0.1
    conditioning_mode: str = 'token_attention'
    qtype_classes: int = 8

    def __post_init__(self):
        for name in ('vocab_size', 'd_model', 'encoder_layers',
                     'decoder_layers', 'attention_heads', 'feedforward_dim',
                     'max_len', 'selector_hidden', 'qtype_classes'):
            if getattr(self, name) <= 0:
                raise InvalidArgument('%s must be positive' % name)
        if self.d_model % self.attention_heads:
            raise InvalidArgument(
                'd_model %d is not divisible by %d heads' % (
                    self.d_model, self.attention_heads))
        if not 0 <= self.dropout < 1:
            raise InvalidArgument('dropout must lie in [0, 1)')
        if self.conditioning_mode not in CONDITIONING_MODES:
            raise InvalidArgument(
                'unknown conditioning mode %r' % self.conditioning_mode)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        known = set(f.name for f in fields(cls))
        return cls(**dict((k, v) for k, v in values.items() if k in known))


@dataclass
class EncoderOutput:
    token_states: torch.Tensor
    pooled: torch.Tensor
    sentence_vectors: torch.Tensor
    sentence_mask: torch.Tensor
    token_mask: torch.Tensor


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model, heads, dropout):
        super(MultiHeadAttention, self).__init__()
        self.heads = heads
        self.d_k = d_model // heads
        self.query = nn.Linear(d_model, d_model)
        self.key = nn.Linear(d_model, d_model)
        self.value = nn.Linear(d_model, d_model)
        self.output = nn.Linear(d_model, d_model)
        self.dropout = nn.Dropout(dropout)

    def _split(self, x):
        batch, length, _ = x.shape
        return x.view(batch, length, self.heads, self.d_k).transpose(1, 2)

    def forward(self, x, memory, mask):
        # mask: (batch, 1 or len_q, len_k), True where attention is allowed
        q, k, v = self._split(self.query(x)), self._split(
            self.key(memory)), self._split(self.value(memory))
        scores = torch.matmul(q, k.transpose(-2, -1)) / math.sqrt(self.d_k)
        scores = scores.masked_fill(~mask.unsqueeze(1), float('-inf'))
        weights = self.dropout(scores.softmax(dim=-1))
        out = torch.matmul(weights, v).transpose(1, 2).contiguous()
        return self.output(out.view(x.size(0), x.size(1), -1))


class FeedForward(nn.Module):
    def __init__(self, d_model, hidden, dropout):
        super(FeedForward, self).__init__()
        self.linear1 = nn.Linear(d_model, hidden)
        self.linear2 = nn.Linear(hidden, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        return self.linear2(self.dropout(self.linear1(x).relu()))


class EncoderBlock(nn.Module):
    def __init__(self, config):
        super(EncoderBlock, self).__init__()
        d = config.d_model
        self.norm1 = nn.LayerNorm(d)
        self.attention = MultiHeadAttention(
            d, config.attention_heads, config.dropout)
        self.norm2 = nn.LayerNorm(d)
        self.feed_forward = FeedForward(
            d, config.feedforward_dim, config.dropout)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x, mask, keep):
        h = self.norm1(x)
        x = x + self.dropout(self.attention(h, h, mask))
        x = x + self.dropout(self.feed_forward(self.norm2(x)))
        # pad rows never carry state
        return x * keep


class DecoderBlock(nn.Module):
    def __init__(self, config):
        super(DecoderBlock, self).__init__()
        d = config.d_model
        self.norm1 = nn.LayerNorm(d)
        self.self_attention = MultiHeadAttention(
            d, config.attention_heads, config.dropout)
        self.norm2 = nn.LayerNorm(d)
        self.cross_attention = MultiHeadAttention(
            d, config.attention_heads, config.dropout)
        self.norm3 = nn.LayerNorm(d)
        self.feed_forward = FeedForward(
            d, config.feedforward_dim, config.dropout)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, y, memory, self_mask, memory_mask):
        h = self.norm1(y)
        y = y + self.dropout(self.self_attention(h, h, self_mask))
        y = y + self.dropout(
            self.cross_attention(self.norm2(y), memory, memory_mask))
        return y + self.dropout(self.feed_forward(self.norm3(y)))


class SelectorHead(nn.Module):
    """Two feed-forward layers o(h); p = 1 / (1 + exp(o(h)))."""

    def __init__(self, d_model, hidden):
        super(SelectorHead, self).__init__()
        self.hidden = nn.Linear(d_model, hidden)
        self.output = nn.Linear(hidden, 1)

    def logits(self, vectors):
        return self.output(self.hidden(vectors).relu()).squeeze(-1)

    def forward(self, vectors):
        return torch.sigmoid(-self.logits(vectors))


def group_sentence_states(token_states, sentence_index):
    """Grouped mean of token states per sentence ordinal.

    Works on ``(batch, length, d)`` states; returns the ``(batch, n, d)``
    sentence vectors and a ``(batch, n)`` validity mask. Ordinal -1 marks
    tokens outside every sentence.
    """
    if sentence_index.shape != token_states.shape[:2]:
        raise InvalidArgument('sentence index shape %s does not match %s' % (
            tuple(sentence_index.shape), tuple(token_states.shape[:2])))
    batch, _, d = token_states.shape
    per_item = sentence_index.max(dim=1).values + 1
    count = int(per_item.max().clamp(min=0)) if batch else 0
    ordinals = torch.arange(count, device=token_states.device)
    mask = ordinals.unsqueeze(0) < per_item.unsqueeze(1)
    if count == 0:
        return token_states.new_zeros(batch, 0, d), mask
    groups = (sentence_index.unsqueeze(-1) == ordinals).to(token_states.dtype)
    sizes = groups.sum(dim=1)
    if bool(((sizes == 0) & mask).any()):
        raise InvariantViolation('a sentence ordinal has no tokens')
    sums = torch.matmul(groups.transpose(1, 2), token_states)
    return sums / sizes.clamp(min=1).unsqueeze(-1), mask


class SelectorGenerator(nn.Module):
    def __init__(self, config):
        super(SelectorGenerator, self).__init__()
        self.config = config
        d = config.d_model
        self.token_embedding = nn.Embedding(
            config.vocab_size, d, padding_idx=PAD)
        self.encoder_positions = nn.Embedding(config.max_len, d)
        self.decoder_positions = nn.Embedding(config.max_len, d)
        self.encoder_blocks = nn.ModuleList(
            [EncoderBlock(config) for _ in range(config.encoder_layers)])
        self.encoder_norm = nn.LayerNorm(d)
        self.decoder_blocks = nn.ModuleList(
            [DecoderBlock(config) for _ in range(config.decoder_layers)])
        self.decoder_norm = nn.LayerNorm(d)
        self.selector = SelectorHead(d, config.selector_hidden)
        self.qtype_head = nn.Linear(d, config.qtype_classes)
        self.output_projection = nn.Linear(d, config.vocab_size)
        self.dropout = nn.Dropout(config.dropout)

    def encode(self, token_ids, sentence_index):
        length = token_ids.size(1)
        if length > self.config.max_len:
            raise InvalidArgument('input length %d exceeds max_len %d' % (
                length, self.config.max_len))
        token_mask = token_ids != PAD
        keep = token_mask.unsqueeze(-1).to(self.token_embedding.weight.dtype)
        positions = torch.arange(length, device=token_ids.device)
        x = self.token_embedding(token_ids) + self.encoder_positions(positions)
        x = self.dropout(x) * keep
        mask = token_mask.unsqueeze(1)
        for layer, block in enumerate(self.encoder_blocks):
            x = block(x, mask, keep)
            if not bool(torch.isfinite(x).all()):
                raise NumericError(
                    'non-finite encoder activation in layer %d' % layer,
                    layer=layer)
        x = self.encoder_norm(x) * keep
        pooled = x.sum(dim=1) / keep.sum(dim=1)
        vectors, sentence_mask = group_sentence_states(x, sentence_index)
        return EncoderOutput(x, pooled, vectors, sentence_mask, token_mask)

    def select(self, encoded):
        return self.selector(encoded.sentence_vectors)

    def classify_question(self, encoded):
        return self.qtype_head(encoded.pooled)

    def memory(self, encoded):
        if self.config.conditioning_mode == 'pooled':
            memory = encoded.pooled.unsqueeze(1)
            mask = torch.ones(memory.size(0), 1, 1, dtype=torch.bool,
                              device=memory.device)
            return memory, mask
        return encoded.token_states, encoded.token_mask.unsqueeze(1)

    def decode(self, encoded, prefix):
        """Next-token logits for every position of ``prefix``."""
        length = prefix.size(1)
        if length == 0:
            raise InvalidArgument('decoder prefix is empty')
        if length > self.config.max_len:
            raise InvalidArgument('prefix length %d exceeds max_len %d' % (
                length, self.config.max_len))
        memory, memory_mask = self.memory(encoded)
        causal = torch.ones(length, length, dtype=torch.bool,
                            device=prefix.device).tril()
        self_mask = causal.unsqueeze(0) & (prefix != PAD).unsqueeze(1)
        positions = torch.arange(length, device=prefix.device)
        y = self.dropout(
            self.token_embedding(prefix) + self.decoder_positions(positions))
        for block in self.decoder_blocks:
            y = block(y, memory, self_mask, memory_mask)
        return self.output_projection(self.decoder_norm(y))

    def forward(self, token_ids, sentence_index, prefix):
        encoded = self.encode(token_ids, sentence_index)
        return encoded, F.log_softmax(self.decode(encoded, prefix), dim=-1)


def build_model(config, seed=13):
    torch.manual_seed(seed)
    model = SelectorGenerator(config)
    logger.debug('built model with %d parameters',
                 sum(p.numel() for p in model.parameters()))
    return model


def input_tensors(model_input):
    return (torch.tensor([model_input.token_ids]),
            torch.tensor([model_input.sentence_index]))


def encoder_forward(model_input, model):
    if model_input.length > model.config.max_len:
        raise InvalidArgument('input length %d exceeds max_len %d' % (
            model_input.length, model.config.max_len))
    return model.encode(*input_tensors(model_input))


def reconstruct_sentence_vectors(token_states, sentence_index):
    """Row i is the mean of the token states whose sentence ordinal is i."""
    token_states = torch.as_tensor(token_states)
    sentence_index = torch.as_tensor(sentence_index)
    if token_states.dim() == 2:
        vectors, _ = group_sentence_states(
            token_states.unsqueeze(0), sentence_index.unsqueeze(0))
        return vectors[0]
    return group_sentence_states(token_states, sentence_index)[0]


def selector_forward(sentence_vectors, model):
    head = model.selector if isinstance(model, SelectorGenerator) else model
    d_model = head.hidden.in_features
    if sentence_vectors.size(-1) != d_model:
        raise InvalidArgument('sentence vectors have width %d, expected %d' % (
            sentence_vectors.size(-1), d_model))
    return head(sentence_vectors)


def decoder_step(encoded, prefix, model):
    """Distribution over the vocabulary for the token after ``prefix``."""
    if len(prefix) == 0:
        raise InvalidArgument('decoder prefix is empty')
    if prefix[0] != BOS:
        raise InvalidArgument('decoder prefix must start with BOS')
    if len(prefix) >= model.config.max_len:
        raise InvalidArgument('prefix length %d reaches max_len %d' % (
            len(prefix), model.config.max_len))
    logits = model.decode(encoded, torch.tensor([list(prefix)]))
    return logits[0, -1].softmax(dim=-1)


__all__ = [
    'NO_SENTENCE', 'ModelConfig', 'EncoderOutput', 'SelectorGenerator',
    'SelectorHead', 'build_model', 'encoder_forward',
    'reconstruct_sentence_vectors', 'selector_forward', 'decoder_step',
    'group_sentence_states']
