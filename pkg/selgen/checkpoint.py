"""Self-describing checkpoint files.

Layout: ``SELGENCK`` magic, little-endian uint32 header length, UTF-8 JSON
header, then every tensor as little-endian float32 at the offset the header
records for it.
"""
import io
import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np
import torch

from .exceptions import InvalidArgument
from .network import ModelConfig, SelectorGenerator
from .tokenizer import Vocabulary


logger = logging.getLogger(__name__)

MAGIC = b'SELGENCK'
FORMAT_VERSION = 1
SELECTOR_PREFIX = 'selector_model.'
_LENGTH = struct.Struct('<I')


@dataclass
class Checkpoint:
    model_config: ModelConfig
    state: dict
    vocab: Vocabulary
    mode: str = 'joint'
    step: int = 0
    seed: int = 13
    train_config: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    selector_state: dict = None

    @property
    def has_selector(self):
        return self.selector_state is not None

    def _load(self, state):
        model = SelectorGenerator(self.model_config)
        model.load_state_dict(state)
        model.eval()
        return model

    def build_model(self):
        return self._load(self.state)

    def build_selector_model(self):
        """Stage-one selector of a two-step run."""
        if not self.has_selector:
            raise InvalidArgument('checkpoint has no separate selector')
        return self._load(self.selector_state)


def _tensor_entries(state, prefix, offset):
    entries = []
    blobs = []
    for name in sorted(state):
        array = state[name].detach().cpu().numpy().astype('<f4')
        blob = array.tobytes()
        entries.append({'name': prefix + name, 'shape': list(array.shape),
                        'offset': offset, 'nbytes': len(blob)})
        blobs.append(blob)
        offset += len(blob)
    return entries, blobs, offset


def save_checkpoint(checkpoint, path):
    entries, blobs, offset = _tensor_entries(checkpoint.state, '', 0)
    if checkpoint.has_selector:
        more, more_blobs, offset = _tensor_entries(
            checkpoint.selector_state, SELECTOR_PREFIX, offset)
        entries.extend(more)
        blobs.extend(more_blobs)
    header = {
        'format_version': FORMAT_VERSION,
        'model_config': checkpoint.model_config.to_dict(),
        'vocab': checkpoint.vocab.tokens,
        'vocab_hash': checkpoint.vocab.content_hash(),
        'mode': checkpoint.mode,
        'step': checkpoint.step,
        'seed': checkpoint.seed,
        'train_config': checkpoint.train_config,
        'history': checkpoint.history,
        'tensors': entries,
    }
    encoded = json.dumps(header, sort_keys=True).encode('utf-8')
    with io.open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(_LENGTH.pack(len(encoded)))
        f.write(encoded)
        for blob in blobs:
            f.write(blob)
    logger.info('saved checkpoint %s (%d tensors, %d bytes of weights)',
                path, len(entries), offset)


def load_checkpoint(path):
    with io.open(path, 'rb') as f:
        data = f.read()
    if data[:len(MAGIC)] != MAGIC:
        raise InvalidArgument('%s is not a selgen checkpoint' % path)
    start = len(MAGIC) + _LENGTH.size
    (length,) = _LENGTH.unpack(data[len(MAGIC):start])
    header = json.loads(data[start:start + length].decode('utf-8'))
    if header.get('format_version') != FORMAT_VERSION:
        raise InvalidArgument('unsupported checkpoint version %r' % (
            header.get('format_version'),))
    vocab = Vocabulary(header['vocab'])
    if vocab.content_hash() != header['vocab_hash']:
        raise InvalidArgument('%s: vocabulary hash mismatch' % path)

    payload = data[start + length:]
    state = {}
    selector_state = {}
    for entry in header['tensors']:
        chunk = payload[entry['offset']:entry['offset'] + entry['nbytes']]
        if len(chunk) != entry['nbytes']:
            raise InvalidArgument('%s: truncated tensor %s' % (
                path, entry['name']))
        array = np.frombuffer(chunk, dtype='<f4').reshape(entry['shape'])
        tensor = torch.from_numpy(array.astype(np.float32))
        if entry['name'].startswith(SELECTOR_PREFIX):
            selector_state[entry['name'][len(SELECTOR_PREFIX):]] = tensor
        else:
            state[entry['name']] = tensor

    return Checkpoint(
        model_config=ModelConfig.from_dict(header['model_config']),
        state=state, vocab=vocab, mode=header['mode'], step=header['step'],
        seed=header['seed'], train_config=header['train_config'],
        history=header['history'], selector_state=selector_state or None)
