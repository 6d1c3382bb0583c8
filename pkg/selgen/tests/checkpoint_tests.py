import os
import tempfile

import torch
from django.test import SimpleTestCase

from selgen.checkpoint import (MAGIC, SELECTOR_PREFIX, Checkpoint,
                               load_checkpoint, save_checkpoint)
from selgen.exceptions import InvalidArgument
from selgen.network import build_model, encoder_forward
from selgen.tokenizer import BOS, assemble_model_input, build_vocab

from .factories import example, tiny_model_config


class CheckpointTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'checkpoint.bin')
        self.example = example('Paris is big. It has a river.',
                               'What is big?', 'Paris')
        self.vocab = build_vocab([self.example])
        self.config = tiny_model_config(len(self.vocab))
        self.model = build_model(self.config, seed=4).eval()

    def tearDown(self):
        self.tmp.cleanup()

    def checkpoint(self, **kwargs):
        return Checkpoint(model_config=self.config,
                          state=self.model.state_dict(), vocab=self.vocab,
                          **kwargs)

    def test_reloaded_model_scores_identically(self):
        save_checkpoint(self.checkpoint(step=12, history=[{'epoch': 1}]),
                        self.path)
        loaded = load_checkpoint(self.path)
        self.assertEqual(loaded.model_config, self.config)
        self.assertEqual(loaded.vocab.tokens, self.vocab.tokens)
        self.assertEqual(loaded.step, 12)
        self.assertEqual(loaded.history, [{'epoch': 1}])
        self.assertFalse(loaded.has_selector)

        model_input = assemble_model_input(self.example, self.vocab, 64)
        prefix = torch.tensor([[BOS]])
        reloaded = loaded.build_model()
        with torch.no_grad():
            expected = self.model.decode(
                encoder_forward(model_input, self.model), prefix)
            actual = reloaded.decode(
                encoder_forward(model_input, reloaded), prefix)
        self.assertTrue(torch.equal(expected, actual))

    def test_selector_state(self):
        selector = build_model(self.config, seed=5)
        save_checkpoint(self.checkpoint(
            mode='two_step', selector_state=selector.state_dict()), self.path)
        with open(self.path, 'rb') as f:
            self.assertIn(SELECTOR_PREFIX.encode('utf-8'), f.read())
        loaded = load_checkpoint(self.path)
        self.assertTrue(loaded.has_selector)
        rebuilt = loaded.build_selector_model()
        for name, tensor in selector.state_dict().items():
            self.assertTrue(torch.equal(rebuilt.state_dict()[name], tensor))

    def test_no_selector(self):
        self.assertRaises(InvalidArgument,
                          self.checkpoint().build_selector_model)

    def test_bad_magic(self):
        with open(self.path, 'wb') as f:
            f.write(b'NOTACKPT' + MAGIC)
        self.assertRaises(InvalidArgument, load_checkpoint, self.path)

    def test_truncated(self):
        save_checkpoint(self.checkpoint(), self.path)
        with open(self.path, 'rb') as f:
            data = f.read()
        with open(self.path, 'wb') as f:
            f.write(data[:-16])
        self.assertRaises(InvalidArgument, load_checkpoint, self.path)
