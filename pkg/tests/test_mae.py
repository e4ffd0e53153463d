"""
Unit tests for masked patch modeling.
"""

import math
import unittest

import numpy as np
import torch
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from duin.model import (
    DuinMAE,
    ModelError,
    apply_mask,
    mask_count,
    masked_loss,
    sample_batch_mask,
    sample_mask,
)
from duin.numeric import seed_everything

from .helpers import tiny_config


class TestMasking(unittest.TestCase):
    """Test cases for mask sampling and application."""

    def test_mask_count_rounding(self):
        """Test round(r * N) with halves rounded up."""
        self.assertEqual(mask_count(30, 0.5), 15)
        self.assertEqual(mask_count(5, 0.5), 3)
        self.assertEqual(mask_count(40, 0.3), 12)

    @given(
        n=st.integers(min_value=2, max_value=60),
        ratio=st.floats(min_value=0.05, max_value=0.95),
        seed=st.integers(min_value=0, max_value=1000),
    )
    @settings(max_examples=80, deadline=None)
    def test_mask_size(self, n, ratio, seed):
        """Test every sampled mask has exactly round(r * N) positions."""
        m = mask_count(n, ratio)
        assume(0 < m < n)
        mask = sample_mask(n, ratio, np.random.default_rng(seed))
        self.assertEqual(int(mask.sum()), m)

    def test_degenerate_masks(self):
        """Test empty and full masks are rejected."""
        rng = np.random.default_rng(0)
        with self.assertRaises(ModelError):
            sample_mask(10, 0.01, rng)
        with self.assertRaises(ModelError):
            sample_mask(10, 0.99, rng)

    def test_batch_masks_independent(self):
        """Test masks are drawn per sample."""
        masks = sample_batch_mask(16, 30, 0.5, np.random.default_rng(0))
        self.assertEqual(masks.shape, (16, 30))
        self.assertEqual(masks.dtype, torch.bool)
        self.assertGreater(len({tuple(row.tolist()) for row in masks}), 1)

    def test_apply_mask(self):
        """Test masked rows become the token and others pass through."""
        e = torch.randn(2, 4, 3)
        token = torch.tensor([9.0, 9.0, 9.0])
        mask = torch.tensor([[True, False, False, True], [False, False, False, False]])
        out = apply_mask(e, mask, token)
        torch.testing.assert_close(out[0, 0], token)
        torch.testing.assert_close(out[0, 3], token)
        torch.testing.assert_close(out[0, 1], e[0, 1])
        torch.testing.assert_close(out[1], e[1])


class TestMaskedLoss(unittest.TestCase):
    """Test cases for per-target masked losses."""

    def setUp(self):
        self.mask = torch.tensor([[True, False, True], [False, True, False]])

    def test_codex_loss_ignores_unmasked(self):
        """Test unmasked predictions do not affect the codex loss."""
        pred = torch.randn(2, 3, 5)
        target = torch.tensor([[1, 2, 3], [4, 0, 1]])
        a = masked_loss(pred, target, self.mask, "codex")
        pred2 = pred.clone()
        pred2[~self.mask] = 100.0
        b = masked_loss(pred2, target, self.mask, "codex")
        self.assertAlmostEqual(a.loss.item(), b.loss.item(), places=6)
        self.assertEqual(a.total, 3)

    def test_codex_accuracy(self):
        """Test top-1 hits count only masked positions."""
        target = torch.tensor([[1, 2, 3], [4, 0, 1]])
        pred = torch.nn.functional.one_hot(target, 5).float() * 10.0
        result = masked_loss(pred, target, self.mask, "codex")
        self.assertEqual((result.correct, result.total), (3, 3))

    def test_embedding_loss(self):
        """Test 1 - cosine is zero for parallel vectors."""
        target = torch.randn(2, 3, 4)
        result = masked_loss(target * 2.0, target, self.mask, "embedding")
        self.assertAlmostEqual(result.loss.item(), 0.0, places=5)

    def test_raw_loss(self):
        """Test raw targets use mean squared error over masked rows."""
        target = torch.zeros(2, 3, 4)
        pred = torch.ones(2, 3, 4)
        self.assertAlmostEqual(masked_loss(pred, target, self.mask, "raw").loss.item(), 1.0)


class TestDuinMAE(unittest.TestCase):
    """Test cases for the masked-modeling model."""

    def setUp(self):
        seed_everything(0)
        self.cfg = tiny_config().encoder
        self.model = DuinMAE(self.cfg, target="codex", out_dim=16)
        self.x = torch.randn(2, 3, 40)
        self.mask = sample_batch_mask(2, 4, 0.5, np.random.default_rng(0))

    def test_output_shape(self):
        """Test predictions have shape (B, N, out_dim)."""
        self.assertEqual(self.model(self.x, self.mask).shape, (2, 4, 16))

    def test_mask_shape_mismatch(self):
        """Test a mask for the wrong sequence length raises ModelError."""
        with self.assertRaises(ModelError):
            self.model(self.x, torch.zeros(2, 3, dtype=torch.bool))

    def test_masked_content_is_hidden(self):
        """Test predictions ignore the samples inside masked patches."""
        self.model.eval()
        mask = torch.tensor([[True, False, False, True], [False, True, False, False]])
        altered = self.x.clone()
        altered[0, :, 0:10] = 50.0
        altered[0, :, 30:40] = -50.0
        altered[1, :, 10:20] = 7.0
        torch.testing.assert_close(self.model(self.x, mask), self.model(altered, mask))

    def test_symmetric_passes(self):
        """Test symmetric masking runs the complement as a second pass."""
        target = torch.randint(0, 16, (2, 4))
        total, passes = self.model.symmetric_loss(self.x, target, self.mask, symmetric=True)
        self.assertEqual(len(passes), 2)
        self.assertEqual(passes[0].total + passes[1].total, 8)
        self.assertAlmostEqual(total.item(), passes[0].loss.item() + passes[1].loss.item(), places=5)

        _, single = self.model.symmetric_loss(self.x, target, self.mask, symmetric=False)
        self.assertEqual(len(single), 1)

    def test_mask_token_trained(self):
        """Test the mask token receives gradient."""
        target = torch.randint(0, 16, (2, 4))
        total, _ = self.model.symmetric_loss(self.x, target, self.mask)
        total.backward()
        self.assertGreater(float(self.model.mask_token.grad.abs().sum()), 0.0)


class TestMaskedLossInvariants(unittest.TestCase):
    """Test cases for loss values and mask symmetry."""

    def test_uniform_logits_give_log_codex_size(self):
        """Test uniform predictions cost ln(2048) per masked position."""
        pred = torch.zeros(2, 6, 2048)
        target = torch.randint(0, 2048, (2, 6))
        mask = torch.tensor([[True, False] * 3, [False, True] * 3])
        result = masked_loss(pred, target, mask, "codex")
        self.assertAlmostEqual(result.loss.item(), math.log(2048), places=5)

    def test_symmetric_total_invariant_under_swap(self):
        """Test the symmetric loss is unchanged when mask and complement swap."""
        seed_everything(0)
        model = DuinMAE(tiny_config().encoder, target="codex", out_dim=16).eval()
        x = torch.randn(2, 3, 40)
        target = torch.randint(0, 16, (2, 4))
        mask = sample_batch_mask(2, 4, 0.5, np.random.default_rng(1))
        with torch.no_grad():
            a, _ = model.symmetric_loss(x, target, mask)
            b, _ = model.symmetric_loss(x, target, ~mask)
        self.assertAlmostEqual(a.item(), b.item(), places=5)
