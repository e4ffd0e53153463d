"""
Unit tests for the vector quantizer and the VQ-VAE assembly.
"""

import math
import unittest

import numpy as np
import torch

from duin.config import QuantizerConfig, RegressorConfig
from duin.model import (
    DuinVQVAE,
    ModelError,
    QuantizeResult,
    Regressor,
    VectorQuantizer,
    codex_perplexity,
    codex_utilization,
    quantize,
    vq_loss_terms,
)
from duin.numeric import mse, seed_everything

from .helpers import tiny_config


class TestQuantize(unittest.TestCase):
    """Test cases for nearest-row selection."""

    def setUp(self):
        self.codex = torch.tensor([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])

    def test_cosine_nearest(self):
        """Test the row with the highest cosine similarity wins."""
        z = torch.tensor([[2.0, 0.1], [-5.0, 0.2], [0.1, 3.0]])
        indices, rows = quantize(z, self.codex)
        self.assertEqual(indices.tolist(), [0, 2, 1])
        torch.testing.assert_close(rows, self.codex[[0, 2, 1]])

    def test_scale_invariant(self):
        """Test selection ignores query magnitude."""
        z = torch.randn(10, 2)
        self.assertEqual(quantize(z, self.codex)[0].tolist(), quantize(7.0 * z, self.codex)[0].tolist())

    def test_zero_query(self):
        """Test a zero query selects row 0."""
        self.assertEqual(quantize(torch.zeros(1, 2), self.codex)[0].tolist(), [0])

    def test_ties_to_lowest_index(self):
        """Test duplicate rows resolve to the lower index."""
        codex = torch.tensor([[0.0, 1.0], [0.0, 1.0]])
        self.assertEqual(quantize(torch.tensor([[0.0, 2.0]]), codex)[0].tolist(), [0])

    def test_usage_statistics(self):
        """Test utilization and perplexity of code counts."""
        self.assertEqual(codex_utilization(torch.tensor([1, 1, 0, 0])), 0.5)
        self.assertAlmostEqual(codex_perplexity(torch.tensor([1, 1, 0, 0])), 2.0)
        self.assertAlmostEqual(codex_perplexity(torch.tensor([5, 5, 5, 5])), 4.0)
        self.assertEqual(codex_perplexity(torch.zeros(4, dtype=torch.long)), 0.0)


class TestVectorQuantizer(unittest.TestCase):
    """Test cases for the EMA quantizer module."""

    def setUp(self):
        seed_everything(0)
        self.vq = VectorQuantizer(8, QuantizerConfig(n_codex=16, d_codex=4))

    def test_straight_through_gradient(self):
        """Test forward uses z_q while the gradient treats quantization as identity."""
        z_c = torch.randn(3, 4, requires_grad=True)
        _, z_q = quantize(z_c, self.vq.codex)
        out = self.vq.straight_through(z_c, z_q)
        torch.testing.assert_close(out, self.vq.proj_out(z_q))
        out.sum().backward()
        expected = self.vq.proj_out.weight.sum(dim=0).expand(3, 4)
        torch.testing.assert_close(z_c.grad, expected)

    def test_loss_terms(self):
        """Test the commitment term is beta * mse and the codebook term is detached from z_c."""
        z_c = torch.randn(5, 4, requires_grad=True)
        z_q = torch.randn(5, 4)
        codebook, commit = vq_loss_terms(z_c, z_q, beta=0.25)
        self.assertAlmostEqual(commit.item(), 0.25 * mse(z_c, z_q).item(), places=6)
        self.assertFalse(codebook.requires_grad)

    def test_ema_update_moves_rows_to_means(self):
        """Test with decay 0 assigned rows become the mean of their vectors."""
        vq = VectorQuantizer(8, QuantizerConfig(n_codex=16, d_codex=4, decay=0.0))
        z_c = torch.randn(6, 4)
        indices = torch.tensor([3, 3, 3, 7, 7, 9])
        vq.ema_update(z_c, indices)
        torch.testing.assert_close(vq.codex[3], z_c[:3].mean(0), rtol=1e-3, atol=1e-5)
        torch.testing.assert_close(vq.codex[7], z_c[3:5].mean(0), rtol=1e-3, atol=1e-5)
        torch.testing.assert_close(vq.codex[9], z_c[5], rtol=1e-3, atol=1e-5)
        self.assertTrue(bool(torch.isfinite(vq.codex).all()))

    def test_usage_and_idle_tracking(self):
        """Test usage counts accumulate and idle steps reset on use."""
        self.vq.record_usage(torch.tensor([1, 1, 2]))
        self.vq.record_usage(torch.tensor([2]))
        self.assertEqual(self.vq.usage_counts[1].item(), 2)
        self.assertEqual(self.vq.usage_counts[2].item(), 2)
        self.assertEqual(self.vq.idle_steps[1].item(), 1)
        self.assertEqual(self.vq.idle_steps[2].item(), 0)
        self.assertEqual(self.vq.idle_steps[0].item(), 2)
        self.vq.reset_usage()
        self.assertEqual(int(self.vq.usage_counts.sum()), 0)

    def test_dead_code_reseed(self):
        """Test rows idle past the threshold are replaced by pool vectors."""
        self.vq.idle_steps[5] = 10
        pool = torch.randn(20, 4)
        n = self.vq.dead_code_reseed(pool, threshold_steps=10, generator=torch.Generator().manual_seed(0))
        self.assertEqual(n, 1)
        self.assertTrue(any(torch.equal(self.vq.codex[5], row) for row in pool))
        self.assertEqual(self.vq.idle_steps[5].item(), 0)
        self.assertEqual(self.vq.dead_code_reseed(pool, threshold_steps=0), 0)

    def test_codex_changes_only_in_training(self):
        """Test forward never moves the codex and update_codex skips eval and frozen modes."""
        e = torch.randn(2, 5, 8)
        before = self.vq.codex.clone()
        self.vq.train()
        result = self.vq(e)
        torch.testing.assert_close(self.vq.codex, before)
        self.assertEqual(int(self.vq.usage_counts.sum()), 0)

        self.vq.eval()
        self.assertEqual(self.vq.update_codex(result), 0)
        torch.testing.assert_close(self.vq.codex, before)

        self.vq.train()
        self.vq.frozen = True
        self.vq.update_codex(result)
        torch.testing.assert_close(self.vq.codex, before)
        self.assertEqual(int(self.vq.usage_counts.sum()), 0)

        self.vq.frozen = False
        self.vq.update_codex(result)
        self.assertFalse(torch.equal(self.vq.codex, before))
        self.assertEqual(int(self.vq.usage_counts.sum()), 10)

    def test_ema_converges_to_centroids(self):
        """Test repeated updates with decay 0.99 settle on the centroid of each row's vectors."""
        vq = VectorQuantizer(8, QuantizerConfig(n_codex=4, d_codex=4, decay=0.99))
        z_c = torch.randn(8, 4, generator=torch.Generator().manual_seed(4))
        indices = torch.tensor([0, 0, 1, 1, 2, 2, 3, 3])
        for _ in range(100):
            vq.ema_update(z_c, indices)
        centroids = z_c.view(4, 2, 4).mean(dim=1)
        self.assertLess(float((vq.codex - centroids).abs().max()), 1e-3)

    def test_unassigned_rows_keep_initial_value(self):
        """Test rows that never received a vector are not pulled toward zero."""
        before = self.vq.codex.clone()
        self.vq.ema_update(torch.randn(3, 4), torch.tensor([1, 1, 2]))
        torch.testing.assert_close(self.vq.codex[3:], before[3:])
        torch.testing.assert_close(self.vq.codex[0], before[0])

    def test_reseeding_keeps_more_codes_alive(self):
        """Test dead-row reseeding never lowers utilization on a narrow cone of vectors."""
        gen = torch.Generator().manual_seed(5)
        centre = torch.tensor([3.0, 0.0, 0.0, 0.0])
        batches = [centre + 0.3 * torch.randn(64, 4, generator=gen) for _ in range(5)]

        def final_utilization(threshold):
            seed_everything(0)
            vq = VectorQuantizer(8, QuantizerConfig(n_codex=16, d_codex=4))
            vq.dead_code_threshold = threshold
            reseed_gen = torch.Generator().manual_seed(6)
            reseeded = 0
            for _ in range(10):
                vq.reset_usage()
                for z_c in batches:
                    indices, z_q = quantize(z_c, vq.codex)
                    result = QuantizeResult(
                        indices=indices,
                        z_c=z_c,
                        z_q=z_q,
                        embeddings=z_q,
                        codebook_loss=torch.zeros(()),
                        commit_loss=torch.zeros(()),
                    )
                    reseeded += vq.update_codex(result, reseed_gen)
            return vq.utilization(), reseeded

        plain, none_reseeded = final_utilization(0)
        reseeding, n_reseeded = final_utilization(3)
        self.assertEqual(none_reseeded, 0)
        self.assertGreater(n_reseeded, 0)
        self.assertGreaterEqual(reseeding, plain)

    def test_collapse_warning(self):
        """Test a warning is logged below 5% utilization."""
        with self.assertLogs("duin.model.quantizer", level="WARNING"):
            self.assertEqual(self.vq.check_collapse(), 0.0)

    def test_forward_shapes(self):
        """Test result shapes for a (B, N, d) input."""
        result = self.vq(torch.randn(2, 5, 8))
        self.assertEqual(result.indices.shape, (2, 5))
        self.assertEqual(result.z_c.shape, (2, 5, 4))
        self.assertEqual(result.embeddings.shape, (2, 5, 8))
        self.assertEqual(result.commit_loss.dim(), 0)


class TestRegressor(unittest.TestCase):
    """Test cases for the decoder and time regression head."""

    def test_shape_law(self):
        """Test (B, N, d) -> (B, C, W * N)."""
        cfg = tiny_config()
        regressor = Regressor(8, 3, 10, 40, cfg.regressor)
        for n in (1, 3, 4):
            self.assertEqual(regressor(torch.randn(2, n, 8)).shape, (2, 3, 10 * n))

    def test_length_mismatch(self):
        """Test a head that does not produce W * N samples raises ModelError."""
        head = RegressorConfig(
            n_layers=1,
            n_heads=2,
            head_dim=4,
            ffn_dim=16,
            head_channels=[4],
            head_kernels=[5],
            head_strides=[5],
            head_paddings=[0],
            head_output_paddings=[0],
        )
        regressor = Regressor(8, 3, 10, 40, head)
        with self.assertRaises(ModelError):
            regressor(torch.randn(1, 2, 8))


class TestDuinVQVAE(unittest.TestCase):
    """Test cases for the assembled reconstruction model."""

    def setUp(self):
        seed_everything(0)
        self.model = DuinVQVAE.from_config(tiny_config())

    def test_reconstruction_matches_truncated_target(self):
        """Test reconstruction and target share the whole-patch shape."""
        x = torch.randn(2, 3, 35)
        out = self.model(x)
        self.assertEqual(out.reconstruction.shape, (2, 3, 30))
        torch.testing.assert_close(out.target, x[..., :30])

    def test_encoder_trained_through_quantizer(self):
        """Test the reconstruction loss reaches the encoder."""
        out = self.model(torch.randn(2, 3, 30))
        loss = mse(out.reconstruction, out.target) + out.quantized.commit_loss
        loss.backward()
        grad = self.model.encoder.spatial.projection.weight.grad
        self.assertGreater(float(grad.abs().sum()), 0.0)
        self.assertIsNone(self.model.quantizer.codex.grad)

    def test_code_indices_leave_state(self):
        """Test index extraction does not update the codex or usage."""
        self.model.train()
        before = self.model.quantizer.codex.clone()
        indices = self.model.code_indices(torch.randn(2, 3, 30))
        self.assertEqual(indices.shape, (2, 3))
        self.assertTrue(bool((indices < 16).all()))
        torch.testing.assert_close(self.model.quantizer.codex, before)
        self.assertEqual(int(self.model.quantizer.usage_counts.sum()), 0)

    def test_perplexity_bounds(self):
        """Test perplexity lies between 1 and the number of used codes."""
        self.model.train()
        out = self.model(torch.randn(4, 3, 40))
        self.model.quantizer.update_codex(out.quantized)
        used = int((self.model.quantizer.usage_counts > 0).sum())
        self.assertGreaterEqual(self.model.quantizer.perplexity(), 1.0 - 1e-9)
        self.assertLessEqual(self.model.quantizer.perplexity(), used + 1e-9)
        self.assertLessEqual(used, 16)
        self.assertTrue(math.isfinite(self.model.quantizer.utilization()))


class TestQuantizerOracle(unittest.TestCase):
    """Test cases comparing quantization with a brute-force scan."""

    def setUp(self):
        gen = torch.Generator().manual_seed(0)
        self.codex = torch.randn(64, 8, generator=gen, dtype=torch.float64)
        self.queries = torch.randn(1000, 8, generator=gen, dtype=torch.float64)

    def test_matches_brute_force(self):
        """Test every index is the row of highest cosine similarity."""
        indices, _ = quantize(self.queries, self.codex)
        codex = self.codex.numpy()
        expected = []
        for q in self.queries.numpy():
            cosines = [float(q @ row) / (np.linalg.norm(q) * np.linalg.norm(row)) for row in codex]
            expected.append(int(np.argmax(cosines)))
        self.assertEqual(indices.tolist(), expected)

    def test_positive_rescaling(self):
        """Test positive scaling of queries never changes the index."""
        indices, _ = quantize(self.queries, self.codex)
        scales = torch.logspace(-2, 2, 1000, dtype=torch.float64).unsqueeze(1)
        self.assertEqual(quantize(self.queries * scales, self.codex)[0].tolist(), indices.tolist())

    def test_commit_vanishes_without_beta(self):
        """Test the commitment term is zero at beta = 0."""
        _, commit = vq_loss_terms(torch.randn(5, 4), torch.randn(5, 4), beta=0.0)
        self.assertEqual(commit.item(), 0.0)
