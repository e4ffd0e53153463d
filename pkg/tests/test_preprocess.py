"""
Unit tests for signal conditioning.

Tests the zero-phase filters, rational resampling, bipolar re-referencing,
z-scoring and the combined pipeline.
"""

import unittest

import numpy as np

from duin.preprocess import (
    FilterSpec,
    FilterSpecError,
    ReferencingError,
    bandpass,
    bipolar_reref,
    notch,
    resample,
    resampling_ratio,
    run_pipeline,
    zscore,
)
from duin.signal_store import ChannelMeta, Recording, SyntheticSpec, TrialAnnotation, generate_synthetic

from .helpers import make_channels, make_recording


def _tone_recording(freqs_hz, rate=1000.0, seconds=10.0, n_channels=1) -> Recording:
    t = np.arange(int(rate * seconds)) / rate
    row = sum(np.sin(2 * np.pi * f * t) for f in freqs_hz)
    data = np.tile(row, (n_channels, 1))
    return Recording("tone", rate, make_channels(n_channels), data.astype(np.float64))


class TestFilters(unittest.TestCase):
    """Test cases for band-pass and notch filtering."""

    def test_bandpass_keeps_band_and_rejects_outside(self):
        """Test a 5 Hz tone passes and a 150 Hz tone is removed."""
        rec = _tone_recording([5.0, 150.0])
        out = bandpass(rec, 1.0, 40.0)
        clean = _tone_recording([5.0]).data
        middle = slice(2000, 8000)
        self.assertEqual(out.n_samples, rec.n_samples)
        self.assertLess(np.max(np.abs(out.data[:, middle] - clean[:, middle])), 0.05)

    def test_bandpass_zero_phase(self):
        """Test a centred impulse comes out symmetric and still peaking at its centre."""
        n = 20001
        centre = n // 2
        data = np.zeros((1, n))
        data[0, centre] = 1.0
        rec = Recording("pulse", 1000.0, make_channels(1), data)
        out = bandpass(rec, 5.0, 40.0).data[0]
        self.assertEqual(int(np.argmax(np.abs(out))), centre)
        tolerance = 1e-9 * abs(out[centre])
        np.testing.assert_allclose(out[:centre][::-1], out[centre + 1 :], atol=tolerance)

    def test_bandpass_preserves_dtype(self):
        """Test float32 input gives float32 output."""
        rec = make_recording(n_samples=2000, sample_rate_hz=1000.0)
        self.assertEqual(bandpass(rec, 1.0, 100.0).data.dtype, np.float32)

    def test_bandpass_invalid_band(self):
        """Test bands reaching Nyquist or inverted are rejected."""
        rec = make_recording(n_samples=2000, sample_rate_hz=200.0)
        with self.assertRaises(FilterSpecError):
            bandpass(rec, 1.0, 100.0)
        with self.assertRaises(FilterSpecError):
            bandpass(rec, 40.0, 10.0)

    def test_notch_removes_line_noise(self):
        """Test the 50 Hz component is rejected while 10 Hz survives."""
        rec = _tone_recording([10.0, 50.0])
        out = notch(rec, 50.0)
        clean = _tone_recording([10.0]).data
        middle = slice(3000, 7000)
        self.assertLess(np.max(np.abs(out.data[:, middle] - clean[:, middle])), 0.05)

    def test_notch_outside_nyquist(self):
        """Test a notch at or above Nyquist is rejected."""
        rec = make_recording(n_samples=500, sample_rate_hz=100.0)
        with self.assertRaises(FilterSpecError):
            notch(rec, 50.0)


class TestResampling(unittest.TestCase):
    """Test cases for rational resampling."""

    def test_ratios(self):
        """Test ratio reduction for common rate pairs."""
        self.assertEqual(resampling_ratio(1000.0, 250.0), (1, 4))
        self.assertEqual(resampling_ratio(2048.0, 1000.0), (125, 256))
        self.assertEqual(resampling_ratio(250.0, 1000.0), (4, 1))
        self.assertEqual(resampling_ratio(500.0, 500.0), (1, 1))

    def test_unsupported_ratios(self):
        """Test fractional upsampling and irrational ratios are rejected."""
        with self.assertRaises(FilterSpecError):
            resampling_ratio(300.0, 1000.0)
        with self.assertRaises(FilterSpecError):
            resampling_ratio(1000.0, 1000.0 * np.pi)

    def test_output_length_and_trials(self):
        """Test output length round(T * up / down) and rescaled trials."""
        rec = make_recording(
            n_samples=2048, sample_rate_hz=2048.0, trials=[TrialAnnotation(1024, 512, 0)]
        )
        out = resample(rec, 1000.0)
        self.assertEqual(out.n_samples, 1000)
        self.assertEqual(out.sample_rate_hz, 1000.0)
        self.assertEqual(out.trials[0].onset_sample, 500)

    def test_low_frequency_tone_preserved(self):
        """Test a 5 Hz tone matches its directly sampled version after 4x decimation."""
        rec = _tone_recording([5.0])
        out = resample(rec, 250.0)
        expected = _tone_recording([5.0], rate=250.0).data
        middle = slice(250, 2250)
        self.assertLess(np.max(np.abs(out.data[:, middle] - expected[:, middle])), 0.02)

    def test_identity_copies(self):
        """Test the identity ratio returns equal data in a new array."""
        rec = make_recording(n_samples=100)
        out = resample(rec, rec.sample_rate_hz)
        np.testing.assert_array_equal(out.data, rec.data)
        self.assertIsNot(out.data, rec.data)


class TestReferencing(unittest.TestCase):
    """Test cases for bipolar re-referencing and z-scoring."""

    def test_bipolar_pairs(self):
        """Test adjacent-contact differences, naming and channel count."""
        rec = make_recording(n_channels=6, n_samples=50, per_electrode=3)
        out = bipolar_reref(rec)
        self.assertEqual(out.channel_names, ["A2-A1", "A3-A2", "B2-B1", "B3-B2"])
        np.testing.assert_allclose(out.data[2], rec.data[4] - rec.data[3])
        self.assertEqual([ch.contact_index for ch in out.channels], [0, 1, 0, 1])

    def test_bipolar_single_contact(self):
        """Test an electrode with one contact raises ReferencingError."""
        channels = [ChannelMeta("A1", "A", 0), ChannelMeta("A2", "A", 1), ChannelMeta("B1", "B", 0)]
        rec = Recording("s", 100.0, channels, np.zeros((3, 10), dtype=np.float32))
        with self.assertRaises(ReferencingError):
            bipolar_reref(rec)

    def test_zscore(self):
        """Test zero mean, unit population std and float64 output."""
        rec = make_recording(n_channels=3, n_samples=500)
        rec.data[1] = rec.data[1] * 40.0 + 7.0
        out = zscore(rec)
        self.assertEqual(out.data.dtype, np.float64)
        np.testing.assert_allclose(out.data.mean(axis=1), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.data.std(axis=1), 1.0, atol=1e-9)

    def test_zscore_idempotent(self):
        """Test z-scoring an already standardized recording changes nothing."""
        rec = make_recording(n_channels=3, n_samples=500)
        rec.data[0] = rec.data[0] * 3.0 - 2.0
        once = zscore(rec)
        np.testing.assert_allclose(zscore(once).data, once.data, atol=1e-12)

    def test_zscore_flat_channel(self):
        """Test a constant channel raises an error naming it."""
        rec = make_recording(n_channels=3, n_samples=50)
        rec.data[2] = 5.0
        with self.assertRaises(ReferencingError) as ctx:
            zscore(rec)
        self.assertIn("A3", str(ctx.exception))


class TestPipeline(unittest.TestCase):
    """Test cases for the full conditioning chain."""

    def test_filter_spec_validation(self):
        """Test the notch must lie inside the band."""
        with self.assertRaises(ValueError):
            FilterSpec(low_hz=60.0, high_hz=200.0, notch_hz=50.0)
        with self.assertRaises(FilterSpecError):
            FilterSpec().check_rate(400.0)

    def test_filter_spec_dict(self):
        """Test FilterSpec to_dict/from_dict."""
        spec = FilterSpec(high_hz=120.0, bipolar=False)
        self.assertEqual(FilterSpec.from_dict(spec.to_dict()), spec)

    def test_synthetic_through_pipeline(self):
        """Test rate, channel count, normalization and trial rescaling."""
        rec, trials = generate_synthetic(
            SyntheticSpec(n_channels=8, sample_rate_hz=400.0, n_classes=2, n_trials_per_class=3)
        )
        spec = FilterSpec(low_hz=0.5, high_hz=60.0, notch_hz=50.0, target_rate_hz=100.0)
        out = run_pipeline(rec, spec)

        self.assertEqual(out.sample_rate_hz, 100.0)
        self.assertEqual(out.n_channels, 7)
        self.assertEqual(out.n_samples, int(round(rec.n_samples / 4)))
        np.testing.assert_allclose(out.data.std(axis=1), 1.0, atol=1e-6)
        self.assertEqual(len(out.trials), len(trials))
        self.assertEqual(out.trials[0].n_samples, 300)


def _gain_db(freq_hz: float, filtered: Recording) -> float:
    original = _tone_recording([freq_hz], seconds=100.0).data[0]
    middle = slice(len(original) // 5, 4 * len(original) // 5)
    rms_in = np.sqrt(np.mean(original[middle] ** 2))
    rms_out = np.sqrt(np.mean(filtered.data[0, middle] ** 2))
    return float(20 * np.log10(rms_out / rms_in))


class TestAttenuation(unittest.TestCase):
    """Test cases for pass-band and stop-band gains of the default chain."""

    def _filtered(self, freq_hz: float) -> Recording:
        rec = _tone_recording([freq_hz], seconds=100.0)
        return notch(bandpass(rec, 0.5, 200.0), 50.0)

    def test_pass_band_within_one_db(self):
        """Test a 10 Hz tone loses at most 1 dB."""
        self.assertGreater(_gain_db(10.0, self._filtered(10.0)), -1.0)

    def test_stop_bands_at_least_twenty_db(self):
        """Test 0.1 Hz, 50 Hz and 400 Hz tones are attenuated by 20 dB or more."""
        for freq in (0.1, 50.0, 400.0):
            with self.subTest(freq=freq):
                self.assertLess(_gain_db(freq, self._filtered(freq)), -20.0)

    def test_bipolar_cancels_common_mode(self):
        """Test a signal shared by all contacts vanishes after re-referencing."""
        rec = make_recording(n_channels=4, n_samples=200)
        common = np.sin(np.linspace(0, 20, 200)).astype(np.float32)
        rec.data[:] = common
        out = bipolar_reref(rec)
        np.testing.assert_array_equal(out.data, np.zeros_like(out.data))
