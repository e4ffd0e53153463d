"""
Unit tests for the signal store.

Covers recording validation, the binary format, the synthetic generator,
pre-training segmentation, trial extraction, shift augmentation and
stratified splitting.
"""

import struct
import tempfile
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from scipy import signal, stats
from hypothesis import strategies as st

from duin.signal_store import (
    AnnotationError,
    ChannelMeta,
    PretrainDataset,
    Recording,
    RecordingFormatError,
    Sample,
    SignalStoreError,
    SplitError,
    SplitSpec,
    SyntheticSpec,
    TrialAnnotation,
    TrialDataset,
    augment_trial,
    extract_trial_samples,
    fetch_pretrain_sample,
    generate_synthetic,
    load_recording,
    save_recording,
    segment_pretrain,
    select_channels,
    shift_sample,
    split_dataset,
)
from duin.signal_store.persistence import HEADER, sidecar_path
from duin.signal_store.synthetic import TEMPLATE_BAND_HZ, colored_noise

from .helpers import make_channels, make_recording


def _labeled_samples(n_classes: int, per_class: int, length: int = 20) -> list[Sample]:
    samples = []
    for k in range(n_classes):
        for j in range(per_class):
            data = np.full((2, length), k * 100 + j, dtype=np.float32)
            samples.append(Sample(data=data, label=k, source_offset=j))
    return samples


class TestRecording(unittest.TestCase):
    """Test cases for the Recording container."""

    def test_basic_properties(self):
        """Test shape-derived properties."""
        rec = make_recording(n_channels=4, n_samples=500, sample_rate_hz=250.0)
        self.assertEqual(rec.n_channels, 4)
        self.assertEqual(rec.n_samples, 500)
        self.assertAlmostEqual(rec.duration_seconds, 2.0)
        self.assertEqual(rec.channel_names, ["A1", "A2", "A3", "A4"])

    def test_channel_count_mismatch(self):
        """Test that data rows must match the channel list."""
        with self.assertRaises(ValueError):
            Recording("s", 100.0, make_channels(3), np.zeros((4, 10), dtype=np.float32))

    def test_non_finite_rejected(self):
        """Test that NaN data is rejected."""
        data = np.zeros((2, 10), dtype=np.float32)
        data[1, 3] = np.nan
        with self.assertRaises(ValueError):
            Recording("s", 100.0, make_channels(2), data)

    def test_duplicate_channel_identity(self):
        """Test that repeated (name, electrode, contact) triples are rejected."""
        ch = ChannelMeta("A1", "A", 0)
        with self.assertRaises(ValueError):
            Recording("s", 100.0, [ch, ch], np.zeros((2, 10), dtype=np.float32))

    def test_trial_overrun_rejected(self):
        """Test that a trial running past the end is rejected."""
        with self.assertRaises(ValueError):
            make_recording(n_samples=100, trials=[TrialAnnotation(90, 20, 0)])

    def test_empty_channel_name(self):
        """Test that an empty channel name raises ValueError."""
        with self.assertRaises(ValueError):
            ChannelMeta("", "A", 0)

    def test_electrode_grouping(self):
        """Test rows are grouped by electrode and sorted by contact."""
        channels = [
            ChannelMeta("B2", "B", 1),
            ChannelMeta("A1", "A", 0),
            ChannelMeta("B1", "B", 0),
        ]
        rec = Recording("s", 100.0, channels, np.zeros((3, 10), dtype=np.float32))
        self.assertEqual(rec.electrodes(), {"B": [2, 0], "A": [1]})

    def test_with_data_rescales_trials(self):
        """Test that a rate change rescales trial onsets and lengths."""
        rec = make_recording(
            n_samples=1000, sample_rate_hz=200.0, trials=[TrialAnnotation(100, 300, 0)]
        )
        halved = rec.with_data(rec.data[:, ::2].copy(), sample_rate_hz=100.0)
        self.assertEqual(halved.trials, [TrialAnnotation(50, 150, 0)])


class TestPersistence(unittest.TestCase):
    """Test cases for the binary recording format."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "rec.duin"

    def tearDown(self):
        self.tmp.cleanup()

    def test_header_size(self):
        """Test the fixed header is 28 bytes."""
        self.assertEqual(HEADER.size, 28)

    def test_save_and_load_preserves_recording(self):
        """Test that data and metadata survive a save/load cycle."""
        rec = make_recording(n_samples=300, trials=[TrialAnnotation(10, 50, 1)], n_labels=2)
        save_recording(rec, self.path)
        loaded = load_recording(self.path)

        np.testing.assert_array_equal(loaded.data, rec.data)
        self.assertEqual(loaded.channels, rec.channels)
        self.assertEqual(loaded.trials, rec.trials)
        self.assertEqual(loaded.label_names, rec.label_names)
        self.assertEqual(loaded.sample_rate_hz, rec.sample_rate_hz)
        self.assertTrue(sidecar_path(self.path).exists())

    def test_bad_magic(self):
        """Test that a wrong magic number is reported."""
        save_recording(make_recording(n_samples=20), self.path)
        raw = bytearray(self.path.read_bytes())
        raw[:4] = b"XXXX"
        self.path.write_bytes(bytes(raw))
        with self.assertRaises(RecordingFormatError):
            load_recording(self.path)

    def test_version_mismatch(self):
        """Test that an unknown format version is reported."""
        save_recording(make_recording(n_samples=20), self.path)
        raw = bytearray(self.path.read_bytes())
        struct.pack_into("<H", raw, 4, 99)
        self.path.write_bytes(bytes(raw))
        with self.assertRaises(RecordingFormatError) as ctx:
            load_recording(self.path)
        self.assertIn("version", str(ctx.exception))

    def test_truncated_payload(self):
        """Test that a short payload is reported."""
        save_recording(make_recording(n_samples=20), self.path)
        self.path.write_bytes(self.path.read_bytes()[:-8])
        with self.assertRaises(RecordingFormatError):
            load_recording(self.path)

    def test_missing_file(self):
        """Test that a missing file raises SignalStoreError."""
        with self.assertRaises(SignalStoreError):
            load_recording(Path(self.tmp.name) / "absent.duin")


class TestSynthetic(unittest.TestCase):
    """Test cases for the synthetic corpus generator."""

    def setUp(self):
        self.spec = SyntheticSpec(
            n_channels=6, sample_rate_hz=200.0, n_classes=3, n_trials_per_class=4, seed=7
        )

    def test_deterministic(self):
        """Test that the same spec gives identical output."""
        a, trials_a = generate_synthetic(self.spec)
        b, trials_b = generate_synthetic(self.spec)
        np.testing.assert_array_equal(a.data, b.data)
        self.assertEqual(trials_a, trials_b)

    def test_seed_changes_output(self):
        """Test that a different seed changes the data."""
        a, _ = generate_synthetic(self.spec)
        other = SyntheticSpec(
            n_channels=6, sample_rate_hz=200.0, n_classes=3, n_trials_per_class=4, seed=8
        )
        b, _ = generate_synthetic(other)
        self.assertFalse(np.array_equal(a.data, b.data))

    def test_balanced_labels_and_gaps(self):
        """Test class balance and the minimum gap between trials."""
        rec, trials = generate_synthetic(self.spec)
        labels = [t.label for t in trials]
        self.assertEqual(sorted(set(labels)), [0, 1, 2])
        self.assertTrue(all(labels.count(k) == 4 for k in range(3)))
        gap = int(round(self.spec.gap_seconds * self.spec.sample_rate_hz))
        for prev, nxt in zip(trials, trials[1:], strict=False):
            self.assertGreaterEqual(nxt.onset_sample - prev.end_sample, gap)
        self.assertEqual(rec.trials, trials)

    def test_filler_length(self):
        """Test the non-task filler is at least four times the trial time."""
        rec, trials = generate_synthetic(self.spec)
        trial_total = sum(t.n_samples for t in trials)
        self.assertGreaterEqual(rec.n_samples - trials[-1].end_sample, 4 * trial_total)

    def test_only_informative_channels_carry_templates(self):
        """Test that without noise only informative rows are nonzero."""
        spec = SyntheticSpec(
            n_channels=6,
            sample_rate_hz=200.0,
            n_classes=3,
            n_trials_per_class=4,
            informative_channels=[1, 4],
            noise_sigma=0.0,
        )
        rec, _ = generate_synthetic(spec)
        active = np.flatnonzero(np.abs(rec.data).sum(axis=1) > 0)
        self.assertEqual(active.tolist(), [1, 4])

    def test_informative_channels_carry_band_power(self):
        """Test template-band power on the informative channels exceeds every other channel."""
        spec = SyntheticSpec(
            n_channels=6,
            sample_rate_hz=200.0,
            n_classes=3,
            n_trials_per_class=4,
            informative_channels=[2, 5],
            seed=7,
        )
        rec, _ = generate_synthetic(spec)
        freqs, psd = signal.welch(rec.data.astype(np.float64), fs=200.0, nperseg=256, axis=1)
        band = (freqs >= TEMPLATE_BAND_HZ[0]) & (freqs <= TEMPLATE_BAND_HZ[1])
        power = psd[:, band].sum(axis=1)
        others = [c for c in range(6) if c not in (2, 5)]
        self.assertGreater(power[[2, 5]].min(), power[others].max())

    def test_colored_shared_background(self):
        """Test a 1/f^2 background concentrates power at low frequency and correlates channels."""
        spec = SyntheticSpec(
            n_channels=4,
            sample_rate_hz=200.0,
            n_classes=2,
            n_trials_per_class=4,
            informative_channels=[],
            background_exponent=2.0,
            shared_background=0.9,
            seed=3,
        )
        rec, _ = generate_synthetic(spec)
        data = rec.data.astype(np.float64)
        np.testing.assert_allclose(data.std(axis=1), 1.0, atol=0.15)
        corr = np.corrcoef(data)
        off_diagonal = corr[~np.eye(4, dtype=bool)]
        self.assertTrue(np.all((off_diagonal > 0.7) & (off_diagonal < 1.0)), off_diagonal)

        freqs, psd = signal.welch(data, fs=200.0, nperseg=1024, axis=1)
        low = psd[:, freqs < 5.0].sum(axis=1) / psd.sum(axis=1)
        self.assertTrue(np.all(low > 0.9), low)

        white, _ = generate_synthetic(self.spec)
        freqs, psd = signal.welch(white.data.astype(np.float64), fs=200.0, nperseg=1024, axis=1)
        self.assertLess(float(psd[0, freqs < 5.0].sum() / psd[0].sum()), 0.15)

    def test_colored_noise_rows(self):
        """Test shaped rows have unit std and exponent 0 returns the white draw."""
        shaped = colored_noise(np.random.default_rng(0), (3, 4000), 100.0, 1.0)
        np.testing.assert_allclose(shaped.std(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(shaped.mean(axis=1), 0.0, atol=1e-9)
        white = colored_noise(np.random.default_rng(0), (3, 10), 100.0, 0.0)
        np.testing.assert_array_equal(white, np.random.default_rng(0).standard_normal((3, 10)))

    def test_invalid_spec(self):
        """Test that informative channels must exist."""
        with self.assertRaises(ValueError):
            SyntheticSpec(n_channels=3, informative_channels=[5])
        with self.assertRaises(ValueError):
            SyntheticSpec(shared_background=1.5)
        with self.assertRaises(ValueError):
            SyntheticSpec(background_exponent=-1.0)


class TestSegmentation(unittest.TestCase):
    """Test cases for pre-training segmentation and cropping."""

    def test_segment_count(self):
        """Test floor((T - seg) / hop) + 1 segments with 4 s hops."""
        rec = make_recording(n_samples=2000, sample_rate_hz=100.0)
        segments = segment_pretrain(rec)
        self.assertEqual(len(segments), 4)
        self.assertEqual([s.offset for s in segments], [0, 400, 800, 1200])
        self.assertTrue(all(s.n_samples == 800 for s in segments))

    def test_short_recording(self):
        """Test that a recording shorter than one segment is rejected."""
        rec = make_recording(n_samples=799, sample_rate_hz=100.0)
        with self.assertRaises(SignalStoreError):
            segment_pretrain(rec)

    def test_exclude_trials(self):
        """Test that segments overlapping trials can be dropped."""
        rec = make_recording(
            n_samples=2000, sample_rate_hz=100.0, trials=[TrialAnnotation(1700, 100, 0)]
        )
        segments = segment_pretrain(rec, exclude_trials=True)
        self.assertEqual([s.offset for s in segments], [0, 400, 800])

    def test_crop_inside_segment(self):
        """Test random 4 s crops stay inside their segment."""
        rec = make_recording(n_samples=2000, sample_rate_hz=100.0)
        segment = segment_pretrain(rec)[1]
        rng = np.random.default_rng(0)
        for _ in range(50):
            sample = fetch_pretrain_sample(rec, segment, rng)
            self.assertEqual(sample.n_samples, 400)
            self.assertGreaterEqual(sample.source_offset, segment.offset)
            self.assertLessEqual(sample.source_offset + 400, segment.end)
            np.testing.assert_array_equal(
                sample.data, rec.data[:, sample.source_offset : sample.source_offset + 400]
            )

    def test_crop_offsets_uniform(self):
        """Test crop starts are uniform over every admissible offset, both ends included."""
        rec = make_recording(n_samples=2000, sample_rate_hz=100.0)
        segment = segment_pretrain(rec)[1]
        rng = np.random.default_rng(11)
        starts = np.array(
            [fetch_pretrain_sample(rec, segment, rng).source_offset for _ in range(5000)]
        )
        relative = starts - segment.offset
        span = segment.n_samples - 400
        self.assertEqual((int(relative.min()), int(relative.max())), (0, span))
        result = stats.kstest((relative + 0.5) / (span + 1), "uniform")
        self.assertGreater(result.pvalue, 1e-3)

    def test_pretrain_batches(self):
        """Test batch shapes and that every segment is visited once."""
        rec = make_recording(n_channels=3, n_samples=2000, sample_rate_hz=100.0)
        dataset = PretrainDataset(rec, segment_pretrain(rec))
        batches = list(dataset.batches(3, np.random.default_rng(0)))
        self.assertEqual([b[1].shape for b in batches], [(3, 3, 400), (1, 3, 400)])
        seen = np.concatenate([b[0] for b in batches])
        self.assertEqual(sorted(seen.tolist()), [0, 1, 2, 3])


class TestTrials(unittest.TestCase):
    """Test cases for trial extraction and shift augmentation."""

    def test_extract_trial_samples(self):
        """Test one labeled 3 s window per trial, aligned to onset."""
        rec = make_recording(
            n_samples=1000, trials=[TrialAnnotation(100, 300, 1), TrialAnnotation(500, 300, 0)]
        )
        samples = extract_trial_samples(rec, rec.trials)
        self.assertEqual([s.label for s in samples], [1, 0])
        self.assertTrue(all(s.n_samples == 300 for s in samples))
        np.testing.assert_array_equal(samples[1].data, rec.data[:, 500:800])

    def test_extract_overrun(self):
        """Test that a trial window past the end raises AnnotationError."""
        rec = make_recording(n_samples=1000, trials=[TrialAnnotation(900, 50, 0)])
        with self.assertRaises(AnnotationError):
            extract_trial_samples(rec, rec.trials)

    def test_shift_right_and_left(self):
        """Test zero-filled shifts in both directions."""
        sample = Sample(data=np.arange(1, 6, dtype=np.float32)[None, :], label=0)
        right = shift_sample(sample, 2)
        left = shift_sample(sample, -2)
        np.testing.assert_array_equal(right.data[0], [0, 0, 1, 2, 3])
        np.testing.assert_array_equal(left.data[0], [3, 4, 5, 0, 0])
        self.assertEqual(right.label, 0)

    @given(shift=st.integers(min_value=-40, max_value=40))
    @settings(max_examples=50, deadline=None)
    def test_shift_preserves_shape(self, shift):
        """Test shifts keep the shape and zero exactly |shift| columns."""
        data = np.ones((3, 30), dtype=np.float32)
        out = shift_sample(Sample(data=data, label=1), shift).data
        self.assertEqual(out.shape, data.shape)
        zero_cols = int((out.sum(axis=0) == 0).sum())
        self.assertEqual(zero_cols, min(abs(shift), 30))

    def test_augment_bounded(self):
        """Test augmentation never shifts by more than 0.3 s."""
        rate = 100.0
        data = np.ones((1, 300), dtype=np.float32)
        rng = np.random.default_rng(3)
        for _ in range(100):
            out = augment_trial(Sample(data=data, label=0), rng, rate)
            self.assertLessEqual(int((out.data[0] == 0).sum()), 30)

    def test_trial_batches(self):
        """Test trial batches stack data and int64 labels."""
        dataset = TrialDataset(_labeled_samples(2, 3), sample_rate_hz=100.0, augment=True)
        batches = list(dataset.batches(4, np.random.default_rng(0)))
        self.assertEqual(batches[0][0].shape, (4, 2, 20))
        self.assertEqual(batches[0][1].dtype, np.int64)
        self.assertEqual(sum(len(b[1]) for b in batches), 6)

    def test_trial_dataset_requires_labels(self):
        """Test that unlabeled samples are rejected."""
        with self.assertRaises(SignalStoreError):
            TrialDataset([Sample(data=np.zeros((1, 5), dtype=np.float32))], 100.0)


class TestSplits(unittest.TestCase):
    """Test cases for stratified splitting."""

    def test_stratified_counts(self):
        """Test 20 trials per class split into 16/2/2 per class."""
        samples = _labeled_samples(8, 20)
        train, val, test = split_dataset(samples, SplitSpec())
        self.assertEqual((len(train), len(val), len(test)), (128, 16, 16))
        for part, per_class in ((train, 16), (val, 2), (test, 2)):
            labels = [s.label for s in part]
            self.assertTrue(all(labels.count(k) == per_class for k in range(8)))

    def test_disjoint_cover(self):
        """Test the splits partition the input."""
        samples = _labeled_samples(3, 7)
        parts = split_dataset(samples, SplitSpec(seed=4))
        ids = [id(s) for part in parts for s in part]
        self.assertEqual(len(ids), len(set(ids)))
        self.assertEqual(len(ids), len(samples))

    def test_deterministic_per_seed(self):
        """Test the same seed reproduces the split and another seed changes it."""
        samples = _labeled_samples(4, 10)
        a = split_dataset(samples, SplitSpec(seed=1))
        b = split_dataset(samples, SplitSpec(seed=1))
        c = split_dataset(samples, SplitSpec(seed=2))
        self.assertEqual([s.source_offset for s in a[1]], [s.source_offset for s in b[1]])
        self.assertNotEqual(
            [(s.label, s.source_offset) for s in a[0]], [(s.label, s.source_offset) for s in c[0]]
        )

    def test_too_few_samples(self):
        """Test fewer than 10 samples cannot be split."""
        with self.assertRaises(SplitError):
            split_dataset(_labeled_samples(3, 3), SplitSpec())

    def test_small_class(self):
        """Test a class with fewer than 3 samples cannot be split."""
        samples = _labeled_samples(2, 6) + _labeled_samples(3, 2)[4:]
        with self.assertRaises(SplitError):
            split_dataset(samples, SplitSpec())

    def test_invalid_fractions(self):
        """Test fractions must be positive and sum to 1."""
        with self.assertRaises(ValueError):
            SplitSpec(fractions=(0.9, 0.1, 0.0))
        with self.assertRaises(ValueError):
            SplitSpec(fractions=(0.5, 0.2, 0.2))


class TestSelectChannels(unittest.TestCase):
    """Test cases for channel subsetting."""

    def test_order_preserved(self):
        """Test rows follow the requested order."""
        rec = make_recording(n_channels=4, n_samples=50)
        sub = select_channels(rec, [3, 1])
        self.assertEqual(sub.channel_names, ["A4", "A2"])
        np.testing.assert_array_equal(sub.data, rec.data[[3, 1]])

    def test_invalid_indices(self):
        """Test out-of-range and repeated indices are rejected."""
        rec = make_recording(n_channels=4, n_samples=50)
        with self.assertRaises(ValueError):
            select_channels(rec, [4])
        with self.assertRaises(ValueError):
            select_channels(rec, [1, 1])
