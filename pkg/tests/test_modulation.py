import numpy as np
import pytest

from jamgen.errors import ModelFormatError
from jamgen.systems import rml
from jamgen.systems.modulation import (DIGITAL_MODS, SAMPLES, SPS,
                                       ClassifierTrainConfig, evaluate_accuracy,
                                       gen_modulation_dataset, modulate,
                                       rrc_taps, train_classifier)

QAM16_POINTS = (np.array([a + 1j * b for a in (-3, -1, 1, 3)
                          for b in (-3, -1, 1, 3)]) / np.sqrt(10))


class TestGenerator:
    def test_bpsk_is_real_before_noise(self):
        ds = gen_modulation_dataset(("BPSK",), [10.0], 50, np.random.default_rng(0),
                                    include_clean=True)
        q_energy = float(np.sum(ds.clean[:, SAMPLES:] ** 2))
        total = float(np.sum(ds.clean ** 2))
        assert q_energy / total < 1e-9

    def test_measured_snr_within_half_db(self):
        for snr in (0.0, 10.0):
            ds = gen_modulation_dataset(DIGITAL_MODS, [snr], 1600,
                                        np.random.default_rng(1), include_clean=True)
            noise = ds.x - ds.clean
            measured = 10 * np.log10(np.sum(ds.clean ** 2) / np.sum(noise ** 2))
            assert measured == pytest.approx(snr, abs=0.5)

    def test_unit_power_before_noise(self):
        ds = gen_modulation_dataset(DIGITAL_MODS, [20.0], 160,
                                    np.random.default_rng(2), include_clean=True)
        power = np.sum(ds.clean ** 2, axis=1) / SAMPLES
        assert np.allclose(power, 1.0, atol=1e-6)

    def test_unsupported_modulation(self):
        with pytest.raises(ValueError, match="unsupported"):
            gen_modulation_dataset(("WBFM",), [10.0], 10, np.random.default_rng(3))
        with pytest.raises(ValueError, match="unsupported"):
            modulate("AM-SSB", np.random.default_rng(3))

    def test_reproducible_bit_identical(self):
        a = gen_modulation_dataset(DIGITAL_MODS, [5.0, 10.0], 400,
                                   np.random.default_rng(42))
        b = gen_modulation_dataset(DIGITAL_MODS, [5.0, 10.0], 400,
                                   np.random.default_rng(42))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.labels, b.labels)

    def test_balanced_labels_and_shapes(self):
        ds = gen_modulation_dataset(DIGITAL_MODS, [10.0], 800, np.random.default_rng(4))
        assert ds.x.shape == (800, 2 * SAMPLES) and ds.x.dtype == np.float32
        counts = np.bincount(ds.labels, minlength=8)
        assert counts.min() == counts.max() == 100

    def test_qam16_matched_filter_recovers_16_clusters(self):
        ds = gen_modulation_dataset(("QAM16",), [30.0], 200,
                                    np.random.default_rng(5), include_clean=True)
        taps = rrc_taps()
        points = []
        for row in ds.clean:
            wave = row[:SAMPLES] + 1j * row[SAMPLES:]
            filtered = np.convolve(wave, taps, mode="same")
            points.append(filtered[::SPS])
        points = np.concatenate(points)
        scale = np.sqrt(np.mean(np.abs(points) ** 2))
        points = points / scale
        # assign to nearest ideal constellation point
        d = np.abs(points[:, None] - QAM16_POINTS[None, :])
        nearest = np.argmin(d, axis=1)
        assert len(np.unique(nearest)) == 16
        within = d[np.arange(len(points)), nearest]
        min_dist = np.min(np.abs(QAM16_POINTS[:, None] -
                                 QAM16_POINTS[None, :])[~np.eye(16, dtype=bool)])
        assert np.percentile(within, 90) < 0.35 * min_dist

    def test_fsk_constant_modulus(self):
        for mod in ("CPFSK", "GFSK"):
            wave = modulate(mod, np.random.default_rng(6))
            assert np.allclose(np.abs(wave), 1.0, atol=1e-6)


class TestClassifier:
    def test_accuracy_at_10db(self, mod_bundle):
        test = gen_modulation_dataset(DIGITAL_MODS, [10.0], 2500,
                                      np.random.default_rng(7))
        est = evaluate_accuracy(mod_bundle.victim, test.x, test.labels)
        assert est.value >= 0.60

    def test_accuracy_increases_with_snr(self, mod_bundle):
        accs = {}
        for snr in (-20, -10, 0, 10, 18):
            t = gen_modulation_dataset(DIGITAL_MODS, [float(snr)], 1000,
                                       np.random.default_rng(100 + snr))
            accs[snr] = evaluate_accuracy(mod_bundle.victim, t.x, t.labels).value
        assert accs[-20] < accs[0] < accs[10]
        assert accs[-10] < accs[18]
        assert accs[18] > accs[-20] + 0.4

    def test_easy_pair_toy(self):
        rng = np.random.default_rng(8)
        arch = {"kernels": (16, 12), "dense": 64}
        train = gen_modulation_dataset(("BPSK", "QAM16"), [10.0], 600, rng)
        clf = train_classifier(train, ClassifierTrainConfig(epochs=4, arch=arch), rng)
        test = gen_modulation_dataset(("BPSK", "QAM16"), [10.0], 400,
                                      np.random.default_rng(9))
        assert evaluate_accuracy(clf, test.x, test.labels).value >= 0.95

    def test_label_shuffle_gives_chance(self):
        rng = np.random.default_rng(10)
        arch = {"kernels": (8, 8), "dense": 32}
        train = gen_modulation_dataset(DIGITAL_MODS, [10.0], 800, rng)
        train.labels = rng.permutation(train.labels)
        clf = train_classifier(train, ClassifierTrainConfig(epochs=2, arch=arch), rng)
        test = gen_modulation_dataset(DIGITAL_MODS, [10.0], 800,
                                      np.random.default_rng(11))
        assert evaluate_accuracy(clf, test.x, test.labels).value <= 0.25


class TestRmlxFormat:
    def test_roundtrip_bit_identical(self, tmp_path):
        ds = gen_modulation_dataset(("BPSK", "QPSK"), [0.0, 10.0], 80,
                                    np.random.default_rng(12))
        rml.export_dataset(ds, tmp_path)
        loaded = rml.load_dataset(tmp_path, ("BPSK", "QPSK"), [0.0, 10.0])
        assert sorted(map(tuple, loaded.x.tolist())) == sorted(map(tuple, ds.x.tolist()))
        assert len(loaded) == len(ds)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "BPSK_snr10.rmlx"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ModelFormatError, match="bad-magic"):
            rml.load_dataset(tmp_path, ("BPSK",), [10.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            rml.load_dataset(tmp_path, ("QPSK",), [10.0])

    def test_truncated(self, tmp_path):
        ds = gen_modulation_dataset(("BPSK",), [10.0], 8, np.random.default_rng(13))
        (path,) = rml.export_dataset(ds, tmp_path)
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(ModelFormatError, match="truncated"):
            rml.load_dataset(tmp_path, ("BPSK",), [10.0])
