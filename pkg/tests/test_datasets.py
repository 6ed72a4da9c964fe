"""Synthetic dataset generation, CSV loading, and the seeded split contract."""

import numpy as np
import pytest

from binquant.datasets import (Dataset, DatasetSpec, generate, load_csv,
                               load_dataset_cache, save_dataset_cache)
from binquant.errors import ValidationError
from binquant.mlp import MlpSpec
from binquant.training import LrSchedule, TrainConfig, train_full_precision


class TestSpecValidation:
    def test_defaults_are_valid(self):
        spec = DatasetSpec()
        assert spec.kind == "gaussian_blobs"
        assert spec.num_classes == 10 and spec.dim == 20
        assert spec.samples_per_class == 200

    def test_bad_values(self):
        with pytest.raises(ValidationError):
            DatasetSpec(kind="mnist")
        with pytest.raises(ValidationError):
            DatasetSpec(num_classes=1)
        with pytest.raises(ValidationError):
            DatasetSpec(train_fraction=1.5)
        with pytest.raises(ValidationError):
            DatasetSpec(kind="two_spirals", num_classes=3)
        with pytest.raises(ValidationError):
            DatasetSpec(kind="file")  # needs a path


class TestGenerate:
    def test_split_sizes_and_disjointness(self):
        spec = DatasetSpec(num_classes=5, dim=4, samples_per_class=200,
                           train_fraction=0.8, seed=1)
        train, test = generate(spec)
        assert len(train) == 800 and len(test) == 200
        # disjoint: every sample appears exactly once across the two splits
        both = np.vstack([train.inputs, test.inputs])
        assert np.unique(both, axis=0).shape[0] == 1000

    def test_determinism_bitwise(self):
        spec = DatasetSpec(num_classes=3, dim=6, samples_per_class=50, seed=123)
        a_train, a_test = generate(spec)
        b_train, b_test = generate(spec)
        assert np.array_equal(a_train.inputs, b_train.inputs)
        assert np.array_equal(a_train.labels, b_train.labels)
        assert np.array_equal(a_test.inputs, b_test.inputs)
        assert np.array_equal(a_test.labels, b_test.labels)

    def test_different_seeds_differ(self):
        a, _ = generate(DatasetSpec(seed=1, samples_per_class=20))
        b, _ = generate(DatasetSpec(seed=2, samples_per_class=20))
        assert not np.array_equal(a.inputs, b.inputs)

    def test_two_spirals_shape_and_labels(self):
        spec = DatasetSpec(kind="two_spirals", num_classes=2, dim=2,
                           samples_per_class=80, noise_sigma=0.05, seed=3)
        train, test = generate(spec)
        assert train.inputs.shape == (128, 2) and test.inputs.shape == (32, 2)
        assert set(np.concatenate([train.labels, test.labels]).tolist()) == {0, 1}

    def test_labels_are_shuffled_not_blocked(self):
        train, _ = generate(DatasetSpec(num_classes=2, dim=2,
                                        samples_per_class=100, seed=4))
        # a class-sorted layout would have zero transitions in the first half
        transitions = int(np.sum(np.diff(train.labels) != 0))
        assert transitions > 10

    def test_linear_classifier_sanity_oracle(self):
        # well-separated 2-class blobs must be learnable by plain SGD
        spec = DatasetSpec(num_classes=2, dim=2, samples_per_class=200,
                           class_separation=10.0, noise_sigma=0.1, seed=11)
        train, test = generate(spec)
        cfg = TrainConfig(algorithm="none", epochs=10, batch_size=32, seed=0,
                          lr_schedule=LrSchedule(0.025, 0.1, ()))
        _, row = train_full_precision(cfg, train, test, MlpSpec((2, 2)))
        assert row.accuracy >= 0.99


class TestLoadCsv:
    def test_basic_file(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("0.5,1.2,0\n-1.0,0.3,1\n")
        ds = load_csv(p)
        assert len(ds) == 2
        assert ds.inputs.shape == (2, 2)
        assert ds.inputs[1].tolist() == [-1.0, 0.3]
        assert ds.labels.tolist() == [0, 1]
        assert ds.num_classes == 2

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(ValidationError):
            load_csv(p)

    def test_ragged_row_names_line_number(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("1.0,2.0,0\n1.0,2.0,3.0,1\n")
        with pytest.raises(ValidationError, match="line 2"):
            load_csv(p)

    def test_non_integer_label(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("1.0,0.5\n")
        with pytest.raises(ValidationError):
            load_csv(p)

    def test_file_kind_through_generate(self, tmp_path):
        p = tmp_path / "d.csv"
        rows = ["%f,%f,%d" % (i * 0.1, -i * 0.2, i % 2) for i in range(40)]
        p.write_text("\n".join(rows) + "\n")
        spec = DatasetSpec(kind="file", path=str(p), num_classes=2, dim=2,
                           train_fraction=0.75, seed=5)
        train, test = generate(spec)
        assert len(train) == 30 and len(test) == 10


class TestCache:
    def test_roundtrip(self, tmp_path):
        train, test = generate(DatasetSpec(num_classes=3, dim=4,
                                           samples_per_class=10, seed=6))
        path = tmp_path / "cache.qtns"
        save_dataset_cache(path, train, test)
        t2, e2 = load_dataset_cache(path)
        assert np.array_equal(t2.inputs, train.inputs)
        assert np.array_equal(t2.labels, train.labels)
        assert np.array_equal(e2.inputs, test.inputs)
        assert e2.num_classes == test.num_classes
