import gzip
import json
import struct

import numpy as np
import pytest

from conftest import write_idx_images, write_idx_labels
from nxbar import dataio, nn, pca


class TestIdxLoading:
    def test_round_trip_and_scaling(self, tmp_path):
        rng = np.random.default_rng(0)
        imgs = rng.integers(0, 256, (7, 28, 28)).astype(np.uint8)
        imgs[0, 0, 0] = 255
        imgs[0, 0, 1] = 128
        labels = rng.integers(0, 10, 7)
        write_idx_images(tmp_path / "imgs", imgs)
        write_idx_labels(tmp_path / "labs", labels)
        data = dataio.load_mnist_idx(tmp_path / "imgs", tmp_path / "labs")
        assert data.inputs.shape == (7, 784)
        assert data.inputs.min() >= 0.0 and data.inputs.max() <= 1.0
        assert data.inputs[0, 0] == 1.0
        assert data.inputs[0, 1] == 128.0 / 255.0
        np.testing.assert_array_equal(data.labels, labels)

    def test_gzip_transparent(self, tmp_path):
        imgs = np.zeros((2, 4, 4), dtype=np.uint8)
        labels = np.array([3, 1], dtype=np.uint8)
        write_idx_images(tmp_path / "imgs", imgs)
        write_idx_labels(tmp_path / "labs", labels)
        for name in ("imgs", "labs"):
            raw = (tmp_path / name).read_bytes()
            with gzip.open(tmp_path / (name + ".gz"), "wb") as fh:
                fh.write(raw)
        data = dataio.load_mnist_idx(tmp_path / "imgs.gz", tmp_path / "labs.gz")
        assert data.n_samples == 2

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "imgs"
        with open(path, "wb") as fh:
            fh.write(struct.pack(">iiii", 0x00000801, 1, 2, 2))
            fh.write(b"\x00" * 4)
        write_idx_labels(tmp_path / "labs", [0])
        with pytest.raises(dataio.BadMagicError):
            dataio.load_mnist_idx(path, tmp_path / "labs")

    def test_truncated(self, tmp_path):
        path = tmp_path / "imgs"
        with open(path, "wb") as fh:
            fh.write(struct.pack(">iiii", 0x00000803, 10, 28, 28))
            fh.write(b"\x00" * 100)
        write_idx_labels(tmp_path / "labs", list(range(10)))
        with pytest.raises(dataio.TruncatedFileError):
            dataio.load_mnist_idx(path, tmp_path / "labs")

    def test_count_mismatch(self, tmp_path):
        write_idx_images(tmp_path / "imgs", np.zeros((3, 4, 4), dtype=np.uint8))
        write_idx_labels(tmp_path / "labs", [0, 1])
        with pytest.raises(dataio.CountMismatchError):
            dataio.load_mnist_idx(tmp_path / "imgs", tmp_path / "labs")


class TestXorDataset:
    def test_truth_table(self):
        data = dataio.xor_dataset()
        assert data.n_samples == 4
        table = {tuple(row): label for row, label in zip(data.inputs, data.labels)}
        assert table[(1.0, 1.0)] == 0
        assert table[(0.0, 1.0)] == 1
        assert table[(1.0, 0.0)] == 1
        assert table[(0.0, 0.0)] == 0


class TestModelFile:
    def _model(self, seed=0):
        return nn.init_mlp([3, 4, 2], ["relu", "sigmoid"], seed=seed)

    def test_round_trip_bit_exact(self, tmp_path):
        model = self._model()
        path = tmp_path / "model.json"
        dataio.save_model(path, model, extras={"calibrations": [[0.0, 1.0], [0.0, 2.5]]})
        back, pca_model, extras = dataio.load_model(path)
        assert pca_model is None
        assert extras["calibrations"] == [[0.0, 1.0], [0.0, 2.5]]
        probes = np.random.default_rng(1).random((100, 3))
        np.testing.assert_array_equal(nn.forward(model, probes), nn.forward(back, probes))
        for a, b in zip(model.layers, back.layers):
            np.testing.assert_array_equal(a.weights, b.weights)
            np.testing.assert_array_equal(a.biases, b.biases)
            assert a.activation == b.activation

    def test_pca_embedding_round_trip(self, tmp_path):
        model = self._model()
        fitted = pca.fit(np.random.default_rng(2).normal(size=(40, 6)), 0.9)
        path = tmp_path / "model.json"
        dataio.save_model(path, model, pca_model=fitted)
        _, back, _ = dataio.load_model(path)
        np.testing.assert_array_equal(back.mean, fitted.mean)
        np.testing.assert_array_equal(back.components, fitted.components)

    def test_future_version_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        dataio.save_model(path, self._model())
        doc = json.loads(path.read_text())
        doc["version"] = dataio.MODEL_VERSION + 1
        path.write_text(json.dumps(doc))
        with pytest.raises(dataio.ModelVersionError):
            dataio.load_model(path)

    def test_corrupt_file_reports_location(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "nxbar-model",\n "version": 1,\n BROKEN')
        with pytest.raises(dataio.ModelFormatError, match="line 3"):
            dataio.load_model(path)

    def test_wrong_format_tag(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "something-else", "version": 1, "layers": []}')
        with pytest.raises(dataio.ModelFormatError):
            dataio.load_model(path)

    def test_shape_header_checked(self, tmp_path):
        path = tmp_path / "model.json"
        dataio.save_model(path, self._model())
        doc = json.loads(path.read_text())
        doc["layers"][0]["outputs"] += 1
        path.write_text(json.dumps(doc))
        with pytest.raises(dataio.ModelFormatError, match="shape header"):
            dataio.load_model(path)


class TestSweepCsv:
    def test_schema_and_precision(self, tmp_path):
        path = tmp_path / "sweep.csv"
        value = 0.1234567890123456789
        dataio.write_sweep_csv(
            path, ("n_states", "rmse_mean", "rmse_stddev", "trials"),
            [(4, value, 0.5, 2000)],
        )
        lines = path.read_text().splitlines()
        assert lines[0] == "n_states,rmse_mean,rmse_stddev,trials"
        cell = lines[1].split(",")[1]
        assert float(cell) == value  # full-precision decimal round trip
        assert path.read_text().endswith("\n")

    def test_empty_rows_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        dataio.write_sweep_csv(path, ("sigma_kind", "sigma_ohm"), [])
        assert path.read_text() == "sigma_kind,sigma_ohm\n"

    def test_row_width_checked(self, tmp_path):
        with pytest.raises(ValueError):
            dataio.write_sweep_csv(tmp_path / "x.csv", ("a", "b"), [(1,)])


class TestPcaFile:
    def test_round_trip(self, tmp_path):
        fitted = pca.fit(np.random.default_rng(3).normal(size=(30, 5)), 0.9)
        path = tmp_path / "pca.json"
        dataio.save_pca(path, fitted)
        back = dataio.load_pca(path)
        np.testing.assert_array_equal(back.components, fitted.components)
        (tmp_path / "bad.json").write_text('{"format": "nope"}')
        with pytest.raises(dataio.ModelFormatError):
            dataio.load_pca(tmp_path / "bad.json")
