import os
import struct

import numpy as np
import pytest


def mnist_location():
    """Directory holding the MNIST IDX files, or None."""
    from nxbar import dataio

    for candidate in (os.environ.get("NXBAR_MNIST_DIR"),
                      os.path.join(os.path.dirname(__file__), "..", "data", "mnist")):
        if candidate and dataio.find_mnist(candidate, "train") \
                and dataio.find_mnist(candidate, "test"):
            return candidate
    return None


def write_idx_images(path, images):
    """images: (n, rows, cols) uint8."""
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", 0x00000803, n, rows, cols))
        fh.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", 0x00000801, len(labels)))
        fh.write(np.asarray(labels, dtype=np.uint8).tobytes())


@pytest.fixture
def synthetic_mnist_dir(tmp_path):
    """A tiny IDX dataset shaped like MNIST: blurred class-template digits.

    Classes are separable (template + noise), so short training runs reach
    high accuracy; this exercises the MNIST pipeline without the real data.
    """
    rng = np.random.default_rng(123)
    templates = rng.integers(0, 255, size=(10, 28, 28)).astype(np.float64)
    def make(n, seed):
        r = np.random.default_rng(seed)
        labels = r.integers(0, 10, n)
        imgs = templates[labels] * 0.7 + r.integers(0, 80, (n, 28, 28))
        return np.clip(imgs, 0, 255).astype(np.uint8), labels
    train_imgs, train_labels = make(600, 1)
    test_imgs, test_labels = make(200, 2)
    write_idx_images(tmp_path / "train-images-idx3-ubyte", train_imgs)
    write_idx_labels(tmp_path / "train-labels-idx1-ubyte", train_labels)
    write_idx_images(tmp_path / "t10k-images-idx3-ubyte", test_imgs)
    write_idx_labels(tmp_path / "t10k-labels-idx1-ubyte", test_labels)
    return str(tmp_path)
