import gzip
import logging
import struct
from pathlib import Path

import numpy as np

from app.core.exceptions import IdxFormatError, InvariantViolation
from app.schemas.training import Dataset

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
MNIST_CLASSES = 10


def _read_bytes(path: Path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    # gzip magic
    if data[:2] == b"\x1f\x8b":
        try:
            return gzip.decompress(data)
        except (OSError, EOFError) as e:
            raise IdxFormatError(f"{path}: corrupt gzip stream ({e})") from e
    return data


def _parse_images(data: bytes, path: Path) -> np.ndarray:
    if len(data) < 16:
        raise IdxFormatError(f"{path}: truncated header")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise IdxFormatError(f"{path}: bad image magic 0x{magic:08x}")
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise IdxFormatError(f"{path}: truncated, expected {expected} bytes, got {len(data)}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows * cols)


def _parse_labels(data: bytes, path: Path) -> np.ndarray:
    if len(data) < 8:
        raise IdxFormatError(f"{path}: truncated header")
    magic, count = struct.unpack(">II", data[:8])
    if magic != IDX_LABELS_MAGIC:
        raise IdxFormatError(f"{path}: bad label magic 0x{magic:08x}")
    if len(data) < 8 + count:
        raise IdxFormatError(f"{path}: truncated, expected {8 + count} bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8)


def load_mnist_idx(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """
    Load an MNIST image/label pair in IDX format (plain or gzip).

    Pixels are scaled to [0, 1] and flattened to 784 features.

    Raises:
        IdxFormatError: Bad magic, truncated file or image/label count mismatch
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    images = _parse_images(_read_bytes(images_path), images_path)
    labels = _parse_labels(_read_bytes(labels_path), labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if labels.size and labels.max() >= MNIST_CLASSES:
        raise IdxFormatError(f"{labels_path}: label {labels.max()} out of range")

    logger.info(f"Loaded {images.shape[0]} MNIST samples from {images_path.name}")
    return Dataset(
        features=images.astype(np.float32) / np.float32(255.0),
        labels=labels.astype(np.int64),
        num_classes=MNIST_CLASSES,
    )


def synth_dataset(
    rng: np.random.Generator,
    num_samples: int,
    num_features: int,
    num_classes: int,
    class_sep: float = 1.0,
) -> Dataset:
    """
    Gaussian class-conditional clusters.

    Class means are drawn from N(0, class_sep^2 I); samples add unit-variance
    noise to their class mean. Labels cycle through the classes so every class
    is equally represented.
    """
    if num_samples < 1 or num_features < 1 or num_classes < 2:
        raise InvariantViolation("need >= 1 sample, >= 1 feature and >= 2 classes")
    means = class_sep * rng.standard_normal((num_classes, num_features))
    labels = rng.permutation(np.arange(num_samples) % num_classes)
    features = means[labels] + rng.standard_normal((num_samples, num_features))
    return Dataset(features=features, labels=labels, num_classes=num_classes)


def synth_train_test(
    rng: np.random.Generator, num_train: int, num_test: int, num_features: int, num_classes: int
) -> tuple[Dataset, Dataset]:
    """Train and test sets drawn from the same clusters."""
    full = synth_dataset(rng, num_train + num_test, num_features, num_classes)
    return full.take(np.arange(num_train)), full.take(np.arange(num_train, num_train + num_test))


def subset(dataset: Dataset, size: int | None, rng: np.random.Generator) -> Dataset:
    """Random subset of ``size`` samples; the whole dataset when size is None or too large."""
    if size is None or size >= len(dataset):
        return dataset
    return dataset.take(np.sort(rng.choice(len(dataset), size=size, replace=False)))


def partition_iid(dataset: Dataset, num_clients: int, rng: np.random.Generator) -> list[Dataset]:
    """
    Shuffle and split into ``num_clients`` disjoint shares whose sizes differ by at most one.

    Raises:
        InvariantViolation: If there are more clients than samples
    """
    if num_clients < 1:
        raise InvariantViolation(f"num_clients must be >= 1, got {num_clients}")
    if num_clients > len(dataset):
        raise InvariantViolation(f"cannot split {len(dataset)} samples among {num_clients} clients")
    if num_clients == 1:
        return [dataset]
    shares = np.array_split(rng.permutation(len(dataset)), num_clients)
    return [dataset.take(np.sort(share)) for share in shares]
