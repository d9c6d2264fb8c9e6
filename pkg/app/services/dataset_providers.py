import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Optional

import httpx
import numpy as np

from app.core.config import settings
from app.core.exceptions import DatasetUnavailableError
from app.schemas.training import Dataset
from app.services.datasets import load_mnist_idx, synth_train_test

logger = logging.getLogger(__name__)

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte.gz",
    "train_labels": "train-labels-idx1-ubyte.gz",
    "test_images": "t10k-images-idx3-ubyte.gz",
    "test_labels": "t10k-labels-idx1-ubyte.gz",
}


class DatasetProvider(ABC):
    """Abstract source of a (train, test) dataset pair."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Provider name, written to trace rows."""
        pass

    @abstractmethod
    def load(self) -> tuple[Dataset, Dataset]:
        """Return (train, test)."""
        pass


def _find(directory: Path, filename: str) -> Optional[Path]:
    """Locate ``filename`` with or without its .gz suffix."""
    for candidate in (directory / filename, directory / filename.removesuffix(".gz")):
        if candidate.is_file():
            return candidate
    return None


class IdxFileProvider(DatasetProvider):
    """MNIST from IDX files already on disk."""

    def __init__(self, directory: Optional[str | Path] = None):
        self.directory = Path(directory or settings.data_dir)

    @property
    def name(self) -> str:
        return "mnist"

    def paths(self) -> dict[str, Path]:
        found = {key: _find(self.directory, filename) for key, filename in MNIST_FILES.items()}
        missing = [MNIST_FILES[key] for key, path in found.items() if path is None]
        if missing:
            raise DatasetUnavailableError(f"MNIST files missing in {self.directory}: {', '.join(missing)}")
        return {key: path for key, path in found.items() if path is not None}

    def load(self) -> tuple[Dataset, Dataset]:
        paths = self.paths()
        train = load_mnist_idx(paths["train_images"], paths["train_labels"])
        test = load_mnist_idx(paths["test_images"], paths["test_labels"])
        return train, test


class MnistMirrorProvider(IdxFileProvider):
    """MNIST from a local cache, downloading missing gzip files from a mirror first."""

    def __init__(self, directory: Optional[str | Path] = None, base_url: Optional[str] = None):
        super().__init__(directory)
        self.base_url = base_url or settings.mnist_base_url

    def download(self) -> None:
        """Fetch every missing file into the cache directory."""
        self.directory.mkdir(parents=True, exist_ok=True)
        try:
            with httpx.Client(timeout=settings.http_timeout_s, follow_redirects=True) as client:
                for filename in MNIST_FILES.values():
                    if _find(self.directory, filename) is not None:
                        continue
                    url = self.base_url.rstrip("/") + "/" + filename
                    logger.info(f"Downloading {url}")
                    response = client.get(url)
                    response.raise_for_status()
                    (self.directory / filename).write_bytes(response.content)
        except (httpx.HTTPError, OSError) as e:
            raise DatasetUnavailableError(f"cannot download MNIST from {self.base_url}: {e}") from e

    def load(self) -> tuple[Dataset, Dataset]:
        self.download()
        return super().load()


class SyntheticProvider(DatasetProvider):
    """Gaussian-cluster data, used when MNIST is unavailable."""

    def __init__(
        self,
        seed: int = 0,
        num_train: int = 6000,
        num_test: int = 2000,
        num_features: int = 20,
        num_classes: int = 3,
    ):
        self.seed = seed
        self.num_train = num_train
        self.num_test = num_test
        self.num_features = num_features
        self.num_classes = num_classes

    @property
    def name(self) -> str:
        return "synthetic"

    def load(self) -> tuple[Dataset, Dataset]:
        rng = np.random.default_rng(self.seed)
        return synth_train_test(rng, self.num_train, self.num_test, self.num_features, self.num_classes)


def get_provider(provider_type: str, **kwargs: Any) -> DatasetProvider:
    """
    Factory function to get a dataset provider.

    Args:
        provider_type: One of ``idx``, ``mnist`` (download if needed) or ``synthetic``
        **kwargs: Arguments for provider initialization

    Returns:
        Configured provider instance
    """
    providers: dict[str, type[DatasetProvider]] = {
        "idx": IdxFileProvider,
        "mnist": MnistMirrorProvider,
        "synthetic": SyntheticProvider,
    }

    if provider_type not in providers:
        raise ValueError(f"Unknown dataset provider: {provider_type}. Available: {list(providers.keys())}")

    return providers[provider_type](**kwargs)
