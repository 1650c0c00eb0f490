import numpy as np
import pytest

from bitbit.data import Dataset


def write_dataset_csv(path, dataset: Dataset) -> None:
    """Write a Dataset as a headered CSV with full-precision floats."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join([f"f{j}" for j in range(dataset.n_features)] + ["label"]) + "\n")
        for row, label in zip(dataset.features, dataset.labels.tolist()):
            fh.write(",".join(repr(v) for v in row.tolist()) + f",{label}\n")


def all_pure_1d_dataset() -> tuple[Dataset, Dataset]:
    """Hand-enumerable 1-D pair: class 0 on [0, 0.5), class 1 on [0.5, 1),
    train balanced 3/3, test values chosen so each sits strictly inside its
    class's training value range (one bit covers both sides exactly)."""
    train = Dataset(
        features=np.array([[0.1], [0.6], [0.2], [0.7], [0.3], [0.8]]),
        labels=np.array([0, 1, 0, 1, 0, 1]),
        c=2,
    )
    test = Dataset(features=np.array([[0.15], [0.75]]), labels=np.array([0, 1]), c=2)
    return train, test


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
