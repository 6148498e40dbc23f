"""Seeded synthetic tasks shared by scenarios, demos and tests."""
from __future__ import annotations

from dataclasses import dataclass

from ..dataset import Dataset, FlipMask, flip_labels, split, synth_blobs


@dataclass(frozen=True, eq=False)
class BlobTask:
    train: Dataset
    val: Dataset
    test: Dataset
    clean_train: Dataset
    mask: FlipMask


def blob_task(seed=0, n_train=1000, n_val=100, n_test=0, dim=2, num_classes=2,
              separation=4.0, noise_std=1.0, flip_ratio=0.3) -> BlobTask:
    """Gaussian blobs split into train/val/test with flipped training labels only."""
    n = n_train + n_val + n_test
    ds = synth_blobs(n, dim, num_classes, separation, noise_std, seed)
    train, val, test = split(ds, (n_train / n, n_val / n, n_test / n), seed)
    noisy, mask = flip_labels(train, flip_ratio, seed)
    return BlobTask(noisy, val, test, train, mask)
