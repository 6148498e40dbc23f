"""Stream valuation: shards arrive one by one, harmful samples are dropped for good."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import knn
from ..dataset import Dataset, DatasetError
from ..valuation import ValuationParams, aggregate_over_validation
from .removal import RemovalPolicy, select_removed


@dataclass
class BatchRecord:
    batch: int
    arrivals: int
    candidates: int
    removed: int
    survivors: int
    accuracy: float

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class OnlineRunReport:
    method: str | None
    batches: list = field(default_factory=list)
    admitted: dict = field(default_factory=dict)
    removed_at: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)

    @property
    def accuracies(self):
        return [b.accuracy for b in self.batches]

    def as_dict(self):
        return {
            "method": self.method,
            "batches": [b.as_dict() for b in self.batches],
            "admitted": {str(k): v for k, v in sorted(self.admitted.items())},
            "removed_at": {str(k): v for k, v in sorted(self.removed_at.items())},
            "trajectories": {str(k): [[b, float(v)] for b, v in traj]
                             for k, traj in sorted(self.trajectories.items())},
        }


def online_run(batches, val: Dataset, method="cknn_shapley", params=ValuationParams(),
               policy: RemovalPolicy | None = RemovalPolicy(), threads=1) -> OnlineRunReport:
    """Feed ``batches`` in order, valuing survivors plus arrivals against ``val``.

    Samples are identified by ``Dataset.origin`` and must be unique across
    shards. ``policy=None`` keeps everything (plain KNN on all data seen so far).
    Accuracy is KNN accuracy on ``val`` after each batch's removal step.
    """
    batches = list(batches)
    if not batches:
        raise DatasetError("online run needs at least one batch")
    seen = np.concatenate([b.origin for b in batches])
    if len(np.unique(seen)) != len(seen):
        raise DatasetError("sample origins repeat across shards")
    if len({b.dim for b in batches} | {val.dim}) != 1:
        raise DatasetError("shards and validation set disagree on dimension")
    C = max([b.num_classes for b in batches] + [val.num_classes])
    report = OnlineRunReport(None if policy is None else method)
    survivors = None
    for b, shard in enumerate(batches, start=1):
        shard = Dataset(shard.X, shard.y, C, origin=shard.origin, label_names=shard.label_names)
        for o in shard.origin:
            report.admitted[int(o)] = b
        candidate = shard if survivors is None else Dataset.concat([survivors, shard])
        removed = np.zeros(0, dtype=np.int64)
        if policy is not None:
            vec = aggregate_over_validation(candidate, val, method, params, threads=threads)
            for o, v in zip(candidate.origin, vec.values):
                report.trajectories.setdefault(int(o), []).append((b, float(v)))
            removed = select_removed(vec.values, policy)
            if len(removed) == len(candidate):
                raise DatasetError(f"batch {b}: removal empties the training set")
        keep = np.ones(len(candidate), dtype=bool)
        keep[removed] = False
        for o in candidate.origin[removed]:
            report.removed_at[int(o)] = b
        survivors = candidate.subset(np.flatnonzero(keep))
        acc = knn.accuracy(survivors, val, params.K, params.metric)
        report.batches.append(BatchRecord(b, len(shard), len(candidate), len(removed),
                                          len(survivors), acc))
    return report
