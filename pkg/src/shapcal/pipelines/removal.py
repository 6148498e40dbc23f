"""Valuation-driven removal and mislabel bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, DatasetError, FlipMask

NEGATIVE = "negative_values"
BOTTOM = "bottom_fraction"
POLICY_ALIASES = {"negative": NEGATIVE, "bottom": BOTTOM, NEGATIVE: NEGATIVE, BOTTOM: BOTTOM}


@dataclass(frozen=True)
class RemovalPolicy:
    kind: str = NEGATIVE
    q: float | None = None
    strict: bool = True

    def __post_init__(self):
        kind = POLICY_ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown removal policy {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == BOTTOM:
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ValueError("bottom_fraction removal needs q in (0, 1)")
        elif self.q is not None:
            raise ValueError("q only applies to bottom_fraction removal")

    def as_dict(self):
        return {"kind": self.kind, "q": self.q, "strict": self.strict}


def select_removed(values, policy: RemovalPolicy) -> np.ndarray:
    """Ids (ascending) that ``policy`` would drop."""
    v = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if policy.kind == NEGATIVE:
        return np.flatnonzero(v < 0 if policy.strict else v <= 0)
    n = int(math.floor(policy.q * len(v)))
    return np.sort(np.argsort(v, kind="stable")[:n])


def apply_removal(train: Dataset, values, policy: RemovalPolicy = RemovalPolicy()):
    """Drop low-valued samples. Returns ``(kept_dataset, removed_ids)``.

    Kept rows keep their relative order; ``kept.origin`` maps back to the
    caller's ids through ``train.origin``.
    """
    v = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if len(v) != len(train):
        raise DatasetError(f"{len(v)} values for {len(train)} training samples")
    removed = select_removed(v, policy)
    if len(removed) == len(train):
        raise DatasetError("removal policy would empty the training set")
    keep = np.ones(len(train), dtype=bool)
    keep[removed] = False
    return train.subset(np.flatnonzero(keep)), removed


@dataclass(frozen=True, eq=False)
class MislabelAnalysis:
    set_i: np.ndarray
    set_ii: np.ndarray
    set_iii: np.ndarray

    @property
    def counts(self):
        return {"I": len(self.set_i), "II": len(self.set_ii), "III": len(self.set_iii)}

    @property
    def precision(self):
        d = len(self.set_i) + len(self.set_ii)
        return len(self.set_ii) / d if d else None

    @property
    def recall(self):
        d = len(self.set_ii) + len(self.set_iii)
        return len(self.set_ii) / d if d else None

    def as_dict(self):
        return {"counts": self.counts, "precision": self.precision, "recall": self.recall,
                "set_I": self.set_i.tolist(), "set_II": self.set_ii.tolist(),
                "set_III": self.set_iii.tolist()}


def mislabel_analysis(values, mask: FlipMask) -> MislabelAnalysis:
    """Cross non-positive valuations with the flipped-label mask.

    I: non-positive and clean, II: non-positive and flipped, III: positive and flipped.
    """
    v = np.asarray(getattr(values, "values", values), dtype=np.float64)
    flipped = np.asarray(mask.flipped, dtype=bool)
    if len(v) != len(flipped):
        raise DatasetError("valuation and flip mask lengths differ")
    low = v <= 0
    return MislabelAnalysis(np.flatnonzero(low & ~flipped),
                            np.flatnonzero(low & flipped),
                            np.flatnonzero(~low & flipped))
