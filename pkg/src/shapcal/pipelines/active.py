"""Pool-based active learning with a simulated annotator.

Each round scores the unlabeled pool, moves the ``batch_size`` highest
scores (ties to the lower id) into the labeled set and records KNN test
accuracy on the labeled set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import knn
from ..dataset import Dataset, DatasetError
from ..valuation import ValuationParams, aggregate_over_validation
from .regressor import RegressorConfig, predict_values, train_value_regressor

STRATEGIES = ("shapley_pred", "random", "entropy", "margin", "uncertainty")


@dataclass
class ActiveRunReport:
    strategy: str
    labeled_sizes: list = field(default_factory=list)
    accuracies: list = field(default_factory=list)
    acquired: list = field(default_factory=list)
    regressor_loss: list = field(default_factory=list)

    def as_dict(self):
        return {"strategy": self.strategy, "labeled_sizes": self.labeled_sizes,
                "accuracies": self.accuracies,
                "acquired": [a.tolist() for a in self.acquired],
                "regressor_loss": self.regressor_loss}


def _neighbor_scores(labeled: Dataset, queries, K, metric):
    order, _ = knn.rank_matrix(labeled.X, queries, metric)
    scores, _ = knn.scores_from_ranking(order, labeled.y, K, labeled.num_classes)
    return scores


def entropy_scores(probs):
    p = np.asarray(probs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=1)


def margin_scores(probs):
    top2 = -np.sort(-np.asarray(probs), axis=1)[:, :2]
    return -(top2[:, 0] - top2[:, 1])


def uncertainty_scores(probs):
    # share of the K neighbors that disagree with the plurality label
    return 1.0 - np.asarray(probs).max(axis=1)


def top_by_score(ids, scores, k):
    ids = np.asarray(ids)
    order = np.lexsort((ids, -np.asarray(scores)))
    return ids[order[:k]]


def active_learning_run(pool: Dataset, initial_labeled, val: Dataset, test: Dataset,
                        strategy="shapley_pred", rounds=8, batch_size=200,
                        method="cknn_shapley", params=ValuationParams(), seed=0,
                        regressor=RegressorConfig(), threads=1) -> ActiveRunReport:
    """Grow a labeled set from ``pool`` for ``rounds`` acquisition steps.

    ``pool`` holds ground-truth labels; a label is only read once its sample
    has been acquired. For ``shapley_pred`` the labeled set is valued against
    ``val`` each round (T re-derived from its size) and a regressor trained
    on those values ranks the unlabeled samples.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    labeled = sorted({int(i) for i in initial_labeled})
    if not labeled:
        raise DatasetError("initial labeled set is empty")
    if labeled[0] < 0 or labeled[-1] >= len(pool):
        raise DatasetError("initial labeled ids out of range")
    unlabeled = np.setdiff1d(np.arange(len(pool)), labeled)
    if rounds * batch_size > len(unlabeled):
        raise DatasetError(
            f"{rounds} rounds x {batch_size} exceeds the {len(unlabeled)} unlabeled samples")
    rng = np.random.default_rng(seed)
    K, metric = params.K, params.metric
    report = ActiveRunReport(strategy)
    labeled = np.array(labeled, dtype=np.int64)

    def record():
        report.labeled_sizes.append(len(labeled))
        report.accuracies.append(knn.accuracy(pool.subset(labeled), test, K, metric))

    record()
    for r in range(rounds):
        if len(unlabeled) < batch_size:
            raise DatasetError(f"round {r + 1}: unlabeled pool exhausted")
        lab = pool.subset(labeled)
        Xu = pool.X[unlabeled]
        if strategy == "shapley_pred":
            vec = aggregate_over_validation(lab, val, method, params, threads=threads)
            reg = train_value_regressor(lab.X, vec.values, regressor)
            report.regressor_loss.append(reg.final_loss)
            scores = predict_values(reg, Xu)
        elif strategy == "random":
            scores = rng.random(len(unlabeled))
        else:
            probs = _neighbor_scores(lab, Xu, K, metric)
            scores = {"entropy": entropy_scores, "margin": margin_scores,
                      "uncertainty": uncertainty_scores}[strategy](probs)
        picked = np.sort(top_by_score(unlabeled, scores, batch_size))
        report.acquired.append(picked)
        labeled = np.union1d(labeled, picked)
        unlabeled = np.setdiff1d(unlabeled, picked)
        record()
    return report
