"""End-to-end evaluation protocol: embeddings + dataset -> scores.

Names without an embedding are excluded from train/dev (and counted); at
test time they stay in the pool and are scored as all-negative
predictions, so poor embedding coverage penalizes the report honestly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classifiers import (ClassifierConfig, predict_labels, predict_proba,
                          train_lr, train_mlp)
from .dataset import NameTypingDataset
from .embeddings import EmbeddingMatrix
from .metrics import EvalReport, build_report

logger = logging.getLogger(__name__)


@dataclass
class SplitFeatures:
    x: np.ndarray  # (N_covered, dim)
    y: np.ndarray  # (N_covered, T) bool
    covered_rows: np.ndarray  # indices into the split's example list
    oov_names: list[str]


def featurize_split(dataset: NameTypingDataset, split: str,
                    embeddings: EmbeddingMatrix) -> SplitFeatures:
    """Embed every covered name of a split; list the out-of-vocabulary rest."""
    examples = dataset.split(split)
    labels = dataset.label_matrix(split)
    rows, oov = [], []
    for i, ex in enumerate(examples):
        if ex.name in embeddings.index:
            rows.append(i)
        else:
            oov.append(ex.name)
    covered = np.asarray(rows, dtype=np.int64)
    if covered.size:
        x = embeddings.vectors[[embeddings.index[examples[i].name]
                                for i in rows]].astype(np.float64)
        y = labels[covered]
    else:
        x = np.zeros((0, embeddings.dim))
        y = np.zeros((0, labels.shape[1]), dtype=bool)
    return SplitFeatures(x=x, y=y, covered_rows=covered, oov_names=oov)


def train_classifier(dataset: NameTypingDataset, embeddings: EmbeddingMatrix,
                     config: ClassifierConfig):
    """Train on the train split; the MLP model-selects on dev micro-F1."""
    train_feat = featurize_split(dataset, "train", embeddings)
    if train_feat.oov_names:
        logger.info("excluded %d train name(s) without embeddings",
                    len(train_feat.oov_names))
    if train_feat.x.shape[0] == 0:
        raise ValueError("no train example has an embedding")
    if config.kind == "lr":
        return train_lr(train_feat.x, train_feat.y, config)
    dev_feat = featurize_split(dataset, "dev", embeddings)
    if dev_feat.oov_names:
        logger.info("excluded %d dev name(s) without embeddings",
                    len(dev_feat.oov_names))
    dev = (dev_feat.x, dev_feat.y) if dev_feat.x.shape[0] else None
    return train_mlp(train_feat.x, train_feat.y, config, dev=dev)


def score_test_split(model, dataset: NameTypingDataset,
                     embeddings: EmbeddingMatrix, config: ClassifierConfig,
                     min_group: int = 100) -> EvalReport:
    """Score the test split; OOV test names count as all-negative."""
    feat = featurize_split(dataset, "test", embeddings)
    gold = dataset.label_matrix("test")
    predictions = np.zeros_like(gold)
    if feat.x.shape[0]:
        proba = predict_proba(model, feat.x)
        predictions[feat.covered_rows] = predict_labels(proba, config.threshold)
    return build_report(predictions, gold, excluded_names=len(feat.oov_names),
                        min_group=min_group)


def evaluate_embeddings(embeddings: EmbeddingMatrix,
                        dataset: NameTypingDataset,
                        config: ClassifierConfig,
                        min_group: int = 100,
                        return_model: bool = False):
    """Full protocol: train on train, select on dev, score on test."""
    model = train_classifier(dataset, embeddings, config)
    report = score_test_split(model, dataset, embeddings, config, min_group)
    return (report, model) if return_model else report
