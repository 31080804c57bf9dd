"""Deterministic synthetic corpora and datasets for demos and sanity checks.

Everything here is seeded; the same arguments always produce byte-identical
files, so generated fixtures stand in for bundled data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import (NameTypingDataset, TypeSystem, sample_and_split)


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def two_topic_corpus(n_lines: int = 800, tokens_per_line: int = 8,
                     topic_size: int = 10, seed: int = 0) -> list[str]:
    """Two disjoint token sets that co-occur only within their own topic.

    Tokens are named a0..a{k} and b0..b{k}; every line draws from exactly
    one topic, so intra-topic similarity is the only learnable structure.
    """
    rng = np.random.default_rng(seed)
    topics = ([f"a{i}" for i in range(topic_size)],
              [f"b{i}" for i in range(topic_size)])
    lines = []
    for i in range(n_lines):
        vocab = topics[i % 2]
        picks = rng.integers(0, topic_size, size=tokens_per_line)
        lines.append(" ".join(vocab[p] for p in picks))
    return lines


def topic_token_sets(topic_size: int = 10) -> tuple[list[str], list[str]]:
    return ([f"a{i}" for i in range(topic_size)],
            [f"b{i}" for i in range(topic_size)])


def positional_contrast_corpus(n_pairs: int = 1200, n_fillers: int = 20,
                               filler_lines: int = 1200, seed: int = 0
                               ) -> list[str]:
    """Tokens x and y co-occur only with marker m, on opposite sides.

    Lines "x m" and "m y" give x and y identical bag-of-words context
    distributions ({m}) but mirrored positional distributions; filler
    lines pad the vocabulary so negative sampling has somewhere to go.
    """
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(n_pairs):
        lines.append("x m")
        lines.append("m y")
    fillers = [f"f{i}" for i in range(n_fillers)]
    for _ in range(filler_lines):
        i, j = rng.integers(0, n_fillers, size=2)
        lines.append(f"{fillers[i]} {fillers[j]}")
    return lines


def typed_names_corpus_and_labels(n_names: int = 5000, n_types: int = 25,
                                  occurrences_per_name: int = 6,
                                  indicators_per_type: int = 8,
                                  max_types_per_name: int = 4,
                                  noise: float = 0.1, seed: int = 0
                                  ) -> tuple[list[str], dict[str, set[str]],
                                             TypeSystem]:
    """A corpus where each name co-occurs with indicator tokens of its types.

    Every name gets 1..max_types_per_name types (skewed toward few); each
    occurrence line pairs the name with indicator tokens drawn from its own
    types, plus occasional noise tokens. Names are learnable from context,
    imperfectly when noise > 0.
    """
    rng = np.random.default_rng(seed)
    type_names = tuple(f"/type{t:02d}" for t in range(n_types))
    ts = TypeSystem(types=type_names)
    indicators = {t: [f"ind_{t:02d}_{k}" for k in range(indicators_per_type)]
                  for t in range(n_types)}
    noise_tokens = [f"noise{k}" for k in range(30)]

    labels: dict[str, set[str]] = {}
    name_type_ids: dict[str, list[int]] = {}
    weights = np.array([1.0 / (k + 1) for k in range(max_types_per_name)])
    weights /= weights.sum()
    for i in range(n_names):
        name = f"name{i:05d}"
        k = int(rng.choice(max_types_per_name, p=weights)) + 1
        tids = sorted(rng.choice(n_types, size=k, replace=False).tolist())
        name_type_ids[name] = tids
        labels[name] = {type_names[t] for t in tids}

    lines = []
    for name, tids in name_type_ids.items():
        for _ in range(occurrences_per_name):
            toks = [name]
            for _ in range(3):
                if rng.random() < noise:
                    toks.append(noise_tokens[rng.integers(0, len(noise_tokens))])
                else:
                    t = tids[rng.integers(0, len(tids))]
                    toks.append(indicators[t][rng.integers(0, indicators_per_type)])
            lines.append(" ".join(toks))
    order = rng.permutation(len(lines))
    return [lines[i] for i in order], labels, ts


def dataset_from_labels(labels: dict[str, set[str]], ts: TypeSystem,
                        fractions=(0.5, 0.2, 0.3), seed: int = 1
                        ) -> NameTypingDataset:
    return sample_and_split(labels, ts, sample_size=len(labels),
                            fractions=fractions, seed=seed)


def xor_multilabel_data(n: int = 3000, dim: int = 8, n_types: int = 4,
                        seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Multi-label data where each type is a coordinate-pair sign parity.

    Type t is positive iff x[2t] * x[2t+1] > 0 — balanced and not linearly
    separable, but easy for one hidden layer.
    """
    if dim < 2 * n_types:
        raise ValueError("need dim >= 2 * n_types")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, dim))
    # keep coordinates away from the axes so the parity labels have margin
    x += 0.5 * np.sign(x)
    y = np.zeros((n, n_types), dtype=bool)
    for t in range(n_types):
        y[:, t] = x[:, 2 * t] * x[:, 2 * t + 1] > 0
    return x, y


def linearly_separable_data(n: int = 3000, dim: int = 8, n_types: int = 4,
                            margin: float = 0.5, seed: int = 0
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Multi-label data with a clean separating hyperplane per type."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, dim))
    w = rng.standard_normal((n_types, dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    scores = x @ w.T
    # push points away from every decision boundary
    x += margin * np.sign(scores) @ w
    y = (x @ w.T) > 0
    return x, y
