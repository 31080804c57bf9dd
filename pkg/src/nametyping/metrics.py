"""Multi-label evaluation: strict accuracy, micro-F1, and per-N breakdown.

Label sets ("bitsets") are accepted in two equivalent forms:

* a boolean array of shape (..., N, T) — one row per example, one column
  per type; leading batch dimensions are broadcast through, so stacked
  configurations evaluate in one call;
* a sequence of Python integers, one bitmask per example.

Micro-F1 is computed as 2*TP / (2*TP + FP + FN) over all (example, type)
decisions pooled globally; the degenerate all-empty case is defined as 0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

DEFAULT_MIN_GROUP = 100

Bitsets = Union[np.ndarray, Sequence[int]]


def _is_array_form(x) -> bool:
    return isinstance(x, np.ndarray) and x.ndim >= 2


def _check_array_pair(predictions, gold):
    predictions = np.asarray(predictions, dtype=bool)
    gold = np.asarray(gold, dtype=bool)
    if predictions.shape != gold.shape:
        raise ValueError(f"shape mismatch: predictions {predictions.shape} "
                         f"vs gold {gold.shape}")
    if predictions.shape[-2] == 0:
        raise ValueError("empty evaluation set")
    return predictions, gold


def _check_int_pair(predictions, gold):
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions "
                         f"vs {len(gold)} gold bitsets")
    if len(gold) == 0:
        raise ValueError("empty evaluation set")
    return predictions, gold


def strict_accuracy(predictions: Bitsets, gold: Bitsets):
    """Fraction of examples whose predicted set equals the gold set exactly.

    Array inputs of shape (..., N, T) return an array of shape (...);
    2-d arrays and bitmask sequences return a float.
    """
    if _is_array_form(predictions) or _is_array_form(gold):
        predictions, gold = _check_array_pair(predictions, gold)
        exact = (predictions == gold).all(axis=-1)
        result = exact.mean(axis=-1)
        return float(result) if result.ndim == 0 else result
    predictions, gold = _check_int_pair(predictions, gold)
    exact = 0
    for p, g in zip(predictions, gold):
        if p == g:
            exact += 1
    return exact / len(gold)


def micro_counts(predictions: Bitsets, gold: Bitsets):
    """Pooled (TP, FP, FN) over all (example, type) decisions."""
    if _is_array_form(predictions) or _is_array_form(gold):
        predictions, gold = _check_array_pair(predictions, gold)
        axes = (-1, -2)
        tp = np.logical_and(predictions, gold).sum(axis=axes)
        fp = np.logical_and(predictions, ~gold).sum(axis=axes)
        fn = np.logical_and(gold, ~predictions).sum(axis=axes)
        if tp.ndim == 0:
            return int(tp), int(fp), int(fn)
        return tp, fp, fn
    predictions, gold = _check_int_pair(predictions, gold)
    tp = fp = fn = 0
    for p, g in zip(predictions, gold):
        tp += (p & g).bit_count()
        fp += (p & ~g).bit_count()
        fn += (g & ~p).bit_count()
    return tp, fp, fn


def micro_f1(predictions: Bitsets, gold: Bitsets):
    """Global F1 over pooled decisions: 2*TP / (2*TP + FP + FN)."""
    tp, fp, fn = micro_counts(predictions, gold)
    if isinstance(tp, np.ndarray):
        denom = 2 * tp + fp + fn
        return np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def _as_masks(bitsets: Bitsets) -> list[int]:
    if _is_array_form(bitsets):
        arr = np.asarray(bitsets, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("breakdown requires a single (N, T) configuration")
        return [sum(1 << int(j) for j in np.flatnonzero(row)) for row in arr]
    return [int(b) for b in bitsets]


def per_type_count_breakdown(predictions: Bitsets, gold: Bitsets,
                             min_group: int = DEFAULT_MIN_GROUP
                             ) -> list[tuple[int, int, float]]:
    """Micro-F1 within groups of examples sharing a gold-type count.

    Groups whose size is not strictly greater than ``min_group`` are
    omitted. Returns (n_gold_types, group_size, micro_f1) tuples sorted
    by n.
    """
    pred_masks = _as_masks(predictions)
    gold_masks = _as_masks(gold)
    if len(pred_masks) != len(gold_masks):
        raise ValueError("length mismatch between predictions and gold")
    groups: dict[int, list[int]] = {}
    for i, g in enumerate(gold_masks):
        groups.setdefault(g.bit_count(), []).append(i)
    out = []
    for n in sorted(groups):
        idx = groups[n]
        if len(idx) <= min_group:
            continue
        f1 = micro_f1([pred_masks[i] for i in idx],
                      [gold_masks[i] for i in idx])
        out.append((n, len(idx), float(f1)))
    return out


@dataclass
class EvalReport:
    """Scores of one (embedding, classifier) run on a test split."""

    acc: float
    micro_f1: float
    tp: int
    fp: int
    fn: int
    per_n_breakdown: list[tuple[int, int, float]] = field(default_factory=list)
    excluded_names: int = 0

    def __post_init__(self):
        if not 0.0 <= self.acc <= 1.0:
            raise ValueError("acc must lie in [0, 1]")
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, payload: dict) -> "EvalReport":
        payload = dict(payload)
        payload["per_n_breakdown"] = [tuple(row) for row in
                                      payload.get("per_n_breakdown", [])]
        return cls(**payload)


def build_report(predictions: Bitsets, gold: Bitsets,
                 excluded_names: int = 0,
                 min_group: int = DEFAULT_MIN_GROUP) -> EvalReport:
    """Bundle all metrics for one prediction set."""
    tp, fp, fn = micro_counts(predictions, gold)
    return EvalReport(
        acc=float(strict_accuracy(predictions, gold)),
        micro_f1=float(micro_f1(predictions, gold)),
        tp=int(tp), fp=int(fp), fn=int(fn),
        per_n_breakdown=per_type_count_breakdown(predictions, gold, min_group),
        excluded_names=excluded_names,
    )


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def emit_report(reports: Mapping[tuple[str, str], EvalReport], path,
                format: str = "tsv") -> None:
    """Write the results table plus one breakdown CSV per model run.

    ``reports`` maps (model name, classifier name) to a report. The main
    table has columns model, classifier, acc, micro_f1 (percentages, one
    decimal). The human-readable format marks each metric column's maximum
    with '*'. Breakdown CSVs (columns n, group_size, micro_f1) land next
    to the main file as ``<stem>.breakdown.<model>.<classifier>.csv``.
    """
    if not reports:
        raise ValueError("no reports to emit")
    if format not in ("tsv", "human-table"):
        raise ValueError(f"unknown report format {format!r}")
    path = Path(path)
    rows = [(model, clf, rep) for (model, clf), rep in reports.items()]
    if format == "tsv":
        with open(path, "w", encoding="utf-8") as f:
            f.write("model\tclassifier\tacc\tmicro_f1\n")
            for model, clf, rep in rows:
                f.write(f"{model}\t{clf}\t{_pct(rep.acc)}\t{_pct(rep.micro_f1)}\n")
    else:
        best_acc = max(rep.acc for _, _, rep in rows)
        best_f1 = max(rep.micro_f1 for _, _, rep in rows)
        header = f"{'model':<12} {'classifier':<10} {'acc':>7} {'micro_f1':>9}"
        lines = [header, "-" * len(header)]
        for model, clf, rep in rows:
            acc = _pct(rep.acc) + ("*" if rep.acc == best_acc else " ")
            f1 = _pct(rep.micro_f1) + ("*" if rep.micro_f1 == best_f1 else " ")
            lines.append(f"{model:<12} {clf:<10} {acc:>7} {f1:>9}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    for model, clf, rep in rows:
        side = path.with_name(f"{path.stem}.breakdown.{model}.{clf}.csv")
        with open(side, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["n", "group_size", "micro_f1"])
            for n, size, f1 in rep.per_n_breakdown:
                writer.writerow([n, size, _pct(f1)])


def save_reports_json(reports: Mapping[tuple[str, str], EvalReport],
                      path) -> None:
    payload = {f"{model}\t{clf}": rep.to_json()
               for (model, clf), rep in reports.items()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def load_reports_json(path) -> dict[tuple[str, str], EvalReport]:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    out = {}
    for key, rep in payload.items():
        model, _, clf = key.partition("\t")
        out[(model, clf)] = EvalReport.from_json(rep)
    return out
