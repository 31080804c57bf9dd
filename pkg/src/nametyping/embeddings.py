"""Negative-sampling embedding models: SKIP, CBOW, SSKIP, CWIN.

SKIP and CBOW are bag-of-words models; SSKIP and CWIN are their order-aware
counterparts, realized with position-indexed output parameters. All four
share one stochastic objective per training step:

    L = -log sigmoid(u_pos . v) - sum_k log sigmoid(-u_neg_k . v)

where v is the hidden vector produced by the model's context pooling and
the u rows come from the model's output parameters.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .vocab import NegativeTable, Vocabulary, keep_probability

logger = logging.getLogger(__name__)

SIGMOID_CLAMP = 6.0  # pre-activation clamp; bounds gradients like the classic exp-table
_NEG_POOL_BLOCK = 1 << 15


class TrainingDivergedError(RuntimeError):
    """Raised when non-finite values appear in parameters or loss."""


class ModelKind(Enum):
    SKIP = "skip"
    CBOW = "cbow"
    SSKIP = "sskip"
    CWIN = "cwin"

    @property
    def order_aware(self) -> bool:
        return self in (ModelKind.SSKIP, ModelKind.CWIN)

    @property
    def pools_context(self) -> bool:
        """True for models whose hidden vector aggregates the context."""
        return self in (ModelKind.CBOW, ModelKind.CWIN)

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown model kind: {name!r} "
                             f"(expected one of {[m.value for m in cls]})") from None


def default_learning_rate(model: ModelKind) -> float:
    # conventions of the classic tools: 0.025 for skip-style, 0.05 for cbow-style
    return 0.025 if model in (ModelKind.SKIP, ModelKind.SSKIP) else 0.05


@dataclass
class TrainingConfig:
    model: ModelKind
    dim: int = 200
    window: int = 3
    negatives: int = 10
    epochs: int = 5
    initial_lr: Optional[float] = None
    min_lr: Optional[float] = None
    seed: int = 1
    workers: int = 1
    subsample_threshold: float = 0.0  # 0 disables subsampling
    dynamic_window: bool = False

    def __post_init__(self):
        if isinstance(self.model, str):
            self.model = ModelKind.parse(self.model)
        if self.initial_lr is None:
            self.initial_lr = default_learning_rate(self.model)
        if self.min_lr is None:
            self.min_lr = self.initial_lr * 1e-4
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 0:
            raise ValueError("negatives must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.min_lr > self.initial_lr:
            raise ValueError("min_lr must not exceed initial_lr")

    def digest(self) -> str:
        payload = asdict(self)
        payload["model"] = self.model.value
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class EmbeddingMatrix:
    """Dense token embeddings: one float32 row per token.

    ``tokens`` defines row order; ``metadata`` carries provenance (model
    kind, training digest, per-epoch losses, or the source file for loaded
    embeddings).
    """

    tokens: list[str]
    vectors: np.ndarray
    metadata: dict = field(default_factory=dict)
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError("vectors must be a (len(tokens), dim) matrix")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding matrix contains non-finite values")
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate token in embedding matrix")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def lookup(self, token: str) -> Optional[np.ndarray]:
        """Exact, case-sensitive row lookup; None for out-of-vocabulary."""
        i = self.index.get(token)
        return self.vectors[i] if i is not None else None


class OutputParameters:
    """Output-side parameters of a model, shaped per kind.

    SKIP/CBOW hold one shared (V, dim) matrix. SSKIP holds 2*window
    position-indexed (V, dim) matrices. CWIN holds one (V, 2*window*dim)
    matrix whose column blocks correspond to relative positions.
    """

    def __init__(self, kind: ModelKind, data: np.ndarray, window: int):
        self.kind = kind
        self.window = window
        self.data = data
        expected = {
            ModelKind.SKIP: 2, ModelKind.CBOW: 2,
            ModelKind.SSKIP: 3, ModelKind.CWIN: 2,
        }[kind]
        if data.ndim != expected:
            raise ValueError(f"{kind.value} output parameters must be {expected}-d")

    @classmethod
    def zeros(cls, kind: ModelKind, vocab_size: int, dim: int, window: int,
              dtype=np.float32) -> "OutputParameters":
        if kind is ModelKind.SSKIP:
            data = np.zeros((2 * window, vocab_size, dim), dtype=dtype)
        elif kind is ModelKind.CWIN:
            data = np.zeros((vocab_size, 2 * window * dim), dtype=dtype)
        else:
            data = np.zeros((vocab_size, dim), dtype=dtype)
        return cls(kind, data, window)

    @property
    def hidden_dim(self) -> int:
        return self.data.shape[-1]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())


def position_index(relative_position: int, window: int) -> int:
    """Map a relative position in [-window,-1] u [1,window] to [0, 2*window)."""
    if relative_position == 0 or abs(relative_position) > window:
        raise ValueError(f"relative position {relative_position} outside "
                         f"+-{window} (and nonzero)")
    if relative_position < 0:
        return relative_position + window
    return relative_position + window - 1


def select_output_slice(model: ModelKind, relative_position: int,
                        output: OutputParameters) -> np.ndarray:
    """Return the output matrix (view) a context position trains against.

    Position-blind models return the shared matrix regardless of position;
    SSKIP returns the matrix indexed by the position; CWIN returns the
    column block of its wide matrix for that position.
    """
    idx = position_index(relative_position, output.window)
    if model is ModelKind.SSKIP:
        return output.data[idx]
    if model is ModelKind.CWIN:
        dim = output.data.shape[1] // (2 * output.window)
        return output.data[:, idx * dim:(idx + 1) * dim]
    return output.data


def forward_context(model: ModelKind, center_id: int,
                    context: Sequence[tuple[int, int]],
                    vectors: np.ndarray, window: int) -> Optional[np.ndarray]:
    """Compute the hidden vector for one training example.

    CBOW: mean of the context input vectors. CWIN: concatenation of context
    input vectors ordered by relative position, with absent positions
    zero-padded. SKIP/SSKIP: the center's own input vector (contexts are
    predicted, not pooled). Returns None when a pooling model gets an empty
    context (skip-example signal).
    """
    if model in (ModelKind.SKIP, ModelKind.SSKIP):
        return vectors[center_id].copy()
    if not context:
        return None
    dim = vectors.shape[1]
    if model is ModelKind.CBOW:
        rows = vectors[[tok for tok, _ in context]]
        return rows.mean(axis=0)
    hidden = np.zeros(2 * window * dim, dtype=vectors.dtype)
    for tok, pos in context:
        idx = position_index(pos, window)
        hidden[idx * dim:(idx + 1) * dim] = vectors[tok]
    return hidden


def sgns_loss_and_grads(v: np.ndarray, u_rows: np.ndarray
                        ) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and analytic gradients of one negative-sampling step.

    ``u_rows[0]`` is the positive target's output row, the rest are
    negatives. Returns (loss, dL/dv, dL/du_rows); all gradients are taken
    at the current parameter values. Pre-activations are clamped to
    +-SIGMOID_CLAMP, so saturated pairs contribute nearly-zero gradients.
    """
    x = u_rows @ v
    np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP, out=x)
    p = 1.0 / (1.0 + np.exp(-x))
    loss = -np.log(p[0]) - np.log1p(-p[1:]).sum()
    g = p.copy()
    g[0] -= 1.0  # sigmoid(u.v) - label
    grad_v = g @ u_rows
    grad_u = g[:, None] * v[None, :]
    return float(loss), grad_v, grad_u


def _apply_step(v: np.ndarray, ids: np.ndarray, output_matrix: np.ndarray,
                lr: float, update_v: bool) -> tuple[float, np.ndarray]:
    """One in-place SGD step against distinct output rows ``ids``.

    Both gradients are evaluated at the pre-update parameters. Returns the
    loss and dL/dv so pooling models can distribute the hidden gradient.
    """
    rows = output_matrix[ids]
    loss, grad_v, grad_u = sgns_loss_and_grads(v, rows)
    output_matrix[ids] = rows - lr * grad_u
    if update_v:
        v -= lr * grad_v
    return loss, grad_v


def sgns_step(center_vec: np.ndarray, target_id: int,
              output_matrix: np.ndarray, neg_table: NegativeTable,
              n_negatives: int, lr: float,
              rng: np.random.Generator) -> float:
    """Draw negatives and take one SGD step, updating ``center_vec`` and
    the touched output rows in place. Returns the loss of the step.

    Negative draws equal to the target are discarded, and duplicate draws
    within the step are collapsed, so the step trains against distinct rows.
    """
    if n_negatives > 0:
        negs = np.unique(neg_table.sample(rng, n_negatives))
        negs = negs[negs != target_id]
        ids = np.empty(len(negs) + 1, dtype=np.int64)
        ids[0] = target_id
        ids[1:] = negs
    else:
        ids = np.asarray([target_id], dtype=np.int64)
    loss, _ = _apply_step(center_vec, ids, output_matrix, lr, update_v=True)
    return loss


def example_loss_and_grads(model: ModelKind, center_id: int,
                           context: Sequence[tuple[int, int]],
                           input_vectors: np.ndarray,
                           output: OutputParameters,
                           negative_ids: Sequence[Sequence[int]]):
    """Loss and gradients of one full training example with fixed negatives.

    For SKIP/SSKIP the example is the sum of per-context-pair losses (one
    negative list per pair); for CBOW/CWIN it is the single pooled step
    (one negative list). Returns (loss, input_grads, output_grads) where
    the grad dicts map row id -> gradient array (output keys are
    (position_index or None, row id)). Used by the finite-difference
    oracle; the training loop applies exactly these gradients.
    """
    dim = input_vectors.shape[1]
    input_grads: dict[int, np.ndarray] = {}
    output_grads: dict[tuple[Optional[int], int], np.ndarray] = {}

    def add(store, key, value):
        if key in store:
            store[key] = store[key] + value
        else:
            store[key] = np.array(value, dtype=np.float64)

    total = 0.0
    if model in (ModelKind.SKIP, ModelKind.SSKIP):
        if len(negative_ids) != len(context):
            raise ValueError("need one negative list per context pair")
        v = input_vectors[center_id].astype(np.float64)
        for (tok, pos), negs in zip(context, negative_ids):
            mat = select_output_slice(model, pos, output)
            pos_idx = position_index(pos, output.window) if model is ModelKind.SSKIP else None
            ids = [tok] + [n for n in negs if n != tok]
            u_rows = mat[ids].astype(np.float64)
            loss, grad_v, grad_u = sgns_loss_and_grads(v, u_rows)
            total += loss
            add(input_grads, center_id, grad_v)
            for row_id, g in zip(ids, grad_u):
                add(output_grads, (pos_idx, row_id), g)
        return total, input_grads, output_grads

    hidden = forward_context(model, center_id, context, input_vectors,
                             output.window)
    if hidden is None:
        raise ValueError("empty context for a pooling model")
    if len(negative_ids) != 1:
        raise ValueError("pooling models take a single negative list")
    ids = [center_id] + [n for n in negative_ids[0] if n != center_id]
    u_rows = output.data[ids].astype(np.float64)
    loss, grad_h, grad_u = sgns_loss_and_grads(hidden.astype(np.float64), u_rows)
    total += loss
    for row_id, g in zip(ids, grad_u):
        add(output_grads, (None, row_id), g)
    if model is ModelKind.CBOW:
        share = grad_h / len(context)  # exact gradient of mean pooling
        for tok, _ in context:
            add(input_grads, tok, share)
    else:
        for tok, pos in context:
            idx = position_index(pos, output.window)
            add(input_grads, tok, grad_h[idx * dim:(idx + 1) * dim])
    return total, input_grads, output_grads


class _NegativePool:
    """Block-buffered negative draws from the unigram table."""

    def __init__(self, table: np.ndarray, rng: np.random.Generator):
        self.table = table
        self.rng = rng
        self.pool = table[rng.integers(0, len(table), _NEG_POOL_BLOCK)]
        self.cursor = 0

    def take(self, k: int) -> np.ndarray:
        if self.cursor + k > len(self.pool):
            self.pool = self.table[self.rng.integers(0, len(self.table),
                                                     _NEG_POOL_BLOCK)]
            self.cursor = 0
        out = self.pool[self.cursor:self.cursor + k]
        self.cursor += k
        return out


class _EpochState:
    """Shared progress counters; racy under workers > 1 by design."""

    def __init__(self):
        self.processed = 0
        self.loss_sum = 0.0
        self.loss_steps = 0


def _train_ids(ids: np.ndarray, state: _EpochState, cfg: TrainingConfig,
               inputs: np.ndarray, output: OutputParameters,
               pool: _NegativePool, rng: np.random.Generator,
               lr_span: float, planned: int, keep_probs) -> None:
    """Consume one encoded line: one SGD step per training example."""
    model = cfg.model
    window = cfg.window
    n_neg = cfg.negatives
    dim = cfg.dim
    if keep_probs is not None and len(ids) > 0:
        ids = ids[rng.random(len(ids)) < keep_probs[ids]]
    n = len(ids)
    if n == 0:
        return
    eff = rng.integers(1, window + 1, size=n) if cfg.dynamic_window else None
    out_shared = output.data if model is not ModelKind.SSKIP else None
    for i in range(n):
        state.processed += 1
        lr = cfg.initial_lr - lr_span * (state.processed / planned)
        if lr < cfg.min_lr:
            lr = cfg.min_lr
        b = window if eff is None else int(eff[i])
        lo = 0 if i < b else i - b
        hi = i + b + 1
        if hi > n:
            hi = n
        if hi - lo <= 1:
            continue
        center = int(ids[i])
        if model is ModelKind.SKIP or model is ModelKind.SSKIP:
            v = inputs[center]
            for j in range(lo, hi):
                if j == i:
                    continue
                target = int(ids[j])
                mat = (out_shared if out_shared is not None
                       else output.data[position_index(j - i, window)])
                negs = np.unique(pool.take(n_neg)) if n_neg else None
                if negs is not None:
                    negs = negs[negs != target]
                    step_ids = np.empty(len(negs) + 1, dtype=np.int64)
                    step_ids[0] = target
                    step_ids[1:] = negs
                else:
                    step_ids = np.asarray([target], dtype=np.int64)
                loss, _ = _apply_step(v, step_ids, mat, lr, update_v=True)
                state.loss_sum += loss
                state.loss_steps += 1
        else:
            if model is ModelKind.CBOW:
                ctx = np.concatenate((ids[lo:i], ids[i + 1:hi]))
                hidden = inputs[ctx].mean(axis=0)
            else:
                ctx = np.concatenate((ids[lo:i], ids[i + 1:hi]))
                hidden = np.zeros(2 * window * dim, dtype=inputs.dtype)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    idx = position_index(j - i, window)
                    hidden[idx * dim:(idx + 1) * dim] = inputs[ids[j]]
            negs = np.unique(pool.take(n_neg)) if n_neg else None
            if negs is not None:
                negs = negs[negs != center]
                step_ids = np.empty(len(negs) + 1, dtype=np.int64)
                step_ids[0] = center
                step_ids[1:] = negs
            else:
                step_ids = np.asarray([center], dtype=np.int64)
            loss, grad_h = _apply_step(hidden, step_ids, output.data, lr,
                                       update_v=False)
            state.loss_sum += loss
            state.loss_steps += 1
            if model is ModelKind.CBOW:
                share = (lr / len(ctx)) * grad_h
                for tok in ctx:
                    inputs[tok] -= share
            else:
                for j in range(lo, hi):
                    if j == i:
                        continue
                    idx = position_index(j - i, window)
                    inputs[ids[j]] -= lr * grad_h[idx * dim:(idx + 1) * dim]


def train(config: TrainingConfig, corpus_path, vocab: Vocabulary,
          neg_table: NegativeTable) -> EmbeddingMatrix:
    """Train input embeddings on a corpus file.

    The learning rate decays linearly from ``initial_lr`` to ``min_lr``
    over the planned number of center-token updates (epochs * total vocab
    count). With ``workers=1`` and a fixed seed the result is reproducible
    bit for bit; with more workers, updates are applied lock-free and
    reproducibility is not guaranteed.

    Raises:
        ValueError: corpus contains no in-vocabulary tokens.
        TrainingDivergedError: non-finite parameters or loss.
    """
    rng = np.random.default_rng(config.seed)
    vocab_size = len(vocab)
    inputs = ((rng.random((vocab_size, config.dim), dtype=np.float64) - 0.5)
              / config.dim).astype(np.float32)
    output = OutputParameters.zeros(config.model, vocab_size, config.dim,
                                    config.window)
    epoch_losses: list[float] = []
    planned = max(1, config.epochs * vocab.total_count)
    lr_span = config.initial_lr - config.min_lr

    keep_probs = None
    if config.subsample_threshold > 0:
        rel = vocab.counts / max(1, vocab.total_count)
        keep_probs = keep_probability(rel, config.subsample_threshold)

    any_tokens = False
    for epoch in range(config.epochs):
        state = _EpochState()
        state.processed = epoch * vocab.total_count
        base_processed = state.processed
        if config.workers == 1:
            pool = _NegativePool(neg_table.table, rng)
            with open(corpus_path, encoding="utf-8") as f:
                for line in f:
                    ids = vocab.encode_line(line)
                    if len(ids):
                        _train_ids(ids, state, config, inputs, output, pool,
                                   rng, lr_span, planned, keep_probs)
        else:
            _train_parallel(config, corpus_path, vocab, neg_table, inputs,
                            output, state, rng, lr_span, planned, keep_probs)
        if state.loss_steps:
            any_tokens = True
            epoch_losses.append(state.loss_sum / state.loss_steps)
        elif state.processed > base_processed:
            any_tokens = True
            epoch_losses.append(0.0)
        if not np.isfinite(inputs).all() or not output.is_finite() or \
                not np.isfinite(state.loss_sum):
            raise TrainingDivergedError(
                f"non-finite parameters after epoch {epoch + 1}; "
                f"lower the learning rate (initial_lr={config.initial_lr})")
        logger.info("epoch %d/%d: mean loss %.6f", epoch + 1, config.epochs,
                    epoch_losses[-1] if epoch_losses else float("nan"))
    if config.epochs > 0 and not any_tokens:
        raise ValueError("training corpus contains no in-vocabulary tokens")

    metadata = {
        "model": config.model.value,
        "dim": config.dim,
        "window": config.window,
        "negatives": config.negatives,
        "epochs": config.epochs,
        "seed": config.seed,
        "config_digest": config.digest(),
        "epoch_losses": epoch_losses,
    }
    return EmbeddingMatrix(tokens=list(vocab.tokens), vectors=inputs,
                           metadata=metadata)


def _train_parallel(config, corpus_path, vocab, neg_table, inputs, output,
                    state, rng, lr_span, planned, keep_probs) -> None:
    """Lock-free parallel epoch: workers update shared arrays unsynchronized."""
    seeds = rng.integers(0, 2**63 - 1, size=config.workers)

    def run(worker_id: int, seed: int):
        wrng = np.random.default_rng(seed)
        pool = _NegativePool(neg_table.table, wrng)
        with open(corpus_path, encoding="utf-8") as f:
            for lineno, line in enumerate(f):
                if lineno % config.workers != worker_id:
                    continue
                ids = vocab.encode_line(line)
                if len(ids):
                    _train_ids(ids, state, config, inputs, output, pool,
                               wrng, lr_span, planned, keep_probs)

    threads = [threading.Thread(target=run, args=(i, int(s)))
               for i, s in enumerate(seeds)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
