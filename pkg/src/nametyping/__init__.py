"""Train word embeddings and evaluate them by multi-label name typing.

The toolkit covers the full loop: corpus vocabulary and negative-sampling
tables, four embedding models (bag-of-words SKIP/CBOW and order-aware
SSKIP/CWIN), embedding file IO, name-typing dataset construction from
knowledge-base style TSVs, per-type LR and MLP classifiers, and strict
accuracy / micro-F1 scoring with a per-type-count breakdown.
"""

from .vocab import (
    CorpusStats,
    NegativeTable,
    Vocabulary,
    build_negative_table,
    build_vocabulary,
    collect_corpus_stats,
    keep_probability,
    stream_windows,
)
from .embeddings import (
    EmbeddingMatrix,
    ModelKind,
    OutputParameters,
    TrainingConfig,
    TrainingDivergedError,
    example_loss_and_grads,
    forward_context,
    select_output_slice,
    sgns_loss_and_grads,
    sgns_step,
    train,
)
from .embedding_io import (
    EmbeddingFileFormat,
    EmbeddingFormatError,
    lookup,
    read_embeddings,
    write_embeddings,
)
from .dataset import (
    DEFAULT_TYPE_INVENTORY,
    NameTypingDataset,
    NameTypingExample,
    TypeSystem,
    dataset_stats,
    derive_name_types,
    filter_names,
    load_dataset,
    load_entity_types,
    load_name_entities,
    load_name_types_tsv,
    load_type_mapping,
    sample_and_split,
    save_dataset,
    select_top_k_types,
)
from .classifiers import (
    ClassifierConfig,
    LinearPerTypeModel,
    MlpModel,
    PerTypeMlpModel,
    load_model,
    mlp_loss_and_grads,
    predict_labels,
    predict_proba,
    save_model,
    train_lr,
    train_mlp,
)
from .metrics import (
    EvalReport,
    build_report,
    emit_report,
    micro_counts,
    micro_f1,
    per_type_count_breakdown,
    strict_accuracy,
)
from .pipeline import evaluate_embeddings, featurize_split

__version__ = "0.1.0"
