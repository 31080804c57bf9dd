"""Build multi-label name-typing datasets from knowledge-base style TSVs.

A name's type set is the union of the (coarse-mapped) types of every
entity the name can refer to. Names are single lowercase tokens; labels
are bitsets over a fixed ordered type inventory.

Input files are tab-separated:

* entity types: ``entity<TAB>type1,type2,...``
* name entities: ``name<TAB>entity1,entity2,...``
* type mapping:  ``raw_type<TAB>coarse_type`` (one pair per row)
* pre-built dataset rows: ``name<TAB>type1,type2,...``
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .vocab import Vocabulary

logger = logging.getLogger(__name__)

# Default 50-type inventory (FIGER-style fine-grained classes).
DEFAULT_TYPE_INVENTORY = (
    "/art", "/art/film", "/astral_body", "/biology", "/broadcast_network",
    "/broadcast_program", "/building", "/building/restaurant", "/chemistry",
    "/computer/programming_language", "/disease", "/event", "/food", "/game",
    "/geography/island", "/geography/mountain", "/god", "/internet/website",
    "/living_thing", "/location", "/location/body_of_water",
    "/location/cemetery", "/location/city", "/location/county",
    "/medicine/drug", "/medicine/medical_treatment", "/medicine/symptom",
    "/music", "/organization", "/organization/airline",
    "/organization/company", "/organization/educational_institution",
    "/organization/sports_team", "/people/ethnicity", "/person",
    "/person/actor", "/person/artist", "/person/athlete", "/person/author",
    "/person/director", "/person/engineer", "/person/musician", "/play",
    "/product", "/product/airplane", "/product/instrument", "/product/ship",
    "/software", "/title", "/written_work",
)

SPLIT_NAMES = ("train", "dev", "test")
DEFAULT_SAMPLE_SIZE = 100_000
DEFAULT_FRACTIONS = (0.5, 0.2, 0.3)


@dataclass
class TypeSystem:
    """Fixed, ordered inventory of type names; order defines bit positions."""

    types: tuple[str, ...] = DEFAULT_TYPE_INVENTORY
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.types = tuple(self.types)
        if len(set(self.types)) != len(self.types):
            raise ValueError("type names must be unique")
        if not self.types:
            raise ValueError("type system must not be empty")
        self.index = {t: i for i, t in enumerate(self.types)}

    def __len__(self) -> int:
        return len(self.types)

    def mask_of(self, type_names: Iterable[str]) -> int:
        """Bitset of the given types; unknown names raise KeyError."""
        idx = self.index
        mask = 0
        for t in type_names:
            mask |= 1 << idx[t]
        return mask

    def names_of(self, mask: int) -> tuple[str, ...]:
        return tuple(t for i, t in enumerate(self.types) if mask >> i & 1)

    def digest(self) -> str:
        import hashlib
        return hashlib.sha256("\n".join(self.types).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class NameTypingExample:
    """One labeled name: ``types`` is a nonzero bitset over the TypeSystem."""

    name: str
    types: int

    def __post_init__(self):
        if self.types <= 0:
            raise ValueError(f"example {self.name!r} must have at least one type")

    @property
    def n_types(self) -> int:
        return self.types.bit_count()


@dataclass
class NameTypingDataset:
    type_system: TypeSystem
    train: list[NameTypingExample]
    dev: list[NameTypingExample]
    test: list[NameTypingExample]
    seed: Optional[int] = None
    provenance: dict = field(default_factory=dict)

    def split(self, name: str) -> list[NameTypingExample]:
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)

    def label_matrix(self, split: str) -> np.ndarray:
        """Bool (N, |types|) matrix for the split, in example order."""
        examples = self.split(split)
        t = len(self.type_system)
        if t <= 63:
            masks = np.fromiter((ex.types for ex in examples), dtype=np.int64,
                                count=len(examples))
            return ((masks[:, None] >> np.arange(t)) & 1).astype(bool)
        out = np.zeros((len(examples), t), dtype=bool)
        for i, ex in enumerate(examples):
            for j in range(t):
                if ex.types >> j & 1:
                    out[i, j] = True
        return out

    def validate(self) -> list[str]:
        """Return a list of invariant violations (empty when clean)."""
        problems = []
        seen: set[str] = set()
        for split in SPLIT_NAMES:
            for ex in self.split(split):
                if ex.name in seen:
                    problems.append(f"name {ex.name!r} appears in more than one split")
                seen.add(ex.name)
        covered = 0
        for ex in self.train:
            covered |= ex.types
        missing = [t for i, t in enumerate(self.type_system.types)
                   if not covered >> i & 1]
        if missing:
            problems.append(f"types never positive in train: {missing}")
        return problems


def _parse_tsv_rows(path) -> Iterable[tuple[int, str, str]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise ValueError(f"{path}:{lineno}: expected 'key<TAB>values'")
            yield lineno, parts[0], parts[1]


def _load_key_to_set(path) -> dict[str, set[str]]:
    """Shared loader for ``key<TAB>comma-separated values`` files.

    Duplicate keys merge by union; empty value lists are rejected.
    """
    out: dict[str, set[str]] = {}
    for lineno, key, values in _parse_tsv_rows(path):
        items = {v for v in values.split(",") if v}
        if not items:
            raise ValueError(f"{path}:{lineno}: empty value list for {key!r}")
        out.setdefault(key, set()).update(items)
    return out


def load_entity_types(path) -> dict[str, set[str]]:
    """Load ``entity<TAB>raw_type1,raw_type2,...`` rows."""
    return _load_key_to_set(path)


def load_name_entities(path) -> dict[str, set[str]]:
    """Load ``name<TAB>entity1,entity2,...`` rows."""
    return _load_key_to_set(path)


def load_type_mapping(path) -> dict[str, set[str]]:
    """Load a raw-type to coarse-type mapping (one pair per row)."""
    mapping: dict[str, set[str]] = {}
    for lineno, raw, coarse in _parse_tsv_rows(path):
        if not coarse or "," in coarse:
            raise ValueError(f"{path}:{lineno}: expected a single coarse type")
        mapping.setdefault(raw, set()).add(coarse)
    return mapping


def derive_name_types(name_entities: Mapping[str, set[str]],
                      entity_types: Mapping[str, set[str]],
                      mapping: Mapping[str, set[str]],
                      ) -> tuple[dict[str, set[str]], int]:
    """Union each name's entity types through the coarse mapping.

    Raw types without a mapping entry are dropped; the second return value
    counts those drops. Names whose union comes out empty are kept here
    with an empty set and removed by the downstream filter.
    """
    dropped = 0
    result: dict[str, set[str]] = {}
    for name, entities in name_entities.items():
        types: set[str] = set()
        for entity in entities:
            for raw in entity_types.get(entity, ()):
                coarse = mapping.get(raw)
                if coarse is None:
                    dropped += 1
                else:
                    types.update(coarse)
        result[name] = types
    if dropped:
        logger.info("derive_name_types: dropped %d unmapped raw type "
                    "occurrences", dropped)
    return result, dropped


def select_top_k_types(name_types: Mapping[str, set[str]], k: int = 50
                       ) -> TypeSystem:
    """The k types present in the most names, ties broken lexicographically.

    The selected types are returned in canonical (sorted) order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    freq: dict[str, int] = {}
    for types in name_types.values():
        for t in types:
            freq[t] = freq.get(t, 0) + 1
    if len(freq) < k:
        raise ValueError(f"only {len(freq)} distinct types available, need {k}")
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return TypeSystem(types=tuple(sorted(t for t, _ in ranked[:k])))


def filter_names(name_types: Mapping[str, set[str]],
                 type_system: TypeSystem,
                 vocab: Vocabulary,
                 min_corpus_freq: int = 100) -> dict[str, set[str]]:
    """Keep single-token names that are frequent enough and typeable.

    Names are lowercased before the corpus-frequency lookup; names that
    collide after lowercasing merge their type sets by union. Types outside
    the TypeSystem are discarded; names left with no types are dropped.
    """
    inventory = set(type_system.types)
    merged: dict[str, set[str]] = {}
    for name, types in name_types.items():
        if len(name.split()) != 1:
            continue
        key = name.lower()
        kept = types & inventory
        if not kept:
            continue
        merged.setdefault(key, set()).update(kept)
    return {name: types for name, types in merged.items()
            if vocab.count_of(name) >= min_corpus_freq}


def sample_and_split(name_types: Mapping[str, set[str]],
                     type_system: TypeSystem,
                     sample_size: int = DEFAULT_SAMPLE_SIZE,
                     fractions: Sequence[float] = DEFAULT_FRACTIONS,
                     seed: int = 1) -> NameTypingDataset:
    """Sample names uniformly without replacement and split train/dev/test.

    Split sizes are floor(fraction * n) for train and dev with the
    remainder going to test. Deterministic for a fixed seed; splits are
    disjoint by name. Examples are sorted by name within each split.
    """
    if len(fractions) != 3:
        raise ValueError("fractions must be (train, dev, test)")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    names = sorted(name_types)
    if not names:
        raise ValueError("no names to sample")
    rng = np.random.default_rng(seed)
    if sample_size < len(names):
        order = rng.permutation(len(names))[:sample_size]
    else:
        if sample_size > len(names):
            logger.warning("sample_size %d exceeds population %d; taking all",
                           sample_size, len(names))
        order = rng.permutation(len(names))
    sampled = [names[i] for i in order]
    n = len(sampled)
    n_train = int(np.floor(fractions[0] * n))
    n_dev = int(np.floor(fractions[1] * n))

    def build(chunk: list[str]) -> list[NameTypingExample]:
        return [NameTypingExample(name=nm,
                                  types=type_system.mask_of(name_types[nm]))
                for nm in sorted(chunk)]

    ds = NameTypingDataset(
        type_system=type_system,
        train=build(sampled[:n_train]),
        dev=build(sampled[n_train:n_train + n_dev]),
        test=build(sampled[n_train + n_dev:]),
        seed=seed,
        provenance={"sample_size": sample_size, "fractions": list(fractions),
                    "population": len(names)},
    )
    for problem in ds.validate():
        logger.warning("dataset: %s", problem)
    return ds


def dataset_stats(dataset: NameTypingDataset) -> dict[str, dict]:
    """Per-split name counts, mean types per name, and per-type frequency."""
    stats: dict[str, dict] = {}
    for split in SPLIT_NAMES:
        examples = dataset.split(split)
        if not examples:
            stats[split] = {"names": 0, "avg_types": None,
                            "type_freq": {}, "error": "empty split"}
            continue
        per_type = {t: 0 for t in dataset.type_system.types}
        total_types = 0
        for ex in examples:
            total_types += ex.n_types
            for t in dataset.type_system.names_of(ex.types):
                per_type[t] += 1
        stats[split] = {
            "names": len(examples),
            "avg_types": total_types / len(examples),
            "type_freq": per_type,
        }
    return stats


def load_name_types_tsv(path, type_system: Optional[TypeSystem] = None
                        ) -> tuple[dict[str, set[str]], TypeSystem]:
    """Read pre-built ``name<TAB>type1,type2,...`` rows.

    Without an explicit TypeSystem, the inventory is the sorted set of
    types present in the file.
    """
    raw = _load_key_to_set(path)
    if type_system is None:
        seen: set[str] = set()
        for types in raw.values():
            seen.update(types)
        type_system = TypeSystem(types=tuple(sorted(seen)))
    return raw, type_system


def save_dataset(dataset: NameTypingDataset, out_dir) -> None:
    """Write types.txt, one TSV per split, and meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "types.txt", "w", encoding="utf-8") as f:
        for t in dataset.type_system.types:
            f.write(t + "\n")
    for split in SPLIT_NAMES:
        with open(out / f"{split}.tsv", "w", encoding="utf-8") as f:
            for ex in dataset.split(split):
                names = dataset.type_system.names_of(ex.types)
                f.write(f"{ex.name}\t{','.join(names)}\n")
    meta = {"seed": dataset.seed, "provenance": dataset.provenance,
            "sizes": {s: len(dataset.split(s)) for s in SPLIT_NAMES},
            "type_digest": dataset.type_system.digest()}
    with open(out / "meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def load_dataset(in_dir) -> NameTypingDataset:
    """Load a dataset directory written by save_dataset."""
    src = Path(in_dir)
    types_path = src / "types.txt"
    if not types_path.exists():
        raise FileNotFoundError(f"missing {types_path}")
    with open(types_path, encoding="utf-8") as f:
        ts = TypeSystem(types=tuple(line.strip() for line in f if line.strip()))
    splits: dict[str, list[NameTypingExample]] = {}
    for split in SPLIT_NAMES:
        path = src / f"{split}.tsv"
        if not path.exists():
            raise FileNotFoundError(f"missing split file {path}")
        examples = []
        for lineno, name, values in _parse_tsv_rows(path):
            names = [v for v in values.split(",") if v]
            try:
                mask = ts.mask_of(names)
            except KeyError as e:
                raise ValueError(f"{path}:{lineno}: type {e} not in types.txt") \
                    from None
            examples.append(NameTypingExample(name=name, types=mask))
        splits[split] = examples
    seed = None
    provenance = {}
    meta_path = src / "meta.json"
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as f:
            meta = json.load(f)
        seed = meta.get("seed")
        provenance = meta.get("provenance", {})
    return NameTypingDataset(type_system=ts, train=splits["train"],
                             dev=splits["dev"], test=splits["test"],
                             seed=seed, provenance=provenance)
