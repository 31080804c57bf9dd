import numpy as np
import pytest

from nametyping.dataset import (DEFAULT_TYPE_INVENTORY, NameTypingDataset,
                                NameTypingExample, TypeSystem, dataset_stats,
                                derive_name_types, filter_names, load_dataset,
                                load_entity_types, load_name_entities,
                                load_name_types_tsv, load_type_mapping,
                                sample_and_split, save_dataset,
                                select_top_k_types)
from nametyping.vocab import Vocabulary


def make_vocab(counts: dict[str, int]) -> Vocabulary:
    items = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(tokens=[k for k, _ in items],
                      counts=np.array([v for _, v in items]),
                      lowercase=True)


class TestTypeSystem:
    def test_default_inventory_is_50_unique_sorted(self):
        assert len(DEFAULT_TYPE_INVENTORY) == 50
        assert len(set(DEFAULT_TYPE_INVENTORY)) == 50
        assert list(DEFAULT_TYPE_INVENTORY) == sorted(DEFAULT_TYPE_INVENTORY)
        assert TypeSystem().types == DEFAULT_TYPE_INVENTORY

    def test_mask_round_trip(self):
        ts = TypeSystem(types=("/a", "/b", "/c"))
        mask = ts.mask_of({"/c", "/a"})
        assert mask == 0b101
        assert ts.names_of(mask) == ("/a", "/c")

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            TypeSystem(types=("/a", "/a"))


class TestLoaders:
    def test_entity_types_merges_duplicates_by_union(self, tmp_path):
        path = tmp_path / "et.tsv"
        path.write_text("e1\t/people/person,/military/officer\ne1\t/award\n")
        got = load_entity_types(path)
        assert got == {"e1": {"/people/person", "/military/officer", "/award"}}

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "et.tsv"
        path.write_text("e1\t/a\nbroken row\n")
        with pytest.raises(ValueError, match=":2"):
            load_entity_types(path)

    def test_empty_type_list_rejected(self, tmp_path):
        path = tmp_path / "et.tsv"
        path.write_text("e1\t\n")
        with pytest.raises(ValueError, match="empty value list"):
            load_entity_types(path)

    def test_type_mapping_rejects_multi_column_values(self, tmp_path):
        path = tmp_path / "map.tsv"
        path.write_text("raw\t/a,/b\n")
        with pytest.raises(ValueError, match="single coarse type"):
            load_type_mapping(path)

    def test_name_entities(self, tmp_path):
        path = tmp_path / "ne.tsv"
        path.write_text("washington\tdc,state,george\n")
        assert load_name_entities(path) == {
            "washington": {"dc", "state", "george"}}


class TestDeriveNameTypes:
    def test_washington_union_over_entities(self):
        # the name's types are the union of its entities' mapped types
        name_entities = {"washington": {"dc", "state", "george"}}
        entity_types = {
            "dc": {"fb.city", "fb.location"},
            "state": {"fb.state", "fb.location"},
            "george": {"fb.politician", "fb.person", "fb.soldier"},
        }
        mapping = {f"fb.{t}": {f"/{t}"} for t in
                   ("city", "location", "state", "politician", "person",
                    "soldier")}
        got, dropped = derive_name_types(name_entities, entity_types, mapping)
        assert got["washington"] == {"/city", "/location", "/state",
                                     "/politician", "/person", "/soldier"}
        assert len(got["washington"]) == 6
        assert dropped == 0

    def test_singleton(self):
        got, _ = derive_name_types({"n": {"e"}}, {"e": {"raw"}},
                                   {"raw": {"/t"}})
        assert got["n"] == {"/t"}

    def test_unmapped_types_dropped_and_counted(self):
        got, dropped = derive_name_types(
            {"n": {"e1", "e2"}},
            {"e1": {"raw1", "raw2"}, "e2": {"raw2"}},
            {"raw1": {"/t"}})
        assert got["n"] == {"/t"}
        assert dropped == 2  # raw2 occurs on two entities

    def test_fully_unmapped_name_keeps_empty_set(self):
        got, dropped = derive_name_types({"n": {"e"}}, {"e": {"raw"}}, {})
        assert got["n"] == set()
        assert dropped == 1

    def test_union_monotonicity(self):
        rng = np.random.default_rng(0)
        raws = [f"r{i}" for i in range(8)]
        mapping = {r: {f"/t{i % 4}"} for i, r in enumerate(raws)}
        entity_types = {f"e{i}": set(rng.choice(raws, size=2).tolist())
                        for i in range(10)}
        base_entities = {"e0", "e1"}
        base, _ = derive_name_types({"n": base_entities}, entity_types, mapping)
        for extra in range(2, 10):
            more, _ = derive_name_types({"n": base_entities | {f"e{extra}"}},
                                        entity_types, mapping)
            assert base["n"] <= more["n"]


class TestSelectTopK:
    def test_frequency_then_lexicographic(self):
        name_types = {
            "n1": {"/a", "/b"}, "n2": {"/a", "/c"}, "n3": {"/a", "/b"},
            "n4": {"/a"}, "n5": {"/a", "/c"}, "n6": {"/b"},
        }
        # freq: /a=5, /b=3, /c=2
        ts = select_top_k_types(name_types, k=2)
        assert ts.types == ("/a", "/b")

    def test_tie_breaks_lexicographically(self):
        name_types = {"n1": {"/a"}, "n2": {"/a"}, "n3": {"/a"},
                      "n4": {"/a", "/b"}, "n5": {"/c"}, "n6": {"/b"},
                      "n7": {"/c"}}
        # freq: /a=4, /b=2, /c=2 -> tie between /b and /c at k=2
        ts = select_top_k_types(name_types, k=2)
        assert ts.types == ("/a", "/b")

    def test_k_equal_to_distinct_types_keeps_all(self):
        name_types = {"n": {"/b", "/a"}}
        ts = select_top_k_types(name_types, k=2)
        assert ts.types == ("/a", "/b")

    def test_too_few_types_is_configuration_error(self):
        with pytest.raises(ValueError, match="distinct types"):
            select_top_k_types({"n": {"/a"}}, k=2)


class TestFilterNames:
    def setup_method(self):
        self.ts = TypeSystem(types=("/a", "/b"))
        self.vocab = make_vocab({"paris": 500, "york": 120, "rare": 99})

    def test_multiword_names_dropped(self):
        got = filter_names({"new york": {"/a"}}, self.ts, self.vocab,
                           min_corpus_freq=100)
        assert got == {}

    def test_frequency_threshold_is_strict_boundary(self):
        got = filter_names({"rare": {"/a"}, "york": {"/a"}}, self.ts,
                           self.vocab, min_corpus_freq=100)
        assert set(got) == {"york"}

    def test_empty_type_set_dropped(self):
        got = filter_names({"paris": {"/other"}}, self.ts, self.vocab)
        assert got == {}

    def test_lowercase_collisions_merge_by_union(self):
        got = filter_names({"Paris": {"/a"}, "paris": {"/b"}}, self.ts,
                           self.vocab, min_corpus_freq=100)
        assert got == {"paris": {"/a", "/b"}}

    def test_types_outside_inventory_discarded(self):
        got = filter_names({"paris": {"/a", "/zzz"}}, self.ts, self.vocab)
        assert got == {"paris": {"/a"}}


class TestSampleAndSplit:
    def make_names(self, n, seed=0):
        rng = np.random.default_rng(seed)
        types = ("/a", "/b", "/c")
        return {f"name{i:05d}": {types[j] for j in
                                 rng.choice(3, size=rng.integers(1, 4),
                                            replace=False)}
                for i in range(n)}

    def test_exact_floor_rounding(self):
        ts = TypeSystem(types=("/a", "/b", "/c"))
        ds = sample_and_split(self.make_names(10), ts, sample_size=10, seed=1)
        assert (len(ds.train), len(ds.dev), len(ds.test)) == (5, 2, 3)

    def test_disjoint_and_exhaustive(self):
        ts = TypeSystem(types=("/a", "/b", "/c"))
        names = self.make_names(200)
        ds = sample_and_split(names, ts, sample_size=150, seed=2)
        all_names = [ex.name for split in ("train", "dev", "test")
                     for ex in ds.split(split)]
        assert len(all_names) == 150
        assert len(set(all_names)) == 150
        assert set(all_names) <= set(names)

    def test_same_seed_reproduces(self):
        ts = TypeSystem(types=("/a", "/b", "/c"))
        names = self.make_names(100)
        d1 = sample_and_split(names, ts, sample_size=60, seed=9)
        d2 = sample_and_split(names, ts, sample_size=60, seed=9)
        for split in ("train", "dev", "test"):
            assert d1.split(split) == d2.split(split)

    def test_oversized_sample_takes_all(self, caplog):
        ts = TypeSystem(types=("/a", "/b", "/c"))
        ds = sample_and_split(self.make_names(10), ts, sample_size=50, seed=1)
        assert len(ds.train) + len(ds.dev) + len(ds.test) == 10

    def test_bad_fractions_rejected(self):
        ts = TypeSystem(types=("/a",))
        with pytest.raises(ValueError, match="sum to 1"):
            sample_and_split({"n": {"/a"}}, ts, fractions=(0.5, 0.2, 0.2))

    def test_missing_train_type_warns(self, caplog):
        ts = TypeSystem(types=("/a", "/b"))
        names = {"n1": {"/a"}, "n2": {"/a"}, "n3": {"/a"}, "n4": {"/b"}}
        import logging
        with caplog.at_level(logging.WARNING, logger="nametyping.dataset"):
            for seed in range(20):
                ds = sample_and_split(names, ts, sample_size=4, seed=seed)
                if ds.validate():
                    break
        assert any("never positive" in r.message for r in caplog.records)


class TestStatsAndSerialization:
    def make_dataset(self):
        ts = TypeSystem(types=("/a", "/b", "/c", "/d"))
        train = [NameTypingExample("alpha", ts.mask_of({"/a", "/b"})),
                 NameTypingExample("beta", ts.mask_of({"/a", "/b", "/c",
                                                       "/d"}))]
        dev = [NameTypingExample("gamma", ts.mask_of({"/c"}))]
        test = [NameTypingExample("delta", ts.mask_of({"/d", "/a"}))]
        return NameTypingDataset(type_system=ts, train=train, dev=dev,
                                 test=test, seed=7)

    def test_avg_types_is_arithmetic_mean(self):
        stats = dataset_stats(self.make_dataset())
        assert stats["train"]["avg_types"] == 3.0  # (2 + 4) / 2

    def test_empty_split_flagged_not_crash(self):
        ds = self.make_dataset()
        ds.dev = []
        stats = dataset_stats(ds)
        assert stats["dev"]["error"] == "empty split"
        assert stats["dev"]["names"] == 0

    def test_per_type_frequency(self):
        stats = dataset_stats(self.make_dataset())
        assert stats["train"]["type_freq"]["/a"] == 2
        assert stats["train"]["type_freq"]["/c"] == 1

    def test_save_load_round_trip(self, tmp_path):
        ds = self.make_dataset()
        save_dataset(ds, tmp_path / "ds")
        back = load_dataset(tmp_path / "ds")
        assert back.type_system.types == ds.type_system.types
        for split in ("train", "dev", "test"):
            assert back.split(split) == ds.split(split)
        assert back.seed == 7

    def test_split_files_use_type_system_order(self, tmp_path):
        ds = self.make_dataset()
        save_dataset(ds, tmp_path / "ds")
        line = (tmp_path / "ds" / "test.tsv").read_text().strip()
        assert line == "delta\t/a,/d"

    def test_label_matrix_matches_masks(self):
        ds = self.make_dataset()
        mat = ds.label_matrix("train")
        assert mat.shape == (2, 4)
        assert mat[0].tolist() == [True, True, False, False]
        assert mat[1].tolist() == [True, True, True, True]

    def test_example_requires_a_type(self):
        with pytest.raises(ValueError, match="at least one type"):
            NameTypingExample("x", 0)

    def test_load_name_types_tsv_derives_sorted_inventory(self, tmp_path):
        path = tmp_path / "pre.tsv"
        path.write_text("n1\t/b,/a\nn2\t/c\n")
        raw, ts = load_name_types_tsv(path)
        assert ts.types == ("/a", "/b", "/c")
        assert raw["n1"] == {"/a", "/b"}
