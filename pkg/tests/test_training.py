"""Dataset handling, deduplication, the training loop and grid search."""

import hashlib
from dataclasses import replace

import numpy as np
import pytest

from thermofuse.embeddings import EmbeddingSet, EmbeddingStore
from thermofuse.errors import DataLinkageError, DatasetError, DomainError
from thermofuse.structure_io import backbone_dihedrals
from thermofuse.training import (
    TRAIN,
    VAL,
    EpochLog,
    MutationRecord,
    Sample,
    TrainConfig,
    build_samples,
    dedup,
    ensure_split,
    expand_grid,
    fit_model,
    grid_report_text,
    grid_search,
    load_records,
    save_records,
    select_best_epoch,
    train,
)
from conftest import CORPUS_SEQUENCES, helix_structure, make_corpus_records


def rec(pid="p", pos=1, wt="A", mut="V", ddg=1.0, split=TRAIN, chain="A"):
    return MutationRecord(pid, chain, pos, wt, mut, ddg, split)


class TestLoadRecords:
    def test_round_trip(self, tmp_path):
        records = make_corpus_records(n_train=5, n_val=3)
        path = tmp_path / "d.csv"
        save_records(records, path)
        assert load_records(path) == records

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("pdb_id,chain,position,wt_aa,ddg\np,A,1,A,0.5\n")
        with pytest.raises(DatasetError):
            load_records(path)

    def test_wild_type_equal_mutant_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("pdb_id,chain,position,wt_aa,mut_aa,ddg\np,A,1,A,A,0.5\n")
        with pytest.raises(DatasetError):
            load_records(path)

    def test_bad_ddg_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("pdb_id,chain,position,wt_aa,mut_aa,ddg\np,A,1,A,V,oops\n")
        with pytest.raises(DatasetError):
            load_records(path)

    def test_bad_split_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text(
            "pdb_id,chain,position,wt_aa,mut_aa,ddg,split\np,A,1,A,V,0.5,test\n")
        with pytest.raises(DatasetError):
            load_records(path)

    def test_tab_delimiter_accepted(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("pdb_id\tchain\tposition\twt_aa\tmut_aa\tddg\np\tA\t1\tA\tV\t0.5\n")
        records = load_records(path)
        assert records[0].mut_aa == "V"


class TestDedup:
    def test_no_duplicates_is_identity(self):
        records = [rec(pos=i) for i in range(1, 6)]
        result = dedup(records)
        assert result.kept == records
        assert result.removed == []
        assert result.removed_fraction_per_split == {TRAIN: 0.0}

    def test_first_wins_and_conflicts_flagged(self):
        first = rec(ddg=1.0)
        second = rec(ddg=2.0)
        result = dedup([first, second])
        assert result.kept == [first]
        assert result.removed == [second]
        assert result.conflicting == [second]

    def test_same_ddg_duplicate_not_flagged_as_conflict(self):
        result = dedup([rec(), rec()])
        assert len(result.removed) == 1
        assert result.conflicting == []

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        records = [rec(pos=int(rng.integers(1, 6)), mut="VLIK"[rng.integers(4)])
                   for _ in range(40)]
        once = dedup(records)
        twice = dedup(once.kept)
        assert twice.kept == once.kept
        assert twice.removed == []

    def test_engineered_paper_rates(self):
        # 2500 train rows with 13 duplicates, 400 val rows with 4 duplicates
        train_rows = [rec(pid=f"t{i}", split=TRAIN) for i in range(2487)]
        train_rows += [replace(train_rows[i], ddg=9.9) for i in range(13)]
        val_rows = [rec(pid=f"v{i}", split=VAL) for i in range(396)]
        val_rows += [replace(val_rows[i], ddg=9.9) for i in range(4)]
        result = dedup(train_rows + val_rows)
        assert result.removed_fraction_per_split[TRAIN] == pytest.approx(0.0052, abs=1e-4)
        assert result.removed_fraction_per_split[VAL] == pytest.approx(0.0100, abs=1e-4)


class TestEnsureSplit:
    def test_existing_split_honored(self):
        records = [rec(pos=1, split=TRAIN), rec(pos=2, split=VAL)]
        assert ensure_split(records, seed=0) == records

    def test_assignment_is_deterministic_and_87_13(self):
        records = [replace(rec(pos=i % 20 + 1, pid=f"p{i}"), split=None)
                   for i in range(200)]
        a = ensure_split(records, seed=5)
        b = ensure_split(records, seed=5)
        assert a == b
        n_train = sum(1 for r in a if r.split == TRAIN)
        assert n_train == round(0.87 * 200)
        assert all(r.split in (TRAIN, VAL) for r in a)


class TestEpochSelection:
    def test_single_epoch(self):
        logs = [EpochLog(1, 1.0, 1.0, 0.3, 0.1)]
        assert select_best_epoch(logs) == 1

    def test_earliest_argmax_on_ties(self):
        spearmans = [0.2, 0.5, 0.5, 0.4]
        logs = [EpochLog(i + 1, 0, 0, s, 0) for i, s in enumerate(spearmans)]
        assert select_best_epoch(logs) == 2

    def test_property_on_random_logs(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            n = int(rng.integers(1, 30))
            values = rng.choice([0.1, 0.2, 0.3, 0.4], size=n)
            logs = [EpochLog(i + 1, 0, 0, float(v), 0) for i, v in enumerate(values)]
            best = select_best_epoch(logs)
            target = max(values)
            assert values[best - 1] == target
            assert all(v < target for v in values[:best - 1])


def linear_samples(n=120, d=6, seed=0, noise=0.0):
    """Targets linear in a length-1 protein's structural embedding row."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    samples = []
    for i in range(n):
        a = rng.standard_normal(d)
        ddg = float(w @ a + noise * rng.standard_normal())
        split = TRAIN if i < int(0.8 * n) else VAL
        record = MutationRecord(f"s{i}", "A", 1, "A", "V", ddg, split)
        samples.append(Sample(record, EmbeddingSet(f"s{i}", a[None, :]), None, None))
    return samples


def small_config(**over):
    base = dict(variant=1, epochs=5, batch_size=16, lr=1e-2, d_f=8, d_a=8,
                window=1, seed=3, hidden=(16,))
    base.update(over)
    return TrainConfig(**base)


class TestFitModel:
    def test_bit_reproducible_given_seed(self):
        samples = linear_samples()
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        r1 = fit_model(small_config(), tr, va)
        r2 = fit_model(small_config(), tr, va)
        assert r1.logs == r2.logs
        assert r1.best_epoch == r2.best_epoch
        for k in r1.model.params():
            np.testing.assert_array_equal(r1.model.params()[k], r2.model.params()[k])

    def test_convergence_on_separable_synthetic_data(self):
        samples = linear_samples(n=200, seed=4)
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        result = fit_model(small_config(epochs=50, lr=1e-2), tr, va)
        assert result.logs[-1].train_mse < 0.1 * result.logs[0].train_mse

    def test_best_epoch_indexes_maximal_spearman(self):
        samples = linear_samples(n=100, seed=5, noise=0.5)
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        result = fit_model(small_config(epochs=8), tr, va)
        spearmans = [log.val_spearman for log in result.logs]
        assert spearmans[result.best_epoch - 1] == max(spearmans)

    def test_validation_targets_never_touch_parameters(self):
        samples = linear_samples(n=100, seed=6, noise=0.3)
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        hashes = {}

        def capture(tag):
            def cb(epoch, model, log):
                digest = hashlib.sha256()
                for name in sorted(model.params()):
                    digest.update(model.params()[name].tobytes())
                hashes.setdefault(tag, []).append(digest.hexdigest())
            return cb

        fit_model(small_config(epochs=6), tr, va, on_epoch_end=capture("base"))
        rng = np.random.default_rng(0)
        shuffled_ddg = rng.permutation([s.record.ddg for s in va])
        va_permuted = [Sample(replace(s.record, ddg=float(d)), s.struct_emb,
                              s.seq_emb, s.feats)
                       for s, d in zip(va, shuffled_ddg)]
        fit_model(small_config(epochs=6), tr, va_permuted,
                  on_epoch_end=capture("permuted"))
        assert hashes["base"] == hashes["permuted"]

    def test_empty_split_rejected(self):
        samples = linear_samples(n=10)
        with pytest.raises(DomainError):
            fit_model(small_config(), samples, [])

    def test_dropout_training_still_reproducible(self):
        samples = linear_samples(n=60, seed=8)
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        cfg = small_config(epochs=3, dropout_rate=0.3)
        r1 = fit_model(cfg, tr, va)
        r2 = fit_model(cfg, tr, va)
        assert r1.logs == r2.logs


@pytest.fixture(scope="module")
def resolved_corpus():
    structures = {pid: helix_structure(seq, pdb_id=pid)
                  for pid, seq in CORPUS_SEQUENCES.items()}
    dihedrals = {pid: backbone_dihedrals(s) for pid, s in structures.items()}
    store = EmbeddingStore.desk_scale(structures, dihedrals, d_struct=12,
                                      d_seq=16, seed=0)
    records = make_corpus_records()
    return records, structures, store


class TestBuildSamples:
    def test_resolves_full_corpus(self, resolved_corpus):
        records, structures, store = resolved_corpus
        from thermofuse.fusion import FusionVariant

        samples = build_samples(records, structures, store,
                                FusionVariant.M4_DOMAIN_CONCAT, window=7)
        assert len(samples) == len(records)
        assert all(s.feats is not None for s in samples)

    def test_unresolvable_rows_listed(self, resolved_corpus):
        records, structures, store = resolved_corpus
        from thermofuse.fusion import FusionVariant

        bad = [replace(records[0], pdb_id="ghost"),
               replace(records[1], position=9999)]
        with pytest.raises(DataLinkageError) as err:
            build_samples(records + bad, structures, store,
                          FusionVariant.M1_BASELINE, window=7)
        assert len(err.value.rows) == 2

    def test_wild_type_mismatch_listed(self, resolved_corpus):
        records, structures, store = resolved_corpus
        from thermofuse.fusion import FusionVariant

        seq = CORPUS_SEQUENCES[records[0].pdb_id]
        wrong_wt = next(aa for aa in "ACDEFGHIKLMNPQRSTVWY"
                        if aa not in (seq[0], records[0].mut_aa))
        bad = replace(records[0], position=1, wt_aa=wrong_wt)
        with pytest.raises(DataLinkageError):
            build_samples([bad], structures, store,
                          FusionVariant.M1_BASELINE, window=7)

    def test_end_to_end_train_on_corpus(self, resolved_corpus):
        records, structures, store = resolved_corpus
        cfg = TrainConfig(variant=3, epochs=2, batch_size=16, d_f=8, d_a=8,
                          window=5, seed=1, hidden=(16,))
        result = train(cfg, records, structures, store)
        assert len(result.logs) == 2
        assert 1 <= result.best_epoch <= 2


class TestGridSearch:
    def test_single_cell_matches_direct_train(self):
        samples = linear_samples(n=80, seed=10, noise=0.2)
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        cfg = small_config(epochs=3)
        direct = fit_model(cfg, tr, va)

        structures = {}
        records = [s.record for s in samples]
        sets = {(s.record.pdb_id, "struct"): s.struct_emb for s in samples}
        store = EmbeddingStore(sets)
        # bypass structure checks by calling the sample-level path
        from thermofuse.training import GridCellResult, _run_cell

        cell = _run_cell((cfg, tr, va))
        best = direct.logs[direct.best_epoch - 1]
        assert cell.best_epoch == direct.best_epoch
        assert cell.val_spearman == best.val_spearman

    def test_zero_learning_rate_ranks_last(self):
        samples = linear_samples(n=80, seed=11, noise=0.1)
        tr = [s for s in samples if s.record.split == TRAIN]
        va = [s for s in samples if s.record.split == VAL]
        from thermofuse.training import _run_cell

        good = _run_cell((small_config(epochs=5, lr=1e-2), tr, va))
        frozen = _run_cell((small_config(epochs=5, lr=0.0), tr, va))
        assert good.val_spearman > frozen.val_spearman

    def test_zero_learning_rate_cell_ranked_behind_live_one(self, resolved_corpus):
        records, structures, store = resolved_corpus
        base = TrainConfig(variant=1, epochs=4, batch_size=16, d_f=8, d_a=4,
                           window=3, seed=2, hidden=(8,))
        results = grid_search(base, {"lr": [0.0, 5e-3]}, records, structures,
                              store)
        assert results[0].config.lr == 5e-3
        assert results[1].config.lr == 0.0
        assert results[0].val_spearman > results[1].val_spearman

    def test_lattice_enumeration_is_deterministic(self):
        base = small_config()
        grid = {"lr": [1e-3, 1e-2], "d_f": [4, 8]}
        cells = expand_grid(base, grid)
        assert len(cells) == 4
        assert [(c.d_f, c.lr) for c in cells] == [(4, 1e-3), (4, 1e-2),
                                                  (8, 1e-3), (8, 1e-2)]

    def test_failed_cell_reported_not_raised(self, resolved_corpus):
        records, structures, store = resolved_corpus
        base = TrainConfig(variant=1, epochs=1, batch_size=8, d_f=8, d_a=4,
                           window=3, seed=0, hidden=(8,))
        results = grid_search(base, {"window": [3, 4]}, records, structures,
                              store)
        errors = [r for r in results if r.error]
        assert len(errors) == 1
        assert "window" in errors[0].error
        assert results[0].error is None  # ranked first

    def test_report_text_has_rank_column(self):
        base = small_config()
        from thermofuse.training import GridCellResult

        text = grid_report_text([GridCellResult(config=base, best_epoch=1,
                                                val_spearman=0.5, val_mse=1.0,
                                                val_r2=0.2)], ["lr"])
        lines = text.splitlines()
        assert lines[0].startswith("rank\tlr")
        assert lines[1].startswith("1\t")
