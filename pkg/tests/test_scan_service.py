"""Artifact persistence, scan matrices and the HTTP API."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from thermofuse.embeddings import EmbeddingStore
from thermofuse.errors import (
    ArtifactIntegrityError,
    ArtifactVersionError,
    DataLinkageError,
    DomainError,
)
from thermofuse.features import AA_ORDER
from thermofuse.fusion import build_model, forward_variant
from thermofuse.scan import load_model, save_model, save_scan, scan
from thermofuse.server import build_state, create_app
from thermofuse.structure_io import backbone_dihedrals
from thermofuse.training import EpochLog
from conftest import CORPUS_SEQUENCES, helix_structure


def corpus_embeddings(d_struct=12, d_seq=16, seed=0):
    structures = {pid: helix_structure(seq, pdb_id=pid)
                  for pid, seq in CORPUS_SEQUENCES.items()}
    dihedrals = {pid: backbone_dihedrals(s) for pid, s in structures.items()}
    store = EmbeddingStore.desk_scale(structures, dihedrals, d_struct=d_struct,
                                      d_seq=d_seq, seed=seed)
    return structures, store


def toy_model(variant=3, d_struct=12, d_seq=16, seed=7):
    return build_model(variant, d_struct, d_seq, d_f=8, d_a=6, window=5,
                       hidden=(16,), seed=seed)


def toy_logs():
    return [EpochLog(1, 1.0, 1.2, 0.30, 0.05), EpochLog(2, 0.8, 1.1, 0.45, 0.08)]


class TestPersistence:
    def test_round_trip_predictions_bit_identical(self, tmp_path):
        structures, store = corpus_embeddings()
        model = toy_model()
        path = tmp_path / "m.art"
        save_model(model, toy_logs(), path, dataset_checksum="abc")
        loaded = load_model(path)
        assert loaded.best_epoch == 2
        assert loaded.dataset_checksum == "abc"
        assert loaded.val_metrics["val_spearman"] == 0.45
        se = store.get("prot1", "struct")
        qe = store.get("prot1", "seq")
        for pos in (1, 5, 20):
            original = forward_variant(model, se, qe, None, pos, "W")
            reloaded = forward_variant(loaded.model, se, qe, None, pos, "W")
            assert original == reloaded  # bit-identical, not just close

    def test_every_parameter_restored_exactly(self, tmp_path):
        model = toy_model(variant=4)
        path = tmp_path / "m.art"
        save_model(model, toy_logs(), path)
        loaded = load_model(path)
        for name, p in model.params().items():
            np.testing.assert_array_equal(loaded.model.params()[name], p)

    def test_flipped_checksum_rejected(self, tmp_path):
        path = tmp_path / "m.art"
        save_model(toy_model(), toy_logs(), path)
        doc = json.loads(path.read_text())
        first = doc["checksum"][0]
        doc["checksum"] = ("0" if first != "0" else "1") + doc["checksum"][1:]
        path.write_text(json.dumps(doc))
        with pytest.raises(ArtifactIntegrityError):
            load_model(path)

    def test_corrupted_payload_rejected(self, tmp_path):
        path = tmp_path / "m.art"
        save_model(toy_model(), toy_logs(), path)
        doc = json.loads(path.read_text())
        doc["body"]["best_epoch"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ArtifactIntegrityError):
            load_model(path)

    def test_future_version_rejected_without_partial_load(self, tmp_path):
        path = tmp_path / "m.art"
        save_model(toy_model(), toy_logs(), path)
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ArtifactVersionError):
            load_model(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "m.art"
        path.write_bytes(b"\x00\x01 not json")
        with pytest.raises(ArtifactIntegrityError):
            load_model(path)


class TestScanMatrix:
    def test_single_residue_scan_has_one_zero_cell(self):
        s = helix_structure("W", pdb_id="tiny")
        dihedrals = {"tiny": backbone_dihedrals(s)}
        store = EmbeddingStore.desk_scale({"tiny": s}, dihedrals,
                                          d_struct=12, d_seq=16, seed=1)
        model = toy_model()
        matrix = scan(model, s, store.get("tiny", "struct"), store.get("tiny", "seq"))
        assert matrix.values.shape == (1, 20)
        zero_cols = np.where(matrix.values[0] == 0.0)[0]
        assert zero_cols.tolist() == [AA_ORDER.index("W")]

    def test_scan_shape_and_zero_diagonal(self):
        structures, store = corpus_embeddings()
        s = structures["prot3"]
        model = toy_model()
        matrix = scan(model, s, store.get("prot3", "struct"), store.get("prot3", "seq"))
        assert matrix.values.shape == (len(s), 20)
        zero_count = int((matrix.values == 0.0).sum())
        assert zero_count == len(s)
        for i, aa in enumerate(s.sequence):
            assert matrix.values[i, AA_ORDER.index(aa)] == 0.0

    def test_scan_deterministic_and_serializable(self, tmp_path):
        structures, store = corpus_embeddings()
        s = structures["prot3"]
        model = toy_model()
        m1 = scan(model, s, store.get("prot3", "struct"), store.get("prot3", "seq"))
        m2 = scan(model, s, store.get("prot3", "struct"), store.get("prot3", "seq"))
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_scan(m1, p1)
        save_scan(m2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_scan_cells_match_point_predictions(self):
        structures, store = corpus_embeddings()
        s = structures["prot1"]
        se, qe = store.get("prot1", "struct"), store.get("prot1", "seq")
        model = toy_model()
        matrix = scan(model, s, se, qe)
        rng = np.random.default_rng(3)
        for _ in range(25):
            i = int(rng.integers(1, len(s) + 1))
            m = AA_ORDER[rng.integers(20)]
            if m == s.sequence[i - 1]:
                continue
            direct = forward_variant(model, se, qe, None, i, m)
            assert abs(matrix.values[i - 1, AA_ORDER.index(m)] - direct) <= 1e-12

    def test_scan_works_for_domain_variant(self):
        structures, store = corpus_embeddings()
        s = structures["prot3"]
        model = toy_model(variant=4)
        matrix = scan(model, s, store.get("prot3", "struct"), store.get("prot3", "seq"))
        assert matrix.values.shape == (len(s), 20)

    def test_length_mismatch_is_linkage_error(self):
        structures, store = corpus_embeddings()
        model = toy_model()
        with pytest.raises(DataLinkageError):
            scan(model, structures["prot1"], store.get("prot2", "struct"),
                 store.get("prot2", "seq"))

    def test_non_canonical_residue_rejected(self):
        s = helix_structure("GAV", pdb_id="x")
        s.residues[1].aa = "X"
        structures, store = corpus_embeddings()
        model = toy_model()
        dihedrals = {"x": backbone_dihedrals(s)}
        st2 = EmbeddingStore.desk_scale({"x": s}, dihedrals, d_struct=12,
                                        d_seq=16, seed=0)
        with pytest.raises(DomainError):
            scan(model, s, st2.get("x", "struct"), st2.get("x", "seq"))


@pytest.fixture(scope="module")
def service_client(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    from conftest import make_corpus_records, write_structure_pdb
    from thermofuse.training import save_records

    pdb_dir = tmp / "pdb"
    pdb_dir.mkdir()
    for pid, seq in CORPUS_SEQUENCES.items():
        write_structure_pdb(helix_structure(seq, pdb_id=pid), pdb_dir / f"{pid}.pdb")
    data_path = tmp / "dataset.csv"
    save_records(make_corpus_records(), data_path)

    model = toy_model(d_struct=12, d_seq=16)
    artifact_path = tmp / "m.art"
    save_model(model, toy_logs(), artifact_path)

    state = build_state(artifact_path, data_path, pdb_dir, emb_dir=None, seed=0)
    app = create_app(state)
    return TestClient(app), state


class TestApi:
    def test_protein_listing(self, service_client):
        client, _ = service_client
        resp = client.get("/api/proteins")
        assert resp.status_code == 200
        listing = resp.json()
        assert [p["pdb_id"] for p in listing] == sorted(CORPUS_SEQUENCES)
        for p in listing:
            assert p["length"] == len(CORPUS_SEQUENCES[p["pdb_id"]])

    def test_structure_payload(self, service_client):
        client, _ = service_client
        resp = client.get("/api/proteins/prot1/structure")
        body = resp.json()
        assert body["sequence"] == CORPUS_SEQUENCES["prot1"]
        assert len(body["residues"]) == len(body["sequence"])
        assert len(body["residues"][0]["ca"]) == 3

    def test_unknown_protein_is_404(self, service_client):
        client, _ = service_client
        assert client.get("/api/proteins/nope/structure").status_code == 404

    def test_scan_payload_shape(self, service_client):
        client, _ = service_client
        body = client.get("/api/proteins/prot3/scan").json()
        L = len(CORPUS_SEQUENCES["prot3"])
        assert body["length"] == L
        assert len(body["values"]) == L
        assert all(len(row) == 20 for row in body["values"])
        assert body["aa_order"] == list(AA_ORDER)
        assert body["units"] == "kcal/mol"

    def test_predict_matches_library_call(self, service_client):
        client, state = service_client
        seq = CORPUS_SEQUENCES["prot2"]
        req = {"pdb_id": "prot2", "chain": "A", "position": 3,
               "wt_aa": seq[2], "mut_aa": "W" if seq[2] != "W" else "F"}
        resp = client.post("/api/predict", json=req)
        assert resp.status_code == 200
        entry = state.proteins["prot2"]
        expected = forward_variant(state.model, entry.struct_emb, entry.seq_emb,
                                   None, 3, req["mut_aa"])
        assert resp.json()["ddg"] == expected

    def test_predict_wild_type_mismatch_is_422(self, service_client):
        client, _ = service_client
        seq = CORPUS_SEQUENCES["prot2"]
        wrong = next(aa for aa in AA_ORDER if aa != seq[2])
        resp = client.post("/api/predict", json={
            "pdb_id": "prot2", "chain": "A", "position": 3,
            "wt_aa": wrong, "mut_aa": "W"})
        assert resp.status_code == 422
        assert "position 3" in resp.json()["detail"]

    def test_predict_position_out_of_range_is_422(self, service_client):
        client, _ = service_client
        resp = client.post("/api/predict", json={
            "pdb_id": "prot2", "chain": "A", "position": 999,
            "wt_aa": "A", "mut_aa": "W"})
        assert resp.status_code == 422

    def test_dataset_summary(self, service_client):
        client, _ = service_client
        body = client.get("/api/dataset/summary").json()
        assert body["n_records"] == 64
        assert body["n_train"] == 48
        assert body["n_val"] == 16
        counts = np.array(body["substitution_counts"]["counts"])
        assert counts.sum() == 64

    def test_scatter_covers_validation_records(self, service_client):
        client, _ = service_client
        body = client.get("/api/analysis/embedding_scatter").json()
        assert len(body["points"]) == 16
        assert len(body["explained_variance"]) == 2
        for point in body["points"][:3]:
            assert set(point) == {"x", "y", "ddg", "pdb_id", "position",
                                  "wt_aa", "mut_aa"}

    def test_metrics_payload_structure(self, service_client):
        client, _ = service_client
        body = client.get("/api/metrics").json()
        assert body["variant"] == 3
        assert body["best_epoch"] == 2
        assert set(body["regression"]) == {"mse", "rmse", "r2", "spearman", "n"}
        assert {"accuracy", "precision", "recall", "f1"} <= set(body["classification"])
        assert body["regression"]["n"] == 16

    def test_identical_requests_identical_bodies(self, service_client):
        client, _ = service_client
        a = client.get("/api/proteins/prot1/scan").content
        b = client.get("/api/proteins/prot1/scan").content
        assert a == b
        a = client.get("/api/metrics").content
        b = client.get("/api/metrics").content
        assert a == b
