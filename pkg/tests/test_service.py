"""HTTP service contract: endpoints, error codes, equivalence with the
in-process operations."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from clamp.retrieval import search, zero_shot_classify
from clamp.service import create_app


@pytest.fixture(scope="module")
def client(tiny_index, tiny_bundle):
    app = create_app(tiny_index, tiny_bundle)
    with TestClient(app) as c:
        yield c


class TestHealth:
    def test_ok_with_config_echo(self, client, tiny_index):
        response = client.get("/health")
        assert response.status_code == 200
        payload = response.json()
        assert payload["status"] == "ok"
        assert payload["config"]["count"] == tiny_index.count
        assert payload["config"]["dim"] == tiny_index.dim


class TestSearchEndpoint:
    def test_results_match_in_process(self, client, tiny_index, tiny_bundle):
        response = client.get("/search", params={"q": "waltz in G major", "k": 5})
        assert response.status_code == 200
        payload = response.json()
        expected = search(tiny_index, "waltz in G major", 5, tiny_bundle)
        assert [(h["source_id"], pytest.approx(h["score"], rel=1e-6)) for h in payload["results"]] == [
            (sid, pytest.approx(score, rel=1e-6)) for sid, score in expected.items
        ]
        assert all("snippet" in h for h in payload["results"])

    def test_k_zero_is_400(self, client):
        response = client.get("/search", params={"q": "anything", "k": 0})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "bad_request"

    def test_missing_query_is_400(self, client):
        assert client.get("/search", params={"k": 3}).status_code == 400

    def test_scores_non_increasing(self, client):
        payload = client.get("/search", params={"q": "march in C", "k": 10}).json()
        scores = [h["score"] for h in payload["results"]]
        assert scores == sorted(scores, reverse=True)


class TestClassifyEndpoint:
    LABELS = [
        {"label": "G", "prompt": "piece in the key of G major"},
        {"label": "C", "prompt": "piece in the key of C major"},
    ]

    def test_matches_in_process(self, client, tiny_bundle, toy_pairs):
        abc = toy_pairs[0].music.to_text()
        response = client.post("/classify", json={"abc": abc, "labels": self.LABELS})
        assert response.status_code == 200
        payload = response.json()
        expected = zero_shot_classify(abc, [(d["label"], d["prompt"]) for d in self.LABELS], tiny_bundle)
        assert payload["label"] == expected.label
        assert payload["tie"] == expected.tie
        for got, (label, score) in zip(payload["scores"], expected.scores):
            assert got["label"] == label
            assert got["score"] == pytest.approx(score, rel=1e-6)

    def test_single_label_is_400(self, client):
        response = client.post("/classify", json={"abc": "K:C\nC|]\n", "labels": self.LABELS[:1]})
        assert response.status_code == 400

    def test_duplicate_labels_is_400(self, client):
        labels = [self.LABELS[0], self.LABELS[0]]
        response = client.post("/classify", json={"abc": "K:C\nC|]\n", "labels": labels})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "degenerate_label_set"

    def test_empty_abc_is_400(self, client):
        response = client.post("/classify", json={"abc": "", "labels": self.LABELS})
        assert response.status_code == 400

    def test_oversized_body_is_413(self, client):
        big = "K:C\n" + ("C D E F | " * 200_000)
        response = client.post("/classify", json={"abc": big, "labels": self.LABELS})
        assert response.status_code == 413
        assert response.json()["error"]["code"] == "payload_too_large"

    def test_equivalence_on_randomized_inputs(self, client, tiny_bundle, toy_pairs):
        # equivalence oracle: HTTP route equals in-process on random inputs
        rng = np.random.default_rng(0)
        keys = ["C", "G", "D", "A"]
        for _ in range(10):
            pair = toy_pairs[int(rng.integers(len(toy_pairs)))]
            chosen = rng.permutation(keys)[: 2 + int(rng.integers(3))]
            labels = [{"label": k, "prompt": f"piece in the key of {k} major"} for k in chosen]
            payload = client.post("/classify", json={"abc": pair.music.to_text(), "labels": labels}).json()
            expected = zero_shot_classify(
                pair.music.to_text(), [(d["label"], d["prompt"]) for d in labels], tiny_bundle
            )
            assert payload["label"] == expected.label
            assert [s["label"] for s in payload["scores"]] == [l for l, _ in expected.scores]


class TestPieceEndpoint:
    def test_found(self, client, toy_pairs):
        sid = toy_pairs[0].music.source_id
        response = client.get(f"/piece/{sid}")
        assert response.status_code == 200
        payload = response.json()
        assert payload["source_id"] == sid
        assert payload["abc"] == toy_pairs[0].music.to_text()
        assert payload["labels"] == toy_pairs[0].labels

    def test_not_found_is_404(self, client):
        response = client.get("/piece/no-such-piece")
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "not_found"
