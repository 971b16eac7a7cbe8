import numpy as np
import pytest
from fastapi.testclient import TestClient

from vwords.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def first_signature_file(store_dir):
    manifest = (store_dir / "manifest.txt").read_text().splitlines()
    return str(store_dir / manifest[0].split(",", 1)[0])


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_features_endpoint(client, word_corpus, tmp_path):
    out = tmp_path / "feat"
    r = client.post(
        "/features", json={"clip_dir": str(word_corpus[0]), "out_dir": str(out)}
    )
    assert r.status_code == 200
    body = r.json()
    assert body["words"] == ["word0", "word1", "word2", "word3", "word4"]
    assert len(body["files"]) == 5
    assert (out / "manifest.txt").exists()


def test_faces_and_lips_endpoints(client, word_corpus, tmp_path):
    r = client.post("/faces", json={"clip_dir": str(word_corpus[0])})
    assert r.status_code == 200
    boxes = r.json()["boxes"]
    assert all(b["width"] == 104 for b in boxes)
    out = tmp_path / "lipout"
    r = client.post(
        "/lips", json={"clip_dir": str(word_corpus[0]), "out_dir": str(out)}
    )
    assert r.status_code == 200
    mouths = r.json()["mouths"]
    assert all(m["found"] for m in mouths)
    assert len(list(out.glob("mask_*.pbm"))) == len(mouths)


def test_train_and_classify(client, word_store, tmp_path):
    merged = tmp_path / "merged"
    r = client.post(
        "/train", json={"feature_dirs": [str(word_store)], "out_dir": str(merged)}
    )
    assert r.status_code == 200
    assert r.json()["entries"] == 10
    filtered = tmp_path / "only_word0"
    r = client.post(
        "/train",
        json={
            "feature_dirs": [str(word_store)],
            "out_dir": str(filtered),
            "word": "word0",
        },
    )
    assert r.status_code == 200
    assert r.json() == {
        "store_dir": str(filtered), "entries": 2, "vocabulary": ["word0"],
    }
    r = client.post(
        "/train",
        json={
            "feature_dirs": [str(word_store)],
            "out_dir": str(filtered),
            "speaker": "nobody",
        },
    )
    assert r.status_code == 400
    probe = first_signature_file(word_store)
    r = client.post(
        "/classify", json={"store_dir": str(merged), "input_path": probe, "k": 1}
    )
    assert r.status_code == 200
    body = r.json()
    assert body["label"] == "word0"
    assert body["nearest"][0]["distance"] == 0.0


def test_eval_endpoint(client, word_store):
    r = client.post(
        "/eval",
        json={"store_dir": str(word_store), "protocol": "sd", "ks": [1, 2]},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["overall"]["1"] == 100.0
    assert body["n_folds"] == 10
    assert "confusion" in body["report_text"]


def test_identify_endpoint(client, word_store):
    probe = first_signature_file(word_store)
    r = client.post(
        "/identify", json={"gallery_dir": str(word_store), "input_path": probe}
    )
    assert r.status_code == 200
    assert r.json()["speaker"] == "synth01"


def test_enroll_verify_endpoints(client, word_store, tmp_path):
    profile_dir = tmp_path / "profile"
    r = client.post(
        "/verify/enroll",
        json={
            "store_dir": str(word_store),
            "client_id": "c1",
            "threshold": 2.7,
            "out_dir": str(profile_dir),
        },
    )
    assert r.status_code == 200
    probe = first_signature_file(word_store)
    r = client.post(
        "/verify", json={"profile_dir": str(profile_dir), "input_path": probe}
    )
    assert r.status_code == 200
    assert r.json() == {"decision": "pass", "distance": 0.0}


def test_spot_endpoints(client, word_store, tmp_path):
    watch_dir = tmp_path / "watch"
    r = client.post(
        "/spot/build",
        json={"store_dir": str(word_store), "threshold": 2.4, "out_dir": str(watch_dir)},
    )
    assert r.status_code == 200
    probe = first_signature_file(word_store)
    r = client.post(
        "/spot", json={"watchlist_dir": str(watch_dir), "input_path": probe}
    )
    assert r.status_code == 200
    body = r.json()
    assert body["alarm"] is True and body["distance"] == 0.0


def test_sweep_endpoint(client, word_store, tmp_path):
    import numpy as np

    from vwords.classify import TrainingSet
    from vwords.features import FeatureMatrix
    from vwords.pipeline import save_training_set

    impostors = tmp_path / "impostors"
    far_away = [FeatureMatrix(np.full((6, 8), 1.0), label="x", speaker="imp")]
    save_training_set(TrainingSet(far_away), impostors)
    curve_path = tmp_path / "curve.csv"
    r = client.post(
        "/sweep",
        json={
            "enrolled_dir": str(word_store),
            "genuine_dir": str(word_store),
            "impostor_dir": str(impostors),
            "grid_start": 0.0,
            "grid_stop": 1.0,
            "grid_step": 0.1,
            "omega": 2.0,
            "out_path": str(curve_path),
        },
    )
    assert r.status_code == 200
    body = r.json()
    # genuine replays sit at distance 0, the constant impostor far above 0.1
    assert body["frr_at_best"] == 0.0 and body["far_at_best"] == 0.0
    assert body["best"] == pytest.approx(0.1)
    assert curve_path.exists()


def test_synth_endpoint(client, tmp_path):
    r = client.post(
        "/synth",
        json={"kind": "lips", "out_dir": str(tmp_path / "l"), "count": 3, "seed": 1},
    )
    assert r.status_code == 200
    assert len(r.json()["paths"]) == 3


def test_error_paths_are_400(client, tmp_path):
    r = client.post("/features", json={"clip_dir": str(tmp_path), "out_dir": str(tmp_path)})
    assert r.status_code == 400
    assert "frames" in r.json()["detail"]
    r = client.post("/eval", json={"store_dir": str(tmp_path), "protocol": "nope"})
    assert r.status_code == 400
