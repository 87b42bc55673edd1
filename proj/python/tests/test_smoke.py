from pathlib import Path

import pytest

import cardaudit

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_builtin_framework_is_valid():
    fw = cardaudit.builtin_framework()
    assert len(fw["sections"]) == 8
    assert cardaudit.validate_framework(fw) == []
    fw["sections"][0]["weight"] = "13.0"
    assert cardaudit.validate_framework(fw)


def test_parse_card_round_trip():
    text = "---\nlicense: mit\n---\n# Usage\nRun it.\n## Limits\nSome.\n"
    card = cardaudit.parse_card(text)
    assert card["metadata"] == [("license", "mit")]
    assert [s["heading"] for s in card["sections"]] == ["Usage", "Limits"]
    assert card["reconstructed"] == text


def test_similarity_and_canonicalization():
    assert cardaudit.similarity("license", "licence") == 0.6
    assert cardaudit.normalize_name("  Training Data: ") == "training data"
    concept, score = cardaudit.canonicalize_heading("Licence")
    assert concept == "license"
    assert score >= 0.55


def test_aggregate_and_diff():
    ids = [sub["id"] for sec in cardaudit.builtin_framework()["sections"] for sub in sec["subsections"]]
    older = cardaudit.aggregate({i: "Absent" for i in ids})
    labels = {i: "Absent" for i in ids}
    labels["model_details.model_architecture"] = "Detailed"
    newer = cardaudit.aggregate(labels)
    assert older["total"] == "0.0"
    assert newer["total"] == "4.0"
    assert cardaudit.diff(older, newer)["total_delta"] == "4.0"
    with pytest.raises(cardaudit.ContractError):
        cardaudit.aggregate({})


def test_score_bundled_corpus(tmp_path):
    backend = f"corpus:{FIXTURES / 'corpus'}"
    a = cardaudit.score("demo", backend, out_root=tmp_path / "a")
    b = cardaudit.score("demo", backend, out_root=tmp_path / "b", use_cache=False)
    assert a["total"] == b["total"]
    assert 0 < float(a["total"]) < 100
    with pytest.raises(cardaudit.ConfigError):
        cardaudit.score("demo", backend, agents="heuristic")


def test_cli_in_process(tmp_path):
    rc, out, _ = cardaudit.cli("schema", "export", "--out", tmp_path / "fw.json")
    assert rc == 0
    rc, out, _ = cardaudit.cli("schema", "validate", tmp_path / "fw.json")
    assert rc == 0
    assert "valid" in out
    rc, _, err = cardaudit.cli("nonsense")
    assert rc == 2
