from __future__ import annotations

import json
import threading

import pytest

from ossdoorway.progression import apply_completion, new_state
from ossdoorway.store import CorruptedDocument, FileProgressStore, state_to_document


def _advance(state, catalog, steps):
    for quest in catalog.quests:
        for task in quest.tasks:
            if steps == 0:
                return state
            state, _ = apply_completion(state, catalog, quest.id, task.id, "t")
            steps -= 1
    return state


def test_save_load_round_trip(store, catalog):
    state = _advance(new_state("alice", catalog), catalog, 7)
    store.save_progress("alice", state)
    assert store.load_progress("alice") == state


def test_load_unknown_user_is_none(store):
    assert store.load_progress("nobody") is None


def test_reopen_reads_saved_state(tmp_path, catalog):
    state = _advance(new_state("alice", catalog), catalog, 3)
    FileProgressStore(tmp_path / "d", catalog).save_progress("alice", state)
    # a fresh instance simulates restart after a crash
    reopened = FileProgressStore(tmp_path / "d", catalog)
    assert reopened.load_progress("alice") == state


def test_second_save_wins(store, catalog):
    first = new_state("alice", catalog)
    second = _advance(first, catalog, 2)
    store.save_progress("alice", first)
    store.save_progress("alice", second)
    assert store.load_progress("alice") == second


def test_corrupted_json_reported_distinctly(store, catalog, tmp_path):
    store.save_progress("alice", new_state("alice", catalog))
    path = store._user_path("alice")
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(CorruptedDocument):
        store.load_progress("alice")


def test_invariant_violation_is_corruption(store, catalog):
    state = new_state("alice", catalog)
    store.save_progress("alice", state)
    path = store._user_path("alice")
    doc = json.loads(path.read_text())
    doc["state"]["xp"] = 999  # level 1 no longer matches xp
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(CorruptedDocument, match="invariants"):
        store.load_progress("alice")


def test_unknown_schema_version_is_corruption(store, catalog):
    store.save_progress("alice", new_state("alice", catalog))
    path = store._user_path("alice")
    doc = json.loads(path.read_text())
    doc["schema_version"] = 99
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(CorruptedDocument, match="schema_version"):
        store.load_progress("alice")


def test_invalid_state_rejected_before_write(store, catalog):
    from dataclasses import replace

    bad = replace(new_state("alice", catalog), xp=100)  # level inconsistent
    with pytest.raises(ValueError):
        store.save_progress("alice", bad)
    assert store.load_progress("alice") is None  # nothing touched disk


def test_wrong_user_rejected(store, catalog):
    with pytest.raises(ValueError):
        store.save_progress("bob", new_state("alice", catalog))


def test_no_partial_document_visible(store, catalog):
    # the temp file from a successful write never lingers
    store.save_progress("alice", new_state("alice", catalog))
    leftovers = list(store._progress_dir.glob("*.tmp"))
    assert leftovers == []


def test_unusual_user_names_are_safe(store, catalog):
    user = "we/ird..name"
    store.save_progress(user, new_state(user, catalog))
    assert store.load_progress(user) == new_state(user, catalog)
    assert store.users() == [user]
    assert (store.data_dir / "progress").is_dir()


def test_document_is_human_inspectable(store, catalog):
    state = _advance(new_state("alice", catalog), catalog, 1)
    store.save_progress("alice", state)
    doc = json.loads(store._user_path("alice").read_text())
    assert doc["schema_version"] == 1
    assert doc["state"]["xp"] == 10
    assert "updated_at" in doc


# ---------------------------------------------------------------------------
# Delivery ledger


def test_record_delivery_fresh_then_duplicate(store):
    assert store.record_delivery("d1") is True
    assert store.record_delivery("d1") is False
    assert store.record_delivery("d2") is True


def test_ledger_survives_reopen(tmp_path, catalog):
    store = FileProgressStore(tmp_path / "d", catalog)
    assert store.record_delivery("d1") is True
    reopened = FileProgressStore(tmp_path / "d", catalog)
    assert reopened.record_delivery("d1") is False
    assert reopened.record_delivery("d2") is True


def test_empty_delivery_id_rejected(store):
    with pytest.raises(ValueError):
        store.record_delivery("")


def test_concurrent_duplicates_exactly_one_fresh(store):
    results: list[bool] = []
    lock = threading.Lock()
    barrier = threading.Barrier(8)

    def worker():
        barrier.wait()
        outcome = store.record_delivery("d3")
        with lock:
            results.append(outcome)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sum(results) == 1


def test_idempotency_over_multiset(store):
    ids = ["a", "b", "a", "c", "b", "a"]
    fresh = [i for i in ids if store.record_delivery(i)]
    assert fresh == ["a", "b", "c"]


def test_state_document_stable_shape(catalog):
    doc = state_to_document(new_state("alice", catalog))
    assert set(doc) == {"schema_version", "updated_at", "state"}
    assert set(doc["state"]) == {
        "user",
        "completed",
        "xp",
        "level",
        "badges",
        "streak_counter",
        "attempts",
        "unlocked_quests",
    }
