import json
import random
import threading

import pytest

from rba.counters import GlobalCounters
from rba.history import HistoryLoadError, HistoryStore

from .synth import random_feature_values, synthetic_login_stream


def recount(store_or_snapshot):
    """From-scratch counter rebuild, the consistency oracle."""
    fresh = GlobalCounters()
    if isinstance(store_or_snapshot, HistoryStore):
        histories = {u: store_or_snapshot.user_history(u)
                     for u in store_or_snapshot.users()}
    else:
        histories = store_or_snapshot.histories
    for user, entries in histories.items():
        for entry in entries:
            fresh.add(user, entry.features)
    return fresh


def vals(rng, tag="x"):
    return random_feature_values(rng, tag)


def test_append_until_cap_then_evict_oldest():
    rng = random.Random(1)
    store = HistoryStore(cap=3)
    first = store.append("u", vals(rng))
    assert first is None
    store.append("u", vals(rng))
    store.append("u", vals(rng))
    oldest_seq = store.user_history("u")[0].seq
    evicted = store.append("u", vals(rng))
    assert evicted is not None
    assert evicted.seq == oldest_seq
    assert store.user_count("u") == 3
    assert all(e.seq != oldest_seq for e in store.user_history("u"))


def test_no_eviction_below_cap():
    rng = random.Random(2)
    store = HistoryStore(cap=3)
    store.append("u", vals(rng))
    assert store.append("u", vals(rng)) is None
    assert store.user_count("u") == 2


def test_counters_match_recount_after_evictions():
    rng = random.Random(3)
    store = HistoryStore(cap=3)
    for i in range(20):
        store.append(f"user{i % 4}", vals(rng, i % 7))
    assert store.counters == recount(store)


def test_unknown_user_history_is_empty():
    assert HistoryStore().user_history("nobody") == []


def test_history_preserves_append_order():
    store = HistoryStore()
    store.append("u", {"ip": "1.1.1.1"})
    store.append("u", {"ip": "2.2.2.2"})
    ips = [e.features["ip"] for e in store.user_history("u")]
    assert ips == ["1.1.1.1", "2.2.2.2"]


def test_sequence_numbers_strictly_increase_per_user():
    rng = random.Random(4)
    store = HistoryStore(cap=5)
    for i in range(40):
        store.append(f"u{i % 3}", vals(rng, i % 5))
    for user in store.users():
        seqs = [e.seq for e in store.user_history(user)]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)


def test_snapshot_is_consistent_and_isolated():
    rng = random.Random(5)
    store = HistoryStore(cap=4)
    for i in range(12):
        store.append(f"u{i % 2}", vals(rng, i % 3))
    snap = store.snapshot()
    assert snap.counters == recount(snap)
    store.append("u0", vals(rng))
    # the snapshot must not see the later append
    assert sum(len(v) for v in snap.histories.values()) == \
        snap.counters.total


def test_concurrent_appends_keep_counters_consistent():
    store = HistoryStore(cap=10)
    streams = [synthetic_login_stream(seed, n_users=4, n_logins=150)
               for seed in range(4)]
    snapshots = []

    def writer(stream):
        for user, values in stream:
            store.append(user, values)

    def reader():
        for _ in range(60):
            snapshots.append(store.snapshot())

    threads = [threading.Thread(target=writer, args=(s,)) for s in streams]
    threads.append(threading.Thread(target=reader))
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert store.counters == recount(store)
    for snap in snapshots:
        assert snap.counters == recount(snap)
        assert sum(snap.counters.user_counts.values()) == snap.counters.total


def test_save_load_round_trip(tmp_path):
    rng = random.Random(6)
    store = HistoryStore(cap=5)
    for i in range(30):
        store.append(f"u{i % 3}", vals(rng, i % 4), ts=float(i))
    path = tmp_path / "history.log"
    store.save(str(path))

    loaded = HistoryStore(cap=5)
    loaded.load(str(path))
    for user in store.users():
        assert loaded.user_history(user) == store.user_history(user)
    assert loaded.counters == store.counters
    assert loaded.counters == recount(loaded)

    # bit-exact round trip
    second = tmp_path / "again.log"
    loaded.save(str(second))
    assert path.read_bytes() == second.read_bytes()


def test_load_of_corrupt_file_errors_and_leaves_store_empty(tmp_path):
    path = tmp_path / "bad.log"
    good = json.dumps({"user": "u", "ts": 0.0, "seq": 0,
                       "features": {"ip": "1.1.1.1"}})
    path.write_text(good + "\n" + good[: len(good) // 2] + "\n")
    store = HistoryStore()
    with pytest.raises(HistoryLoadError):
        store.load(str(path))
    assert store.users() == []
    assert store.counters.total == 0


def test_live_log_replays_to_identical_state(tmp_path):
    rng = random.Random(7)
    path = tmp_path / "live.log"
    store = HistoryStore(cap=3, log_path=str(path))
    for i in range(17):
        store.append(f"u{i % 2}", vals(rng, i % 3))
    store.close()

    reopened = HistoryStore(cap=3, log_path=str(path))
    assert reopened.counters == store.counters
    for user in store.users():
        assert reopened.user_history(user) == store.user_history(user)
    reopened.close()


def test_compaction_preserves_state(tmp_path):
    rng = random.Random(8)
    path = tmp_path / "live.log"
    store = HistoryStore(cap=2, log_path=str(path))
    for i in range(20):
        store.append("u", vals(rng, i % 5))
    assert len(path.read_text().splitlines()) == 20
    before = store.snapshot()
    store.compact()
    assert len(path.read_text().splitlines()) == 2
    store.append("u", vals(rng))
    store.close()

    reopened = HistoryStore(cap=2, log_path=str(path))
    assert reopened.user_count("u") == 2
    assert reopened.counters == recount(reopened)
    assert before.counters == recount(before)
    reopened.close()


def test_append_io_failure_leaves_state_unchanged(tmp_path):
    class ExplodingFile:
        name = "exploding"

        def write(self, _data):
            raise OSError("disk full")

        def flush(self):
            pass

        def close(self):
            pass

    store = HistoryStore(cap=3)
    store.append("u", {"ip": "1.1.1.1"})
    before_counters = store.counters.copy()
    before_history = store.user_history("u")
    store._log = ExplodingFile()
    with pytest.raises(OSError):
        store.append("u", {"ip": "2.2.2.2"})
    store._log = None
    assert store.counters == before_counters
    assert store.user_history("u") == before_history


def test_cap_none_never_evicts():
    rng = random.Random(9)
    store = HistoryStore(cap=None)
    for _ in range(500):
        assert store.append("u", vals(rng)) is None
    assert store.user_count("u") == 500
