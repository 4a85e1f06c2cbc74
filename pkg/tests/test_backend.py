import json

import pytest

from styledistill.backend import (
    CachingBackend,
    GenerationParams,
    LiveBackend,
    RawCompletion,
    ReplayBackend,
    StubBackend,
    complete_batch,
    load_fixture,
    record_fixture,
    request_digest,
)
from styledistill.errors import (
    BackendError,
    BackendUnavailable,
    DuplicateDigest,
    ReplayMiss,
    TransientBackendError,
)

PARAMS = GenerationParams()


def _requests(n):
    return [(f"prompt {i}", GenerationParams(sample_index=0)) for i in range(n)]


# --- digests ------------------------------------------------------------------

def test_digest_is_stable_and_pure():
    a = request_digest("hello", GenerationParams(temperature=0.7))
    b = request_digest("hello", GenerationParams(temperature=0.7))
    assert a == b
    assert len(a) == 64


def test_digest_distinguishes_sample_index():
    a = request_digest("hello", GenerationParams(sample_index=0))
    b = request_digest("hello", GenerationParams(sample_index=1))
    assert a != b


def test_digest_distinguishes_params():
    assert request_digest("x", GenerationParams(temperature=0.7)) != request_digest(
        "x", GenerationParams(temperature=0.8)
    )


def test_params_validation():
    with pytest.raises(ValueError):
        GenerationParams(temperature=2.5)
    with pytest.raises(ValueError):
        GenerationParams(max_output_tokens=0)
    with pytest.raises(ValueError):
        GenerationParams(sample_index=-1)


# --- stub ---------------------------------------------------------------------

def test_stub_reads_query_source_back_out():
    prompt = "Instruction.\nSource: hi how r u\nTrigger line.\n"
    completion = StubBackend().complete(prompt, PARAMS)
    assert "[Transferred]: Hi how r u." in completion.text


def test_stub_truncates_to_max_output_tokens():
    completion = StubBackend(reply="one two three four five").complete(
        "p", GenerationParams(max_output_tokens=3)
    )
    assert completion.text == "one two three"
    assert completion.truncated


# --- record / replay ------------------------------------------------------------

def test_record_then_replay_round_trip(tmp_path):
    requests = _requests(5)
    stub = StubBackend(reply="fixed response")
    live = [stub.complete(p, params) for p, params in requests]
    path = record_fixture(requests, live, tmp_path / "fixture.jsonl")

    replay = ReplayBackend(path)
    for (prompt, params), recorded in zip(requests, live):
        result = replay.complete(prompt, params)
        assert result.text == recorded.text
        assert result.cached is True


def test_replay_miss_identifies_digest(tmp_path):
    path = record_fixture(_requests(1), [StubBackend().complete("prompt 0", PARAMS)], tmp_path / "f.jsonl")
    replay = ReplayBackend(path)
    with pytest.raises(ReplayMiss) as exc:
        replay.complete("unknown prompt", PARAMS)
    assert exc.value.digest == request_digest("unknown prompt", PARAMS)


def test_record_fixture_rejects_duplicate_requests(tmp_path):
    requests = [("same", PARAMS), ("same", PARAMS)]
    results = [StubBackend().complete("same", PARAMS)] * 2
    with pytest.raises(DuplicateDigest):
        record_fixture(requests, results, tmp_path / "f.jsonl")


def test_fixture_digests_recompute_identically(tmp_path):
    requests = _requests(4)
    live = [StubBackend().complete(p, params) for p, params in requests]
    path = record_fixture(requests, live, tmp_path / "f.jsonl")
    entries = load_fixture(path)
    assert set(entries) == {request_digest(p, params) for p, params in requests}
    # keys survive a plain re-read of the file, as on another machine
    reread = {json.loads(line)["digest"] for line in path.read_text().splitlines()}
    assert reread == set(entries)


# --- caching ------------------------------------------------------------------

def test_cache_returns_identical_payload_flagged_cached():
    calls = []

    def reply(prompt, params):
        calls.append(prompt)
        return f"response to {prompt}"

    backend = CachingBackend(StubBackend(reply=reply))
    first = backend.complete("p", PARAMS)
    second = backend.complete("p", PARAMS)
    assert len(calls) == 1
    assert first.text == second.text
    assert first.request_digest == second.request_digest
    assert not first.cached and second.cached


def test_disk_cache_survives_new_instance(tmp_path):
    backend = CachingBackend(StubBackend(reply="cached text"), cache_dir=tmp_path)
    backend.complete("p", PARAMS)

    exploding = CachingBackend(StubBackend(reply=_explode), cache_dir=tmp_path)
    hit = exploding.complete("p", PARAMS)
    assert hit.text == "cached text"
    assert hit.cached


def _explode(prompt, params):
    raise AssertionError("inner backend should not be called on a cache hit")


# --- batching -----------------------------------------------------------------

def test_batch_results_match_sequential_regardless_of_parallelism(tmp_path):
    requests = _requests(10)
    stub = StubBackend()
    live = [stub.complete(p, params) for p, params in requests]
    path = record_fixture(requests, live, tmp_path / "f.jsonl")

    sequential = complete_batch(ReplayBackend(path), requests, parallelism=1)
    parallel = complete_batch(ReplayBackend(path), requests, parallelism=4)
    assert sequential == parallel
    assert [r.text for r in parallel] == [r.text for r in live]


def test_batch_empty_request_list():
    assert complete_batch(StubBackend(), [], parallelism=2) == []


def test_batch_error_identifies_failing_index(tmp_path):
    requests = _requests(10)
    stub = StubBackend()
    live = [stub.complete(p, params) for p, params in requests]
    kept = [r for i, r in enumerate(zip(requests, live)) if i != 5]
    path = record_fixture([r[0] for r in kept], [r[1] for r in kept], tmp_path / "f.jsonl")

    with pytest.raises(ReplayMiss) as exc:
        complete_batch(ReplayBackend(path), requests, parallelism=3)
    assert exc.value.request_index == 5
    assert "request 5" in str(exc.value)


# --- retry --------------------------------------------------------------------

def test_live_backend_retries_transient_failures():
    attempts = []
    delays = []

    def flaky(prompt, params):
        attempts.append(1)
        if len(attempts) < 3:
            raise TransientBackendError("503")
        return "recovered"

    backend = LiveBackend(flaky, sleeper=delays.append)
    completion = backend.complete("p", PARAMS)
    assert completion.text == "recovered"
    assert len(attempts) == 3
    assert delays == [1.0, 2.0]


def test_live_backend_gives_up_after_budget():
    def always_down(prompt, params):
        raise TransientBackendError("503")

    backend = LiveBackend(always_down, sleeper=lambda s: None)
    with pytest.raises(BackendUnavailable):
        backend.complete("p", PARAMS)


def test_live_backend_does_not_retry_hard_errors():
    attempts = []

    def rejected(prompt, params):
        attempts.append(1)
        raise BackendError("400 bad request")

    backend = LiveBackend(rejected, sleeper=lambda s: None)
    with pytest.raises(BackendError):
        backend.complete("p", PARAMS)
    assert len(attempts) == 1
