"""Oracle service: endpoint contracts, exactly-once labeling, loop blocking,
snapshot consistency under concurrent polling."""

import hashlib
import json
import threading
import time
from types import SimpleNamespace
from urllib.error import HTTPError
from urllib.request import Request, urlopen

import pytest

from anomrank.active import ALConfig, OracleSuspended, run_active_learning
from anomrank.augment import GanConfig
from anomrank.data import SynthConfig, generate_synthetic, make_splits
from anomrank.model import Hyperparams
from anomrank.service import HumanOracle, RunBoard, serve_in_thread


def get(base, path):
    try:
        with urlopen(base + path, timeout=10) as resp:
            return resp.status, json.load(resp)
    except HTTPError as err:
        return err.code, json.load(err)


def post(base, path, payload):
    req = Request(base + path, data=json.dumps(payload).encode("utf-8"),
                  headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urlopen(req, timeout=10) as resp:
            return resp.status, json.load(resp)
    except HTTPError as err:
        return err.code, json.load(err)


def wait_until(probe, timeout=60.0, interval=0.02):
    deadline = time.time() + timeout
    while time.time() < deadline:
        value = probe()
        if value:
            return value
        time.sleep(interval)
    raise AssertionError("condition not met before timeout")


def verify_checksum(snapshot):
    body = dict(snapshot)
    checksum = body.pop("checksum")
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    assert hashlib.sha256(canonical.encode("utf-8")).hexdigest() == checksum


class TestRunBoardUnit:
    def test_exactly_once_labeling(self):
        board = RunBoard()
        board._pending = {"q1": {"query_id": "q1"}}
        assert board.submit_label("q1", "normal") == 200
        assert board.submit_label("q1", "normal") == 409
        assert board.submit_label("ghost", "normal") == 404
        assert board.submit_label("q2", "bogus") == 400

    def test_close_unblocks_waiters(self):
        board = RunBoard()
        query = SimpleNamespace(query_id="q1", record_id="r", anomaly_score=0.5,
                                uncertainty=0.1)
        caught = []

        def waiter():
            try:
                board.request_labels([query], lambda rid: [])
            except OracleSuspended:
                caught.append(True)

        thread = threading.Thread(target=waiter, daemon=True)
        thread.start()
        wait_until(lambda: board.pending_queries())
        board.close()
        thread.join(timeout=10)
        assert caught == [True]


@pytest.fixture()
def live_run(tmp_path):
    dataset, truth = generate_synthetic(
        SynthConfig(200, 12, 0.05, normal_density=0.15, anomaly_flip_count=4,
                    seed=11))
    splits = make_splits(dataset, truth, 0.2, 0.1, seed=11)
    hyper = Hyperparams(latent_dim=4, attention_tokens=2, learning_rate=0.01,
                        batch_size=64, max_epochs=5, patience=3)
    config = ALConfig(n_iterations=2, query_budget=3, retrain_epochs=2,
                      gan=GanConfig(steps=30))
    board = RunBoard()
    server, _ = serve_in_thread(board, port=0)
    run_dir = tmp_path / "run"
    result = {}

    def target():
        try:
            result["out"] = run_active_learning(
                dataset, truth, splits, HumanOracle(board, dataset),
                hyper, config, seed=11, run_dir=run_dir, board=board)
        except OracleSuspended:
            result["suspended"] = True

    thread = threading.Thread(target=target, daemon=True)
    thread.start()
    ctx = SimpleNamespace(
        base=f"http://127.0.0.1:{server.server_address[1]}",
        board=board, thread=thread, truth=truth, run_dir=run_dir, result=result)
    yield ctx
    board.close()
    server.shutdown()
    thread.join(timeout=30)


def answer_pending(ctx, limit=None):
    """Label pending queries from ground truth; returns the answered ids."""
    _, payload = get(ctx.base, "/api/queries")
    answered = []
    for query in payload["queries"][:limit]:
        label = ("anomalous" if query["record_id"] in ctx.truth.anomalous_ids
                 else "normal")
        status, _ = post(ctx.base, f"/api/queries/{query['query_id']}/label",
                         {"label": label})
        assert status == 200
        answered.append(query["query_id"])
    return answered


class TestServiceSession:
    def test_full_session(self, live_run):
        ctx = live_run
        # loop blocks on the first batch of queries; state is pre-iteration
        wait_until(lambda: len(get(ctx.base, "/api/queries")[1]["queries"]) == 3)
        status, state = get(ctx.base, "/api/state")
        assert status == 200
        assert state["iteration"] == 0
        assert state["history"] == []
        assert state["schema_version"] == 1
        verify_checksum(state)

        _, payload = get(ctx.base, "/api/queries")
        queries = payload["queries"]
        assert [q["query_id"] for q in queries] == sorted(
            (q["query_id"] for q in queries))
        uncertainties = [q["uncertainty"] for q in queries]
        assert uncertainties == sorted(uncertainties)
        for q in queries:
            assert {"query_id", "record_id", "anomaly_score", "uncertainty",
                    "top_attributes", "issued_at"} <= set(q)

        # error paths before anything is answered
        assert post(ctx.base, "/api/queries/ghost/label",
                    {"label": "normal"})[0] == 404
        assert post(ctx.base, f"/api/queries/{queries[0]['query_id']}/label",
                    {"label": "meh"})[0] == 400

        first = answer_pending(ctx, limit=1)[0]
        assert post(ctx.base, f"/api/queries/{first}/label",
                    {"label": "normal"})[0] == 409
        _, payload = get(ctx.base, "/api/queries")
        assert len(payload["queries"]) == 2

        # answering the rest unblocks the loop and completes iteration 1
        answer_pending(ctx)
        wait_until(lambda: get(ctx.base, "/api/state")[1]["iteration"] == 1)
        _, state = get(ctx.base, "/api/state")
        assert len(state["history"]) == 1
        assert state["last_record"]["iteration"] == 1
        verify_checksum(state)

        # ranking of the completed iteration matches the CSV on disk
        status, ranking = get(ctx.base, "/api/ranking?iter=1")
        assert status == 200
        rows = ranking["rows"]
        assert [r["rank"] for r in rows] == list(range(1, len(rows) + 1))
        csv_lines = (ctx.run_dir / "ranking_iter001.csv").read_text().splitlines()
        assert len(csv_lines) - 1 == len(rows)
        for line, row in zip(csv_lines[1:], rows):
            rid, score, rank = line.split(",")
            assert rid == row["id"]
            assert float(score) == row["score"]
            assert int(rank) == row["rank"]
        assert len(get(ctx.base, "/api/ranking?iter=1&limit=2")[1]["rows"]) == 2
        assert get(ctx.base, "/api/ranking?iter=1&limit=0")[1]["rows"] == []
        assert get(ctx.base, "/api/ranking?iter=99")[0] == 404

        # concurrent polling during iteration-2 training: no torn snapshots
        stop = threading.Event()
        failures = []

        def hammer():
            while not stop.is_set():
                status, snap = get(ctx.base, "/api/state")
                try:
                    assert status == 200
                    verify_checksum(snap)
                except AssertionError as err:
                    failures.append(err)
                    return

        pollers = [threading.Thread(target=hammer, daemon=True) for _ in range(4)]
        for p in pollers:
            p.start()
        wait_until(lambda: get(ctx.base, "/api/queries")[1]["queries"])
        answer_pending(ctx)
        wait_until(lambda: get(ctx.base, "/api/state")[1]["iteration"] == 2)
        stop.set()
        for p in pollers:
            p.join(timeout=10)
        assert not failures

        ctx.thread.join(timeout=30)
        assert "out" in ctx.result
        _, state = get(ctx.base, "/api/state")
        assert len(state["history"]) == 2

    def test_close_suspends_loop(self, live_run):
        ctx = live_run
        wait_until(lambda: get(ctx.base, "/api/queries")[1]["queries"])
        ctx.board.close()
        ctx.thread.join(timeout=30)
        assert ctx.result.get("suspended")
        # the snapshot on disk is the pre-iteration state, resumable
        snap = json.loads((ctx.run_dir / "state.json").read_text())
        assert snap["iteration"] == 0

    def test_unknown_endpoint(self, live_run):
        assert get(live_run.base, "/api/nope")[0] == 404
