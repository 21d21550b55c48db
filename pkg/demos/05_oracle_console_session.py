"""A scripted analyst session against the oracle service.

Runs the loop with the blocking human oracle on a background thread, then
plays the analyst over HTTP: poll the pending queue, label each query, and
watch the telemetry advance. The same endpoints drive the browser console
in frontend/.
"""

import json
import threading
import time
from urllib.request import Request, urlopen

from anomrank import (ALConfig, GanConfig, HumanOracle, Hyperparams, RunBoard,
                      SynthConfig, generate_synthetic, make_splits,
                      run_active_learning, serve_in_thread)

dataset, truth = generate_synthetic(
    SynthConfig(n_records=300, n_attributes=16, anomaly_rate=0.04,
                normal_density=0.15, anomaly_flip_count=4, seed=5))
splits = make_splits(dataset, truth, 0.2, 0.1, seed=5)

board = RunBoard()
server, _ = serve_in_thread(board, port=0)
base = f"http://127.0.0.1:{server.server_address[1]}"
print(f"oracle service listening on {base}")

hyper = Hyperparams(latent_dim=4, attention_tokens=2, learning_rate=0.01,
                    batch_size=64, max_epochs=10, patience=5)
config = ALConfig(n_iterations=3, query_budget=4, retrain_epochs=3,
                  gan=GanConfig(steps=100))

loop = threading.Thread(
    target=run_active_learning,
    args=(dataset, truth, splits, HumanOracle(board, dataset)),
    kwargs=dict(hyper=hyper, config=config, seed=5, board=board), daemon=True)
loop.start()


def get(path):
    with urlopen(base + path, timeout=10) as resp:
        return json.load(resp)


def post(path, payload):
    req = Request(base + path, data=json.dumps(payload).encode(),
                  headers={"Content-Type": "application/json"}, method="POST")
    with urlopen(req, timeout=10) as resp:
        return json.load(resp)


answered = 0
while True:
    state = get("/api/state")
    if state["iteration"] >= config.n_iterations:
        break
    queries = get("/api/queries")["queries"]
    if not queries:
        if not loop.is_alive():
            break
        time.sleep(0.05)
        continue
    q = queries[0]
    verdict = "anomalous" if q["record_id"] in truth.anomalous_ids else "normal"
    post(f"/api/queries/{q['query_id']}/label", {"label": verdict})
    answered += 1
    print(f"labeled {q['record_id']} as {verdict}  "
          f"(score {q['anomaly_score']:.3f}, |score-tau| {q['uncertainty']:.3f}, "
          f"active attrs {len(q['top_attributes'])})")

loop.join(timeout=60)
state = get("/api/state")
print(f"\nanswered {answered} queries over {state['iteration']} iterations")
for rec in state["history"]:
    print(f"  iter {rec['iteration']}: nDCG(pool) {rec['ndcg_pool']:.4f}, "
          f"tau {rec['tau']:.3f}")
server.shutdown()
