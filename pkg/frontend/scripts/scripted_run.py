"""Scripted backend for console integration tests.

Starts the oracle service on a free port, prints "PORT <n>", then runs a
small active-learning session that blocks on the human oracle until the
console (or test) labels every pending query.
"""

import argparse
import sys
import time

from anomrank import (ALConfig, GanConfig, HumanOracle, Hyperparams, RunBoard,
                      SynthConfig, generate_synthetic, make_splits,
                      run_active_learning, serve_in_thread)
from anomrank.active import OracleSuspended


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--iters", type=int, default=2)
    parser.add_argument("--budget", type=int, default=3)
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument("--linger", type=float, default=30.0,
                        help="keep serving this long after the run completes")
    args = parser.parse_args()

    dataset, truth = generate_synthetic(
        SynthConfig(n_records=240, n_attributes=14, anomaly_rate=0.05,
                    normal_density=0.15, anomaly_flip_count=4, seed=args.seed))
    splits = make_splits(dataset, truth, 0.2, 0.1, seed=args.seed)
    board = RunBoard()
    server, _ = serve_in_thread(board, port=0)
    print(f"PORT {server.server_address[1]}", flush=True)

    hyper = Hyperparams(latent_dim=4, attention_tokens=2, learning_rate=0.01,
                        batch_size=64, max_epochs=8, patience=4)
    config = ALConfig(n_iterations=args.iters, query_budget=args.budget,
                      retrain_epochs=2, gan=GanConfig(steps=30))
    try:
        run_active_learning(dataset, truth, splits, HumanOracle(board, dataset),
                            hyper, config, seed=args.seed, board=board)
    except OracleSuspended:
        server.shutdown()
        return 4
    print("DONE", flush=True)
    # stay queryable so the console can read the final telemetry; the test
    # harness kills the process when it is finished
    time.sleep(args.linger)
    server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
