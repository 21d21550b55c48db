"""Operator entry point.

    anomrank synth   --n 4000 --d 64 --rate 0.005 --seed 42 --out-dir data/
    anomrank train   --dataset data/dataset.csv --truth data/truth.txt --out run/
    anomrank active  --dataset ... --truth ... --oracle ground-truth --out run/
    anomrank report  --run run/ --out run/report/

Exit codes: 0 success, 2 usage error, 3 data error, 4 suspended oracle
session. Every command is deterministic given identical flags and seed.
The ANOMRANK_OUT environment variable sets the default output root.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import active as al
from . import data, metrics, service
from .augment import GanConfig
from .model import DualAdversarialAutoencoder, Hyperparams, fit, save_checkpoint
from .model import score_dataset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SUSPENDED = 4


def _out_path(raw: str) -> Path:
    root = os.environ.get("ANOMRANK_OUT", "")
    path = Path(raw)
    return path if path.is_absolute() or not root else Path(root) / path


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    d = Hyperparams()
    p.add_argument("--latent", type=int, default=d.latent_dim)
    p.add_argument("--tokens", type=int, default=d.attention_tokens)
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--adv-weight", type=float, default=d.adv_weight)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--max-epochs", type=int, default=d.max_epochs)
    p.add_argument("--patience", type=int, default=d.patience)
    p.add_argument("--leaky-slope", type=float, default=d.leaky_slope)
    p.add_argument("--dropout", type=float, default=d.dropout_p)


def _hyper_from(args) -> Hyperparams:
    return Hyperparams(latent_dim=args.latent, attention_tokens=args.tokens,
                       alpha=args.alpha, adv_weight=args.adv_weight,
                       learning_rate=args.lr, batch_size=args.batch_size,
                       max_epochs=args.max_epochs, patience=args.patience,
                       leaky_slope=args.leaky_slope, dropout_p=args.dropout)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anomrank",
        description="Ranking-oriented anomaly detection over boolean process traces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-anomaly boolean dataset")
    p.add_argument("--n", type=int, required=True, help="number of records")
    p.add_argument("--d", type=int, required=True, help="number of attributes")
    p.add_argument("--rate", type=float, required=True, help="anomaly fraction in (0, 0.5)")
    p.add_argument("--density", type=float, default=0.2, help="normal attribute density")
    p.add_argument("--flips", type=int, default=8,
                   help="rare attributes forced on for each anomaly")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="synth")

    p = sub.add_parser("train", help="train on the full normal split (no active learning)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--eval", action="store_true",
                   help="require ground truth and emit ranking metrics")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None,
                   help="epoch cap (0 scores with an untrained model)")
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--out", default="train-run")
    _add_hyper_flags(p)

    p = sub.add_parser("active", help="run the active-learning loop")
    p.add_argument("--dataset")
    p.add_argument("--truth")
    p.add_argument("--oracle", choices=("ground-truth", "human"), default="ground-truth")
    p.add_argument("--iters", type=int, default=40)
    p.add_argument("--Q", type=int, default=32, help="query budget per iteration")
    p.add_argument("--q", type=float, default=80.0, help="threshold percentile")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cold-start", type=float, default=0.2)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--retrain-epochs", type=int, default=100)
    p.add_argument("--no-recalibrate", action="store_true",
                   help="freeze the threshold computed at iteration 1")
    p.add_argument("--baseline-metrics", default=None,
                   help="metrics.json from a train run, for the improvement summary")
    p.add_argument("--gan-steps", type=int, default=GanConfig().steps)
    p.add_argument("--gan-lr", type=float, default=GanConfig().learning_rate)
    p.add_argument("--gan-min-pool", type=int, default=GanConfig().min_pool)
    p.add_argument("--port", type=int, default=service.DEFAULT_PORT)
    p.add_argument("--resume", default=None, help="continue a suspended run directory")
    p.add_argument("--out", default="active-run")
    _add_hyper_flags(p)

    p = sub.add_parser("report", help="emit plot-ready CSVs from a run history")
    p.add_argument("--run", default=None, help="run directory holding history.jsonl")
    p.add_argument("--history", default=None, help="explicit history.jsonl path")
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--out", default=None, help="output directory (default: the run dir)")
    return parser


def cmd_synth(args) -> int:
    config = data.SynthConfig(n_records=args.n, n_attributes=args.d,
                              anomaly_rate=args.rate, normal_density=args.density,
                              anomaly_flip_count=args.flips, seed=args.seed)
    dataset, truth = data.generate_synthetic(config)
    out = _out_path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data.write_csv(dataset, out / "dataset.csv")
    data.write_ground_truth(truth, out / "truth.txt")
    print(f"wrote {dataset.n_records} records x {dataset.n_attributes} attributes "
          f"({len(truth.anomalous_ids)} anomalies) to {out}")
    return EXIT_OK


def _load_inputs(dataset_path, truth_path, require_truth: bool):
    dataset = data.load_csv(dataset_path)
    if truth_path is None:
        if require_truth:
            raise data.DataIntegrityError("--eval needs a --truth file")
        return dataset, data.GroundTruth(set())
    return dataset, data.load_ground_truth(truth_path, dataset)


def cmd_train(args) -> int:
    dataset, truth = _load_inputs(args.dataset, args.truth, args.eval)
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    normals = sorted(set(dataset.record_ids) - truth.anomalous_ids)
    model_ss, loop_ss = np.random.SeedSequence(args.seed).spawn(2)
    rng = np.random.default_rng(loop_ss)
    n_val = math.ceil(args.val_fraction * len(normals))
    order = rng.permutation(len(normals))
    val_ids = sorted(normals[i] for i in order[:n_val])
    train_ids = sorted(normals[i] for i in order[n_val:])
    if not train_ids:
        raise data.DataIntegrityError("no normal records left to train on")
    model = DualAdversarialAutoencoder(dataset.n_attributes, _hyper_from(args),
                                       int(model_ss.generate_state(1)[0]))
    if args.epochs != 0:
        fit(model, dataset.rows_for(train_ids), dataset.rows_for(val_ids), rng,
            max_epochs=args.epochs)
    save_checkpoint(model, out / "model.json")
    ranked = score_dataset(model, dataset.record_ids, dataset)
    al._write_ranking_csv(out / "ranking.csv", ranked)
    report = metrics.ndcg(ranked, truth)
    payload = report.to_json()
    payload["ndcg_full"] = report.ndcg
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True))
        fh.write("\n")
    print(f"baseline ndcg_full={report.ndcg:.4f} over {report.n_records} records "
          f"({report.n_anomalies} anomalies); artifacts in {out}")
    return EXIT_OK


def _summary(history: list[al.IterationRecord]) -> dict:
    def stats(values):
        ordered = sorted(values)
        mid = len(ordered) // 2
        median = (ordered[mid] if len(ordered) % 2
                  else (ordered[mid - 1] + ordered[mid]) / 2.0)
        return {"max": max(ordered), "mean": sum(ordered) / len(ordered),
                "median": median}
    full = stats([r.ndcg_full for r in history])
    pool = stats([r.ndcg_pool for r in history])
    return {"iterations": len(history),
            "ndcg_full": full, "ndcg_pool": pool}


def cmd_active(args) -> int:
    out = _out_path(args.resume) if args.resume else _out_path(args.out)
    board = None
    server = None
    if args.resume:
        with open(out / "run.json", "r", encoding="utf-8") as fh:
            run_config = json.load(fh)
        dataset, truth = _load_inputs(run_config["dataset"], run_config["truth"], True)
        oracle_kind = run_config["oracle"]
        port = run_config.get("port", service.DEFAULT_PORT)
    else:
        if not args.dataset or not args.truth:
            raise ValueError("active needs --dataset and --truth (or --resume)")
        dataset, truth = _load_inputs(args.dataset, args.truth, True)
        oracle_kind = args.oracle
        port = args.port
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "run.json", "w", encoding="utf-8") as fh:
            json.dump({"dataset": str(Path(args.dataset).resolve()),
                       "truth": str(Path(args.truth).resolve()),
                       "oracle": oracle_kind, "port": port}, fh, sort_keys=True)
    if oracle_kind == "human":
        board = service.RunBoard()
        server, _ = service.serve_in_thread(board, port)
        oracle = service.HumanOracle(board, dataset)
        print(f"oracle service listening on http://127.0.0.1:{server.server_address[1]}")
    else:
        oracle = al.GroundTruthOracle(truth)
    try:
        if args.resume:
            model, state = al.resume_active_learning(out, dataset, truth, oracle,
                                                     board=board)
        else:
            splits = data.make_splits(dataset, truth, args.cold_start,
                                      args.val_fraction, args.seed)
            gan = GanConfig(steps=args.gan_steps, learning_rate=args.gan_lr,
                            min_pool=args.gan_min_pool)
            config = al.ALConfig(n_iterations=args.iters, query_budget=args.Q,
                                 percentile=args.q,
                                 recalibrate_threshold=not args.no_recalibrate,
                                 gan=gan, retrain_epochs=args.retrain_epochs)
            model, state = al.run_active_learning(
                dataset, truth, splits, oracle, _hyper_from(args), config,
                seed=args.seed, run_dir=out, board=board)
    except KeyboardInterrupt:
        if board is not None:
            board.close()
        print(f"run suspended; resume with: anomrank active --resume {out}")
        return EXIT_SUSPENDED
    except al.OracleSuspended:
        print(f"oracle session closed; resume with: anomrank active --resume {out}")
        return EXIT_SUSPENDED
    finally:
        if server is not None:
            server.shutdown()
    summary = _summary(state.history)
    if args.baseline_metrics:
        with open(args.baseline_metrics, "r", encoding="utf-8") as fh:
            baseline = json.load(fh)["ndcg_full"]
        summary["baseline_ndcg_full"] = baseline
        summary["relative_improvement_pct"] = metrics.relative_improvement(
            baseline, summary["ndcg_full"]["max"])
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, sort_keys=True))
        fh.write("\n")
    line = (f"{summary['iterations']} iterations; ndcg_full "
            f"max={summary['ndcg_full']['max']:.4f} "
            f"mean={summary['ndcg_full']['mean']:.4f} "
            f"median={summary['ndcg_full']['median']:.4f}")
    if "relative_improvement_pct" in summary:
        line += (f"; improvement over baseline "
                 f"{summary['relative_improvement_pct']:+.2f}%")
    print(line)
    return EXIT_OK


def _five_number(values: list[float]) -> list[float]:
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    q1, med, q3 = (float(np.percentile(ordered, p, method="linear"))
                   for p in (25, 50, 75))
    return [float(ordered[0]), q1, med, q3, float(ordered[-1])]


def cmd_report(args) -> int:
    if args.history:
        history_path = Path(args.history)
        default_out = history_path.parent
    elif args.run:
        history_path = _out_path(args.run) / "history.jsonl"
        default_out = _out_path(args.run)
    else:
        raise ValueError("report needs --run or --history")
    with open(history_path, "r", encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records:
        raise data.DataIntegrityError(f"{history_path} holds no iterations")
    out = _out_path(args.out) if args.out else default_out
    out.mkdir(parents=True, exist_ok=True)
    raw = [r["ndcg_full"] for r in records]
    smooth = al.gaussian_smooth(raw, args.sigma)
    with open(out / "series.csv", "w", encoding="utf-8") as fh:
        fh.write("iteration,ndcg_raw,ndcg_smooth\n")
        for record, r, s in zip(records, raw, smooth):
            fh.write(f"{record['iteration']},{r!r},{s!r}\n")
    five = _five_number(raw)
    with open(out / "boxplot.csv", "w", encoding="utf-8") as fh:
        fh.write("min,q1,median,q3,max\n")
        fh.write(",".join(repr(v) for v in five) + "\n")
    print(f"series.csv and boxplot.csv written to {out}")
    return EXIT_OK


_COMMANDS = {"synth": cmd_synth, "train": cmd_train,
             "active": cmd_active, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (data.DataFormatError, data.DataIntegrityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
