"""Command-line interface.

`unseen run` executes a seeded experiment end to end and writes JSON,
CSV and trace figures into --out. `unseen report` re-renders those
outputs from a previously written results.json.
"""

import argparse
import json
import sys

from .framework import RunConfig
from .harness import ExperimentSpec, RepResult, ResultRecord, emit_results, run_experiment


def build_parser():
    parser = argparse.ArgumentParser(prog="unseen",
                                     description="Deep clustering that estimates k by dissolving dying clusters")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment")
    run_p.add_argument("--config", default=None,
                       help="JSON file of options; explicit flags override it")
    run_p.add_argument("--dataset", default=None,
                       help="csv:PATH | idx:IMAGES,LABELS | blobs:k=K,n=N,d=D,std=S[,seed=B]")
    run_p.add_argument("--label-col", type=int, default=None, help="label column for csv sources")
    run_p.add_argument("--first-k", type=int, default=None, help="keep only the first K true classes")
    run_p.add_argument("--backend", choices=("dcn", "dec", "dkm"), default=None)
    run_p.add_argument("--k-init", type=int, default=None)
    run_p.add_argument("--t", type=float, default=None, help="dying threshold in [0, 1)")
    run_p.add_argument("--epochs", type=int, default=None)
    run_p.add_argument("--pretrain-epochs", type=int, default=None)
    run_p.add_argument("--batch-size", type=int, default=None)
    run_p.add_argument("--lr", type=float, default=None)
    run_p.add_argument("--pretrain-lr", type=float, default=None)
    run_p.add_argument("--lambda1", type=float, default=None, help="reconstruction weight")
    run_p.add_argument("--lambda2", type=float, default=None, help="clustering + neighbor weight")
    run_p.add_argument("--no-nn-loss", action="store_true", default=False,
                       help="drop the neighbor term (ablation)")
    run_p.add_argument("--baseline", action="store_true", default=False,
                       help="bare backend at the true k, no dissolution")
    run_p.add_argument("--reps", type=int, default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--dump-embeddings", action="store_true", default=False)
    run_p.add_argument("--hidden-dims", default=None, help="comma list, default 500,500,2000")
    run_p.add_argument("--embed-dim", type=int, default=None)
    run_p.add_argument("--normalize", choices=("feature", "channel", "none", "auto"), default=None)
    run_p.add_argument("--no-figures", action="store_true", default=False)
    run_p.add_argument("--cache-dir", default=None, help="pretrained checkpoint cache")

    rep_p = sub.add_parser("report", help="re-render CSV and figures from a results.json")
    rep_p.add_argument("--results", required=True)
    rep_p.add_argument("--out", default=None, help="defaults to the results.json directory")
    return parser


def _merge(args, file_cfg, key, fallback=None):
    flag = getattr(args, key)
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return fallback


def _merge_flag(args, file_cfg, key):
    return bool(getattr(args, key)) or bool(file_cfg.get(key, False))


def _run(args):
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    dataset = _merge(args, file_cfg, "dataset")
    backend = _merge(args, file_cfg, "backend")
    if dataset is None:
        raise ValueError("--dataset is required (flag or config file)")
    if backend is None:
        raise ValueError("--backend is required (flag or config file)")
    hidden = _merge(args, file_cfg, "hidden_dims")
    if isinstance(hidden, str):
        hidden = tuple(int(h) for h in hidden.split(","))
    elif isinstance(hidden, list):
        hidden = tuple(int(h) for h in hidden)
    kwargs = dict(backend=backend)
    for key, cfg_key in (("k_init", "k_init"), ("t", "t"), ("epochs", "epochs"),
                         ("pretrain_epochs", "pretrain_epochs"), ("batch_size", "batch_size"),
                         ("lr", "lr"), ("pretrain_lr", "pretrain_lr"),
                         ("lambda1", "lambda1"), ("lambda2", "lambda2"),
                         ("seed", "seed"), ("embed_dim", "embed_dim")):
        val = _merge(args, file_cfg, key)
        if val is not None:
            kwargs[cfg_key] = val
    if hidden is not None:
        kwargs["hidden_dims"] = hidden
    if _merge_flag(args, file_cfg, "no_nn_loss"):
        kwargs["nn_loss_enabled"] = False
    config = RunConfig(**kwargs)
    spec = ExperimentSpec(
        source=dataset,
        config=config,
        reps=int(_merge(args, file_cfg, "reps", 1)),
        out_dir=_merge(args, file_cfg, "out"),
        label_col=_merge(args, file_cfg, "label_col"),
        first_k=_merge(args, file_cfg, "first_k"),
        normalize=_merge(args, file_cfg, "normalize", "auto"),
        baseline=_merge_flag(args, file_cfg, "baseline"),
        dump_embeddings=_merge_flag(args, file_cfg, "dump_embeddings"),
        cache_dir=_merge(args, file_cfg, "cache_dir"),
        figures=not _merge_flag(args, file_cfg, "no_figures"),
    )
    record = run_experiment(spec)
    _print_summary(record)
    return 0


def _print_summary(record):
    agg = record.aggregate
    print(f"dataset: {record.dataset}")
    print(f"backend: {record.backend}" + (" (baseline)" if record.baseline else ""))
    print(f"repetitions: {len(record.reps)}")
    for key in ("acc", "ari", "nmi", "k_pred"):
        stats = agg[key]
        if stats["mean"] is None:
            print(f"  {key}: n/a (unlabeled dataset)" if key != "k_pred" else f"  {key}: n/a")
        else:
            print(f"  {key}: {stats['mean']:.4f} ± {stats['std']:.4f}")
    print(f"  seconds: {agg['seconds']['mean']:.2f} ± {agg['seconds']['std']:.2f}")


def _report(args):
    from pathlib import Path

    path = Path(args.results)
    with open(path) as fh:
        blob = json.load(fh)
    reps = [RepResult(**r) for r in blob["reps"]]
    record = ResultRecord(dataset=blob["dataset"], backend=blob["backend"],
                          baseline=blob["baseline"], config=blob["config"],
                          reps=reps, aggregate=blob["aggregate"])
    out_dir = Path(args.out) if args.out else path.parent
    written = emit_results(record, out_dir, formats=("csv",), figures=True)
    _print_summary(record)
    for w in written:
        print(f"wrote {w}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        return _report(args)
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
