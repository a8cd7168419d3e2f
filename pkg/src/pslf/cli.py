"""Command-line harness: ``pslf {train,bench,grid,inspect}``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .bench import aggregate, dataset_summary, run_once, write_bench_table, write_run
from .data import FORMATS, ID_SPACES, RatingFormat, build_hdi, get_format, load_ratings
from .errors import ConfigError, DataError, GridSearchError, NumericError, PslfError
from .trainers import OPTIMIZERS, TrainConfig, expand_grid

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag -> TrainConfig field
CONFIG_FLAGS = {
    "--f": ("f", int),
    "--lambda": ("lam", float),
    "--gamma": ("gamma", float),
    "--tau": ("tau", float),
    "--cg-max-iters": ("cg_max_iters", int),
    "--cg-norm": ("cg_norm", str),
    "--kp": ("kp", float),
    "--ki": ("ki", float),
    "--kd": ("kd", float),
    "--lr": ("lr", float),
    "--adam-beta1": ("adam_beta1", float),
    "--adam-beta2": ("adam_beta2", float),
    "--sam-rho": ("sam_rho", float),
    "--sam-mode": ("sam_mode", str),
    "--max-epochs": ("max_epochs", int),
    "--early-stop": ("early_stop", int),
}


def _add_dataset_args(p):
    p.add_argument("--dataset", required=True, help="rating file")
    p.add_argument("--format", default="ml1m", choices=sorted(FORMATS))
    p.add_argument("--delimiter", help="override the format's delimiter")
    p.add_argument("--columns", help="0-based user,item,rating columns, e.g. 0,1,2")
    p.add_argument("--skip-header", action="store_true")
    p.add_argument("--id-space", choices=ID_SPACES, default="appearance",
                   help="'raw' sizes |U|, |I| by the largest integer id")


def _add_config_args(p, optimizer_required=True):
    if optimizer_required:
        p.add_argument("--optimizer", required=True, choices=OPTIMIZERS)
    for flag, (name, typ) in CONFIG_FLAGS.items():
        p.add_argument(flag, dest=name, type=typ, default=None)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pslf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train one model on one seeded partition")
    _add_dataset_args(p)
    _add_config_args(p)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="models x seeds, mean/std table")
    _add_dataset_args(p)
    p.add_argument("--models", nargs="+", required=True, choices=OPTIMIZERS)
    _add_config_args(p, optimizer_required=False)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--config", help="JSON file of per-model config overrides {model: {field: value}}")

    p = sub.add_parser("grid", help="exhaustive grid search on the validation set")
    _add_dataset_args(p)
    _add_config_args(p)
    p.add_argument("--grid", required=True, help='JSON file {"lam": [...], "gamma": [...]}')
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("inspect", help="print |U|, |I|, |K| and density")
    _add_dataset_args(p)
    return parser


def _format(args) -> RatingFormat:
    fmt = get_format(args.format)
    if args.delimiter is not None:
        fmt = replace(fmt, delimiter=args.delimiter.encode().decode("unicode_escape"))
    if args.columns:
        try:
            u, i, r = (int(c) for c in args.columns.split(","))
        except ValueError:
            raise ConfigError(f"--columns expects three integers, got {args.columns!r}") from None
        fmt = replace(fmt, user_col=u, item_col=i, rating_col=r)
    if args.skip_header:
        fmt = replace(fmt, skip_header=True)
    return fmt


def _load(args):
    try:
        tuples = load_ratings(args.dataset, _format(args))
    except OSError as exc:
        raise DataError(f"cannot read {args.dataset}: {exc}") from None
    return build_hdi(tuples, args.id_space)


def _config(args, optimizer=None) -> TrainConfig:
    overrides = {name: getattr(args, name) for _, (name, _) in CONFIG_FLAGS.items()
                 if getattr(args, name) is not None}
    return TrainConfig(optimizer=optimizer or args.optimizer, **overrides)


def _dataset_id(args):
    return os.path.splitext(os.path.basename(args.dataset))[0]


def cmd_train(args) -> int:
    matrix = _load(args)
    cfg = _config(args).resolved()
    part, report, total = run_once(matrix, cfg, args.seed)
    path = write_run(args.out, report, part, matrix, _dataset_id(args), args.seed, total)
    print(f"{cfg.optimizer}\tseed={args.seed}\ttest_rmse={report.test_rmse:.5f}\t"
          f"best_epoch={report.best_epoch}\tepochs={report.epochs}\t"
          f"time={total:.2f}s\tstop={report.stop_reason}")
    print(f"report: {path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    matrix = _load(args)
    per_model = {}
    if args.config:
        with open(args.config) as fh:
            per_model = json.load(fh)
    dataset = _dataset_id(args)
    rows, failed = [], False
    summary = {"dataset": dataset, "dataset_summary": dataset_summary(matrix), "runs": []}
    for model in args.models:
        cfg = TrainConfig.from_dict({**_config(args, model).to_dict(),
                                     **per_model.get(model, {})}).resolved()
        results = []
        for seed in args.seeds:
            run_dir = os.path.join(args.out, "runs", f"{model}_seed{seed}")
            try:
                part, report, total = run_once(matrix, cfg, seed)
            except NumericError as exc:
                print(f"{model} seed {seed}: FAILED: {exc}", file=sys.stderr)
                results.append(None)
                summary["runs"].append({"model": model, "seed": seed, "error": str(exc)})
                failed = True
                continue
            write_run(run_dir, report, part, matrix, dataset, seed, total)
            res = {"model": model, "seed": seed, "test_rmse": report.test_rmse,
                   "time_sec": total, "epochs": report.epochs,
                   "best_epoch": report.best_epoch, "stop_reason": report.stop_reason}
            results.append(res)
            summary["runs"].append(res)
            print(f"{model}\tseed={seed}\ttest_rmse={report.test_rmse:.5f}\t"
                  f"epochs={report.epochs}\ttime={total:.2f}s", file=sys.stderr)
        rows.append(aggregate(dataset, model, results))
    os.makedirs(args.out, exist_ok=True)
    print(write_bench_table(rows, os.path.join(args.out, "bench.tsv")), end="")
    summary["rows"] = [vars(r) for r in rows]
    with open(os.path.join(args.out, "bench.json"), "w") as fh:
        json.dump(summary, fh, indent=1)
    return EXIT_NUMERIC if failed else EXIT_OK


def _read_grid(path):
    try:
        with open(path) as fh:
            grid = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read grid file {path}: {exc}") from None
    if not isinstance(grid, dict) or not grid or not all(isinstance(v, list) for v in grid.values()):
        raise ConfigError("grid file must be a non-empty JSON object of value lists")
    return {("lam" if k == "lambda" else k): v for k, v in grid.items()}


RESULTS_FILE = "grid_results.jsonl"


def cmd_grid(args) -> int:
    grid = _read_grid(args.grid)
    base = replace(_config(args), seed=args.seed)
    configs = expand_grid(base, grid)
    for c in configs:
        c.resolved()
    matrix = _load(args)
    os.makedirs(args.out, exist_ok=True)
    results_path = os.path.join(args.out, RESULTS_FILE)

    done = {}
    if os.path.exists(results_path):
        with open(results_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break  # torn final line from an interrupted write
                done[rec["index"]] = rec
    if done:
        print(f"resuming: {len(done)} of {len(configs)} grid points already complete",
              file=sys.stderr)

    runs = []
    for k, cfg in enumerate(configs):
        rec = done.get(k)
        if rec is not None and rec["config"] == cfg.resolved().to_dict():
            runs.append(rec)
            continue
        try:
            _, report, total = run_once(matrix, cfg, args.seed)
            rec = {"index": k, "config": report.config.to_dict(),
                   "best_validation_rmse": report.best_validation_rmse,
                   "test_rmse": report.test_rmse, "epochs": report.epochs,
                   "best_epoch": report.best_epoch, "time_sec": total, "error": ""}
        except NumericError as exc:
            rec = {"index": k, "config": cfg.resolved().to_dict(), "error": str(exc)}
        with open(results_path, "a") as fh:
            fh.write(json.dumps(rec) + "\n")
        print(f"[{k + 1}/{len(configs)}] " + " ".join(f"{key}={rec['config'][key]}" for key in grid)
              + (f" valid={rec['best_validation_rmse']:.5f}" if not rec["error"]
                 else f" FAILED {rec['error']}"), file=sys.stderr)
        runs.append(rec)

    ok = [r for r in runs if not r["error"]]
    if not ok:
        raise GridSearchError([r["error"] for r in runs])
    best = TrainConfig.from_dict(min(ok, key=lambda r: r["best_validation_rmse"])["config"])
    with open(os.path.join(args.out, "best_config.json"), "w") as fh:
        json.dump(best.to_dict(), fh, indent=1)
    keys = list(grid)
    lines = ["\t".join(["index", *keys, "valid_rmse", "test_rmse", "epochs", "status"])]
    for r in runs:
        ok = not r["error"]
        lines.append("\t".join([str(r["index"]), *(str(r["config"][k]) for k in keys),
                                f"{r['best_validation_rmse']:.5f}" if ok else "nan",
                                f"{r['test_rmse']:.5f}" if ok else "nan",
                                str(r["epochs"]) if ok else "0", "ok" if ok else "failed"]))
    table = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "grid.tsv"), "w") as fh:
        fh.write(table)
    print(table, end="")
    print("best: " + " ".join(f"{k}={getattr(best, k)}" for k in keys))
    return EXIT_OK


def cmd_inspect(args) -> int:
    s = dataset_summary(_load(args))
    print("users\titems\tratings\tdensity")
    print(f"{s['users']}\t{s['items']}\t{s['ratings']}\t{100 * s['density']:.2f}%")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "bench": cmd_bench, "grid": cmd_grid, "inspect": cmd_inspect}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"pslf: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"pslf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, GridSearchError) as exc:
        print(f"pslf: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PslfError as exc:
        print(f"pslf: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
