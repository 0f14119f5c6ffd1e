"""Command-line pipeline: gen, analyze, encode, train, evaluate, predict.

Every command validates its inputs, is idempotent for identical inputs and
seed, embeds the seed and input checksums into its outputs (as ``#``
comment lines or container metadata), and exits non-zero with one
machine-parsable ``error=...`` line on failure.  Exit codes: 0 ok, 2 usage,
3 data error, 4 internal error.

Timings in ``evaluate`` land in a separate ``timings.csv``: they are the
only output that legitimately differs between reruns of the same seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

from . import encoding, ensemble, matcher, models, synth, trace
from .errors import AffinityError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _read_comment_fields(path) -> dict[str, str]:
    """Collect `# key=value` comment lines from the head of a CSV file."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            if sep:
                out[key.strip()] = value.strip()
    return out


def _skip_comments(path):
    """Yield non-comment lines of a trace/CSV file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            yield line


# --- subcommands -------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg_kwargs = dict(args.config.get("gen", {}))
    field_names = {f.name for f in dataclass_fields(synth.SyntheticTraceConfig)}
    unknown = set(cfg_kwargs) - field_names
    if unknown:
        raise AffinityError(f"unknown gen config keys: {sorted(unknown)}")
    for key, flag in (
        ("n_nodes", "nodes"), ("n_attributes", "attrs"), ("n_jobs", "jobs"),
        ("group_a_fraction", "group_a"), ("group_c_fraction", "group_c"),
        ("unconstrained_fraction", "unconstrained"), ("churn_rate", "churn"),
        ("n_intervals", "intervals"), ("interval_us", "interval_us"),
    ):
        value = getattr(args, flag)
        if value is not None:
            cfg_kwargs[key] = value
    if args.tasks is not None:
        cfg_kwargs["tasks_per_job"] = _parse_range(args.tasks)
    if args.constraints is not None:
        cfg_kwargs["constraints_per_task"] = _parse_range(args.constraints)
    cfg_kwargs.setdefault("seed", args.seed)
    cfg = synth.SyntheticTraceConfig(**cfg_kwargs)
    generated = synth.generate_synthetic_trace(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_json = json.dumps(cfg.__dict__, sort_keys=True, default=str)
    cfg_digest = hashlib.sha256(cfg_json.encode()).hexdigest()
    stamp = [f"# seed={cfg.seed}", f"# config_sha256={cfg_digest}"]
    _write_lines(out / "nodes.csv", stamp + [trace.NODES_HEADER] + [
        trace.serialize_node_event(e) for e in generated.node_events
    ])
    _write_lines(out / "tasks.csv", stamp + [trace.TASKS_HEADER] + [
        trace.serialize_task_event(e) for e in generated.task_events
    ])
    oracle_lines = stamp + ["job_id,task_index,suitable_count"] + [
        f"{job},{idx},{count}"
        for (job, idx), count in sorted(generated.oracle.items())
    ]
    _write_lines(out / "oracle.csv", oracle_lines)
    print(f"wrote {out/'nodes.csv'}, {out/'tasks.csv'}, {out/'oracle.csv'}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    node_events = trace.read_node_events(_skip_comments(args.nodes_trace))
    task_events = trace.read_task_events(_skip_comments(args.tasks_trace))
    merged = trace.merge_streams(node_events, task_events)
    state = matcher.ClusterState(strict=args.strict)
    stats = list(matcher.replay_with_stats(merged, state, interval_us=args.interval_us))
    rows = encoding.rows_from_snapshot(state.snapshot_dataset_rows())
    stamp = [
        f"# seed={args.seed}",
        f"# input nodes_trace sha256={_sha256_file(args.nodes_trace)}",
        f"# input tasks_trace sha256={_sha256_file(args.tasks_trace)}",
    ]
    footer = [f"# {key}={value}" for key, value in state.diagnostics.as_dict().items()]
    _write_lines(args.stats_out, stamp + [matcher.IntervalStats.csv_header()]
                 + [s.csv_row() for s in stats] + footer)
    encoding.write_rows(args.rows_out, rows, comments=[
        line[2:] for line in stamp
    ] + [f"clock={state.clock}"])
    print(f"analyzed {len(rows)} constrained live tasks over {len(stats)} intervals")
    return EXIT_OK


def cmd_encode(args) -> int:
    rows = encoding.read_rows(args.rows)
    comments = _read_comment_fields(args.rows)
    compressed = encoding.compress(rows)
    dictionary = encoding.build_dictionary(compressed)
    metadata = {
        "source": Path(args.rows).name,
        "input_sha256": _sha256_file(args.rows),
        "seed": args.seed,
        "created_us": int(comments.get("clock", "0")),
        "rows_before_compression": len(rows),
    }
    ds = encoding.encode_rows(compressed, dictionary, metadata)
    encoding.write_dataset(ds, args.out)
    print(f"encoded {len(rows)} rows -> {len(compressed)} compressed, "
          f"width {ds.width} -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    ds = encoding.read_dataset(args.dataset)
    spec = models.ClassifierSpec(args.model, seed=args.seed,
                                 overrides=args.config.get("train", {}))
    est = models.train(spec, ds)
    models.save_model(est, args.out, meta={
        "seed": args.seed,
        "input_sha256": _sha256_file(args.dataset),
    })
    print(f"trained {args.model} on {len(ds.rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = encoding.read_dataset(args.dataset)
    aggregate = ensemble.run_protocol(ds, runs=args.runs, base_seed=args.seed,
                                      train_fraction=args.train_fraction)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = [
        f"# seed={args.seed}",
        f"# input dataset sha256={_sha256_file(args.dataset)}",
    ]
    metric_lines = stamp + ["metric,class,value"] + [
        f"{metric},{label},{value:.10g}"
        for metric, label, value in aggregate.metric_rows()
    ]
    _write_lines(out / "metrics.csv", metric_lines)
    timing_lines = stamp + ["metric,class,value"] + [
        f"{metric},{label},{value:.6f}"
        for metric, label, value in aggregate.timing_rows()
    ]
    _write_lines(out / "timings.csv", timing_lines)
    report_text = "\n".join(stamp) + "\n" + aggregate.to_text()
    with open(out / "report.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_text)
    print(f"mean accuracy {aggregate.mean_accuracy:.4f} over {args.runs} runs "
          f"-> {out/'report.txt'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    est = models.load_model(args.model)
    ds = encoding.read_dataset(args.dataset)
    X, _, _ = ds.to_matrix()
    labels = est.predict(X)
    stamp = [
        f"# seed={args.seed}",
        f"# input model sha256={_sha256_file(args.model)}",
        f"# input dataset sha256={_sha256_file(args.dataset)}",
    ]
    _write_lines(args.out, stamp + ["row,predicted_group"] + [
        f"{i},{label}" for i, label in enumerate(labels)
    ])
    print(f"predicted {len(labels)} rows -> {args.out}")
    return EXIT_OK


# --- argument plumbing ----------------------------------------------------------


def _parse_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise AffinityError(f"expected LO:HI, got {text!r}")
    return int(lo), int(hi)


def _add_global_flags(parser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, help="global seed",
                        **({"default": d} if suppress else {"default": 0}))
    parser.add_argument("--threads", type=int,
                        help="worker cap, 0 = auto (current build runs serial)",
                        **({"default": d} if suppress else {"default": 0}))
    parser.add_argument("--strict", action="store_true",
                        help="trace anomalies become fatal instead of counted",
                        **({"default": d} if suppress else {}))
    parser.add_argument("--config", help="optional JSON config file",
                        **({"default": d} if suppress else {"default": None}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affinity",
        description="Constraint-aware workload analysis and group prediction",
    )
    _add_global_flags(parser, suppress=False)
    # the same flags are accepted after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic trace")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--attrs", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--tasks", default=None, help="tasks per job as LO:HI")
    p.add_argument("--constraints", default=None, help="constraints per task as LO:HI")
    p.add_argument("--group-a", type=float, default=None, dest="group_a")
    p.add_argument("--group-c", type=float, default=None, dest="group_c")
    p.add_argument("--unconstrained", type=float, default=None)
    p.add_argument("--churn", type=float, default=None)
    p.add_argument("--intervals", type=int, default=None)
    p.add_argument("--interval-us", type=int, default=None, dest="interval_us")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", parents=[common], help="replay traces into stats and dataset rows")
    p.add_argument("--nodes-trace", required=True)
    p.add_argument("--tasks-trace", required=True)
    p.add_argument("--stats-out", required=True)
    p.add_argument("--rows-out", required=True)
    p.add_argument("--interval-us", type=int, default=matcher.DEFAULT_INTERVAL_US,
                   dest="interval_us")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("encode", parents=[common], help="compress rows and one-hot encode a dataset")
    p.add_argument("--rows", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", parents=[common], help="fit one model or the voting ensemble")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", default="ensemble",
                   choices=sorted(models.KIND_TO_CLASS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="run the ten-run split/train/score protocol")
    p.add_argument("--dataset", required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.75,
                   dest="train_fraction")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", parents=[common], help="predict groups for encoded rows")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error={type(exc).__name__} msg={exc}", file=sys.stderr)
            return EXIT_USAGE
        for key, value in config.get("global", {}).items():
            # config supplies defaults; explicit flags already sit in args
            if f"--{key.replace('_', '-')}" not in argv and hasattr(args, key):
                setattr(args, key, value)
    args.config = config
    try:
        return args.func(args)
    except AffinityError as exc:
        message = str(exc).replace("\n", " ")
        print(f"error={type(exc).__name__} msg={message}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        message = str(exc).replace("\n", " ")
        print(f"error=IOFailure msg={message}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        message = str(exc).replace("\n", " ")
        print(f"error={type(exc).__name__} msg={message}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
