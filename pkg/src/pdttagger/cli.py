"""Command-line entry point: scan, instrument, run, tune, train, predict, report.

Exit codes: 0 success, 2 input/parse error, 3 instrumentation conflict,
4 tuning infeasible, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import advisor, counters, regions, rewrite, runtime, tuner

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFLICT = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5

WRAPPER_BASENAME = "pdtcc"

_WRAPPER_TEMPLATE = """\
#!/bin/sh
# Compiler wrapper: builds an instrumented source against the hook runtime.
# Point PDTTAGGER_SHIM at the directory holding {header} / {impl};
# override the underlying compiler with PDTTAGGER_CC (default: cc).
: "${{PDTTAGGER_CC:=cc}}"
if [ -z "$PDTTAGGER_SHIM" ]; then
    echo "pdtcc: set PDTTAGGER_SHIM to the hook runtime directory" >&2
    exit 1
fi
exec "$PDTTAGGER_CC" -fopenmp -I"$PDTTAGGER_SHIM" "$@" "$PDTTAGGER_SHIM/{impl}" -lpthread
"""


def _load_config(path: str | None) -> regions.InstrumentationConfig:
    if path is None:
        return regions.InstrumentationConfig()
    return regions.parse_config(Path(path).read_text())


def _scan_inputs(paths: list[str]) -> tuple[dict[str, str], list[regions.Region]]:
    sources = {}
    for p in paths:
        sources[p] = Path(p).read_text()
    return sources, regions.scan_files(sources)


def cmd_regions(args: argparse.Namespace) -> int:
    sources, found = _scan_inputs(args.sources)
    config = _load_config(args.config)
    selected = regions.select_regions(found, config)
    for r in selected:
        print(f"{r.id} {r.kind} {r.file}:{r.pragma_line}-{r.block_end} {r.function}")
    print(f"{len(selected)} regions")
    return EXIT_OK


def cmd_instrument(args: argparse.Namespace) -> int:
    sources, found = _scan_inputs(args.sources)
    config = _load_config(args.config)
    selected = regions.select_regions(found, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    basenames = [Path(p).name for p in sources]
    if len(set(basenames)) != len(basenames):
        raise ValueError(f"duplicate basenames among inputs: {sorted(basenames)}")

    opts = rewrite.InstrumentationOptions(inject_thread_clause=not args.no_thread_clause)
    for path, text in sources.items():
        per_file = [r for r in selected if r.file == path]
        instrumented, _ = rewrite.instrument(text, per_file, opts)
        runtime.write_text_atomic(out_dir / Path(path).name, instrumented)
    manifest = rewrite.make_manifest(selected, sources)
    runtime.write_text_atomic(out_dir / "pdtmanifest.txt", rewrite.emit_manifest(manifest))
    print(f"instrumented {len(sources)} file(s), {len(selected)} region(s) -> {out_dir}")

    if args.emit_wrapper:
        wrapper = out_dir / WRAPPER_BASENAME
        runtime.write_text_atomic(
            wrapper,
            _WRAPPER_TEMPLATE.format(header=opts.header_name,
                                     impl=opts.header_name.replace(".h", ".c")),
        )
        wrapper.chmod(0o755)
        print(f"wrote compiler wrapper {wrapper}")
    return EXIT_OK


def cmd_strip(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in args.sources:
        text = Path(path).read_text()
        runtime.write_text_atomic(out_dir / Path(path).name, rewrite.strip(text))
    print(f"stripped {len(args.sources)} file(s) -> {out_dir}")
    return EXIT_OK


def _models_from_file(path: str) -> dict[int, tuner.CostModelParams]:
    return tuner.parse_models(Path(path).read_text())


def cmd_run(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.visits < 1:
        raise ValueError(f"--visits must be >= 1, got {args.visits}")
    if args.model:
        models = _models_from_file(args.model)
        provider = counters.SyntheticCounterProvider() if args.counters else None
        profiles = {}
        for rid, params in sorted(models.items()):
            visit_ns = round(tuner.model_time(params, args.threads) * 1e9)
            totals: dict[str, int] = {}
            if provider is not None:
                for _ in range(args.visits):
                    window = provider.open(counters.CANONICAL_EVENTS, region_id=rid,
                                           thread_count=args.threads)
                    for event, count in window.read().items():
                        totals[event] = totals.get(event, 0) + count
                    window.close()
            profiles[(rid, args.threads)] = runtime.RegionProfile(
                region_id=rid,
                thread_count=args.threads,
                visits=args.visits,
                total_ns=visit_ns * args.visits,
                min_ns=visit_ns,
                max_ns=visit_ns,
                counter_totals=totals,
            )
        result = runtime.RunResult(run_id="modelrun", default_threads=args.threads,
                                   profiles=profiles)
        written = runtime.write_outputs(result, out_dir)
    else:
        executor = tuner.CommandExecutor(args.exec_template)
        trial = executor.run(args.threads)
        profiles = {
            (rid, args.threads): runtime.RegionProfile(
                region_id=rid,
                thread_count=args.threads,
                visits=1,
                total_ns=round(seconds * 1e9),
                min_ns=round(seconds * 1e9),
                max_ns=round(seconds * 1e9),
            )
            for rid, seconds in trial.mean_time.items()
        }
        result = runtime.RunResult(run_id="cmdrun", default_threads=args.threads,
                                   profiles=profiles)
        written = runtime.write_outputs(result, out_dir)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_tune(args: argparse.Namespace) -> int:
    candidates = tuner.validate_candidates(int(v) for v in args.candidates.split(","))
    if args.model:
        executor: tuner.TrialExecutor = tuner.SyntheticExecutor(_models_from_file(args.model))
    else:
        executor = tuner.CommandExecutor(args.exec_template)
    trials = tuner.run_trials(executor, candidates)
    if len(trials) < 2:
        raise tuner.InsufficientTrials(
            f"only {len(trials)} of {len(candidates)} candidates succeeded"
        )
    plan = tuner.build_plan(trials)
    if args.trials_out:
        runtime.write_text_atomic(args.trials_out, tuner.emit_trials(trials))
    runtime.write_text_atomic(args.plan_out, runtime.emit_plan(plan))

    base = trials[0]
    by_candidate = {t.candidate: t for t in trials}
    print(f"default threads: {plan.default_threads}")
    for rid in sorted(plan.overrides):
        chosen = plan.overrides[rid]
        line = f"region {rid}: {chosen} threads"
        if rid in base.mean_time and rid in by_candidate[chosen].mean_time:
            gain = tuner.speedup(base.mean_time[rid], by_candidate[chosen].mean_time[rid])
            line += f" (speedup vs {base.candidate} threads: {gain:.3f})"
        print(line)
    print(f"wrote plan {args.plan_out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    samples = advisor.load_dataset(Path(args.data).read_text())
    holdout: list[advisor.LabeledSample] = []
    if args.holdout > 0:
        k = max(1, int(len(samples) * args.holdout))
        if k >= len(samples):
            raise ValueError(f"holdout fraction {args.holdout} leaves no training data")
        holdout, samples = samples[-k:], samples[:-k]
    tree = advisor.train(samples, max_depth=args.max_depth,
                         min_samples_leaf=args.min_samples_leaf)
    runtime.write_text_atomic(args.out, advisor.export_tree(tree))
    accuracy = advisor.training_accuracy(tree, samples)
    print(f"training accuracy: {accuracy:.1%} ({len(samples)} samples)")
    if holdout:
        held = advisor.training_accuracy(tree, holdout)
        print(f"holdout accuracy: {held:.1%} ({len(holdout)} samples)")
    print(f"wrote tree {args.out}")
    return EXIT_OK


def _features_from_spec(spec: str) -> counters.FeatureVector:
    values = {}
    for part in spec.split(","):
        name, _, raw = part.partition("=")
        name = name.strip()
        if name not in counters.FEATURE_ORDER:
            raise ValueError(f"unknown feature {name!r}; choose from {counters.FEATURE_ORDER}")
        values[name] = float(raw)
    missing = [n for n in counters.FEATURE_ORDER if n not in values]
    for name in missing:
        values[name] = 0.0
    return counters.FeatureVector(**values)


def cmd_predict(args: argparse.Namespace) -> int:
    tree = advisor.import_tree(Path(args.tree).read_text())
    outputs: list[tuple[str, counters.FeatureVector]] = []
    if args.features:
        outputs.append(("", _features_from_spec(args.features)))
    else:
        result = runtime.parse_result(Path(args.result_file).read_text())
        for profile in result.sorted_profiles():
            if args.region is not None and profile.region_id != args.region:
                continue
            outputs.append((f"region {profile.region_id}: ",
                            counters.derive_features(profile)))
        if not outputs:
            raise ValueError("no matching region stanza in result file")
    for prefix, fv in outputs:
        cls = advisor.predict(tree, fv)
        line = f"{prefix}{cls.name}"
        if args.cores:
            line += f" -> {advisor.recommend_threads(cls, args.cores)} threads"
        print(line)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    result = runtime.parse_result(Path(args.result).read_text())
    manifest = None
    if args.manifest:
        manifest = rewrite.parse_manifest(Path(args.manifest).read_text())
    if args.format == "xml":
        print(runtime.emit_viz(result, manifest=manifest), end="")
        return EXIT_OK
    by_id = manifest.by_id() if manifest else {}
    print(f"run {result.run_id} (default threads {result.default_threads})")
    header = f"{'region':>6} {'threads':>7} {'visits':>8} {'total[s]':>12} " \
             f"{'mean[s]':>12} {'min[s]':>12} {'max[s]':>12}  location"
    print(header)
    ordered = sorted(result.sorted_profiles(), key=lambda p: (-p.total_ns, p.region_id))
    for p in ordered:
        entry = by_id.get(p.region_id)
        location = f"{entry.file}:{entry.pragma_line} {entry.function}" if entry else ""
        print(
            f"{p.region_id:>6} {p.thread_count:>7} {p.visits:>8} "
            f"{p.total_ns / 1e9:>12.6f} {p.mean_ns / 1e9:>12.6f} "
            f"{p.min_ns / 1e9:>12.6f} {p.max_ns / 1e9:>12.6f}  {location}"
        )
        for event in sorted(p.counter_totals):
            print(f"{'':>6} counter {event} {p.counter_totals[event]}")
    if result.unbalanced_regions:
        print(f"unbalanced regions: {result.unbalanced_regions}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdttagger",
        description="Instrument OpenMP C sources, profile regions, tune thread counts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regions", help="list instrumentable parallel constructs")
    p.add_argument("sources", nargs="+")
    p.add_argument("--config", help="region-selection file")
    p.set_defaults(handler=cmd_regions)

    p = sub.add_parser("instrument", help="write instrumented copies plus a manifest")
    p.add_argument("sources", nargs="+")
    p.add_argument("--config", help="region-selection file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-thread-clause", action="store_true",
                   help="skip num_threads clause injection")
    p.add_argument("--emit-wrapper", action="store_true",
                   help="also write the pdtcc compiler wrapper script")
    p.set_defaults(handler=cmd_instrument)

    p = sub.add_parser("strip", help="remove instrumentation, restoring original text")
    p.add_argument("sources", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=cmd_strip)

    p = sub.add_parser("run", help="run one execution (command or cost model)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--exec", dest="exec_template",
                       help="command template; {threads} and {out} expand")
    group.add_argument("--model", help="cost-model params file")
    p.add_argument("--threads", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory for the result file")
    p.add_argument("--visits", type=int, default=1, help="visits per region (model mode)")
    p.add_argument("--counters", action="store_true",
                   help="attach synthetic counters (model mode)")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("tune", help="search candidates and write a thread plan")
    p.add_argument("--candidates", required=True, help="comma-separated thread counts")
    p.add_argument("--cores", type=int, required=True,
                   help="physical core count (kept explicit for reproducibility)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--exec", dest="exec_template",
                       help="command template; {threads} and {out} expand")
    group.add_argument("--model", help="cost-model params file")
    p.add_argument("--trials-out", help="write the trial database here")
    p.add_argument("--plan-out", required=True)
    p.set_defaults(handler=cmd_tune)

    p = sub.add_parser("train", help="train the SMT-class decision tree")
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--holdout", type=float, default=0.0,
                   help="fraction of trailing samples held out for validation")
    p.add_argument("--out", required=True, help="tree file to write")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="classify features with a trained tree")
    p.add_argument("--tree", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--features", help="comma-separated name=value pairs")
    group.add_argument("--result-file", help="derive features from a result file")
    p.add_argument("--region", type=int, help="restrict --result-file to one region")
    p.add_argument("--cores", type=int, help="also print the recommended thread count")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("report", help="render a result file")
    p.add_argument("--result", required=True)
    p.add_argument("--format", choices=("text", "xml"), default="text")
    p.add_argument("--manifest", help="manifest file for source locations")
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except rewrite.AlreadyInstrumented as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except rewrite.RegionNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except tuner.TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except runtime.IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, regions.ScanError, advisor.AdvisorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
