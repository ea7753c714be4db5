#!/usr/bin/env python3
"""End-to-end desk-scale walkthrough of the tuning pipeline.

Stages: scan a source, instrument it, simulate trial runs from calibrated
cost models, build a thread plan, train the advisor on the labeled kernel
fixture, and classify each simulated region's counters.

Usage: python scripts/demo_pipeline.py [--workdir demo_out]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from pdttagger import advisor, counters, regions, rewrite, runtime, tuner
from pdttagger.bots_reference import (
    BOTS_SMT_WALLTIMES,
    KERNEL_ORDER,
    KERNEL_REGION_IDS,
    REFERENCE_CORES,
    SMT_CANDIDATES,
    advisor_fixture,
)

SAMPLE = """\
void lu_step(double *m, int nb) {
#pragma omp parallel for
    for (int j = 0; j < nb; j++)
        m[j] *= 0.5;
#pragma omp parallel for
    for (int i = 0; i < nb; i++)
        m[i] += 1.0;
}
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_out", type=Path)
    args = parser.parse_args()
    work = args.workdir
    work.mkdir(parents=True, exist_ok=True)

    print("== stage 1: scan and instrument ==")
    found = regions.scan_source(SAMPLE, "lu_step.c")
    for r in found:
        print(f"  region {r.id}: {r.kind} at {r.file}:{r.pragma_line} in {r.function}()")
    instrumented, manifest = rewrite.instrument(SAMPLE, found)
    (work / "lu_step.c").write_text(instrumented)
    (work / "pdtmanifest.txt").write_text(rewrite.emit_manifest(manifest))
    print(f"  wrote {work / 'lu_step.c'} and manifest")

    print("== stage 2: calibrate cost models from published walltimes ==")
    models = {}
    for name in KERNEL_ORDER:
        models[KERNEL_REGION_IDS[name]] = tuner.fit_cost_model(
            BOTS_SMT_WALLTIMES[name], REFERENCE_CORES)
    print(f"  fitted {len(models)} kernel models at {REFERENCE_CORES} cores")

    print("== stage 3: simulated trials and thread plan ==")
    trials = tuner.run_trials(tuner.SyntheticExecutor(models), SMT_CANDIDATES)
    plan = tuner.build_plan(trials)
    (work / "pdtplan.txt").write_text(runtime.emit_plan(plan))
    for name in KERNEL_ORDER:
        rid = KERNEL_REGION_IDS[name]
        print(f"  {name:<10} -> {plan.overrides[rid]} threads")
    print(f"  default {plan.default_threads} threads; plan at {work / 'pdtplan.txt'}")

    print("== stage 4: train the advisor on the labeled kernel fixture ==")
    samples = advisor_fixture()
    tree = advisor.train(samples, max_depth=8)
    (work / "advisor.tree").write_text(advisor.export_tree(tree))
    accuracy = advisor.training_accuracy(tree, samples)
    print(f"  training accuracy {accuracy:.0%}; tree at {work / 'advisor.tree'}")

    print("== stage 5: classify fixture counters ==")
    for name in KERNEL_ORDER:
        sample = samples[KERNEL_REGION_IDS[name]]
        cls = advisor.predict(tree, sample.features)
        threads = advisor.recommend_threads(cls, REFERENCE_CORES)
        print(f"  {name:<10} ipc={sample.features.ipc:<5} -> {cls.name} "
              f"({threads} threads on {REFERENCE_CORES} cores)")


if __name__ == "__main__":
    main()
