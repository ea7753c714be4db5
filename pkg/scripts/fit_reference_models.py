#!/usr/bin/env python3
"""Calibrate per-kernel cost models against the published BOTS walltimes.

Writes one params file per kernel plus a merged five-region file, and
prints the calibration table (modeled vs observed, relative error, argmin).

Usage: python scripts/fit_reference_models.py [--out-dir models]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from pdttagger.bots_reference import (
    BOTS_SMT_WALLTIMES,
    KERNEL_ORDER,
    KERNEL_REGION_IDS,
    REFERENCE_CORES,
    SMT_CANDIDATES,
    best_thread_count,
)
from pdttagger.tuner import emit_models, fit_cost_model, model_time


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="models", type=Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    merged = {}
    print(f"{'kernel':<10} {'threads':>7} {'observed':>10} {'modeled':>10} {'rel.err':>8}")
    for name in KERNEL_ORDER:
        observations = BOTS_SMT_WALLTIMES[name]
        params = fit_cost_model(observations, REFERENCE_CORES)
        merged[KERNEL_REGION_IDS[name]] = params
        (args.out_dir / f"{name}.params").write_text(emit_models({0: params}))
        for n in sorted(observations):
            observed = observations[n]
            modeled = model_time(params, n)
            rel = abs(modeled - observed) / observed
            print(f"{name:<10} {n:>7} {observed:>10.3f} {modeled:>10.3f} {rel:>8.2%}")
        argmin = min(SMT_CANDIDATES, key=lambda n: (model_time(params, n), n))
        marker = "ok" if argmin == best_thread_count(name) else "MISMATCH"
        print(f"{name:<10} argmin over {SMT_CANDIDATES}: {argmin} "
              f"(measured best {best_thread_count(name)}) [{marker}]")

    merged_path = args.out_dir / "bots_all.params"
    merged_path.write_text(emit_models(merged))
    print(f"\nwrote per-kernel params and {merged_path}")


if __name__ == "__main__":
    main()
