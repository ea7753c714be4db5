"""Thread-count search: trial execution, cost modeling, and plan building.

The cost model captures SMT-style scaling: effective parallelism grows
linearly up to the core count, then at reduced efficiency through the 2x
and 4x thread tiers, with a per-thread overhead term. Calibrating it
against measured walltimes lets the whole tuning loop run at desk scale.
"""

from __future__ import annotations

import logging
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol

import numpy as np
from scipy.optimize import nnls

from .runtime import (
    ENV_OUT,
    ENV_PLAN,
    RESULT_BASENAME,
    RegionProfile,
    RunResult,
    ThreadPlan,
    emit_plan,
    emit_result,
    parse_result,
)

log = logging.getLogger(__name__)


class TunerError(Exception):
    pass


class TrialFailed(TunerError):
    pass


class InsufficientTrials(TunerError):
    pass


class DegenerateFit(TunerError):
    def __init__(self, message: str, residuals: Mapping[int, float] | None = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class ModelSyntax(ValueError):
    pass


class TrialsSyntax(ValueError):
    pass


def default_candidates(cores: int, include_serial: bool = False) -> tuple[int, ...]:
    """Candidate generator: [cores, 2*cores, 4*cores], optionally with 1."""
    if cores < 1:
        raise ValueError(f"cores must be >= 1, got {cores}")
    base = (cores, 2 * cores, 4 * cores)
    return ((1,) + base) if include_serial and cores > 1 else base


def validate_candidates(candidates: Iterable[int]) -> tuple[int, ...]:
    out = tuple(candidates)
    if not out:
        raise ValueError("candidate set must not be empty")
    if any(n < 1 for n in out):
        raise ValueError(f"candidates must be positive, got {out}")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"candidates must be strictly increasing, got {out}")
    return out


@dataclass(frozen=True)
class TrialResult:
    candidate: int
    mean_time: Mapping[int, float]  # region id -> seconds
    command: str = ""
    timestamp: str = ""


@dataclass(frozen=True)
class CostModelParams:
    t_serial: float
    work_parallel: float
    overhead_per_thread: float
    smt2_eff: float
    smt4_eff: float
    cores: int

    def __post_init__(self):
        if self.t_serial < 0 or self.work_parallel < 0 or self.overhead_per_thread < 0:
            raise ValueError("time parameters must be non-negative")
        if not (0.0 <= self.smt4_eff <= self.smt2_eff <= 1.0):
            raise ValueError(
                f"need 0 <= smt4_eff <= smt2_eff <= 1, got {self.smt4_eff}, {self.smt2_eff}"
            )
        if self.cores < 1:
            raise ValueError(f"cores must be >= 1, got {self.cores}")


def effective_parallelism(p: CostModelParams, n: int) -> float:
    """Thread capacity at n threads; saturates above 4x the core count."""
    c = p.cores
    return (
        min(n, c)
        + p.smt2_eff * max(0, min(n, 2 * c) - c)
        + p.smt4_eff * max(0, min(n, 4 * c) - 2 * c)
    )


def model_time(p: CostModelParams, n: int) -> float:
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return p.t_serial + p.work_parallel / effective_parallelism(p, n) + p.overhead_per_thread * n


def speedup(t_base: float, t_n: float) -> float:
    if t_base <= 0 or t_n <= 0:
        raise ValueError(f"times must be positive, got {t_base}, {t_n}")
    return t_base / t_n


def _smt_tier(n: int, cores: int) -> int:
    if n <= cores:
        return 1
    if n <= 2 * cores:
        return 2
    return 3


def _solve_linear(observations: dict[int, float], cores: int,
                  smt2: float, smt4: float) -> tuple[np.ndarray, float]:
    ns = sorted(observations)
    probe = CostModelParams(0.0, 0.0, 0.0, smt2, smt4, cores)
    rows = np.array([[1.0, 1.0 / effective_parallelism(probe, n), float(n)] for n in ns])
    y = np.array([observations[n] for n in ns])
    a = rows / y[:, None]
    x, residual = nnls(a, np.ones(len(ns)))
    return x, residual


def fit_cost_model(observations: Mapping[int, float], cores: int) -> CostModelParams:
    """Least-squares (relative error) fit over a deterministic efficiency grid."""
    obs = {int(n): float(t) for n, t in observations.items()}
    if len(obs) < 3:
        raise DegenerateFit(f"need >= 3 observations, got {len(obs)}")
    if any(t <= 0 for t in obs.values()):
        raise DegenerateFit("observed times must be positive")
    tiers = {_smt_tier(n, cores) for n in obs}
    if len(tiers) < 2:
        raise DegenerateFit(
            f"observations span a single SMT tier (cores={cores}, threads={sorted(obs)})",
            residuals={n: 0.0 for n in obs},
        )

    def search(grid2: Iterable[float], grid4_for: Callable[[float], Iterable[float]]):
        best = None
        for raw2 in grid2:
            s2 = min(max(float(raw2), 0.0), 1.0)
            for raw4 in grid4_for(s2):
                s4 = min(max(float(raw4), 0.0), s2)
                x, residual = _solve_linear(obs, cores, s2, s4)
                if best is None or residual < best[3] - 1e-15:
                    best = (s2, s4, x, residual)
        assert best is not None
        return best

    step = 0.05
    s2, s4, x, _ = search(
        np.arange(0.0, 1.0 + 1e-12, step),
        lambda hi: np.arange(0.0, hi + 1e-12, step) if hi > 0 else (0.0,),
    )
    for _ in range(3):  # shrink the grid around the valley found so far
        window, step = step, step / 10.0
        s2, s4, x, _ = search(
            np.arange(s2 - window, s2 + window + 1e-12, step),
            lambda hi: np.arange(s4 - window, min(hi, s4 + window) + 1e-12, step)
            if hi >= s4 - window else (0.0,),
        )
    return CostModelParams(
        t_serial=float(x[0]),
        work_parallel=float(x[1]),
        overhead_per_thread=float(x[2]),
        smt2_eff=s2,
        smt4_eff=s4,
        cores=cores,
    )


class TrialExecutor(Protocol):
    def run(self, candidate: int) -> TrialResult: ...


class SyntheticExecutor:
    """Produces trial results straight from per-region cost models."""

    def __init__(self, models: Mapping[int, CostModelParams]):
        if not models:
            raise ValueError("at least one region model required")
        self.models = dict(models)

    def run(self, candidate: int) -> TrialResult:
        means = {rid: model_time(p, candidate) for rid, p in self.models.items()}
        return TrialResult(candidate=candidate, mean_time=means, command="<synthetic>")


class CommandExecutor:
    """Runs a shell command template once per candidate.

    The template may use {threads} and {out}; the child also sees
    PDTTAGGER_PLAN pointing at a default-only plan for the candidate and
    PDTTAGGER_OUT for the result directory.
    """

    def __init__(self, template: str, workdir: str | Path | None = None,
                 env: Mapping[str, str] | None = None):
        self.template = template
        self.workdir = Path(workdir) if workdir else None
        self.env = dict(env if env is not None else os.environ)

    def run(self, candidate: int) -> TrialResult:
        out_dir = Path(tempfile.mkdtemp(prefix=f"pdttrial-{candidate}-"))
        plan_path = out_dir / "trial.plan"
        plan_path.write_text(emit_plan(ThreadPlan(default_threads=candidate)))
        command = self.template.replace("{threads}", str(candidate)).replace("{out}", str(out_dir))
        env = dict(self.env)
        env[ENV_PLAN] = str(plan_path)
        env[ENV_OUT] = str(out_dir)
        env["OMP_NUM_THREADS"] = str(candidate)
        proc = subprocess.run(command, shell=True, cwd=self.workdir, env=env,
                              capture_output=True, text=True)
        if proc.returncode != 0:
            raise TrialFailed(
                f"candidate {candidate}: command exited {proc.returncode}: {proc.stderr.strip()}"
            )
        result_path = out_dir / RESULT_BASENAME
        if not result_path.exists():
            raise TrialFailed(f"candidate {candidate}: no result file at {result_path}")
        result = parse_result(result_path.read_text())
        means: dict[int, float] = {}
        totals: dict[int, tuple[float, int]] = {}
        for profile in result.profiles.values():
            t, v = totals.get(profile.region_id, (0.0, 0))
            totals[profile.region_id] = (t + profile.total_ns, v + profile.visits)
        for rid, (total_ns, visits) in totals.items():
            if visits:
                means[rid] = total_ns / visits / 1e9
        return TrialResult(
            candidate=candidate,
            mean_time=means,
            command=command,
            timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"),
        )


def run_trials(executor: TrialExecutor, candidates: Iterable[int]) -> list[TrialResult]:
    """One trial per candidate; failed candidates are excluded with a warning."""
    trials: list[TrialResult] = []
    for candidate in validate_candidates(candidates):
        try:
            trials.append(executor.run(candidate))
        except TrialFailed as exc:
            log.warning("excluding candidate %d: %s", candidate, exc)
    return trials


def build_plan(trials: list[TrialResult]) -> ThreadPlan:
    """Per-region argmin of mean times; ties break toward fewer threads."""
    if len(trials) < 2:
        raise InsufficientTrials(f"need >= 2 successful trials, got {len(trials)}")
    by_candidate = {t.candidate: t for t in sorted(trials, key=lambda t: t.candidate)}
    coverage: dict[int, int] = {}
    for trial in by_candidate.values():
        for rid in trial.mean_time:
            coverage[rid] = coverage.get(rid, 0) + 1
    eligible = {rid for rid, n in coverage.items() if n >= 2}
    for rid in sorted(set(coverage) - eligible):
        log.warning("region %d measured in fewer than 2 trials; excluded from overrides", rid)
    if not eligible:
        raise InsufficientTrials("no region measured in >= 2 trials")

    overrides: dict[int, int] = {}
    for rid in sorted(eligible):
        best_candidate = None
        best_time = None
        for candidate, trial in by_candidate.items():
            if rid not in trial.mean_time:
                continue
            t = trial.mean_time[rid]
            if best_time is None or t < best_time:
                best_time = t
                best_candidate = candidate
        overrides[rid] = best_candidate

    common = [rid for rid in sorted(eligible)
              if all(rid in t.mean_time for t in by_candidate.values())]
    default = None
    best_sum = None
    if common:
        for candidate, trial in by_candidate.items():
            total = sum(trial.mean_time[rid] for rid in common)
            if best_sum is None or total < best_sum:
                best_sum = total
                default = candidate
    else:
        default = min(by_candidate)
        log.warning("no region covered by every trial; defaulting to smallest candidate")
    return ThreadPlan(default_threads=default, overrides=overrides)


def emit_trials(trials: list[TrialResult]) -> str:
    """Trial database: a result-style stanza per region under each candidate."""
    lines = ["pdttrials v1"]
    for trial in trials:
        lines.append(f"trial {trial.candidate}")
        for rid in sorted(trial.mean_time):
            s = f"{trial.mean_time[rid]:.6f}"
            lines.append(
                f"region {rid} threads {trial.candidate} visits 1 "
                f"total {s} mean {s} min {s} max {s}"
            )
    return "\n".join(lines) + "\n"


def parse_trials(text: str) -> list[TrialResult]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["pdttrials", "v1"]:
        raise TrialsSyntax("bad trials header")
    trials: list[TrialResult] = []
    candidate = None
    means: dict[int, float] = {}

    def flush():
        if candidate is not None:
            trials.append(TrialResult(candidate=candidate, mean_time=dict(means)))

    for raw in lines[1:]:
        fields = raw.split()
        if fields[0] == "trial":
            flush()
            try:
                candidate = int(fields[1])
            except (IndexError, ValueError) as exc:
                raise TrialsSyntax(f"bad trial header {raw!r}") from exc
            means = {}
        elif fields[0] == "region":
            if candidate is None:
                raise TrialsSyntax("region line before any trial header")
            try:
                means[int(fields[1])] = float(fields[9])
            except (IndexError, ValueError) as exc:
                raise TrialsSyntax(f"bad region line {raw!r}") from exc
        else:
            raise TrialsSyntax(f"unrecognized line {raw!r}")
    flush()
    return trials


def emit_models(models: Mapping[int, CostModelParams]) -> str:
    if not models:
        raise ValueError("no models to emit")
    cores = {p.cores for p in models.values()}
    if len(cores) != 1:
        raise ValueError(f"models disagree on core count: {sorted(cores)}")
    lines = [f"pdtmodel v1 {cores.pop()}"]
    for rid in sorted(models):
        p = models[rid]
        lines.append(
            f"{rid} {p.t_serial!r} {p.work_parallel!r} {p.overhead_per_thread!r} "
            f"{p.smt2_eff!r} {p.smt4_eff!r}"
        )
    return "\n".join(lines) + "\n"


def parse_models(text: str) -> dict[int, CostModelParams]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ModelSyntax("empty model document")
    header = lines[0].split()
    if len(header) != 3 or header[:2] != ["pdtmodel", "v1"]:
        raise ModelSyntax(f"bad model header {lines[0]!r}")
    try:
        cores = int(header[2])
    except ValueError as exc:
        raise ModelSyntax(str(exc)) from exc
    models: dict[int, CostModelParams] = {}
    for raw in lines[1:]:
        fields = raw.split()
        if len(fields) != 6:
            raise ModelSyntax(f"expected 6 fields, got {raw!r}")
        try:
            rid = int(fields[0])
            t, w, o, s2, s4 = (float(v) for v in fields[1:])
        except ValueError as exc:
            raise ModelSyntax(f"bad model line {raw!r}") from exc
        models[rid] = CostModelParams(t, w, o, s2, s4, cores)
    return models


def trial_result_for_profiles(candidate: int, profiles: Iterable[RegionProfile]) -> TrialResult:
    """Summarize a finished run's profiles into one trial record."""
    means: dict[int, float] = {}
    for p in profiles:
        if p.visits:
            means[p.region_id] = p.total_ns / p.visits / 1e9
    return TrialResult(candidate=candidate, mean_time=means)
