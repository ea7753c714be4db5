"""Region-visit measurement state machine, aggregation, and file output.

This is the reference implementation of the hook semantics: the C shim
used for compiled programs follows the same contract and emits the same
result-file format.
"""

from __future__ import annotations

import os
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .counters import CANONICAL_EVENTS, CounterProvider
from .rewrite import RegionManifest

RESULT_BASENAME = "pdtresult.txt"
VIZ_BASENAME = "pdtresult.viz"

ENV_PLAN = "PDTTAGGER_PLAN"
ENV_OUT = "PDTTAGGER_OUT"
ENV_VIZ = "PDTTAGGER_VIZ_OUTPUT"
ENV_HPM_VIZ = "HPM_VIZ_OUTPUT"


class PlanSyntax(ValueError):
    pass


class ResultSyntax(ValueError):
    def __init__(self, stanza: int, message: str):
        super().__init__(f"result stanza {stanza}: {message}")
        self.stanza = stanza


class IoFailure(OSError):
    pass


@dataclass(frozen=True)
class ThreadPlan:
    default_threads: int = 1
    overrides: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.default_threads < 1:
            raise ValueError(f"default_threads must be >= 1, got {self.default_threads}")
        for rid, n in self.overrides.items():
            if n < 1:
                raise ValueError(f"override for region {rid} must be >= 1, got {n}")

    def threads_for(self, region_id: int) -> int:
        return self.overrides.get(region_id, self.default_threads)


def emit_plan(plan: ThreadPlan) -> str:
    lines = [f"pdtplan v1 {plan.default_threads}"]
    for rid in sorted(plan.overrides):
        lines.append(f"{rid} {plan.overrides[rid]}")
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> ThreadPlan:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PlanSyntax("empty plan document")
    header = lines[0].split()
    if len(header) != 3 or header[:2] != ["pdtplan", "v1"]:
        raise PlanSyntax(f"bad plan header {lines[0]!r}")
    try:
        default = int(header[2])
        overrides = {}
        for ln in lines[1:]:
            rid_s, n_s = ln.split()
            overrides[int(rid_s)] = int(n_s)
    except ValueError as exc:
        raise PlanSyntax(f"bad plan line: {exc}") from exc
    return ThreadPlan(default_threads=default, overrides=overrides)


@dataclass(frozen=True)
class VisitRecord:
    region_id: int
    thread_count_used: int
    wall_time_ns: int
    counters: Mapping[str, int] = field(default_factory=dict)


@dataclass
class RegionProfile:
    region_id: int
    thread_count: int
    visits: int = 0
    total_ns: int = 0
    min_ns: int = 0
    max_ns: int = 0
    counter_totals: dict[str, int] = field(default_factory=dict)

    @property
    def mean_ns(self) -> float:
        return self.total_ns / self.visits if self.visits else 0.0

    @property
    def mean_time_s(self) -> float:
        return self.mean_ns / 1e9

    def fold(self, record: VisitRecord) -> None:
        if self.visits == 0:
            self.min_ns = self.max_ns = record.wall_time_ns
        else:
            self.min_ns = min(self.min_ns, record.wall_time_ns)
            self.max_ns = max(self.max_ns, record.wall_time_ns)
        self.visits += 1
        self.total_ns += record.wall_time_ns
        for event, count in record.counters.items():
            self.counter_totals[event] = self.counter_totals.get(event, 0) + count


@dataclass
class RunResult:
    run_id: str
    default_threads: int
    profiles: dict[tuple[int, int], RegionProfile] = field(default_factory=dict)
    unbalanced_regions: list[int] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def sorted_profiles(self) -> list[RegionProfile]:
        return [self.profiles[k] for k in sorted(self.profiles)]


class VisitToken:
    __slots__ = ("region_id", "thread_count", "thread_ident", "start_ns", "window",
                 "closed", "stack")

    def __init__(self, region_id: int, thread_count: int, thread_ident: int, window, stack):
        self.region_id = region_id
        self.thread_count = thread_count
        self.thread_ident = thread_ident
        self.window = window
        self.stack = stack
        self.closed = False
        self.start_ns = 0


class ProfileRuntime:
    """Thread-safe begin/end bookkeeping with per-thread nesting stacks."""

    def __init__(
        self,
        manifest: RegionManifest | None = None,
        plan: ThreadPlan | None = None,
        provider: CounterProvider | None = None,
        events: Iterable[str] = CANONICAL_EVENTS,
        run_id: str | None = None,
        clock=time.monotonic_ns,
    ):
        self.manifest = manifest
        self.plan = plan or ThreadPlan()
        self.provider = provider
        self.events = tuple(events)
        self.run_id = run_id or f"{time.time_ns():016x}"
        self._clock = clock
        self._known = manifest.region_ids() if manifest is not None else None
        self._profiles: dict[tuple[int, int], RegionProfile] = {}
        self._lock = threading.Lock()
        self._local = threading.local()
        self._diagnostics: list[str] = []
        self._unbalanced: set[int] = set()
        self._unknown_reported: set[int] = set()
        self._omitted_reported: set[str] = set()
        self._open_tokens: set[VisitToken] = set()

    @classmethod
    def from_env(cls, manifest: RegionManifest | None = None,
                 provider: CounterProvider | None = None,
                 env: Mapping[str, str] = os.environ) -> "ProfileRuntime":
        plan = ThreadPlan()
        plan_path = env.get(ENV_PLAN)
        if plan_path:
            plan = parse_plan(Path(plan_path).read_text())
        return cls(manifest=manifest, plan=plan, provider=provider)

    def _stack(self) -> list[VisitToken]:
        stack = getattr(self._local, "stack", None)
        if stack is None:
            stack = []
            self._local.stack = stack
        return stack

    def _diag(self, message: str) -> None:
        with self._lock:
            self._diagnostics.append(message)

    def region_threads(self, region_id: int) -> int:
        return self.plan.threads_for(region_id)

    def region_begin(self, region_id: int) -> VisitToken:
        if self._known is not None and region_id not in self._known:
            with self._lock:
                if region_id not in self._unknown_reported:
                    self._unknown_reported.add(region_id)
                    self._diagnostics.append(f"UnknownRegion: id {region_id} not in manifest")
        window = None
        if self.provider is not None:
            threads = self.region_threads(region_id)
            window = self.provider.open(self.events, region_id=region_id, thread_count=threads)
            if window.omitted:
                with self._lock:
                    for event in window.omitted:
                        if event not in self._omitted_reported:
                            self._omitted_reported.add(event)
                            self._diagnostics.append(f"UnsupportedEvent: {event}")
        stack = self._stack()
        token = VisitToken(
            region_id=region_id,
            thread_count=self.region_threads(region_id),
            thread_ident=threading.get_ident(),
            window=window,
            stack=stack,
        )
        stack.append(token)
        with self._lock:
            self._open_tokens.add(token)
        token.start_ns = self._clock()
        return token

    def region_end(self, token: VisitToken) -> VisitRecord | None:
        end_ns = self._clock()
        if token.closed:
            self._diag(f"TokenReuse: region {token.region_id}")
            return None
        token.closed = True
        if token.thread_ident != threading.get_ident():
            self._diag(f"CrossThreadEnd: region {token.region_id}")
        counters: dict[str, int] = {}
        if token.window is not None:
            counters = token.window.read()
            token.window.close()
        stack = token.stack
        if stack and stack[-1] is token:
            stack.pop()
        elif token in stack:
            self._diag(f"ImbalanceDiagnostic: region {token.region_id} ended out of LIFO order")
            stack.remove(token)
            self._unbalanced.add(token.region_id)
        with self._lock:
            self._open_tokens.discard(token)
        record = VisitRecord(
            region_id=token.region_id,
            thread_count_used=token.thread_count,
            wall_time_ns=max(end_ns - token.start_ns, 0),
            counters=counters,
        )
        key = (token.region_id, token.thread_count)
        with self._lock:
            profile = self._profiles.get(key)
            if profile is None:
                profile = RegionProfile(region_id=token.region_id, thread_count=token.thread_count)
                self._profiles[key] = profile
            profile.fold(record)
        return record

    def end_region(self, region_id: int) -> VisitRecord | None:
        """C-shim style end: close the innermost open visit on this thread."""
        stack = self._stack()
        if not stack:
            self._diag(f"ImbalanceDiagnostic: end({region_id}) without open begin")
            with self._lock:
                self._unbalanced.add(region_id)
            return None
        top = stack[-1]
        if top.region_id != region_id:
            self._diag(
                f"ImbalanceDiagnostic: end({region_id}) while region {top.region_id} is open"
            )
            self._unbalanced.add(region_id)
        return self.region_end(top)

    def open_visits(self) -> int:
        # only visible for the calling thread's stack; used after joins
        return len(self._stack())

    def snapshot(self) -> RunResult:
        with self._lock:
            result = RunResult(
                run_id=self.run_id,
                default_threads=self.plan.default_threads,
                profiles={k: RegionProfile(
                    region_id=p.region_id,
                    thread_count=p.thread_count,
                    visits=p.visits,
                    total_ns=p.total_ns,
                    min_ns=p.min_ns,
                    max_ns=p.max_ns,
                    counter_totals=dict(p.counter_totals),
                ) for k, p in self._profiles.items()},
                unbalanced_regions=sorted(self._unbalanced),
                diagnostics=list(self._diagnostics),
            )
        return result

    def finalize(self, output_dir: str | Path | None = None,
                 env: Mapping[str, str] = os.environ) -> list[Path]:
        with self._lock:
            leftover = list(self._open_tokens)
            self._open_tokens.clear()
        for token in leftover:
            self._diag(f"ImbalanceDiagnostic: region {token.region_id} still open at finalize")
            self._unbalanced.add(token.region_id)
            token.closed = True
        self._stack().clear()
        return write_outputs(self.snapshot(), output_dir, manifest=self.manifest, env=env)


def write_outputs(result: RunResult, output_dir: str | Path | None = None,
                  manifest: RegionManifest | None = None,
                  env: Mapping[str, str] = os.environ) -> list[Path]:
    """Write the result file, plus the viz XML when the env toggle asks."""
    out_dir = Path(output_dir) if output_dir is not None else Path(env.get(ENV_OUT, "."))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out_dir}: {exc}") from exc
    written = [write_text_atomic(out_dir / RESULT_BASENAME, emit_result(result))]
    if env.get(ENV_VIZ) == "TRUE":
        include_counters = env.get(ENV_HPM_VIZ) == "yes"
        viz = emit_viz(result, manifest=manifest, include_counters=include_counters)
        written.append(write_text_atomic(out_dir / VIZ_BASENAME, viz))
    return written


def write_text_atomic(path: str | Path, text: str) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _fmt_s(ns: float) -> str:
    return f"{ns / 1e9:.6f}"


def _counter_order(events: Iterable[str]) -> list[str]:
    events = set(events)
    ordered = [e for e in CANONICAL_EVENTS if e in events]
    ordered.extend(sorted(events - set(CANONICAL_EVENTS)))
    return ordered


def emit_result(result: RunResult) -> str:
    lines = [f"pdtresult v1 {result.run_id} {result.default_threads}"]
    for p in result.sorted_profiles():
        lines.append(
            f"region {p.region_id} threads {p.thread_count} visits {p.visits} "
            f"total {_fmt_s(p.total_ns)} mean {_fmt_s(p.mean_ns)} "
            f"min {_fmt_s(p.min_ns)} max {_fmt_s(p.max_ns)}"
        )
        for event in _counter_order(p.counter_totals):
            lines.append(f"  counter {event} {p.counter_totals[event]}")
    return "\n".join(lines) + "\n"


def parse_result(text: str) -> RunResult:
    lines = text.splitlines()
    if not lines:
        raise ResultSyntax(0, "empty result document")
    header = lines[0].split()
    if len(header) != 4 or header[:2] != ["pdtresult", "v1"]:
        raise ResultSyntax(0, f"bad header {lines[0]!r}")
    try:
        default_threads = int(header[3])
    except ValueError as exc:
        raise ResultSyntax(0, str(exc)) from exc
    result = RunResult(run_id=header[2], default_threads=default_threads)
    stanza = 0
    current: RegionProfile | None = None
    for raw in lines[1:]:
        if not raw.strip():
            continue
        fields = raw.split()
        if fields[0] == "region":
            stanza += 1
            if len(fields) != 14 or fields[2] != "threads" or fields[4] != "visits" \
                    or fields[6] != "total" or fields[8] != "mean" \
                    or fields[10] != "min" or fields[12] != "max":
                raise ResultSyntax(stanza, f"malformed stanza line {raw!r}")
            try:
                rid = int(fields[1])
                threads = int(fields[3])
                visits = int(fields[5])
                total, _mean, mn, mx = (float(fields[k]) for k in (7, 9, 11, 13))
            except ValueError as exc:
                raise ResultSyntax(stanza, str(exc)) from exc
            current = RegionProfile(
                region_id=rid,
                thread_count=threads,
                visits=visits,
                total_ns=round(total * 1e9),
                min_ns=round(mn * 1e9),
                max_ns=round(mx * 1e9),
            )
            key = (rid, threads)
            if key in result.profiles:
                raise ResultSyntax(stanza, f"duplicate stanza for region {rid} threads {threads}")
            result.profiles[key] = current
        elif fields[0] == "counter":
            if current is None:
                raise ResultSyntax(stanza, "counter line before any region stanza")
            if len(fields) != 3:
                raise ResultSyntax(stanza, f"malformed counter line {raw!r}")
            try:
                current.counter_totals[fields[1]] = int(fields[2])
            except ValueError as exc:
                raise ResultSyntax(stanza, str(exc)) from exc
        else:
            raise ResultSyntax(stanza, f"unrecognized line {raw!r}")
    return result


def emit_viz(result: RunResult, manifest: RegionManifest | None = None,
             include_counters: bool = True) -> str:
    by_id = manifest.by_id() if manifest is not None else {}
    root = ET.Element("pdtviz", version="1")
    for p in result.sorted_profiles():
        entry = by_id.get(p.region_id)
        elem = ET.SubElement(
            root,
            "region",
            id=str(p.region_id),
            k=str(entry.kind) if entry else "",
            file=entry.file if entry else "",
            line=str(entry.pragma_line) if entry else "0",
            threads=str(p.thread_count),
        )
        ET.SubElement(
            elem,
            "time",
            visits=str(p.visits),
            total=_fmt_s(p.total_ns),
            mean=_fmt_s(p.mean_ns),
            min=_fmt_s(p.min_ns),
            max=_fmt_s(p.max_ns),
        )
        if include_counters:
            for event in _counter_order(p.counter_totals):
                ET.SubElement(elem, "counter", name=event, value=str(p.counter_totals[event]))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"
