"""Hardware-event measurement abstraction and derived feature metrics.

Real counter facilities are platform-specific; the deterministic synthetic
provider makes the whole pipeline testable at desk scale. Features are
ratios so downstream classification is insensitive to run length.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Protocol

CANONICAL_EVENTS: tuple[str, ...] = (
    "cycles",
    "instructions",
    "l2_misses",
    "branch_mispredictions",
    "loads",
    "stores",
)

FEATURE_ORDER: tuple[str, ...] = (
    "ipc",
    "l2_mpki",
    "branch_miss_rate",
    "mem_fraction",
    "time_per_visit",
)


class CounterError(Exception):
    pass


class WindowMisuse(CounterError):
    pass


class InsufficientCounters(CounterError):
    pass


def validate_events(events: Iterable[str]) -> tuple[str, ...]:
    """Check an event list: non-empty, no duplicates, canonical names."""
    out = tuple(events)
    if not out:
        raise CounterError("event set must not be empty")
    if len(set(out)) != len(out):
        raise CounterError(f"duplicate events in {out}")
    unknown = [e for e in out if e not in CANONICAL_EVENTS]
    if unknown:
        raise CounterError(f"unknown events {unknown}; canonical set is {CANONICAL_EVENTS}")
    return out


class CounterWindow(Protocol):
    events: tuple[str, ...]
    omitted: tuple[str, ...]

    def read(self) -> dict[str, int]: ...

    def close(self) -> None: ...


class CounterProvider(Protocol):
    supported_events: tuple[str, ...]

    def open(self, events: Iterable[str], *, region_id: int = 0,
             thread_count: int = 1) -> CounterWindow: ...


@dataclass(frozen=True)
class SyntheticCounterModel:
    """Per-visit event counts as a pure function of (region, threads, visit)."""

    cycles_per_visit: int = 100_000
    instr_per_visit: int = 150_000
    l2_miss_rate: float = 0.002
    branch_miss_rate: float = 0.001
    load_fraction: float = 0.25
    store_fraction: float = 0.10

    def counts(self, region_id: int, thread_count: int, visit_index: int) -> dict[str, int]:
        # configured rates are honored exactly; the arguments exist so
        # richer models can vary counts per visit without interface changes
        del region_id, thread_count, visit_index
        cycles = self.cycles_per_visit
        instructions = self.instr_per_visit
        return {
            "cycles": cycles,
            "instructions": instructions,
            "l2_misses": int(instructions * self.l2_miss_rate),
            "branch_mispredictions": int(instructions * self.branch_miss_rate),
            "loads": int(instructions * self.load_fraction),
            "stores": int(instructions * self.store_fraction),
        }


class _SyntheticWindow:
    def __init__(self, counts: dict[str, int], events: tuple[str, ...], omitted: tuple[str, ...]):
        self._counts = {e: counts[e] for e in events}
        self.events = events
        self.omitted = omitted
        self._closed = False

    def read(self) -> dict[str, int]:
        if self._closed:
            raise WindowMisuse("read after close")
        return dict(self._counts)

    def close(self) -> None:
        if self._closed:
            raise WindowMisuse("window closed twice")
        self._closed = True


class SyntheticCounterProvider:
    """Bit-stable counter source driven by per-region models."""

    supported_events = CANONICAL_EVENTS

    def __init__(self, models: dict[int, SyntheticCounterModel] | None = None,
                 default_model: SyntheticCounterModel = SyntheticCounterModel()):
        self._models = dict(models or {})
        self._default = default_model
        self._visit_index: dict[tuple[int, int], int] = {}
        self._lock = threading.Lock()

    def open(self, events: Iterable[str], *, region_id: int = 0,
             thread_count: int = 1) -> _SyntheticWindow:
        requested = tuple(events)
        usable = tuple(e for e in requested if e in self.supported_events)
        omitted = tuple(e for e in requested if e not in self.supported_events)
        if not usable:
            raise CounterError(f"no supported events in {requested}")
        with self._lock:
            key = (region_id, thread_count)
            idx = self._visit_index.get(key, 0)
            self._visit_index[key] = idx + 1
        model = self._models.get(region_id, self._default)
        return _SyntheticWindow(model.counts(region_id, thread_count, idx), usable, omitted)


@dataclass(frozen=True)
class FeatureVector:
    """Normalized counter metrics feeding the thread-count advisor."""

    ipc: float
    l2_mpki: float
    branch_miss_rate: float
    mem_fraction: float
    time_per_visit: float
    missing_events: frozenset[str] = frozenset()

    def as_tuple(self) -> tuple[float, ...]:
        return (self.ipc, self.l2_mpki, self.branch_miss_rate,
                self.mem_fraction, self.time_per_visit)

    def value(self, feature: str) -> float:
        return self.as_tuple()[FEATURE_ORDER.index(feature)]


def derive_features(profile) -> FeatureVector:
    """Compute ratio features from a RegionProfile's counter totals."""
    totals = profile.counter_totals
    cycles = totals.get("cycles", 0)
    instructions = totals.get("instructions", 0)
    if cycles <= 0 or instructions <= 0:
        raise InsufficientCounters(
            f"region {profile.region_id}: cycles and instructions required, got "
            f"cycles={cycles} instructions={instructions}"
        )
    missing = {e for e in ("l2_misses", "branch_mispredictions", "loads", "stores")
               if e not in totals}
    l2 = totals.get("l2_misses", 0)
    branch = totals.get("branch_mispredictions", 0)
    mem = totals.get("loads", 0) + totals.get("stores", 0)
    return FeatureVector(
        ipc=instructions / cycles,
        l2_mpki=1000.0 * l2 / instructions,
        branch_miss_rate=branch / instructions,
        mem_fraction=mem / instructions,
        time_per_visit=profile.mean_time_s,
        missing_events=frozenset(missing),
    )
