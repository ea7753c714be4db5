"""Published SMT-scaling walltimes for five BOTS task-parallel kernels.

Measured on a 32-core, 4-way multithreaded node at 1, 32, 64, and 128
threads. These anchor cost-model calibration, tuner regression tests, and
the advisor's labeled training fixture.
"""

from __future__ import annotations

from .advisor import LabeledSample, SmtClass
from .counters import FeatureVector
from .tuner import TrialResult

REFERENCE_CORES = 32

SMT_CANDIDATES: tuple[int, ...] = (32, 64, 128)

#: kernel -> thread count -> walltime in seconds
BOTS_SMT_WALLTIMES: dict[str, dict[int, float]] = {
    "strassen": {1: 101.05, 32: 5.11, 64: 4.43, 128: 5.88},
    "nqueens": {1: 27.8, 32: 1.16, 64: 0.83, 128: 0.79},
    "sparselu": {1: 129.19, 32: 4.79, 64: 4.18, 128: 5.03},
    "health": {1: 96.54, 32: 3.97, 64: 3.7, 128: 4.8},
    "floorplan": {1: 12.22, 32: 0.55, 64: 0.58, 128: 0.79},
}

KERNEL_ORDER: tuple[str, ...] = tuple(BOTS_SMT_WALLTIMES)

#: stable region ids when the five kernels are treated as one-region programs
KERNEL_REGION_IDS: dict[str, int] = {name: i for i, name in enumerate(KERNEL_ORDER)}


def best_thread_count(kernel: str) -> int:
    """Measured argmin over the SMT candidate thread counts."""
    times = BOTS_SMT_WALLTIMES[kernel]
    return min(SMT_CANDIDATES, key=lambda n: (times[n], n))


def smt_class_for(kernel: str) -> SmtClass:
    """Class of the measured best multiplier (1x, 2x, or 4x the cores)."""
    return SmtClass(best_thread_count(kernel) // REFERENCE_CORES)


def reference_trials() -> list[TrialResult]:
    """The walltimes reshaped as one trial per candidate thread count."""
    trials = []
    for candidate in SMT_CANDIDATES:
        means = {
            KERNEL_REGION_IDS[name]: BOTS_SMT_WALLTIMES[name][candidate]
            for name in KERNEL_ORDER
        }
        trials.append(TrialResult(candidate=candidate, mean_time=means))
    return trials


#: synthetic but cleanly separable counter features for each kernel; the
#: labels come from the measured walltimes above
ADVISOR_FIXTURE_FEATURES: dict[str, FeatureVector] = {
    "strassen": FeatureVector(ipc=1.20, l2_mpki=9.0, branch_miss_rate=0.004,
                              mem_fraction=0.44, time_per_visit=4.43),
    "nqueens": FeatureVector(ipc=0.55, l2_mpki=1.2, branch_miss_rate=0.021,
                             mem_fraction=0.18, time_per_visit=0.79),
    "sparselu": FeatureVector(ipc=1.05, l2_mpki=12.5, branch_miss_rate=0.003,
                              mem_fraction=0.47, time_per_visit=4.18),
    "health": FeatureVector(ipc=1.45, l2_mpki=6.5, branch_miss_rate=0.008,
                            mem_fraction=0.38, time_per_visit=3.70),
    "floorplan": FeatureVector(ipc=2.60, l2_mpki=0.4, branch_miss_rate=0.012,
                               mem_fraction=0.22, time_per_visit=0.55),
}


def advisor_fixture() -> list[LabeledSample]:
    return [
        LabeledSample(features=ADVISOR_FIXTURE_FEATURES[name], label=smt_class_for(name))
        for name in KERNEL_ORDER
    ]
