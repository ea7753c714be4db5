"""Decision-tree advisor mapping counter features to an SMT multiplier.

Greedy top-down induction with Gini impurity and axis-aligned midpoint
thresholds. The candidate space is small enough that tests can check the
chosen split against exhaustive enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

from .counters import FEATURE_ORDER, FeatureVector


class AdvisorError(Exception):
    pass


class EmptyDataset(AdvisorError):
    pass


class TreeSyntax(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"tree line {lineno}: {message}")
        self.lineno = lineno


class DatasetSyntax(ValueError):
    pass


class SmtClass(IntEnum):
    """Best thread multiplier relative to the core count."""

    SMT1 = 1
    SMT2 = 2
    SMT4 = 4

    @property
    def multiplier(self) -> int:
        return int(self)


CLASS_ORDER: tuple[SmtClass, ...] = (SmtClass.SMT1, SmtClass.SMT2, SmtClass.SMT4)


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: SmtClass
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"sample weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class Leaf:
    label: SmtClass
    counts: tuple[float, float, float]  # weighted samples per class, CLASS_ORDER


@dataclass(frozen=True)
class Split:
    feature: str
    threshold: float
    left: "Leaf | Split"
    right: "Leaf | Split"


@dataclass(frozen=True)
class DecisionTree:
    root: Leaf | Split
    max_depth: int
    min_samples_leaf: int

    def depth(self) -> int:
        def walk(node, d):
            if isinstance(node, Leaf):
                return d
            return max(walk(node.left, d + 1), walk(node.right, d + 1))
        return walk(self.root, 0)


def gini(weights_by_class: Sequence[float]) -> float:
    total = sum(weights_by_class)
    if total <= 0:
        return 0.0
    return 1.0 - sum((w / total) ** 2 for w in weights_by_class)


def _class_weights(samples: Sequence[LabeledSample]) -> tuple[float, float, float]:
    weights = [0.0, 0.0, 0.0]
    for s in samples:
        weights[CLASS_ORDER.index(s.label)] += s.weight
    return tuple(weights)


def _majority(samples: Sequence[LabeledSample]) -> SmtClass:
    weights = _class_weights(samples)
    best = max(weights)
    for cls, w in zip(CLASS_ORDER, weights):  # ties resolve to the lower class
        if w == best:
            return cls
    raise AssertionError("unreachable")


def split_candidates(values: Iterable[float]) -> list[float]:
    """Midpoints between consecutive distinct sorted values."""
    distinct = sorted(set(values))
    return [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]


def partition_impurity(samples: Sequence[LabeledSample], feature: str,
                       threshold: float) -> float | None:
    """Weighted Gini of the <=/> partition; None when a side is empty."""
    fi = FEATURE_ORDER.index(feature)
    left = [s for s in samples if s.features.as_tuple()[fi] <= threshold]
    right = [s for s in samples if s.features.as_tuple()[fi] > threshold]
    if not left or not right:
        return None
    wl = sum(s.weight for s in left)
    wr = sum(s.weight for s in right)
    total = wl + wr
    return (wl * gini(_class_weights(left)) + wr * gini(_class_weights(right))) / total


def best_split(samples: Sequence[LabeledSample],
               min_samples_leaf: int = 1) -> tuple[str, float, float] | None:
    """Minimum-impurity (feature, threshold, impurity); None if no candidate."""
    best: tuple[str, float, float] | None = None
    for fi, feature in enumerate(FEATURE_ORDER):
        values = [s.features.as_tuple()[fi] for s in samples]
        for threshold in split_candidates(values):
            left_n = sum(1 for v in values if v <= threshold)
            right_n = len(values) - left_n
            if left_n < min_samples_leaf or right_n < min_samples_leaf:
                continue
            impurity = partition_impurity(samples, feature, threshold)
            if impurity is None:
                continue
            if best is None or impurity < best[2] - 1e-15:
                best = (feature, threshold, impurity)
    return best


def train(samples: Sequence[LabeledSample], max_depth: int = 4,
          min_samples_leaf: int = 1) -> DecisionTree:
    """Greedy CART induction; ties in leaf majorities go to the lower class."""
    samples = list(samples)
    if not samples:
        raise EmptyDataset("cannot train on an empty dataset")
    if max_depth < 0 or min_samples_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_samples_leaf >= 1")

    def grow(subset: list[LabeledSample], depth: int) -> Leaf | Split:
        labels = {s.label for s in subset}
        if len(labels) == 1 or depth >= max_depth:
            return Leaf(label=_majority(subset), counts=_class_weights(subset))
        found = best_split(subset, min_samples_leaf)
        if found is None:
            return Leaf(label=_majority(subset), counts=_class_weights(subset))
        feature, threshold, _ = found
        fi = FEATURE_ORDER.index(feature)
        left = [s for s in subset if s.features.as_tuple()[fi] <= threshold]
        right = [s for s in subset if s.features.as_tuple()[fi] > threshold]
        return Split(
            feature=feature,
            threshold=threshold,
            left=grow(left, depth + 1),
            right=grow(right, depth + 1),
        )

    return DecisionTree(root=grow(samples, 0), max_depth=max_depth,
                        min_samples_leaf=min_samples_leaf)


def predict(tree: DecisionTree, features: FeatureVector) -> SmtClass:
    node = tree.root
    while isinstance(node, Split):
        if features.value(node.feature) <= node.threshold:
            node = node.left
        else:
            node = node.right
    return node.label


def recommend_threads(cls: SmtClass, cores: int) -> int:
    if cores < 1:
        raise ValueError(f"cores must be >= 1, got {cores}")
    return cls.multiplier * cores


def training_accuracy(tree: DecisionTree, samples: Sequence[LabeledSample]) -> float:
    if not samples:
        raise EmptyDataset("no samples")
    hits = sum(1 for s in samples if predict(tree, s.features) == s.label)
    return hits / len(samples)


def export_tree(tree: DecisionTree) -> str:
    lines = [f"pdttree v1 {tree.max_depth} {tree.min_samples_leaf}"]

    def walk(node: Leaf | Split) -> None:
        if isinstance(node, Leaf):
            counts = " ".join(repr(c) for c in node.counts)
            lines.append(f"leaf {node.label.name} {counts}")
        else:
            lines.append(f"node {node.feature} {node.threshold!r}")
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    return "\n".join(lines) + "\n"


def import_tree(text: str) -> DecisionTree:
    lines = text.splitlines()
    if not lines:
        raise TreeSyntax(1, "empty tree document")
    header = lines[0].split()
    if len(header) != 4 or header[:2] != ["pdttree", "v1"]:
        raise TreeSyntax(1, f"bad header {lines[0]!r}")
    try:
        max_depth, min_leaf = int(header[2]), int(header[3])
    except ValueError as exc:
        raise TreeSyntax(1, str(exc)) from exc

    pos = 1

    def parse_node() -> Leaf | Split:
        nonlocal pos
        if pos >= len(lines):
            raise TreeSyntax(len(lines), "unexpected end of document")
        lineno = pos + 1
        fields = lines[pos].split()
        pos += 1
        if not fields:
            raise TreeSyntax(lineno, "blank line inside tree")
        if fields[0] == "leaf":
            if len(fields) != 5:
                raise TreeSyntax(lineno, f"leaf needs class + 3 counts, got {lines[lineno - 1]!r}")
            try:
                label = SmtClass[fields[1]]
                counts = tuple(float(v) for v in fields[2:5])
            except (KeyError, ValueError) as exc:
                raise TreeSyntax(lineno, str(exc)) from exc
            return Leaf(label=label, counts=counts)
        if fields[0] == "node":
            if len(fields) != 3:
                raise TreeSyntax(lineno, f"node needs feature + threshold, got {lines[lineno - 1]!r}")
            feature = fields[1]
            if feature not in FEATURE_ORDER:
                raise TreeSyntax(lineno, f"unknown feature {feature!r}")
            try:
                threshold = float(fields[2])
            except ValueError as exc:
                raise TreeSyntax(lineno, str(exc)) from exc
            left = parse_node()
            right = parse_node()
            return Split(feature=feature, threshold=threshold, left=left, right=right)
        raise TreeSyntax(lineno, f"unrecognized line {lines[lineno - 1]!r}")

    root = parse_node()
    if pos != len([ln for ln in lines if ln.strip()]):
        extra = [ln for ln in lines[pos:] if ln.strip()]
        if extra:
            raise TreeSyntax(pos + 1, f"trailing content {extra[0]!r}")
    return DecisionTree(root=root, max_depth=max_depth, min_samples_leaf=min_leaf)


def save_dataset(samples: Sequence[LabeledSample]) -> str:
    lines = ["pdtdataset v1", "features " + " ".join(FEATURE_ORDER)]
    for s in samples:
        values = " ".join(repr(v) for v in s.features.as_tuple())
        lines.append(f"{values} {s.label.name}")
    return "\n".join(lines) + "\n"


def load_dataset(text: str) -> list[LabeledSample]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split() != ["pdtdataset", "v1"]:
        raise DatasetSyntax("bad dataset header")
    if len(lines) < 2 or lines[1].split() != ["features", *FEATURE_ORDER]:
        raise DatasetSyntax(f"features line must declare {' '.join(FEATURE_ORDER)}")
    samples = []
    for raw in lines[2:]:
        fields = raw.split()
        if len(fields) != len(FEATURE_ORDER) + 1:
            raise DatasetSyntax(f"expected {len(FEATURE_ORDER)} values + label, got {raw!r}")
        try:
            values = [float(v) for v in fields[:-1]]
            label = SmtClass[fields[-1]]
        except (KeyError, ValueError) as exc:
            raise DatasetSyntax(f"bad sample line {raw!r}: {exc}") from exc
        fv = FeatureVector(*values)
        samples.append(LabeledSample(features=fv, label=label))
    if not samples:
        raise DatasetSyntax("dataset has no samples")
    return samples
