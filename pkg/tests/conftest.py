from __future__ import annotations

import random
from pathlib import Path

import pytest

FIXTURE_DIR = Path(__file__).parent / "fixtures"
GOLDEN_DIR = FIXTURE_DIR / "golden"

FIXTURE_NAMES = sorted(p.name for p in FIXTURE_DIR.glob("*.c"))


def fixture_text(name: str) -> str:
    return (FIXTURE_DIR / name).read_text()


def golden_text(name: str) -> str:
    return (GOLDEN_DIR / name).read_text()


@pytest.fixture
def sparselu_source() -> str:
    return fixture_text("sparselu_mini.c")


class SourceBuilder:
    """Random but valid-by-construction C-ish sources with OpenMP pragmas."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.lines: list[str] = []
        self.counter = 0

    def _name(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("    " * depth + text)

    def simple_stmt(self, depth: int) -> None:
        choice = self.rng.random()
        if choice < 0.6:
            self.emit(depth, f"x += {self.rng.randrange(100)};")
        elif choice < 0.8:
            self.emit(depth, f"helper(x, {self.rng.randrange(10)});")
        else:
            self.emit(depth, f"int {self._name('v')} = x * {self.rng.randrange(5)};")

    def block(self, depth: int, budget: int) -> None:
        self.emit(depth, "{")
        for _ in range(self.rng.randrange(1, 3)):
            self.item(depth + 1, budget - 1)
        self.emit(depth, "}")

    def for_loop(self, depth: int, budget: int) -> None:
        v = self._name("i")
        self.emit(depth, f"for (int {v} = 0; {v} < 10; {v}++)")
        if budget > 0 and self.rng.random() < 0.5:
            self.block(depth, budget)
        else:
            self.simple_stmt(depth + 1)

    def comment_with_pragma(self, depth: int) -> None:
        if self.rng.random() < 0.5:
            self.emit(depth, "/* ignore this: #pragma omp parallel */")
        else:
            self.emit(depth, "// #pragma omp task must not be scanned")

    def pragma_construct(self, depth: int, budget: int) -> None:
        kind = self.rng.choice(["parallel", "parallel for", "single", "task"])
        if kind == "parallel for":
            if self.rng.random() < 0.3:
                self.emit(depth, "#pragma omp parallel \\")
                self.emit(depth, "    for")
            else:
                self.emit(depth, "#pragma omp parallel for")
            self.for_loop(depth, budget)
            return
        clauses = ""
        if kind == "parallel" and self.rng.random() < 0.4:
            clauses = " private(x)"
        self.emit(depth, f"#pragma omp {kind}{clauses}")
        roll = self.rng.random()
        if budget > 0 and roll < 0.5:
            self.block(depth, budget)
        elif budget > 0 and roll < 0.65 and kind != "task":
            self.pragma_construct(depth, budget - 1)  # directly nested construct
        else:
            self.simple_stmt(depth + 1)

    def item(self, depth: int, budget: int) -> None:
        roll = self.rng.random()
        if budget <= 0 or roll < 0.35:
            self.simple_stmt(depth)
        elif roll < 0.55:
            self.pragma_construct(depth, budget - 1)
        elif roll < 0.7:
            self.block(depth, budget - 1)
        elif roll < 0.8:
            self.for_loop(depth, budget - 1)
        elif roll < 0.9:
            self.emit(depth, f"if (x > {self.rng.randrange(50)})")
            self.block(depth, budget - 1)
        else:
            self.comment_with_pragma(depth)

    def function(self, budget: int) -> None:
        name = self._name("fn")
        self.emit(0, f"int {name}(int x) {{")
        for _ in range(self.rng.randrange(1, 4)):
            self.item(1, budget)
        self.emit(1, "return x;")
        self.emit(0, "}")
        self.lines.append("")

    def build(self) -> str:
        self.lines.append('static const char *tag = "#pragma omp single in a string";')
        self.lines.append("extern void helper(int, int);")
        self.lines.append("")
        for _ in range(self.rng.randrange(1, 4)):
            self.function(budget=self.rng.randrange(2, 5))
        text = "\n".join(self.lines)
        if self.rng.random() < 0.85:
            text += "\n"
        return text


def random_source(seed: int) -> str:
    return SourceBuilder(random.Random(seed)).build()
