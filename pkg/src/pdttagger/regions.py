"""Lexical scanner locating OpenMP parallel constructs in C sources.

The scanner is deliberately not a C parser: it masks comments and string
literals, tracks brace depth, and resolves the structured block following
each interesting pragma. Macro-generated pragmas are not supported.
"""

from __future__ import annotations

import bisect
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import PurePath

log = logging.getLogger(__name__)

_KEYWORDS_NOT_FUNCTIONS = {
    "if", "for", "while", "switch", "return", "sizeof", "do", "else",
    "case", "default", "goto", "typedef", "struct", "union", "enum",
}

_IDENT_CALL = re.compile(r"\b([A-Za-z_]\w*)\s*\(")
_PRAGMA_OMP = re.compile(r"^\s*#\s*pragma\s+omp\b(.*)$", re.DOTALL)
_WORD = re.compile(r"[A-Za-z_]\w*")


class ScanError(Exception):
    """Base class for source-scanning failures."""


class UnbalancedBraces(ScanError):
    def __init__(self, file: str, line: int):
        super().__init__(f"{file}:{line}: unbalanced braces")
        self.file = file
        self.line = line


class PragmaWithoutStatement(ScanError):
    def __init__(self, file: str, line: int):
        super().__init__(f"{file}:{line}: pragma has no following statement")
        self.file = file
        self.line = line


class ConfigError(ValueError):
    """Selection-config text could not be parsed."""


class MalformedRange(ConfigError):
    pass


class RegionKind(str, Enum):
    ParallelBlock = "ParallelBlock"
    ParallelFor = "ParallelFor"
    ParallelSections = "ParallelSections"
    Single = "Single"
    Task = "Task"

    def __str__(self) -> str:  # manifest/CLI field
        return self.value


#: Kinds that accept a num_threads clause.
PARALLEL_KINDS = frozenset(
    {RegionKind.ParallelBlock, RegionKind.ParallelFor, RegionKind.ParallelSections}
)


@dataclass(frozen=True)
class Region:
    """One detected OpenMP construct with its source extent."""

    id: int
    kind: RegionKind
    file: str
    pragma_line: int        # 1-based line of the `#pragma omp` directive
    block_begin: int        # first line of the structured block
    block_end: int          # last line of the structured block
    function: str = ""      # enclosing function, "" when unresolved


@dataclass(frozen=True)
class ScannedRegion:
    """Region plus rewrite-oriented positions (physical pragma extent)."""

    region: Region
    pragma_end_line: int    # last physical line of the (possibly continued) pragma


@dataclass(frozen=True)
class SelectionEntry:
    function: str
    file: str | None = None
    line_range: tuple[int, int] | None = None


@dataclass(frozen=True)
class InstrumentationConfig:
    entries: tuple[SelectionEntry, ...] = ()

    @property
    def selects_all(self) -> bool:
        return not self.entries


def mask_source(text: str) -> str:
    """Blank comments and string/char literal contents, preserving layout.

    Every masked character becomes a space; newlines survive so that line
    numbers and brace positions in the masked text match the original.
    Backslash-newline splices inside literals and line comments are honored.
    """
    out = list(text)
    i = 0
    n = len(text)
    CODE, LINE_COMMENT, BLOCK_COMMENT, STRING, CHAR = range(5)
    state = CODE
    quote = '"'
    while i < n:
        c = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if state == CODE:
            if c == "/" and nxt == "/":
                state = LINE_COMMENT
                out[i] = out[i + 1] = " "
                i += 2
                continue
            if c == "/" and nxt == "*":
                state = BLOCK_COMMENT
                out[i] = out[i + 1] = " "
                i += 2
                continue
            if c == '"' or c == "'":
                state = STRING if c == '"' else CHAR
                quote = c
                out[i] = " "
                i += 1
                continue
            i += 1
        elif state == LINE_COMMENT:
            if c == "\\" and nxt == "\n":
                out[i] = " "
                i += 2
                continue
            if c == "\n":
                state = CODE
                i += 1
                continue
            out[i] = " "
            i += 1
        elif state == BLOCK_COMMENT:
            if c == "*" and nxt == "/":
                state = CODE
                out[i] = out[i + 1] = " "
                i += 2
                continue
            out[i] = " " if c != "\n" else "\n"
            i += 1
        else:  # STRING or CHAR
            if c == "\\" and nxt:
                out[i] = " "
                out[i + 1] = " " if nxt != "\n" else "\n"
                i += 2
                continue
            if c == quote:
                state = CODE
                out[i] = " "
                i += 1
                continue
            out[i] = " " if c != "\n" else "\n"
            i += 1
    return "".join(out)


class _Text:
    """Masked source with line/offset bookkeeping and brace depths."""

    def __init__(self, source: str, file: str):
        self.file = file
        self.masked = mask_source(source)
        self.line_starts = [0]
        for m in re.finditer("\n", self.masked):
            self.line_starts.append(m.end())
        # depth[i] = brace depth before masked[i]
        depth = 0
        self.depth = [0] * (len(self.masked) + 1)
        for i, c in enumerate(self.masked):
            self.depth[i] = depth
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth < 0:
                    raise UnbalancedBraces(file, self.line_of(i))
        self.depth[len(self.masked)] = depth
        if depth != 0:
            raise UnbalancedBraces(file, self.line_of(max(len(self.masked) - 1, 0)))

    def line_of(self, offset: int) -> int:
        return bisect.bisect_right(self.line_starts, offset)

    def skip_ws(self, i: int) -> int:
        n = len(self.masked)
        while i < n and self.masked[i].isspace():
            i += 1
        return i

    def match_brace(self, i: int) -> int:
        """Index of the '}' matching the '{' at i."""
        depth = 0
        for j in range(i, len(self.masked)):
            c = self.masked[j]
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    return j
        raise UnbalancedBraces(self.file, self.line_of(i))

    def match_paren(self, i: int) -> int:
        depth = 0
        for j in range(i, len(self.masked)):
            c = self.masked[j]
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth == 0:
                    return j
        raise UnbalancedBraces(self.file, self.line_of(i))

    def logical_line_end(self, i: int) -> int:
        """End index (exclusive) of the backslash-continued line containing i."""
        n = len(self.masked)
        j = i
        while j < n:
            if self.masked[j] == "\n":
                if j > 0 and self.masked[j - 1] == "\\":
                    j += 1
                    continue
                return j
            j += 1
        return n

    def statement_end(self, i: int) -> int:
        """Index of the last character of the statement starting at i."""
        i = self.skip_ws(i)
        if i >= len(self.masked):
            raise PragmaWithoutStatement(self.file, self.line_of(len(self.masked) - 1))
        c = self.masked[i]
        if c == "{":
            return self.match_brace(i)
        if c == "#":
            # a directive glued to the statement (e.g. a nested pragma)
            end = self.logical_line_end(i)
            return self.statement_end(end)
        word = _WORD.match(self.masked, i)
        kw = word.group(0) if word else ""
        if kw in ("for", "while", "switch"):
            p = self.masked.index("(", word.end())
            close = self.match_paren(p)
            return self.statement_end(close + 1)
        if kw == "if":
            p = self.masked.index("(", word.end())
            close = self.match_paren(p)
            end = self.statement_end(close + 1)
            j = self.skip_ws(end + 1)
            tail = _WORD.match(self.masked, j)
            if tail and tail.group(0) == "else":
                return self.statement_end(tail.end())
            return end
        if kw == "do":
            body_end = self.statement_end(word.end())
            j = self.skip_ws(body_end + 1)
            tail = _WORD.match(self.masked, j)
            if not tail or tail.group(0) != "while":
                raise UnbalancedBraces(self.file, self.line_of(j))
            p = self.masked.index("(", tail.end())
            close = self.match_paren(p)
            semi = self.masked.index(";", close + 1)
            return semi
        # plain statement or declaration: runs to ';' at the starting depth
        paren = 0
        brace = 0
        for j in range(i, len(self.masked)):
            ch = self.masked[j]
            if ch == "(":
                paren += 1
            elif ch == ")":
                paren -= 1
            elif ch == "{":
                brace += 1
            elif ch == "}":
                brace -= 1
            elif ch == ";" and paren == 0 and brace == 0:
                return j
        raise PragmaWithoutStatement(self.file, self.line_of(i))


def _function_spans(t: _Text) -> list[tuple[int, int, str]]:
    """(open_brace_offset, close_brace_offset, name) of depth-0 definitions."""
    spans = []
    for m in _IDENT_CALL.finditer(t.masked):
        name = m.group(1)
        if name in _KEYWORDS_NOT_FUNCTIONS:
            continue
        if t.depth[m.start(1)] != 0:
            continue
        try:
            close = t.match_paren(m.end() - 1)
        except UnbalancedBraces:
            continue
        j = t.skip_ws(close + 1)
        if j < len(t.masked) and t.masked[j] == "{":
            spans.append((j, t.match_brace(j), name))
    return spans


def _pragma_kind(clauses: str) -> RegionKind | None:
    toks = clauses.split()
    if not toks:
        return None
    if toks[0] == "parallel":
        if len(toks) > 1 and toks[1] == "for":
            return RegionKind.ParallelFor
        if len(toks) > 1 and toks[1] == "sections":
            return RegionKind.ParallelSections
        return RegionKind.ParallelBlock
    if toks[0] == "single":
        return RegionKind.Single
    if toks[0] == "task":
        return RegionKind.Task
    return None


def scan_details(source_text: str, file: str, first_id: int = 0) -> list[ScannedRegion]:
    """Scan one file, returning regions plus physical pragma extents."""
    t = _Text(source_text, file)
    functions = _function_spans(t)
    found: list[ScannedRegion] = []
    rid = first_id
    i = 0
    n = len(t.masked)
    while i < n:
        line_start = i
        line_end = t.logical_line_end(i)
        logical = t.masked[line_start:line_end].replace("\\\n", " ")
        m = _PRAGMA_OMP.match(logical)
        if m:
            kind = _pragma_kind(m.group(1))
            if kind is not None:
                stmt_start = t.skip_ws(line_end)
                if stmt_start >= n:
                    raise PragmaWithoutStatement(file, t.line_of(line_start))
                stmt_end = t.statement_end(stmt_start)
                pragma_line = t.line_of(line_start)
                func = ""
                for open_b, close_b, name in functions:
                    if open_b < line_start <= close_b:
                        func = name
                region = Region(
                    id=rid,
                    kind=kind,
                    file=file,
                    pragma_line=pragma_line,
                    block_begin=t.line_of(stmt_start),
                    block_end=t.line_of(stmt_end),
                    function=func,
                )
                pragma_end = t.line_of(line_end - 1) if line_end > line_start else pragma_line
                found.append(ScannedRegion(region, pragma_end_line=pragma_end))
                rid += 1
        i = line_end + 1
    return found


def scan_source(source_text: str, file: str, first_id: int = 0) -> list[Region]:
    """All parallel/single/task constructs in ascending pragma-line order."""
    return [d.region for d in scan_details(source_text, file, first_id)]


def scan_files(sources: dict[str, str]) -> list[Region]:
    """Scan several files with run-unique ids ordered by (file, pragma_line)."""
    regions: list[Region] = []
    next_id = 0
    for file in sorted(sources):
        batch = scan_source(sources[file], file, first_id=next_id)
        regions.extend(batch)
        next_id += len(batch)
    return regions


def parse_config(text: str) -> InstrumentationConfig:
    """Parse region-selection text: `function [file [start-end]]` per line."""
    entries: list[SelectionEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) > 3:
            raise ConfigError(f"line {lineno}: expected at most 3 fields, got {len(fields)}")
        function = fields[0]
        file = fields[1] if len(fields) >= 2 else None
        line_range = None
        if len(fields) == 3:
            m = re.fullmatch(r"(\d+)-(\d+)", fields[2])
            if not m:
                raise MalformedRange(f"line {lineno}: range must be INT-INT, got {fields[2]!r}")
            start, end = int(m.group(1)), int(m.group(2))
            if start > end:
                raise MalformedRange(f"line {lineno}: range start {start} > end {end}")
            line_range = (start, end)
        entries.append(SelectionEntry(function=function, file=file, line_range=line_range))
    return InstrumentationConfig(entries=tuple(entries))


def _entry_matches(entry: SelectionEntry, region: Region) -> bool:
    if entry.function != region.function:
        return False
    if entry.file is not None and entry.file != PurePath(region.file).name:
        return False
    if entry.line_range is not None:
        lo, hi = entry.line_range
        if not (lo <= region.pragma_line <= hi):
            return False
    return True


def select_regions(regions: list[Region], config: InstrumentationConfig) -> list[Region]:
    """Filter regions by config; empty config selects everything."""
    if config.selects_all:
        return list(regions)
    selected = []
    matched_entries = set()
    for region in regions:
        for idx, entry in enumerate(config.entries):
            if _entry_matches(entry, region):
                matched_entries.add(idx)
                selected.append(region)
                break
    for idx, entry in enumerate(config.entries):
        if idx not in matched_entries:
            log.warning("selection entry matched no region: %s", entry)
    return selected
