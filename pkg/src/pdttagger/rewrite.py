"""Text rewriting: insert region hooks around selected constructs.

Every inserted line (and the tail appended to a modified pragma line)
carries a marker comment, so stripping is byte-exact and re-instrumenting
an already-instrumented file is detectable.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Mapping

from .regions import PARALLEL_KINDS, Region, RegionKind, scan_details

DEFAULT_MARKER = "/* pdttag */"


class RewriteError(Exception):
    pass


class AlreadyInstrumented(RewriteError):
    pass


class RegionNotFound(RewriteError):
    pass


class ManifestSyntax(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"manifest line {lineno}: {message}")
        self.lineno = lineno


class DigestMismatch(RewriteError):
    pass


@dataclass(frozen=True)
class InstrumentationOptions:
    inject_thread_clause: bool = True
    marker_comment: str = DEFAULT_MARKER
    hook_prefix: str = "pdt"

    def __post_init__(self):
        if not self.marker_comment.strip():
            raise ValueError("marker_comment must be non-empty")
        if not re.fullmatch(r"[A-Za-z_]\w*", self.hook_prefix):
            raise ValueError(f"hook_prefix must be a C identifier, got {self.hook_prefix!r}")

    @property
    def header_name(self) -> str:
        return f"{self.hook_prefix}_hooks.h"


@dataclass(frozen=True)
class ManifestEntry:
    region_id: int
    kind: RegionKind
    file: str
    function: str
    pragma_line: int
    block_begin: int
    block_end: int

    @classmethod
    def from_region(cls, r: Region) -> "ManifestEntry":
        return cls(r.id, r.kind, r.file, r.function, r.pragma_line, r.block_begin, r.block_end)


@dataclass(frozen=True)
class RegionManifest:
    entries: tuple[ManifestEntry, ...] = ()
    source_digest: str = ""

    def region_ids(self) -> set[int]:
        return {e.region_id for e in self.entries}

    def by_id(self) -> dict[int, ManifestEntry]:
        return {e.region_id: e for e in self.entries}


def source_digest(sources: Mapping[str, str]) -> str:
    """Combined content hash over a set of original source files."""
    h = hashlib.sha256()
    for name in sorted(sources):
        h.update(name.encode())
        h.update(b"\0")
        h.update(hashlib.sha256(sources[name].encode()).hexdigest().encode())
        h.update(b"\n")
    return h.hexdigest()


def make_manifest(regions: list[Region], sources: Mapping[str, str]) -> RegionManifest:
    entries = tuple(ManifestEntry.from_region(r) for r in sorted(regions, key=lambda r: r.id))
    return RegionManifest(entries=entries, source_digest=source_digest(sources))


def instrument(
    source_text: str,
    selected: list[Region],
    opts: InstrumentationOptions = InstrumentationOptions(),
) -> tuple[str, RegionManifest]:
    """Insert begin/end hooks (and num_threads clauses) for `selected`.

    Returns the rewritten text and a manifest recording original line
    numbers. All untouched bytes are preserved; `strip` inverts exactly.
    """
    if opts.marker_comment in source_text:
        raise AlreadyInstrumented("marker already present in source")
    if not selected:
        return source_text, RegionManifest(entries=(), source_digest=source_digest({}))

    file = selected[0].file
    details = {d.region.pragma_line: d for d in scan_details(source_text, file)}
    lines = source_text.splitlines(keepends=True)

    # insertions: (line_index_before_which_to_insert_0based, order, text)
    # order ranks same-position items: inner region ends first, then begins.
    insertions: list[tuple[int, int, str]] = []
    clause_bearing: dict[int, str] = {}  # 0-based physical line -> appended suffix

    for region in selected:
        detail = details.get(region.pragma_line)
        if detail is None or (
            detail.region.kind != region.kind
            or detail.region.block_begin != region.block_begin
            or detail.region.block_end != region.block_end
        ):
            raise RegionNotFound(f"region id {region.id} no longer matches the source text")
        indent = _leading_ws(lines[region.pragma_line - 1])
        begin = f"{indent}{opts.hook_prefix}_region_begin({region.id}); {opts.marker_comment}\n"
        end = f"{indent}{opts.hook_prefix}_region_end({region.id}); {opts.marker_comment}\n"
        insertions.append((region.pragma_line - 1, 10**9 - region.block_begin, begin))
        insertions.append((region.block_end, -region.block_begin, end))
        if opts.inject_thread_clause and region.kind in PARALLEL_KINDS:
            suffix = (
                f" num_threads({opts.hook_prefix}_region_threads({region.id}))"
                f" {opts.marker_comment}"
            )
            clause_bearing[detail.pragma_end_line - 1] = suffix

    include = f'#include "{opts.header_name}" {opts.marker_comment}\n'
    insertions.append((0, -(10**9), include))

    out: list[str] = []
    insertions.sort(key=lambda item: (item[0], item[1]))
    by_pos: dict[int, list[str]] = {}
    for pos, _, text in insertions:
        by_pos.setdefault(pos, []).append(text)

    for idx in range(len(lines) + 1):
        for text in by_pos.get(idx, ()):
            if idx == len(lines) and lines and not lines[-1].endswith("\n"):
                # gluing after a final newline-less line: emit "\n" + line,
                # keeping the file without a trailing newline
                if out and not out[-1].endswith("\n"):
                    out.append("\n" + text.rstrip("\n"))
                else:
                    out.append(text.rstrip("\n"))
            else:
                out.append(text)
        if idx < len(lines):
            line = lines[idx]
            if idx in clause_bearing:
                if line.endswith("\n"):
                    line = line[:-1] + clause_bearing[idx] + "\n"
                else:
                    line = line + clause_bearing[idx]
            out.append(line)

    manifest = make_manifest(selected, {file: source_text})
    return "".join(out), manifest


def _leading_ws(line: str) -> str:
    return line[: len(line) - len(line.lstrip())]


def strip(instrumented_text: str, opts: InstrumentationOptions = InstrumentationOptions()) -> str:
    """Remove everything `instrument` added; identity on unmarked text."""
    marker = re.escape(opts.marker_comment)
    clause_re = re.compile(
        rf" num_threads\({re.escape(opts.hook_prefix)}_region_threads\(\d+\)\) {marker}$"
    )
    out: list[str] = []
    lines = instrumented_text.splitlines(keepends=True)
    for i, line in enumerate(lines):
        if opts.marker_comment not in line:
            out.append(line)
            continue
        body = line[:-1] if line.endswith("\n") else line
        m = clause_re.search(body)
        if m:
            kept = body[: m.start()] + ("\n" if line.endswith("\n") else "")
            out.append(kept)
            continue
        # whole line was inserted: drop it; if it was glued after a final
        # newline-less line, also drop the glue newline
        if i == len(lines) - 1 and not line.endswith("\n") and out and out[-1].endswith("\n"):
            out[-1] = out[-1][:-1]
    return "".join(out)


def emit_manifest(manifest: RegionManifest) -> str:
    lines = [f"pdtmanifest v1 {manifest.source_digest}"]
    for e in sorted(manifest.entries, key=lambda e: e.region_id):
        lines.append(
            f"{e.region_id}\t{e.kind}\t{e.file}\t{e.function}\t"
            f"{e.pragma_line}\t{e.block_begin}\t{e.block_end}"
        )
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> RegionManifest:
    lines = text.splitlines()
    if not lines:
        raise ManifestSyntax(1, "empty document")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "pdtmanifest" or header[1] != "v1":
        raise ManifestSyntax(1, f"bad header {lines[0]!r}")
    digest = header[2]
    entries = []
    last_id = -1
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 7:
            raise ManifestSyntax(lineno, f"expected 7 tab-separated fields, got {len(fields)}")
        try:
            rid = int(fields[0])
            kind = RegionKind(fields[1])
            pragma_line, block_begin, block_end = (int(fields[k]) for k in (4, 5, 6))
        except ValueError as exc:
            raise ManifestSyntax(lineno, str(exc)) from exc
        if rid <= last_id:
            raise ManifestSyntax(lineno, f"ids not ascending at {rid}")
        last_id = rid
        entries.append(
            ManifestEntry(rid, kind, fields[2], fields[3], pragma_line, block_begin, block_end)
        )
    return RegionManifest(entries=tuple(entries), source_digest=digest)


def verify_manifest(manifest: RegionManifest, sources: Mapping[str, str]) -> None:
    """Raise DigestMismatch when `sources` are not the manifest's originals."""
    actual = source_digest(sources)
    if actual != manifest.source_digest:
        raise DigestMismatch(
            f"source digest {actual} does not match manifest {manifest.source_digest}"
        )
