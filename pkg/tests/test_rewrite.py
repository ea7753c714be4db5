from __future__ import annotations

import dataclasses

import pytest

from pdttagger.regions import RegionKind, scan_source
from pdttagger.rewrite import (
    AlreadyInstrumented,
    DigestMismatch,
    InstrumentationOptions,
    ManifestSyntax,
    RegionManifest,
    RegionNotFound,
    emit_manifest,
    instrument,
    make_manifest,
    parse_manifest,
    strip,
    verify_manifest,
)

from conftest import FIXTURE_NAMES, fixture_text, golden_text

OPTS = InstrumentationOptions()


def instrument_fixture(name: str, **kwargs):
    text = fixture_text(name)
    regions = scan_source(text, name)
    opts = InstrumentationOptions(**kwargs) if kwargs else OPTS
    return instrument(text, regions, opts)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_golden_outputs(name):
    out, _ = instrument_fixture(name)
    assert out == golden_text(name)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_strip_inverts_instrument(name):
    out, _ = instrument_fixture(name)
    assert strip(out) == fixture_text(name)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_double_instrumentation_rejected(name):
    out, _ = instrument_fixture(name)
    regions = scan_source(fixture_text(name), name)
    with pytest.raises(AlreadyInstrumented):
        instrument(out, regions, OPTS)


def test_strip_is_identity_without_markers():
    text = fixture_text("simple_block.c")
    assert strip(text) == text


def test_edited_marker_line_still_removed():
    out, _ = instrument_fixture("simple_block.c")
    edited = out.replace("pdt_region_begin(0);", "pdt_region_begin(0); int extra;")
    stripped = strip(edited)
    assert "extra" not in stripped
    assert stripped == fixture_text("simple_block.c")


def test_thread_clause_appended_to_pragma():
    out, _ = instrument_fixture("simple_block.c")
    pragma_lines = [l for l in out.splitlines() if l.startswith("#pragma omp parallel")]
    assert pragma_lines == [
        "#pragma omp parallel num_threads(pdt_region_threads(0)) /* pdttag */"
    ]


def test_no_thread_clause_option():
    out, _ = instrument_fixture("simple_block.c", inject_thread_clause=False)
    assert "num_threads" not in out
    assert strip(out, InstrumentationOptions(inject_thread_clause=False)) == \
        fixture_text("simple_block.c")


def test_single_and_task_never_get_clause():
    out, _ = instrument_fixture("nested.c")
    for line in out.splitlines():
        if "#pragma omp single" in line or "#pragma omp task" in line:
            assert "num_threads" not in line


def test_begin_end_balance():
    for name in FIXTURE_NAMES:
        text = fixture_text(name)
        regions = scan_source(text, name)
        out, _ = instrument(text, regions, OPTS)
        begins = out.count("_region_begin(")
        ends = out.count("_region_end(")
        assert begins == ends == len(regions)


def test_include_inserted_once_at_top():
    out, _ = instrument_fixture("sparselu_mini.c")
    lines = out.splitlines()
    assert lines[0] == '#include "pdt_hooks.h" /* pdttag */'
    assert out.count("pdt_hooks.h") == 1


def test_nested_hooks_nest_properly():
    out, _ = instrument_fixture("nested.c")
    lines = out.splitlines()
    events = []
    for line in lines:
        s = line.strip()
        if s.startswith("pdt_region_begin("):
            events.append(("begin", int(s.split("(")[1].split(")")[0])))
        elif s.startswith("pdt_region_end("):
            events.append(("end", int(s.split("(")[1].split(")")[0])))
    stack = []
    for op, rid in events:
        if op == "begin":
            stack.append(rid)
        else:
            assert stack and stack[-1] == rid, f"end({rid}) does not match stack {stack}"
            stack.pop()
    assert stack == []


def test_line_number_bookkeeping():
    # instrumented line of each pragma = original line + insertions above it
    name = "sparselu_mini.c"
    text = fixture_text(name)
    regions = scan_source(text, name)
    out, manifest = instrument(text, regions, OPTS)
    out_lines = out.splitlines()
    for entry in manifest.entries:
        insertions_above = 1  # include line
        for other in regions:
            if other.pragma_line < entry.pragma_line:
                insertions_above += 1  # its begin hook
            if other.block_end < entry.pragma_line:
                insertions_above += 1  # its end hook
        insertions_above += 1  # this region's own begin hook
        new_line = entry.pragma_line + insertions_above
        assert out_lines[new_line - 1].lstrip().startswith("#pragma omp")


def test_partial_selection_instruments_subset(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    chosen = [regions[1]]
    out, manifest = instrument(sparselu_source, chosen, OPTS)
    assert out.count("_region_begin(") == 1
    assert f"pdt_region_begin({regions[1].id});" in out
    assert strip(out) == sparselu_source
    assert len(manifest.entries) == 1


def test_region_not_found_on_stale_region(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    stale = dataclasses.replace(regions[0], block_end=regions[0].block_end + 1)
    with pytest.raises(RegionNotFound):
        instrument(sparselu_source, [stale], OPTS)


def test_empty_selection_returns_original(sparselu_source):
    out, manifest = instrument(sparselu_source, [], OPTS)
    assert out == sparselu_source
    assert manifest.entries == ()


# --- manifest format --------------------------------------------------------

def test_manifest_roundtrip(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    manifest = make_manifest(regions, {"sparselu_mini.c": sparselu_source})
    assert parse_manifest(emit_manifest(manifest)) == manifest


def test_empty_manifest_roundtrip():
    manifest = RegionManifest(entries=(), source_digest="0" * 64)
    text = emit_manifest(manifest)
    assert text.splitlines() == [f"pdtmanifest v1 {'0' * 64}"]
    assert parse_manifest(text) == manifest


def test_manifest_data_lines_in_id_order(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    manifest = make_manifest(list(reversed(regions)), {"sparselu_mini.c": sparselu_source})
    lines = emit_manifest(manifest).splitlines()[1:]
    assert [int(l.split("\t")[0]) for l in lines] == [0, 1, 2]


def test_digest_flip_detected_by_verify(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    manifest = make_manifest(regions, {"sparselu_mini.c": sparselu_source})
    text = emit_manifest(manifest)
    flipped = text.replace(manifest.source_digest[:8], manifest.source_digest[8:16], 1)
    tampered = parse_manifest(flipped)  # still parses
    with pytest.raises(DigestMismatch):
        verify_manifest(tampered, {"sparselu_mini.c": sparselu_source})
    verify_manifest(manifest, {"sparselu_mini.c": sparselu_source})


@pytest.mark.parametrize("bad", [
    "",
    "pdtmanifest v2 abc\n",
    "pdtmanifest v1 abc\nnot\ttabs\n",
    "pdtmanifest v1 abc\n0\tParallelBlock\tf.c\tmain\t1\t2\n",
    "pdtmanifest v1 abc\nx\tParallelBlock\tf.c\tmain\t1\t2\t3\n",
    "pdtmanifest v1 abc\n0\tNoSuchKind\tf.c\tmain\t1\t2\t3\n",
    "pdtmanifest v1 abc\n1\tTask\tf.c\tm\t1\t2\t3\n0\tTask\tf.c\tm\t4\t5\t6\n",
])
def test_manifest_syntax_errors(bad):
    with pytest.raises(ManifestSyntax):
        parse_manifest(bad)


def test_digest_stable_across_runs(sparselu_source):
    m1 = make_manifest([], {"a.c": sparselu_source})
    m2 = make_manifest([], {"a.c": sparselu_source})
    assert m1.source_digest == m2.source_digest


def test_options_validation():
    with pytest.raises(ValueError):
        InstrumentationOptions(marker_comment="   ")
    with pytest.raises(ValueError):
        InstrumentationOptions(hook_prefix="bad prefix!")
    assert InstrumentationOptions(hook_prefix="trace").header_name == "trace_hooks.h"
