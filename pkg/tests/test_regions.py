from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdttagger.regions import (
    ConfigError,
    InstrumentationConfig,
    MalformedRange,
    PragmaWithoutStatement,
    Region,
    RegionKind,
    SelectionEntry,
    UnbalancedBraces,
    mask_source,
    parse_config,
    scan_files,
    scan_source,
    select_regions,
)

from conftest import fixture_text, random_source


def test_simple_block_extent():
    regions = scan_source(fixture_text("simple_block.c"), "simple_block.c")
    assert len(regions) == 1
    r = regions[0]
    assert r.kind == RegionKind.ParallelBlock
    assert (r.pragma_line, r.block_begin, r.block_end) == (4, 5, 9)
    assert r.function == "main"


def test_single_statement_for_body():
    regions = scan_source(fixture_text("single_stmt_for.c"), "single_stmt_for.c")
    assert len(regions) == 1
    r = regions[0]
    assert r.kind == RegionKind.ParallelFor
    assert r.block_begin == 3  # the for line
    assert r.block_end == 4    # its single-statement body
    assert r.function == "scale"


def test_sparselu_fixture_has_three_regions(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    assert len(regions) == 3
    kinds = [r.kind for r in regions]
    assert kinds == [RegionKind.Single, RegionKind.ParallelFor, RegionKind.ParallelFor]
    assert [r.pragma_line for r in regions] == sorted(r.pragma_line for r in regions)
    assert [r.id for r in regions] == [0, 1, 2]


def test_nested_regions_properly_contained():
    regions = scan_source(fixture_text("nested.c"), "nested.c")
    assert [r.kind for r in regions] == [
        RegionKind.ParallelBlock, RegionKind.Single, RegionKind.Task,
    ]
    outer, mid, inner = regions
    assert outer.block_begin <= mid.pragma_line <= mid.block_end <= outer.block_end
    assert mid.block_begin <= inner.pragma_line <= inner.block_end <= mid.block_end


def test_pragmas_in_comments_and_strings_ignored():
    regions = scan_source(fixture_text("tricky.c"), "tricky.c")
    assert len(regions) == 2
    assert regions[0].kind == RegionKind.ParallelFor  # the continued pragma
    assert regions[1].kind == RegionKind.ParallelBlock


def test_continued_pragma_spans_do_while():
    regions = scan_source(fixture_text("tricky.c"), "tricky.c")
    do_region = regions[1]
    text_lines = fixture_text("tricky.c").splitlines()
    assert text_lines[do_region.block_begin - 1].strip().startswith("do")
    assert "while" in text_lines[do_region.block_end - 1]


def test_function_resolution_across_functions():
    regions = scan_source(fixture_text("multifunc.c"), "multifunc.c")
    assert [r.function for r in regions] == ["fib", "fib", "sweep", "main"]


def test_scan_is_pure():
    text = fixture_text("nested.c")
    assert scan_source(text, "nested.c") == scan_source(text, "nested.c")


def test_scan_files_orders_ids_by_file_then_line():
    sources = {
        "b.c": fixture_text("simple_block.c"),
        "a.c": fixture_text("single_stmt_for.c"),
    }
    regions = scan_files(sources)
    assert [(r.file, r.id) for r in regions] == [("a.c", 0), ("b.c", 1)]


def test_block_slice_braces_balanced():
    text = fixture_text("nested.c")
    masked = mask_source(text)
    lines = masked.splitlines()
    for r in scan_source(text, "nested.c"):
        slice_text = "\n".join(lines[r.block_begin - 1 : r.block_end])
        assert slice_text.count("{") == slice_text.count("}")


def test_unbalanced_braces_reported():
    with pytest.raises(UnbalancedBraces):
        scan_source("int f(void) { {\n", "broken.c")
    with pytest.raises(UnbalancedBraces):
        scan_source("}\n", "broken.c")


def test_pragma_at_eof_rejected():
    with pytest.raises(PragmaWithoutStatement):
        scan_source("int f(void);\n#pragma omp parallel\n", "eof.c")


def test_non_region_omp_directives_skipped():
    src = (
        "void f(int *a) {\n"
        "#pragma omp parallel\n"
        "    {\n"
        "#pragma omp barrier\n"
        "        a[0] = 1;\n"
        "#pragma omp taskwait\n"
        "    }\n"
        "}\n"
    )
    regions = scan_source(src, "f.c")
    assert [r.kind for r in regions] == [RegionKind.ParallelBlock]


def test_parallel_sections_kind():
    src = (
        "void f(void) {\n"
        "#pragma omp parallel sections\n"
        "    {\n"
        "        f();\n"
        "    }\n"
        "}\n"
    )
    regions = scan_source(src, "f.c")
    assert regions[0].kind == RegionKind.ParallelSections


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_sources_scan_deterministically(seed):
    text = random_source(seed)
    first = scan_source(text, "gen.c")
    second = scan_source(text, "gen.c")
    assert first == second
    for r1 in first:
        for r2 in first:
            if r1.id >= r2.id:
                continue
            a = (r1.block_begin, r1.block_end)
            b = (r2.block_begin, r2.block_end)
            disjoint = a[1] < b[0] or b[1] < a[0]
            nested = (a[0] <= b[0] and b[1] <= a[1]) or (b[0] <= a[0] and a[1] <= b[1])
            assert disjoint or nested, f"overlapping spans {a} vs {b}"


@settings(max_examples=30)
@given(st.sampled_from(["parallel", "single", "task", "parallel for"]))
def test_pragma_text_inside_comments_never_scanned(kind):
    src = (
        "/* leading\n"
        f"#pragma omp {kind}\n"
        "*/\n"
        f"// #pragma omp {kind}\n"
        f'static const char *s = "#pragma omp {kind}";\n'
    )
    assert scan_source(src, "c.c") == []


# --- selection config -------------------------------------------------------

def test_parse_config_function_only():
    cfg = parse_config("fib\n")
    assert cfg.entries == (SelectionEntry(function="fib"),)


def test_parse_config_full_entry():
    cfg = parse_config("lu0 sparselu.c 40-90\n")
    assert cfg.entries == (
        SelectionEntry(function="lu0", file="sparselu.c", line_range=(40, 90)),
    )


def test_parse_config_rejects_reversed_range():
    with pytest.raises(MalformedRange):
        parse_config("f a.c 9-3\n")


def test_parse_config_rejects_non_numeric_range():
    with pytest.raises(MalformedRange):
        parse_config("f a.c fourty-90\n")


def test_parse_config_rejects_extra_fields():
    with pytest.raises(ConfigError):
        parse_config("f a.c 1-2 junk\n")


def test_parse_config_skips_comments_and_blanks():
    cfg = parse_config("# a comment\n\n   \nfib\n")
    assert len(cfg.entries) == 1


def test_parse_config_is_deterministic():
    text = "fib\nlu0 sparselu.c 40-90\n"
    assert parse_config(text) == parse_config(text)


def test_empty_config_selects_all(sparselu_source):
    regions = scan_source(sparselu_source, "sparselu_mini.c")
    assert select_regions(regions, InstrumentationConfig()) == regions


def test_select_by_function():
    regions = scan_source(fixture_text("multifunc.c"), "multifunc.c")
    cfg = parse_config("fib\n")
    chosen = select_regions(regions, cfg)
    assert len(chosen) == 2
    assert all(r.function == "fib" for r in chosen)


def test_select_line_range_excludes_outside():
    region = Region(id=0, kind=RegionKind.ParallelFor, file="src/sparselu.c",
                    pragma_line=50, block_begin=51, block_end=60, function="lu0")
    cfg = InstrumentationConfig(entries=(
        SelectionEntry(function="lu0", file="sparselu.c", line_range=(40, 45)),
    ))
    assert select_regions([region], cfg) == []


def test_select_matches_basename():
    region = Region(id=0, kind=RegionKind.ParallelFor, file="deep/dir/sparselu.c",
                    pragma_line=50, block_begin=51, block_end=60, function="lu0")
    cfg = InstrumentationConfig(entries=(
        SelectionEntry(function="lu0", file="sparselu.c", line_range=(40, 90)),
    ))
    assert select_regions([region], cfg) == [region]


def test_select_preserves_id_order_without_duplicates():
    regions = scan_source(fixture_text("multifunc.c"), "multifunc.c")
    cfg = parse_config("fib\nsweep\nfib\n")  # overlapping entries
    chosen = select_regions(regions, cfg)
    assert [r.id for r in chosen] == sorted({r.id for r in chosen})


def test_unmatched_entry_warns_not_raises(caplog):
    regions = scan_source(fixture_text("multifunc.c"), "multifunc.c")
    cfg = parse_config("nosuchfunction\n")
    with caplog.at_level("WARNING"):
        assert select_regions(regions, cfg) == []
    assert any("matched no region" in r.message for r in caplog.records)
