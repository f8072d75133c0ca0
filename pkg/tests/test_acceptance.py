"""Acceptance gate: one test per acceptance criterion, printed pass/fail.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Every tolerance is pinned here; nothing is deferred.
"""

from __future__ import annotations

import functools
import json
import random
import socket
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from weaver.api import ServiceConfig, create_app
from weaver.callouts import (
    Callout,
    legal_callouts,
    parse_callout,
    resolve_callout,
    serialize_callout,
)
from weaver.charts import new_spec, parse_spec, serialize_spec
from weaver.errors import FactError
from weaver.export import FORMATS, build_outline, render
from weaver.facts import (
    DISPATCH,
    chained_proportion,
    compute_facts,
    correlation_trendline,
    detect_outliers,
    frequency_facts,
    proportion_facts,
    rank_extreme_facts,
    summary_stats,
    trend_facts,
)
from weaver.formatting import fmt_percent, fmt_value
from weaver.narrative import (
    ACCEPTED,
    DeterministicGenerator,
    RevisionRequest,
    assemble_prompt,
    generate,
    revise,
)
from weaver.organizer import ScoringConfig, blend_terms, organize, score_facts, score_frequency_fact
from weaver.story import StoryGraph, load_story, save_story
from weaver.tabular import load_dataset

REL_TOL = 1e-9


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\n[FAIL] {name}")
                raise
            print(f"\n[PASS] {name}")
            return result

        return wrapper

    return decorate


def rendered_numbers(fact) -> list[str]:
    out = []
    for value in fact.numeric_payload().values():
        raw = fmt_value(value)
        out.append(raw if raw in fact.template_text else fmt_percent(value))
    return out


# ---------------------------------------------------------------------------
# 1. Taxonomy coverage
# ---------------------------------------------------------------------------

TAXONOMY_CSV_HEADER = "id,cat,grp,year,v1,v2"


def taxonomy_dataset():
    rng = random.Random(99)
    cats = ["alpha", "beta", "gamma", "delta"]
    grps = ["north", "south"]
    lines = [TAXONOMY_CSV_HEADER]
    i = 0
    for year in range(1950, 1965):
        for grp in grps:
            value = 500.0 if i == 9 else rng.uniform(10, 20)  # one hard outlier
            lines.append(
                f"x{i},{cats[i % 4]},{grp},{year},{value:.2f},{rng.uniform(0, 50):.2f}"
            )
            i += 1
    return load_dataset("\n".join(lines), "taxonomy", dataset_id="tax")


# Expected fact families per (chart, kind). Summary statistics are realized
# by the always-present statistical table rather than as list facts, so they
# do not appear in these sets.
EXPECTED_FAMILIES = {
    ("scatterplot", "brush2d"): {"frequency", "rank", "values"},
    ("scatterplot", "discrete_click"): {"values", "outlier", "rank", "frequency"},
    ("scatterplot", "legend_click"): {"frequency", "rank", "outlier", "values"},
    ("scatterplot", "add_trendline"): set(),
    ("bar", "discrete_click"): {"values", "rank", "extreme", "difference"},
    ("bar", "legend_click"): {"frequency", "rank", "outlier", "values"},
    ("bar", "brush1d_x"): {"frequency", "rank", "values"},
    ("line", "timeframe_brush"): {"trend", "values", "extreme", "difference"},
    ("line", "line_select"): {"trend", "line_comparison"},
    ("line", "temporal_point_click"): set(),
    ("stacked_bar", "legend_click"): set(),
    ("stacked_bar", "segment_select"): set(),
    ("pie_donut", "discrete_click"): set(),
    ("sunburst", "sunburst_click"): set(),
    ("sunburst", "sunburst_chain"): set(),
}


def taxonomy_fixture(chart_type, kind, ds):
    outlier_ids = ["x5", "x6", "x7", "x8", "x9", "x10"]  # includes the 500.0 row
    if chart_type == "scatterplot":
        spec = new_spec(
            "scatterplot", "tax", x_attr="v1", y_attr="v2",
            color_attr="cat", identity_attr="id", id="c",
        )
        params = {
            "brush2d": {"xValueRange": [0, 1e4], "yValueRange": [0, 1e4]},
            "discrete_click": {"keys": outlier_ids},
            "legend_click": {"categories": ["alpha", "beta", "gamma", "delta"]},
            "add_trendline": {},
        }[kind]
    elif chart_type == "bar":
        color = "grp" if kind == "legend_click" else None
        spec = new_spec("bar", "tax", x_attr="cat", y_attr="v1", color_attr=color, id="c")
        params = {
            "discrete_click": {"keys": ["alpha", "beta"]},
            "legend_click": {"categories": ["north", "south"]},
            "brush1d_x": {"xValueRange": ["alpha", "gamma"]},
        }[kind]
    elif chart_type == "line":
        color = "grp" if kind == "line_select" else None
        spec = new_spec("line", "tax", x_attr="year", y_attr="v1", color_attr=color, id="c")
        params = {
            "timeframe_brush": {"xValueRange": [1950, 1964]},
            "line_select": {"categories": ["north", "south"]},
            "temporal_point_click": {"keys": ["1955"]},
        }[kind]
    elif chart_type == "stacked_bar":
        spec = new_spec("stacked_bar", "tax", x_attr="cat", y_attr="v1", color_attr="grp", id="c")
        params = {
            "legend_click": {"categories": ["north"]},
            "segment_select": {"pairs": [["alpha", "north"]]},
        }[kind]
    elif chart_type == "pie_donut":
        spec = new_spec("pie_donut", "tax", x_attr="cat", y_attr="v1", id="c")
        params = {"keys": ["alpha"]}
    else:
        spec = new_spec("sunburst", "tax", y_attr="v1", hierarchy_attrs=("cat", "grp"), id="c")
        params = {"paths": [["alpha"]]} if kind == "sunburst_click" else {"path": ["alpha", "north"]}
    return spec, Callout("c", kind, params)


@criterion("taxonomy coverage: legality + exact starred families, < 1 s")
def test_taxonomy_coverage():
    started = time.monotonic()
    ds = taxonomy_dataset()
    assert set(DISPATCH) == {
        (chart, kind)
        for chart in ("scatterplot", "bar", "line", "stacked_bar", "pie_donut", "sunburst")
        for kind in legal_callouts(chart)
    }
    for (chart_type, kind), expected in EXPECTED_FAMILIES.items():
        assert kind in legal_callouts(chart_type), (chart_type, kind)
        spec, callout = taxonomy_fixture(chart_type, kind, ds)
        package = resolve_callout(callout, spec, ds)
        bundle = compute_facts(package, ds)
        got = {f.fact_type for f in bundle.facts}
        assert got == expected, f"{chart_type}/{kind}: {got} != {expected}"
        assert bundle.stat_table is not None
        starred_summary = any(
            cell.slug == "summary_stats" and cell.starred for cell in DISPATCH[(chart_type, kind)]
        )
        if starred_summary:
            assert bundle.stat_table.entries
        not_implemented = {s.family for s in bundle.skipped if s.reason == "not implemented"}
        expected_skips = {c.slug for c in DISPATCH[(chart_type, kind)] if c.executor is None}
        assert not_implemented == expected_skips
    elapsed = time.monotonic() - started
    assert elapsed < 1.0, f"taxonomy suite took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. Statistics oracle suite
# ---------------------------------------------------------------------------


def _close(a, b):
    return a == pytest.approx(b, rel=REL_TOL, abs=1e-12)


@criterion("statistics oracle suite: 100 random datasets vs brute force, < 30 s")
def test_statistics_oracle_suite():
    started = time.monotonic()
    rng = random.Random(2024)
    for round_no in range(100):
        n = rng.randint(20, 500)
        cats = [f"c{j}" for j in range(rng.randint(2, 6))]
        lines = ["id,cat,year,a,b"]
        for i in range(n):
            a = rng.gauss(100, 30) if rng.random() > 0.05 else rng.uniform(300, 600)
            b = 0.6 * a + rng.gauss(0, 20)
            lines.append(f"i{i},{rng.choice(cats)},{1900 + (i % 90)},{a:.6f},{b:.6f}")
        ds = load_dataset("\n".join(lines), "fuzz", dataset_id="f")
        values = [r["a"] for r in ds.rows]

        # summary stats
        row = summary_stats(values)
        assert _close(row.mean, np.mean(values))
        assert _close(row.median, np.median(values))
        assert _close(row.std, np.std(values, ddof=1))
        assert row.min == min(values) and row.max == max(values)

        # ranks (dense, descending) on a random selection
        sel = [ds.rows[i] for i in rng.sample(range(n), rng.randint(1, min(n, 40)))]
        ranks, extremes = rank_extreme_facts(sel, "a", ds, "id")
        ordered = sorted(set(values), reverse=True)
        oracle = {v: i + 1 for i, v in enumerate(ordered)}
        for fact in ranks:
            assert fact.payload["rank"] == oracle[fact.aux["value"]]
        if extremes:
            sel_vals = [r["a"] for r in sel if r["a"] is not None]
            assert _close(extremes[0].payload["value"], max(sel_vals))
            assert _close(extremes[1].payload["value"], min(sel_vals))

        # outliers via Tukey fences
        ids = [r["id"] for r in ds.rows]
        got = {f.payload["identity"] for f in detect_outliers(values, "a", ids)}
        q1, q3 = np.percentile(values, [25, 75])
        iqr = q3 - q1
        expected = {
            ids[i] for i, v in enumerate(values) if v < q1 - 1.5 * iqr or v > q3 + 1.5 * iqr
        }
        assert got == expected

        # trend slope over an index axis
        points = [(str(1900 + i), float(i), v) for i, v in enumerate(values[: rng.randint(5, 60)])]
        slope = trend_facts(points, "a")[0].payload["slope"]
        assert _close(slope, np.polyfit(range(len(points)), [p[2] for p in points], 1)[0])

        # correlation + fitted line
        xs = values
        ys = [r["b"] for r in ds.rows]
        facts = correlation_trendline(xs, ys, "a", "b")
        assert _close(facts[0].payload["r"], np.corrcoef(xs, ys)[0, 1])
        np_slope, np_intercept = np.polyfit(xs, ys, 1)
        assert _close(facts[1].payload["slope"], np_slope)
        assert facts[1].aux["intercept_signed"] == pytest.approx(np_intercept, rel=1e-9, abs=1e-9)

        # proportions of category totals
        totals = {}
        for r in ds.rows:
            totals[r["cat"]] = totals.get(r["cat"], 0.0) + abs(r["a"])
        whole = sum(totals.values())
        segments = [(c, totals[c]) for c in sorted(totals)]
        for fact, (cat, value) in zip(proportion_facts(segments, whole, "a"), segments):
            assert _close(fact.payload["percent"], 100.0 * value / whole)

        # chained proportion equals the direct leaf/root ratio
        lines2 = ["h1,h2,m"]
        for _ in range(rng.randint(10, 60)):
            lines2.append(f"{rng.choice('pq')},{rng.choice('uv')},{rng.randint(1, 9)}")
        hds = load_dataset("\n".join(lines2), "h", dataset_id="h")
        path = [rng.choice("pq"), rng.choice("uv")]
        parent_rows = [r for r in hds.rows if r["h1"] == path[0]]
        leaf_rows = [r for r in parent_rows if r["h2"] == path[1]]
        if parent_rows:
            fact = chained_proportion(path, hds, ("h1", "h2"), "m")
            leaf = sum(r["m"] for r in leaf_rows)
            root = sum(r["m"] for r in hds.rows)
            assert _close(fact.payload["chained"], 100.0 * leaf / root)

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"oracle suite took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 3. Paper-string fixtures
# ---------------------------------------------------------------------------


@criterion("fixture strings: frequency, zero-share, and outlier templates")
def test_fixture_strings():
    csv_text = "country,continent,lifeExp\n" + "\n".join(
        f"A{i},Africa,{50 + i * 0.5}" for i in range(20)
    ) + "\nChile,Americas,78.6\nParis,Europe,81.0\n"
    ds = load_dataset(csv_text, "gap", dataset_id="d")
    selection = [r for r in ds.rows if r["continent"] in ("Africa", "Americas")][:21]
    assert len(selection) == 21
    facts = frequency_facts(selection, "continent", ds)
    africa = next(f for f in facts if f.payload.get("category") == "Africa")
    assert africa.template_text == (
        "95.24% of the selected data points have the attribute continent = Africa"
    )
    europe = next(f for f in facts if f.payload.get("category") == "Europe")
    assert europe.template_text == "none of them are Europe"
    assert europe.template_text.startswith("none of them are ")

    outliers = detect_outliers(
        [70, 71, 72, 71.5, 70.2, 30], "lifeExp", ["A", "B", "C", "D", "E", "Gabon"]
    )
    assert [f.template_text for f in outliers] == ["Gabon is an outlier in lifeExp"]


# ---------------------------------------------------------------------------
# 4. Scoring properties
# ---------------------------------------------------------------------------


@criterion("scoring: 10k fuzzed inputs in [0,1], monotone; organize invariants")
def test_scoring_properties():
    rng = random.Random(7)
    config = ScoringConfig()
    for _ in range(10_000):
        p_sel = rng.random()
        p_glob = rng.random()
        k = rng.randint(1, 12)
        raw = [rng.random() for _ in range(k)]
        total = sum(raw) or 1.0
        dist = [v / total for v in raw]
        score = score_frequency_fact(p_sel, p_glob, dist, config)
        assert 0.0 <= score <= 1.0 + 1e-12

        # monotone in the deviation and prominence terms of the blend
        d, r, p, e = rng.random(), rng.random(), rng.random(), rng.random()
        base = blend_terms(d, r, p, e, config)
        assert blend_terms(min(d + rng.random() * (1 - d), 1.0), r, p, e, config) >= base - 1e-12
        assert blend_terms(d, r, min(p + rng.random() * (1 - p), 1.0), e, config) >= base - 1e-12

        # raising the selection share above the global share never hurts
        if p_sel >= p_glob:
            higher = min(p_sel + rng.random() * (1 - p_sel), 1.0)
            assert (
                score_frequency_fact(higher, p_glob, dist, config)
                >= score_frequency_fact(p_sel, p_glob, dist, config) - 1e-12
            )

    ds = taxonomy_dataset()
    spec = new_spec(
        "scatterplot", "tax", x_attr="v1", y_attr="v2",
        color_attr="cat", identity_attr="id", id="c",
    )
    callout = Callout("c", "brush2d", {"xValueRange": [0, 1e4], "yValueRange": [0, 1e4]})
    package = resolve_callout(callout, spec, ds)
    bundle = compute_facts(package, ds)
    score_facts(bundle.facts)
    ordered = organize(
        bundle.facts, bundle.stat_table,
        chart_type="scatterplot", callout_kind="brush2d", column_order=ds.column_names(),
    )
    shuffled = list(bundle.facts)
    random.Random(3).shuffle(shuffled)
    permuted = organize(
        shuffled, bundle.stat_table,
        chart_type="scatterplot", callout_kind="brush2d", column_order=ds.column_names(),
    )
    assert ordered.to_json() == permuted.to_json()
    group_names = [g.fact_type for g in ordered.groups]
    assert group_names.index("frequency") < group_names.index("rank")


# ---------------------------------------------------------------------------
# 5. Fact anchoring
# ---------------------------------------------------------------------------

SENTINEL = "ZZSENTINEL"


@criterion("fact anchoring: 1k fuzzed fact sets survive generation + revision")
def test_fact_anchoring():
    rng = random.Random(55)
    cats = ["red", "green", "blue"]
    lines = ["id,cat,secret,m1,m2"]
    for i in range(40):
        lines.append(
            f"n{i},{rng.choice(cats)},{SENTINEL}_{i},{rng.uniform(1, 99):.4f},{rng.uniform(1, 99):.4f}"
        )
    ds = load_dataset("\n".join(lines), "fuzz", dataset_id="d")
    spec = new_spec(
        "scatterplot", "d", x_attr="m1", y_attr="m2",
        color_attr="cat", identity_attr="id", id="c",
    )
    generator = DeterministicGenerator()
    for i in range(1000):
        kind = rng.choice(["brush2d", "legend_click", "discrete_click"])
        if kind == "brush2d":
            x0, x1 = sorted(rng.uniform(0, 110) for _ in range(2))
            params = {"xValueRange": [x0, x1], "yValueRange": [0, 110]}
        elif kind == "legend_click":
            params = {"categories": rng.sample(cats, rng.randint(1, 3))}
        else:
            params = {"keys": [f"n{j}" for j in rng.sample(range(40), rng.randint(1, 8))]}
        try:
            package = resolve_callout(Callout("c", kind, params), spec, ds)
        except Exception:
            continue
        bundle = compute_facts(package, ds)
        if not bundle.facts:
            continue
        score_facts(bundle.facts)
        chosen = rng.sample(bundle.facts, rng.randint(1, min(6, len(bundle.facts))))
        prompt = assemble_prompt(
            chosen, package.chart_metadata, package.interaction_metadata, "Context so far."
        )
        assert SENTINEL not in prompt.to_text()
        result = generate(prompt, generator)
        texts = [result.text]
        result.accepted = ACCEPTED
        for mode in ("shorten", "expand", "regenerate", "custom"):
            request = RevisionRequest((0, 1), mode, "punchier" if mode == "custom" else "")
            texts.append(revise(result, request, generator).text)
        for fact in chosen:
            numbers = rendered_numbers(fact)
            for text in texts:
                for number in numbers:
                    assert number in text, (fact.template_text, number, text)
                assert SENTINEL not in text


# ---------------------------------------------------------------------------
# 6. Cart-streaming model check
# ---------------------------------------------------------------------------


def _naive_streams(graph: StoryGraph) -> dict[str, set[str]]:
    out = {}
    for node in graph.nodes.values():
        if node.kind != "text":
            continue
        facts = set()
        for v, t in graph.edges:
            if t == node.id:
                facts |= set(graph.nodes[v].selected)
        out[node.id] = facts
    return out


def _graph_streams(graph: StoryGraph) -> dict[str, set[str]]:
    return {
        n.id: {f.id for f in graph.streamed_facts(n.id)}
        for n in graph.nodes.values()
        if n.kind == "text"
    }


@criterion("cart streaming: 1k random op sequences match the naive oracle")
def test_cart_streaming_model_check():
    base_csv = "\n".join(
        ["id,cat,v"] + [f"i{i},{'ab'[i % 2]},{10 + i}" for i in range(12)]
    )
    rng = random.Random(4242)
    for _ in range(1000):
        graph = StoryGraph(story_id="s")
        graph.add_dataset(load_dataset(base_csv, "d", dataset_id="d"))
        spec = new_spec("bar", "d", x_attr="cat", y_attr="v", id="c")
        graph.add_vis_node(spec=spec, node_id="v1")
        graph.add_text_node(node_id="t1")
        vis_ids, text_ids = ["v1"], ["t1"]
        for _ in range(8):
            op = rng.choice(
                ["callout", "select", "connect", "disconnect", "add_text", "remove", "duplicate"]
            )
            try:
                if op == "callout":
                    vis = rng.choice([v for v in vis_ids if v in graph.nodes])
                    graph.apply_callout(vis, Callout("c", "discrete_click", {"keys": ["a", "b"]}))
                elif op == "select":
                    vis = rng.choice([v for v in vis_ids if v in graph.nodes])
                    node = graph.nodes[vis]
                    if node.hierarchy is None:
                        continue
                    ids = sorted(node.hierarchy.fact_ids())
                    graph.select_facts(vis, rng.sample(ids, rng.randint(0, min(3, len(ids)))))
                elif op == "connect":
                    graph.connect(
                        rng.choice([v for v in vis_ids if v in graph.nodes]),
                        rng.choice([t for t in text_ids if t in graph.nodes]),
                    )
                elif op == "disconnect":
                    if graph.edges:
                        graph.disconnect(*rng.choice(graph.edges))
                elif op == "add_text":
                    text_ids.append(graph.add_text_node().id)
                elif op == "remove":
                    pool = [n for n in (vis_ids + text_ids) if n in graph.nodes]
                    if len(pool) > 1:
                        graph.remove_node(rng.choice(pool))
                elif op == "duplicate":
                    vis = rng.choice([v for v in vis_ids if v in graph.nodes] or [None])
                    if vis:
                        vis_ids.append(graph.duplicate_node(vis).id)
            except (FactError, IndexError):
                pass
            assert _graph_streams(graph) == _naive_streams(graph)


# ---------------------------------------------------------------------------
# 7. Loop closure
# ---------------------------------------------------------------------------


@criterion("loop closure: text -> line recommendation -> callout -> trend facts")
def test_loop_closure():
    from weaver.recommend import materialize, recommend, summarize_dataset

    from .conftest import TIMESERIES_CSV

    ds = load_dataset(TIMESERIES_CSV, "olympics", dataset_id="ds-olympics")
    result = recommend(
        "Women's participation in the Olympics has increased over time",
        [summarize_dataset(ds)],
    )
    line_recs = [r for r in result.recommendations if r.spec.chart_type == "line" and r.valid]
    assert line_recs, "expected a valid line-chart recommendation"
    built = materialize(line_recs[0], {"ds-olympics": ds})
    package = resolve_callout(
        Callout(built.spec.id, "timeframe_brush", {"xValueRange": [1952, 1972]}),
        built.spec,
        built.dataset,
    )
    bundle = compute_facts(package, built.dataset)
    assert any(f.fact_type == "trend" for f in bundle.facts)


# ---------------------------------------------------------------------------
# 8. Round trips
# ---------------------------------------------------------------------------


@criterion("round trips: specs, callouts, story containers, export formats")
def test_round_trips():
    rng = random.Random(909)
    ds = taxonomy_dataset()

    for _ in range(200):
        chart_type = rng.choice(["scatterplot", "bar", "line", "stackedBar", "pieDonut", "sunburst"])
        doc = {
            "id": f"c{rng.randint(0, 999)}",
            "chartType": chart_type,
            "datasetId": "tax",
            "xAttr": None if chart_type == "sunburst" else "cat",
            "yAttr": "v1",
            "colorAttr": rng.choice([None, "grp"]),
            "identityAttr": rng.choice([None, "id"]),
            "tooltipAttrs": rng.sample(["id", "cat", "v1"], rng.randint(0, 3)),
            "hierarchyAttrs": ["cat", "grp"] if chart_type == "sunburst" else [],
            "title": f"t{rng.randint(0, 99)}",
        }
        if chart_type == "scatterplot":
            doc["xAttr"] = "v2"
        if chart_type == "line":
            doc["xAttr"] = "year"
        if chart_type == "stackedBar":
            doc["colorAttr"] = "grp"
        spec = parse_spec(doc)
        assert parse_spec(serialize_spec(spec)) == spec

    kinds_params = [
        ("brush2d", {"xValueRange": [0.0, 9.5], "yValueRange": [1.0, 2.0], "xCoordRange": [0, 100], "yCoordRange": [5, 80]}),
        ("brush1d_x", {"xValueRange": ["alpha", "gamma"]}),
        ("discrete_click", {"keys": ["x1", "x2"]}),
        ("legend_click", {"categories": ["north"]}),
        ("add_trendline", {}),
        ("timeframe_brush", {"xValueRange": [1950, 1960]}),
        ("line_select", {"categories": ["north", "south"]}),
        ("temporal_point_click", {"keys": ["1955"]}),
        ("segment_select", {"pairs": [["alpha", "north"]]}),
        ("sunburst_click", {"paths": [["alpha"], ["beta", "south"]]}),
        ("sunburst_chain", {"path": ["alpha", "north"]}),
    ]
    for _ in range(200):
        kind, params = rng.choice(kinds_params)
        callout = Callout(f"c{rng.randint(0, 9)}", kind, params)
        assert parse_callout(serialize_callout(callout)) == callout

    for _ in range(25):
        graph = StoryGraph(story_id=f"s{rng.randint(0, 999)}", name="fuzz")
        graph.add_dataset(ds)
        spec = new_spec(
            "scatterplot", "tax", x_attr="v1", y_attr="v2",
            color_attr="cat", identity_attr="id", id="c",
        )
        graph.add_vis_node(spec=spec, node_id="v1")
        graph.add_text_node(node_id="t1")
        hierarchy = graph.apply_callout(
            "v1", Callout("c", "brush2d", {"xValueRange": [0, 1e4], "yValueRange": [0, 1e4]})
        )
        ids = sorted(hierarchy.fact_ids())
        graph.select_facts("v1", rng.sample(ids, rng.randint(0, min(5, len(ids)))))
        if rng.random() < 0.8:
            graph.connect("v1", "t1")
        graph.set_text(
            "t1", [{"type": "paragraph", "spans": [{"text": f"note {rng.randint(0, 99)}"}]}]
        )
        container = save_story(graph)
        reloaded = load_story(json.loads(json.dumps(container)))
        assert save_story(reloaded) == container

        outline = build_outline(graph)
        hashes = {render(outline, fmt, graph).content_hash() for fmt in FORMATS}
        assert len(hashes) == 1


# ---------------------------------------------------------------------------
# 9. Full pipeline over HTTP
# ---------------------------------------------------------------------------


@criterion("full pipeline over HTTP: deterministic, offline, < 10 s")
def test_full_pipeline_http(monkeypatch):
    def no_egress(*args, **kwargs):
        raise AssertionError("network egress attempted during the offline pipeline")

    monkeypatch.setattr(socket.socket, "connect", no_egress)

    started = time.monotonic()
    client = TestClient(create_app(ServiceConfig()))
    from .conftest import COUNTRIES_CSV

    story_id = client.post("/stories", json={"name": "e2e"}).json()["id"]
    dataset_id = client.post(
        "/datasets", json={"storyId": story_id, "name": "countries", "csv": COUNTRIES_CSV}
    ).json()["id"]
    vis = client.post(
        "/nodes",
        json={
            "storyId": story_id,
            "kind": "vis",
            "spec": {
                "chartType": "scatterplot",
                "datasetId": dataset_id,
                "xAttr": "gdpPercap",
                "yAttr": "lifeExp",
                "colorAttr": "continent",
                "identityAttr": "country",
            },
        },
    ).json()["node"]["id"]
    text = client.post("/nodes", json={"storyId": story_id, "kind": "text"}).json()["node"]["id"]
    client.post("/edges", json={"from": vis, "to": text})

    hierarchy = client.post(
        f"/nodes/{vis}/callout",
        json={
            "chartId": "c",
            "kind": "brush2d",
            "params": {"xValueRange": [1000, 20000], "yValueRange": [40, 75]},
        },
    ).json()
    facts = [
        f
        for g in hierarchy["factTypeGroups"]
        for ag in g["attributeGroups"]
        for f in ag["facts"]
    ]
    chosen = facts[:5]
    client.post(f"/nodes/{vis}/facts/select", json={"factIds": [f["id"] for f in chosen]})

    narrative = client.post(f"/nodes/{text}/narrative", json={}).json()
    for fact in chosen:
        for value in fact["payload"].values():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                continue
            raw = fmt_value(value)
            assert raw in narrative["text"] or fmt_percent(value) in narrative["text"]

    client.post(f"/nodes/{text}/narrative/accept", json={"accepted": True})
    export = client.get(f"/stories/{story_id}/export", params={"format": "scrollytelling"}).json()
    assert export["render"]["navigation"] == "scrolly"
    assert set(export["files"]) >= {"story.json", "index.html"}

    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"pipeline took {elapsed:.2f}s"
