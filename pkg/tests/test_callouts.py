"""Callout legality and selection resolution against brute-force predicates."""

from __future__ import annotations

import random

import pytest

from weaver.callouts import (
    Callout,
    legal_callouts,
    parse_callout,
    resolve_callout,
    serialize_callout,
)
from weaver.charts import new_spec
from weaver.errors import CalloutError, EmptySelectionError
from weaver.tabular import load_dataset


class TestLegalCallouts:
    def test_scatterplot_row(self):
        assert legal_callouts("scatterplot") == {
            "brush2d",
            "discrete_click",
            "legend_click",
            "add_trendline",
        }

    def test_pie_donut_row(self):
        assert legal_callouts("pie_donut") == {"discrete_click"}

    def test_line_row(self):
        assert legal_callouts("line") == {"timeframe_brush", "line_select", "temporal_point_click"}

    def test_every_chart_type_covered(self):
        for chart_type in ("scatterplot", "bar", "line", "stacked_bar", "pie_donut", "sunburst"):
            assert legal_callouts(chart_type)

    def test_unknown_chart_type(self):
        with pytest.raises(CalloutError):
            legal_callouts("heatmap")


@pytest.fixture
def scatter_spec(countries):
    return new_spec(
        "scatterplot",
        "ds-countries",
        x_attr="gdpPercap",
        y_attr="lifeExp",
        color_attr="continent",
        identity_attr="country",
        id="chart-sc",
    )


class TestResolveCallout:
    def test_full_extent_brush_selects_all(self, countries, scatter_spec):
        callout = Callout(
            "chart-sc",
            "brush2d",
            {"xValueRange": [0, 1e6], "yValueRange": [0, 200]},
        )
        package = resolve_callout(callout, scatter_spec, countries)
        assert package.selection == tuple(range(countries.row_count))

    def test_legend_click_matches_exactly(self, countries, scatter_spec):
        callout = Callout("chart-sc", "legend_click", {"categories": ["Africa"]})
        package = resolve_callout(callout, scatter_spec, countries)
        expected = tuple(
            i for i, r in enumerate(countries.rows) if r["continent"] == "Africa"
        )
        assert package.selection == expected

    def test_brush_matches_predicate_oracle_on_synthetic_data(self):
        rng = random.Random(5)
        lines = ["x,y"]
        for _ in range(200):
            lines.append(f"{rng.uniform(0, 100):.3f},{rng.uniform(0, 100):.3f}")
        ds = load_dataset("\n".join(lines), "synth", dataset_id="d")
        spec = new_spec("scatterplot", "d", x_attr="x", y_attr="y", id="c")
        callout = Callout("c", "brush2d", {"xValueRange": [0, 50], "yValueRange": [0, 50]})
        package = resolve_callout(callout, spec, ds)
        oracle = tuple(
            i
            for i, r in enumerate(ds.rows)
            if r["x"] is not None and r["y"] is not None and r["x"] <= 50 and r["y"] <= 50
        )
        assert package.selection == oracle

    def test_illegal_kind_for_chart_type(self, countries, scatter_spec):
        with pytest.raises(CalloutError):
            resolve_callout(Callout("chart-sc", "timeframe_brush", {"xValueRange": [0, 1]}), scatter_spec, countries)

    def test_empty_selection_is_typed(self, countries, scatter_spec):
        callout = Callout("chart-sc", "legend_click", {"categories": ["Atlantis"]})
        with pytest.raises(EmptySelectionError):
            resolve_callout(callout, scatter_spec, countries)

    def test_discrete_click_uses_identity(self, countries, scatter_spec):
        callout = Callout("chart-sc", "discrete_click", {"keys": ["Gabon", "Chile"]})
        package = resolve_callout(callout, scatter_spec, countries)
        names = [countries.rows[i]["country"] for i in package.selection]
        assert sorted(names) == ["Chile", "Gabon"]

    def test_timeframe_brush_on_line(self, timeseries):
        spec = new_spec("line", "ds-olympics", x_attr="year", y_attr="count", color_attr="sex", id="c")
        callout = Callout("c", "timeframe_brush", {"xValueRange": [1957, 1967]})
        package = resolve_callout(callout, spec, timeseries)
        years = {timeseries.rows[i]["year"] for i in package.selection}
        assert years == {"1957", "1962", "1967"}

    def test_segment_select_on_stacked_bar(self, movies):
        spec = new_spec("stacked_bar", "ds-movies", x_attr="genre", y_attr="gross", color_attr="studio", id="c")
        callout = Callout("c", "segment_select", {"pairs": [["Action", "Alpha"], ["Drama", "Beta"]]})
        package = resolve_callout(callout, spec, movies)
        got = {(movies.rows[i]["genre"], movies.rows[i]["studio"]) for i in package.selection}
        assert got == {("Action", "Alpha"), ("Drama", "Beta")}

    def test_sunburst_chain_full_path_conjunction(self, movies):
        spec = new_spec("sunburst", "ds-movies", y_attr="gross", hierarchy_attrs=("genre", "studio"), id="c")
        callout = Callout("c", "sunburst_chain", {"path": ["Action", "Alpha"]})
        package = resolve_callout(callout, spec, movies)
        rows = [movies.rows[i] for i in package.selection]
        assert all(r["genre"] == "Action" and r["studio"] == "Alpha" for r in rows)
        assert len(rows) == 2

    def test_sunburst_click_prefix_match(self, movies):
        spec = new_spec("sunburst", "ds-movies", y_attr="gross", hierarchy_attrs=("genre", "studio"), id="c")
        callout = Callout("c", "sunburst_click", {"paths": [["Drama"]]})
        package = resolve_callout(callout, spec, movies)
        assert all(movies.rows[i]["genre"] == "Drama" for i in package.selection)
        assert len(package.selection) == 3

    def test_categorical_1d_brush_uses_category_order(self, movies):
        spec = new_spec("bar", "ds-movies", x_attr="genre", y_attr="gross", id="c")
        callout = Callout("c", "brush1d_x", {"xValueRange": ["Action", "Drama"]})
        package = resolve_callout(callout, spec, movies)
        got = {movies.rows[i]["genre"] for i in package.selection}
        assert got == {"Action", "Drama"}  # Comedy appears later in category order

    def test_add_trendline_selects_all_plottable(self, countries, scatter_spec):
        package = resolve_callout(Callout("chart-sc", "add_trendline", {}), scatter_spec, countries)
        assert len(package.selection) == countries.row_count


class TestReplayAndProperties:
    def test_interaction_metadata_round_trips(self, countries, scatter_spec):
        callout = Callout(
            "chart-sc",
            "brush2d",
            {
                "xCoordRange": [10, 220],
                "yCoordRange": [40, 300],
                "xValueRange": [1000, 20000],
                "yValueRange": [40, 80],
            },
        )
        package = resolve_callout(callout, scatter_spec, countries)
        replayed = parse_callout(package.interaction_metadata)
        assert replayed == callout
        assert resolve_callout(replayed, scatter_spec, countries).selection == package.selection

    def test_coordinate_and_value_ranges_both_carried(self, countries, scatter_spec):
        callout = Callout(
            "chart-sc",
            "brush2d",
            {"xCoordRange": [0, 10], "yCoordRange": [0, 10], "xValueRange": [0, 1e6], "yValueRange": [0, 200]},
        )
        package = resolve_callout(callout, scatter_spec, countries)
        params = package.interaction_metadata["params"]
        assert "xCoordRange" in params and "xValueRange" in params

    def test_enlarging_brush_never_shrinks_selection(self):
        rng = random.Random(9)
        lines = ["x,y"]
        for _ in range(150):
            lines.append(f"{rng.uniform(0, 100):.2f},{rng.uniform(0, 100):.2f}")
        ds = load_dataset("\n".join(lines), "synth", dataset_id="d")
        spec = new_spec("scatterplot", "d", x_attr="x", y_attr="y", id="c")
        for _ in range(40):
            x0, x1 = sorted(rng.uniform(0, 100) for _ in range(2))
            y0, y1 = sorted(rng.uniform(0, 100) for _ in range(2))
            grow = rng.uniform(0, 20)
            small = Callout("c", "brush2d", {"xValueRange": [x0, x1], "yValueRange": [y0, y1]})
            big = Callout(
                "c",
                "brush2d",
                {"xValueRange": [x0 - grow, x1 + grow], "yValueRange": [y0 - grow, y1 + grow]},
            )
            try:
                small_sel = set(resolve_callout(small, spec, ds).selection)
            except EmptySelectionError:
                small_sel = set()
            try:
                big_sel = set(resolve_callout(big, spec, ds).selection)
            except EmptySelectionError:
                big_sel = set()
            assert small_sel <= big_sel

    def test_unordered_range_rejected(self, countries, scatter_spec):
        callout = Callout("chart-sc", "brush2d", {"xValueRange": [5, 1], "yValueRange": [0, 10]})
        with pytest.raises(CalloutError):
            resolve_callout(callout, scatter_spec, countries)

    def test_wire_kind_names(self):
        callout = Callout("c", "brush1d_x", {"xValueRange": [0, 1]})
        assert serialize_callout(callout)["kind"] == "brush1dX"
        assert parse_callout({"chartId": "c", "kind": "sunburstChain", "params": {"path": ["a"]}}).kind == "sunburst_chain"
