"""Outline building, reordering, and format-equivalent rendering."""

from __future__ import annotations

import pytest

from weaver.callouts import Callout
from weaver.errors import FactError
from weaver.export import (
    FORMATS,
    build_outline,
    parse_bundle_render,
    render,
    render_bundle,
    reorder,
    write_bundle,
)

from .test_story import brush_all, build_story


def story_with_text():
    graph = build_story()
    hierarchy = graph.apply_callout("v1", brush_all())
    ids = sorted(hierarchy.fact_ids())[:2]
    graph.select_facts("v1", ids)
    graph.connect("v1", "t1")
    graph.connect("v2", "t2")
    graph.set_text(
        "t1",
        [
            {
                "type": "paragraph",
                "spans": [
                    {"text": "Wealthy countries live longer. "},
                    {"text": "See the data", "factId": ids[0]},
                ],
            }
        ],
    )
    graph.set_text("t2", [{"type": "paragraph", "spans": [{"text": "Genres differ."}]}])
    return graph


class TestOutline:
    def test_blocks_follow_creation_order(self):
        outline = build_outline(story_with_text())
        assert [b.text_node for b in outline.blocks] == ["t1", "t2"]

    def test_blocks_list_linked_vis(self):
        graph = story_with_text()
        graph.connect("v2", "t1")
        outline = build_outline(graph)
        assert outline.blocks[0].linked_vis == ("v1", "v2")

    def test_fact_anchors_collected(self):
        outline = build_outline(story_with_text())
        assert len(outline.blocks[0].fact_anchors) == 1

    def test_vis_only_graph_rejected(self):
        graph = build_story()
        graph.remove_node("t1")
        graph.remove_node("t2")
        with pytest.raises(FactError):
            build_outline(graph)


class TestReorder:
    def test_identity_permutation(self):
        outline = build_outline(story_with_text())
        assert reorder(outline, [0, 1]) == outline

    def test_swap_twice_restores(self):
        outline = build_outline(story_with_text())
        swapped = reorder(outline, [1, 0])
        assert swapped.blocks[0].text_node == "t2"
        assert reorder(swapped, [1, 0]) == outline

    def test_wrong_length_rejected(self):
        outline = build_outline(story_with_text())
        with pytest.raises(FactError):
            reorder(outline, [0])

    def test_reorder_preserves_narrative_bytes(self):
        outline = build_outline(story_with_text())
        swapped = reorder(outline, [1, 0])
        original = {b.text_node: b.segments for b in outline.blocks}
        assert {b.text_node: b.segments for b in swapped.blocks} == original


class TestRender:
    def test_sections_identical_across_formats(self):
        graph = story_with_text()
        outline = build_outline(graph)
        renders = [render(outline, fmt, graph) for fmt in FORMATS]
        hashes = {r.content_hash() for r in renders}
        assert len(hashes) == 1
        assert {r.to_json()["navigation"] for r in renders} == {"continuous", "scrolly", "stepper"}

    def test_sections_carry_chart_spec_and_replay(self):
        graph = story_with_text()
        outline = build_outline(graph)
        out = render(outline, "continuous", graph)
        section = out.sections[0]
        assert section["charts"][0]["chartSpec"]["chartType"] == "scatterplot"
        assert section["charts"][0]["calloutReplay"]["kind"] == "brush2d"

    def test_fact_anchors_serialized(self):
        graph = story_with_text()
        out = render(build_outline(graph), "stepper", graph)
        assert out.sections[0]["factAnchors"]
        assert 'data-fact-id="' in out.sections[0]["html"]

    def test_dangling_reference_rejected(self):
        graph = story_with_text()
        outline = build_outline(graph)
        graph.remove_node("t2")
        with pytest.raises(Exception):
            render(outline, "continuous", graph)


class TestBundle:
    def test_bundle_files(self, tmp_path):
        graph = story_with_text()
        files = render_bundle(build_outline(graph), "scrollytelling", graph)
        assert set(files) == {
            "story.json",
            "index.html",
            "data/ds-countries.csv",
            "data/ds-movies.csv",
        }
        root = write_bundle(files, tmp_path / "bundle")
        assert (root / "index.html").exists()
        assert (root / "data" / "ds-countries.csv").exists()

    def test_bundle_round_trip_is_lossless(self):
        graph = story_with_text()
        outline = build_outline(graph)
        story_render = render(outline, "stepper", graph)
        files = render_bundle(outline, "stepper", graph)
        assert parse_bundle_render(files["index.html"]) == story_render.to_json()

    def test_bundle_navigation_flag(self):
        graph = story_with_text()
        files = render_bundle(build_outline(graph), "scrollytelling", graph)
        assert 'data-navigation="scrolly"' in files["index.html"]
