"""Review-page machinery: outline blocks, reordering, and story rendering.

The three presentation formats (continuous page, scrollytelling, stepper)
share identical section content; only a navigation flag in the bundle
differs. Exported charts ship as spec + data so the rendered story stays
interactive.
"""

from __future__ import annotations

import hashlib
import html
import json
from dataclasses import dataclass
from pathlib import Path

from .charts import serialize_spec
from .errors import FactError, NotFoundError
from .story import TEXT, VIS, StoryGraph, save_story

CONTINUOUS = "continuous"
SCROLLYTELLING = "scrollytelling"
STEPPER = "stepper"
FORMATS = (CONTINUOUS, SCROLLYTELLING, STEPPER)

# navigation flag values inside exported bundles
NAV_FLAGS = {CONTINUOUS: "continuous", SCROLLYTELLING: "scrolly", STEPPER: "stepper"}


@dataclass(frozen=True)
class Block:
    text_node: str
    segments: tuple[dict, ...]       # rich-text paragraph blocks, in order
    linked_vis: tuple[str, ...]      # upstream vis node ids via in-edges
    fact_anchors: tuple[str, ...]    # fact ids referenced by anchor marks

    def to_json(self) -> dict:
        return {
            "textNode": self.text_node,
            "segments": list(self.segments),
            "linkedVis": list(self.linked_vis),
            "factAnchors": list(self.fact_anchors),
        }


@dataclass(frozen=True)
class StoryOutline:
    story_id: str
    blocks: tuple[Block, ...]

    def to_json(self) -> dict:
        return {"storyId": self.story_id, "blocks": [b.to_json() for b in self.blocks]}


def build_outline(graph: StoryGraph) -> StoryOutline:
    """Initial outline: text nodes in creation order with their chart links."""
    blocks = []
    for node in graph.nodes.values():
        if node.kind != TEXT:
            continue
        anchors = tuple(
            span["factId"]
            for block in node.content
            for span in block.get("spans", [])
            if span.get("factId")
        )
        blocks.append(
            Block(
                text_node=node.id,
                segments=tuple(node.content),
                linked_vis=tuple(graph.upstream_of(node.id)),
                fact_anchors=anchors,
            )
        )
    if not blocks:
        raise FactError("a story outline needs at least one text node")
    return StoryOutline(story_id=graph.id, blocks=tuple(blocks))


def reorder(outline: StoryOutline, permutation: list[int]) -> StoryOutline:
    """Permute block order; content is untouched."""
    if sorted(permutation) != list(range(len(outline.blocks))):
        raise FactError("permutation must cover every block exactly once")
    return StoryOutline(
        story_id=outline.story_id,
        blocks=tuple(outline.blocks[i] for i in permutation),
    )


def _span_html(span: dict) -> str:
    text = html.escape(span.get("text", ""))
    if span.get("bold"):
        text = f"<strong>{text}</strong>"
    if span.get("italic"):
        text = f"<em>{text}</em>"
    if span.get("factId"):
        text = f'<span class="fact-anchor" data-fact-id="{html.escape(span["factId"])}">{text}</span>'
    return text


def segments_to_html(segments) -> str:
    paragraphs = []
    for block in segments:
        body = "".join(_span_html(span) for span in block.get("spans", []))
        paragraphs.append(f"<p>{body}</p>")
    return "\n".join(paragraphs)


@dataclass(frozen=True)
class StoryRender:
    format: str
    sections: tuple[dict, ...]

    def to_json(self) -> dict:
        return {
            "format": self.format,
            "navigation": NAV_FLAGS[self.format],
            "sections": list(self.sections),
        }

    def content_hash(self) -> str:
        """Hash of the section payloads only; equal across the three formats."""
        blob = json.dumps(list(self.sections), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def render(outline: StoryOutline, fmt: str, graph: StoryGraph) -> StoryRender:
    """Render the outline to sections pairing narrative HTML with chart payloads."""
    if fmt not in FORMATS:
        raise FactError(f"unknown story format '{fmt}'")
    sections = []
    for block in outline.blocks:
        if block.text_node not in graph.nodes:
            raise NotFoundError(f"outline references missing node '{block.text_node}'", code="node_not_found")
        charts = []
        for vis_id in block.linked_vis:
            vis = graph.nodes.get(vis_id)
            if vis is None or vis.kind != VIS:
                raise NotFoundError(f"outline references missing chart '{vis_id}'", code="node_not_found")
            charts.append(
                {
                    "nodeId": vis_id,
                    "chartSpec": serialize_spec(vis.spec) if vis.spec else None,
                    "datasetId": vis.dataset_id,
                    "calloutReplay": dict(vis.latest_callout) if vis.latest_callout else None,
                }
            )
        sections.append(
            {
                "textNode": block.text_node,
                "html": segments_to_html(block.segments),
                "charts": charts,
                "factAnchors": list(block.fact_anchors),
            }
        )
    return StoryRender(format=fmt, sections=tuple(sections))


_INDEX_TEMPLATE = """<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
<meta name="viewport" content="width=device-width, initial-scale=1">
</head>
<body data-navigation="{nav}">
<main id="story-root"></main>
<script id="story-render" type="application/json">
{render_json}
</script>
</body>
</html>
"""


def render_bundle(outline: StoryOutline, fmt: str, graph: StoryGraph) -> dict[str, str]:
    """Self-contained export: story.json, index.html, and per-dataset CSVs.

    The full StoryRender rides inside index.html as an embedded JSON script
    tag, so re-parsing the bundle reproduces it losslessly.
    """
    story_render = render(outline, fmt, graph)
    files = {
        "story.json": json.dumps(save_story(graph), indent=2),
        "index.html": _INDEX_TEMPLATE.format(
            title=html.escape(graph.name or graph.id),
            nav=NAV_FLAGS[fmt],
            render_json=json.dumps(story_render.to_json(), indent=2),
        ),
    }
    for dataset in graph.datasets.values():
        files[f"data/{dataset.id}.csv"] = dataset.to_csv()
    return files


def parse_bundle_render(index_html: str) -> dict:
    """Recover the embedded StoryRender JSON from an exported index.html."""
    marker = '<script id="story-render" type="application/json">'
    start = index_html.index(marker) + len(marker)
    end = index_html.index("</script>", start)
    return json.loads(index_html[start:end])


def write_bundle(files: dict[str, str], out_dir: str | Path) -> Path:
    root = Path(out_dir)
    for rel_path, body in files.items():
        target = root / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(body, encoding="utf-8")
    return root
