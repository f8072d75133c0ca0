"""The story document model: vis/text nodes, fact-streaming edges, and carts.

Edges only ever run vis -> text; a text node's cart always equals the union
of its upstream selections, re-streamed after every mutation. Each story is
mutated under a single writer lock, so op sequences are serializable.
"""

from __future__ import annotations

import re
import threading
import uuid
from dataclasses import dataclass, field

from .callouts import Callout, resolve_callout, serialize_callout
from .charts import ChartSpec, derive_chart_metadata, parse_spec, serialize_spec, validate_spec
from .errors import (
    DataError,
    FactError,
    NotFoundError,
    SpecError,
    StaleFactsError,
    StoryVersionError,
)
from .facts import DataFact, compute_facts
from .organizer import FactHierarchy, ScoringConfig, hierarchy_from_json, organize, score_facts
from .recommend import VisRecommendation, recommendation_from_json
from .tabular import Dataset, load_dataset

VIS = "vis"
TEXT = "text"

CONTAINER_VERSION = 1
_FACT_ID = re.compile(r"^(?P<node>.+):(?P<gen>\d+):(?P<seq>\d+)$")
_GROUP_ID = re.compile(r"^group:(?P<fact_type>[^:]+):(?P<attribute>.*)$")

DEFAULT_BOX = {"x": 0.0, "y": 0.0, "w": 360.0, "h": 260.0}


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:10]}"


@dataclass
class StreamedGroup:
    source: str
    facts: list[DataFact]

    def to_json(self) -> dict:
        return {"sourceNode": self.source, "facts": [f.to_json() for f in self.facts]}


@dataclass
class Node:
    id: str
    kind: str
    spec: ChartSpec | None = None
    dataset_id: str | None = None
    latest_callout: dict | None = None
    callout_generation: int = 0
    content: list = field(default_factory=list)
    hierarchy: FactHierarchy | None = None
    selected: set[str] = field(default_factory=set)
    streamed: list[StreamedGroup] = field(default_factory=list)
    recommendations: list[VisRecommendation] = field(default_factory=list)
    stale: bool = False

    def cart_json(self) -> dict:
        if self.kind == VIS:
            return {
                "hierarchy": self.hierarchy.to_json() if self.hierarchy else None,
                "selected": sorted(self.selected),
                "stale": self.stale,
            }
        return {
            "groups": [g.to_json() for g in self.streamed],
            "recommendations": [r.to_json() for r in self.recommendations],
            "stale": self.stale,
        }

    def plain_text(self) -> str:
        parts = []
        for block in self.content:
            parts.append("".join(span.get("text", "") for span in block.get("spans", [])))
        return "\n".join(parts)


def _validate_content(blocks) -> list:
    if blocks is None:
        return []
    if not isinstance(blocks, list):
        raise FactError("text content must be a list of blocks")
    for block in blocks:
        if not isinstance(block, dict) or block.get("type") != "paragraph":
            raise FactError("every content block must be a paragraph object")
        spans = block.get("spans")
        if not isinstance(spans, list):
            raise FactError("paragraph blocks need a spans list")
        for span in spans:
            if not isinstance(span, dict) or not isinstance(span.get("text", ""), str):
                raise FactError("spans carry a text string")
    return blocks


class StoryGraph:
    """One story's canvas state; all mutations go through the writer lock."""

    def __init__(self, story_id: str | None = None, name: str = ""):
        self.id = story_id or new_id("story")
        self.name = name
        self.nodes: dict[str, Node] = {}
        self.edges: list[tuple[str, str]] = []
        self.layout: dict[str, dict] = {}
        self.datasets: dict[str, Dataset] = {}
        self.events: list[tuple] = []
        self.command_log: list[dict] = []
        self.scoring = ScoringConfig()
        self._lock = threading.RLock()

    # -- helpers ------------------------------------------------------------

    def node(self, node_id: str) -> Node:
        node = self.nodes.get(node_id)
        if node is None:
            raise NotFoundError(f"unknown node '{node_id}'", code="node_not_found")
        return node

    def dataset(self, dataset_id: str) -> Dataset:
        ds = self.datasets.get(dataset_id)
        if ds is None:
            raise NotFoundError(f"unknown dataset '{dataset_id}'", code="dataset_not_found")
        return ds

    def _log(self, op: str, **payload):
        self.command_log.append({"op": op, **payload})

    def _emit(self, event: str, **payload):
        self.events.append((event, payload))

    def downstream_of(self, vis_id: str) -> list[str]:
        return [t for v, t in self.edges if v == vis_id]

    def upstream_of(self, text_id: str) -> list[str]:
        return [v for v, t in self.edges if t == text_id]

    def _restream(self, text_ids=None):
        """Recompute streamed cart groups from upstream selections."""
        targets = text_ids if text_ids is not None else [
            n.id for n in self.nodes.values() if n.kind == TEXT
        ]
        for text_id in targets:
            node = self.nodes.get(text_id)
            if node is None or node.kind != TEXT:
                continue
            groups = []
            for source_id in self.upstream_of(text_id):
                source = self.nodes[source_id]
                if not source.hierarchy or not source.selected:
                    continue
                facts = [f for f in source.hierarchy.all_facts() if f.id in source.selected]
                if facts:
                    groups.append(StreamedGroup(source=source_id, facts=facts))
            node.streamed = groups

    def streamed_facts(self, text_id: str) -> list[DataFact]:
        node = self.node(text_id)
        out = []
        for group in node.streamed:
            out.extend(group.facts)
        return out

    # -- dataset + node ops ---------------------------------------------------

    def add_dataset(self, dataset: Dataset) -> Dataset:
        with self._lock:
            self.datasets[dataset.id] = dataset
            self._log("add_dataset", dataset=dataset.id)
            return dataset

    def add_dataset_csv(self, csv_text: str, name: str) -> Dataset:
        return self.add_dataset(load_dataset(csv_text, name))

    def add_vis_node(self, spec: ChartSpec | None = None, dataset_id: str | None = None,
                     node_id: str | None = None, box: dict | None = None) -> Node:
        with self._lock:
            if spec is not None:
                dataset_id = dataset_id or spec.dataset_id
                report = validate_spec(spec, self.dataset(dataset_id))
                if not report.ok:
                    raise SpecError(
                        "spec does not validate: " + "; ".join(str(v) for v in report.violations)
                    )
            elif dataset_id is None:
                raise DataError("a vis node needs a spec or at least a dataset")
            else:
                self.dataset(dataset_id)
            node = Node(id=node_id or new_id("vis"), kind=VIS, spec=spec, dataset_id=dataset_id)
            if node.id in self.nodes:
                raise FactError(f"node id '{node.id}' already exists")
            self.nodes[node.id] = node
            self.layout[node.id] = dict(box or DEFAULT_BOX)
            self._log("add_vis_node", node=node.id)
            return node

    def add_text_node(self, content=None, node_id: str | None = None,
                      box: dict | None = None) -> Node:
        with self._lock:
            node = Node(id=node_id or new_id("text"), kind=TEXT, content=_validate_content(content))
            if node.id in self.nodes:
                raise FactError(f"node id '{node.id}' already exists")
            self.nodes[node.id] = node
            self.layout[node.id] = dict(box or DEFAULT_BOX)
            self._log("add_text_node", node=node.id)
            return node

    def remove_node(self, node_id: str) -> None:
        with self._lock:
            self.node(node_id)
            affected = self.downstream_of(node_id)
            self.edges = [(v, t) for v, t in self.edges if v != node_id and t != node_id]
            del self.nodes[node_id]
            self.layout.pop(node_id, None)
            self._restream(affected)
            self._log("remove_node", node=node_id)

    def duplicate_node(self, node_id: str) -> Node:
        """Copy spec/text and facts; selections are cleared and edges not copied."""
        with self._lock:
            source = self.node(node_id)
            copy_id = new_id(source.kind)
            node = Node(
                id=copy_id,
                kind=source.kind,
                spec=None,
                dataset_id=source.dataset_id,
                latest_callout=dict(source.latest_callout) if source.latest_callout else None,
                callout_generation=source.callout_generation,
                content=[
                    {"type": b["type"], "spans": [dict(s) for s in b.get("spans", [])]}
                    for b in source.content
                ],
            )
            if source.spec is not None:
                node.spec = parse_spec({**serialize_spec(source.spec), "id": new_id("chart")})
            if source.hierarchy is not None:
                doc = source.hierarchy.to_json()
                node.hierarchy = hierarchy_from_json(doc)
                for fact in node.hierarchy.all_facts():
                    match = _FACT_ID.match(fact.id or "")
                    if match:
                        fact.id = f"{copy_id}:{match.group('gen')}:{match.group('seq')}"
                    fact.source_node = copy_id
            self.nodes[copy_id] = node
            old_box = self.layout.get(node_id, DEFAULT_BOX)
            self.layout[copy_id] = {**old_box, "x": old_box.get("x", 0) + 40, "y": old_box.get("y", 0) + 40}
            self._log("duplicate_node", source=node_id, node=copy_id)
            return node

    def move_resize(self, node_id: str, **box) -> None:
        with self._lock:
            self.node(node_id)
            current = self.layout.setdefault(node_id, dict(DEFAULT_BOX))
            for key in ("x", "y", "w", "h"):
                if key in box and box[key] is not None:
                    current[key] = float(box[key])
            self._log("move_resize", node=node_id, **{k: v for k, v in box.items() if v is not None})

    def set_text(self, node_id: str, content) -> None:
        with self._lock:
            node = self.node(node_id)
            if node.kind != TEXT:
                raise FactError("only text nodes carry narrative content")
            node.content = _validate_content(content)
            self._log("set_text", node=node_id)

    # -- edges ---------------------------------------------------------------

    def connect(self, from_id: str, to_id: str) -> None:
        with self._lock:
            source = self.node(from_id)
            target = self.node(to_id)
            if source.kind != VIS or target.kind != TEXT:
                raise FactError("edges run from vis nodes to text nodes")
            if (from_id, to_id) in self.edges:
                raise FactError("edge already exists")
            self.edges.append((from_id, to_id))
            self._restream([to_id])
            self._log("connect", source=from_id, target=to_id)

    def disconnect(self, from_id: str, to_id: str) -> None:
        with self._lock:
            if (from_id, to_id) not in self.edges:
                raise NotFoundError("edge does not exist", code="edge_not_found")
            self.edges.remove((from_id, to_id))
            self._restream([to_id])
            self._log("disconnect", source=from_id, target=to_id)

    # -- callouts and selection ------------------------------------------------

    def apply_callout(self, vis_id: str, callout: Callout,
                      attrs_of_interest=()) -> FactHierarchy:
        """Run the callout -> facts -> score -> organize pipeline on one vis node.

        A new callout invalidates the node's previous fact ids: the selection
        clears and downstream carts drop this node's groups atomically.
        """
        with self._lock:
            node = self.node(vis_id)
            if node.kind != VIS or node.spec is None:
                raise FactError("callouts need a vis node with a chart spec")
            dataset = self.dataset(node.dataset_id)
            package = resolve_callout(callout, node.spec, dataset)
            bundle = compute_facts(package, dataset, attrs_of_interest=attrs_of_interest)
            score_facts(bundle.facts, self.scoring)
            node.callout_generation += 1
            for seq, fact in enumerate(bundle.facts):
                fact.id = f"{vis_id}:{node.callout_generation}:{seq}"
                fact.source_node = vis_id
            hierarchy = organize(
                bundle.facts,
                bundle.stat_table,
                self.scoring,
                chart_type=node.spec.chart_type,
                callout_kind=callout.kind,
                column_order=dataset.column_names(),
            )
            had_selection = bool(node.selected)
            node.hierarchy = hierarchy
            node.latest_callout = serialize_callout(callout)
            node.selected = set()
            node.stale = False
            self._restream(self.downstream_of(vis_id))
            if had_selection:
                self._emit("selection_cleared", node=vis_id, reason="new_callout")
            self._log("apply_callout", node=vis_id, kind=callout.kind)
            return hierarchy

    def _expand_fact_ids(self, node: Node, fact_ids) -> set[str]:
        hierarchy = node.hierarchy
        known = hierarchy.fact_ids()
        expanded: set[str] = set()
        for raw in fact_ids:
            group_match = _GROUP_ID.match(raw)
            if group_match:
                fact_type = group_match.group("fact_type")
                attribute = group_match.group("attribute")
                leaf = [
                    f.id
                    for g in hierarchy.groups
                    if g.fact_type == fact_type
                    for ag in g.attribute_groups
                    if ag.attribute == attribute
                    for f in ag.facts
                ]
                if not leaf:
                    raise FactError(f"unknown fact group '{raw}'")
                expanded.update(leaf)
                continue
            if raw in known:
                expanded.add(raw)
                continue
            id_match = _FACT_ID.match(raw)
            if (
                id_match
                and id_match.group("node") == node.id
                and int(id_match.group("gen")) < node.callout_generation
            ):
                raise StaleFactsError(
                    f"fact '{raw}' comes from an earlier callout on '{node.id}'"
                )
            raise FactError(f"unknown fact id '{raw}'")
        return expanded

    def select_facts(self, vis_id: str, fact_ids) -> set[str]:
        """Replace a vis node's selection; downstream carts re-stream."""
        with self._lock:
            node = self.node(vis_id)
            if node.kind != VIS:
                raise FactError("fact selection applies to vis nodes")
            if node.hierarchy is None:
                raise FactError("run a callout before selecting facts")
            node.selected = self._expand_fact_ids(node, fact_ids)
            self._restream(self.downstream_of(vis_id))
            self._log("select_facts", node=vis_id, count=len(node.selected))
            return set(node.selected)

    # -- narrative plumbing -----------------------------------------------------

    def narrative_inputs(self, text_id: str):
        """(facts, chart metadata, interaction metadata, preceding text) for S4."""
        node = self.node(text_id)
        if node.kind != TEXT:
            raise FactError("narratives are generated on text nodes")
        facts = self.streamed_facts(text_id)
        if not facts:
            raise FactError("the cart is empty: select facts on an upstream chart first")
        anchor = None
        for source_id in self.upstream_of(text_id):
            source = self.nodes[source_id]
            if source.latest_callout is not None and source.spec is not None:
                anchor = source
                break
        if anchor is None:
            raise FactError("no upstream chart with a callout to anchor the narrative")
        metadata = derive_chart_metadata(anchor.spec, self.dataset(anchor.dataset_id))
        return facts, metadata, anchor.latest_callout, node.plain_text()


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _node_to_json(node: Node) -> dict:
    doc = {
        "id": node.id,
        "kind": node.kind,
        "spec": serialize_spec(node.spec) if node.spec else None,
        "datasetId": node.dataset_id,
        "latestCallout": dict(node.latest_callout) if node.latest_callout else None,
        "calloutGeneration": node.callout_generation,
        "content": node.content,
        "cart": node.cart_json(),
    }
    return doc


def save_story(graph: StoryGraph, inline_datasets: bool = True) -> dict:
    """Serialize a story to its single-document JSON container."""
    datasets = []
    for dataset in graph.datasets.values():
        entry = {"id": dataset.id, "name": dataset.name, "sha256": dataset.content_hash()}
        if inline_datasets:
            entry["csv"] = dataset.to_csv()
        datasets.append(entry)
    return {
        "version": CONTAINER_VERSION,
        "story": {"id": graph.id, "name": graph.name},
        "nodes": [_node_to_json(n) for n in graph.nodes.values()],
        "edges": [[v, t] for v, t in graph.edges],
        "layout": {k: dict(v) for k, v in graph.layout.items()},
        "datasets": datasets,
        "commandLog": list(graph.command_log),
    }


def load_story(doc: dict, datasets: dict[str, Dataset] | None = None) -> StoryGraph:
    """Rebuild a story from its container.

    Inline CSVs are reloaded and checked against the stored hash; on a
    mismatch the story still loads but every cart is flagged stale.
    """
    if doc.get("version") != CONTAINER_VERSION:
        raise StoryVersionError(
            f"unsupported story container version {doc.get('version')!r}"
        )
    graph = StoryGraph(story_id=doc["story"]["id"], name=doc["story"].get("name", ""))
    hash_mismatch = False
    for entry in doc.get("datasets", []):
        dataset = None
        if datasets and entry["id"] in datasets:
            dataset = datasets[entry["id"]]
        elif entry.get("csv"):
            dataset = load_dataset(entry["csv"], entry.get("name", entry["id"]), dataset_id=entry["id"])
        if dataset is None:
            hash_mismatch = True
            continue
        if dataset.content_hash() != entry.get("sha256"):
            hash_mismatch = True
        graph.datasets[dataset.id] = dataset

    for node_doc in doc.get("nodes", []):
        node = Node(
            id=node_doc["id"],
            kind=node_doc["kind"],
            spec=parse_spec(node_doc["spec"]) if node_doc.get("spec") else None,
            dataset_id=node_doc.get("datasetId"),
            latest_callout=node_doc.get("latestCallout"),
            callout_generation=node_doc.get("calloutGeneration", 0),
            content=node_doc.get("content", []),
        )
        cart = node_doc.get("cart", {})
        if node.kind == VIS:
            if cart.get("hierarchy"):
                node.hierarchy = hierarchy_from_json(cart["hierarchy"])
            node.selected = set(cart.get("selected", []))
            node.stale = bool(cart.get("stale", False))
        else:
            node.recommendations = [
                recommendation_from_json(r) for r in cart.get("recommendations", [])
            ]
            node.stale = bool(cart.get("stale", False))
        graph.nodes[node.id] = node

    for from_id, to_id in doc.get("edges", []):
        if from_id not in graph.nodes or to_id not in graph.nodes:
            raise FactError(f"edge references a missing node: {from_id} -> {to_id}")
        graph.edges.append((from_id, to_id))
    graph.layout = {k: dict(v) for k, v in doc.get("layout", {}).items()}
    graph.command_log = list(doc.get("commandLog", []))

    if hash_mismatch:
        for node in graph.nodes.values():
            node.stale = True
        graph.events.append(("carts_stale", {"reason": "dataset_hash_mismatch"}))
    graph._restream()
    return graph
