"""HTTP boundary: thin FastAPI adapters over the engine.

Handlers parse wire JSON with the engine's own parsers and serialize engine
values back; no fact math, graph logic, or generation lives here. With the
deterministic generator configured, every endpoint is network-free.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from . import export as story_export
from .callouts import parse_callout
from .charts import parse_spec, serialize_spec
from .errors import (
    DataError,
    FactError,
    GeneratorError,
    NotFoundError,
    WeaverError,
)
from .narrative import (
    ACCEPTED,
    REJECTED,
    DeterministicGenerator,
    NarrativeResult,
    RemoteGenerator,
    RevisionRequest,
    TextGenerator,
    generate_from_facts,
    revise,
)
from .recommend import (
    HeuristicBackend,
    RecommendBackend,
    RemoteRecommendBackend,
    materialize,
    recommend,
    summarize_dataset,
    summarize_datasets,
)
from .story import TEXT, VIS, StoryGraph, load_story, save_story
from .tabular import Dataset, load_dataset

DETERMINISTIC = "deterministic"
REMOTE = "remote"


@dataclass(frozen=True)
class ServiceConfig:
    addr: str = "127.0.0.1:8040"
    generator: str = DETERMINISTIC
    remote_url: str = ""
    remote_key_file: str = ""
    timeout_s: float = 30.0
    store_dir: str = ""

    def __post_init__(self):
        if self.generator not in (DETERMINISTIC, REMOTE):
            raise DataError(f"unknown generator backend '{self.generator}'")
        if self.generator == REMOTE and not self.remote_url:
            raise DataError("remote generator needs WEAVER_REMOTE_URL")
        if self.generator == DETERMINISTIC and (self.remote_url or self.remote_key_file):
            raise DataError("remote settings only apply to the remote backend")

    def read_key(self) -> str:
        if not self.remote_key_file:
            return ""
        return Path(self.remote_key_file).read_text(encoding="utf-8").strip()


def config_from_env(env: dict) -> ServiceConfig:
    return ServiceConfig(
        addr=env.get("WEAVER_ADDR", "127.0.0.1:8040"),
        generator=env.get("WEAVER_GENERATOR", DETERMINISTIC),
        remote_url=env.get("WEAVER_REMOTE_URL", ""),
        remote_key_file=env.get("WEAVER_REMOTE_KEY_FILE", ""),
        store_dir=env.get("WEAVER_STORE_DIR", ""),
    )


@dataclass
class _AppState:
    config: ServiceConfig
    stories: dict[str, StoryGraph] = field(default_factory=dict)
    datasets: dict[str, Dataset] = field(default_factory=dict)
    node_index: dict[str, str] = field(default_factory=dict)  # node id -> story id
    narratives: dict[str, NarrativeResult] = field(default_factory=dict)
    generation_tokens: dict[str, int] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)

    def generator(self) -> TextGenerator:
        if self.config.generator == REMOTE:
            return RemoteGenerator(
                self.config.remote_url, self.config.read_key(), self.config.timeout_s
            )
        return DeterministicGenerator()

    def recommender(self) -> RecommendBackend:
        if self.config.generator == REMOTE:
            return RemoteRecommendBackend(
                self.config.remote_url, self.config.read_key(), self.config.timeout_s
            )
        return HeuristicBackend()

    def story(self, story_id: str) -> StoryGraph:
        graph = self.stories.get(story_id)
        if graph is None:
            raise NotFoundError(f"unknown story '{story_id}'", code="story_not_found")
        return graph

    def story_of_node(self, node_id: str) -> StoryGraph:
        story_id = self.node_index.get(node_id)
        if story_id is None:
            raise NotFoundError(f"unknown node '{node_id}'", code="node_not_found")
        return self.story(story_id)

    def persist(self, graph: StoryGraph) -> None:
        if not self.config.store_dir:
            return
        root = Path(self.config.store_dir)
        root.mkdir(parents=True, exist_ok=True)
        path = root / f"{graph.id}.json"
        path.write_text(json.dumps(save_story(graph)), encoding="utf-8")

    def reindex(self, graph: StoryGraph) -> None:
        for node_id in list(self.node_index):
            if self.node_index[node_id] == graph.id:
                del self.node_index[node_id]
        for node_id in graph.nodes:
            self.node_index[node_id] = graph.id


def _cart_deltas(graph: StoryGraph, text_ids) -> dict:
    carts = {}
    for text_id in text_ids:
        node = graph.nodes.get(text_id)
        if node is not None:
            carts[text_id] = node.cart_json()
    return carts


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = _AppState(config=config or ServiceConfig())
    app = FastAPI(title="weaver", version="0.1.0")
    app.state.engine = state

    @app.exception_handler(WeaverError)
    async def weaver_error_handler(request: Request, exc: WeaverError):
        return JSONResponse(status_code=exc.http_status, content=exc.to_json())

    # -- stories ------------------------------------------------------------

    @app.post("/stories")
    def create_story(body: dict = Body(default={})):
        with state.lock:
            graph = StoryGraph(name=body.get("name", ""))
            state.stories[graph.id] = graph
            state.persist(graph)
            return {"id": graph.id, "name": graph.name}

    @app.get("/stories/{story_id}")
    def get_story(story_id: str):
        with state.lock:
            return save_story(state.story(story_id))

    @app.put("/stories/{story_id}")
    def put_story(story_id: str, body: dict = Body(...)):
        with state.lock:
            graph = load_story(body, datasets=state.datasets)
            if graph.id != story_id:
                raise DataError("container story id does not match the URL", field="story.id")
            state.stories[story_id] = graph
            for dataset in graph.datasets.values():
                state.datasets.setdefault(dataset.id, dataset)
            state.reindex(graph)
            state.persist(graph)
            return save_story(graph)

    # -- datasets -----------------------------------------------------------

    @app.post("/datasets")
    def upload_dataset(body: dict = Body(...)):
        with state.lock:
            if not body.get("csv"):
                raise DataError("dataset upload needs a 'csv' field", field="csv")
            dataset = load_dataset(body["csv"], body.get("name", "dataset"))
            state.datasets[dataset.id] = dataset
            story_id = body.get("storyId")
            if story_id:
                state.story(story_id).add_dataset(dataset)
            return summarize_dataset(dataset).to_json()

    @app.get("/datasets/{dataset_id}/summary")
    def dataset_summary(dataset_id: str):
        with state.lock:
            dataset = state.datasets.get(dataset_id)
            if dataset is None:
                raise NotFoundError(f"unknown dataset '{dataset_id}'", code="dataset_not_found")
            return summarize_dataset(dataset).to_json()

    # -- nodes and edges ------------------------------------------------------

    @app.post("/nodes")
    def create_node(body: dict = Body(...)):
        with state.lock:
            graph = state.story(body.get("storyId", ""))
            kind = body.get("kind")
            if kind == VIS:
                spec = parse_spec(body["spec"]) if body.get("spec") else None
                dataset_id = body.get("datasetId") or (spec.dataset_id if spec else None)
                if dataset_id and dataset_id not in graph.datasets and dataset_id in state.datasets:
                    graph.add_dataset(state.datasets[dataset_id])
                node = graph.add_vis_node(spec=spec, dataset_id=dataset_id, box=body.get("box"))
            elif kind == TEXT:
                node = graph.add_text_node(content=body.get("content"), box=body.get("box"))
            else:
                raise DataError(f"unknown node kind '{kind}'", field="kind")
            state.node_index[node.id] = graph.id
            state.persist(graph)
            return {"node": {"id": node.id, "kind": node.kind}, "carts": {}}

    @app.delete("/nodes/{node_id}")
    def delete_node(node_id: str):
        with state.lock:
            graph = state.story_of_node(node_id)
            affected = graph.downstream_of(node_id)
            graph.remove_node(node_id)
            del state.node_index[node_id]
            state.persist(graph)
            return {"carts": _cart_deltas(graph, affected)}

    @app.post("/edges")
    def create_edge(body: dict = Body(...)):
        with state.lock:
            graph = state.story_of_node(body.get("from", ""))
            graph.connect(body["from"], body["to"])
            state.persist(graph)
            return {"carts": _cart_deltas(graph, [body["to"]])}

    @app.delete("/edges")
    def delete_edge(body: dict = Body(...)):
        with state.lock:
            graph = state.story_of_node(body.get("from", ""))
            graph.disconnect(body["from"], body["to"])
            state.persist(graph)
            return {"carts": _cart_deltas(graph, [body["to"]])}

    # -- the vis-to-text loop ---------------------------------------------------

    @app.post("/nodes/{node_id}/callout")
    def node_callout(node_id: str, body: dict = Body(...)):
        with state.lock:
            graph = state.story_of_node(node_id)
            callout = parse_callout(body)
            hierarchy = graph.apply_callout(
                node_id, callout, attrs_of_interest=tuple(body.get("attrsOfInterest", ()))
            )
            state.persist(graph)
            return hierarchy.to_json()

    @app.post("/nodes/{node_id}/facts/select")
    def select_facts(node_id: str, body: dict = Body(...)):
        with state.lock:
            graph = state.story_of_node(node_id)
            graph.select_facts(node_id, body.get("factIds", []))
            state.persist(graph)
            return {"carts": _cart_deltas(graph, graph.downstream_of(node_id))}

    @app.post("/nodes/{node_id}/narrative")
    def node_narrative(node_id: str, body: dict = Body(default={})):
        with state.lock:
            graph = state.story_of_node(node_id)
            facts, metadata, interaction, preceding = graph.narrative_inputs(node_id)
            token = state.generation_tokens.get(node_id, 0) + 1
            state.generation_tokens[node_id] = token  # later requests supersede earlier ones
        result = generate_from_facts(
            facts, metadata, interaction, preceding, state.generator()
        )
        with state.lock:
            if state.generation_tokens.get(node_id) != token:
                raise GeneratorError("superseded by a newer generation request")
            state.narratives[node_id] = result
            return result.to_json()

    @app.post("/nodes/{node_id}/narrative/accept")
    def narrative_accept(node_id: str, body: dict = Body(...)):
        with state.lock:
            result = state.narratives.get(node_id)
            if result is None:
                raise NotFoundError("no narrative pending on this node", code="narrative_not_found")
            accepted = body.get("accepted")
            if accepted is True:
                result.accepted = ACCEPTED
                graph = state.story_of_node(node_id)
                node = graph.node(node_id)
                node.content = list(node.content) + [
                    {"type": "paragraph", "spans": [{"text": result.text}]}
                ]
                state.persist(graph)
            elif accepted is False:
                result.accepted = REJECTED
            else:
                raise DataError("'accepted' must be true or false", field="accepted")
            return result.to_json()

    @app.post("/nodes/{node_id}/narrative/revise")
    def narrative_revise(node_id: str, body: dict = Body(...)):
        with state.lock:
            result = state.narratives.get(node_id)
            if result is None:
                raise NotFoundError("no narrative on this node", code="narrative_not_found")
            span = body.get("targetSpan", [0, 0])
            request = RevisionRequest(
                target_span=(int(span[0]), int(span[1])),
                mode=body.get("mode", ""),
                custom_instruction=body.get("customInstruction", ""),
            )
        revised = revise(result, request, state.generator())
        with state.lock:
            state.narratives[node_id] = revised
            return revised.to_json()

    # -- the text-to-vis loop ----------------------------------------------------

    @app.post("/nodes/{node_id}/recommend")
    def node_recommend(node_id: str, body: dict = Body(...)):
        with state.lock:
            graph = state.story_of_node(node_id)
            node = graph.node(node_id)
            if node.kind != TEXT:
                raise FactError("recommendations are requested from text nodes")
            upstream = [
                graph.datasets[graph.nodes[v].dataset_id]
                for v in graph.upstream_of(node_id)
                if graph.nodes[v].dataset_id
            ]
            if not upstream:
                upstream = list(graph.datasets.values())
            summaries = summarize_datasets(upstream)
            backend = state.recommender()
        result = recommend(body.get("selectedText", ""), summaries, backend)
        with state.lock:
            node.recommendations = result.recommendations
            state.persist(graph)
            return result.to_json()

    @app.post("/nodes/{node_id}/recommend/materialize")
    def node_materialize(node_id: str, body: dict = Body(...)):
        with state.lock:
            graph = state.story_of_node(node_id)
            node = graph.node(node_id)
            index = body.get("index")
            if not isinstance(index, int) or not (0 <= index < len(node.recommendations)):
                raise NotFoundError("no recommendation at that index", code="recommendation_not_found")
            built = materialize(
                node.recommendations[index], graph.datasets, source_text=body.get("selectedText", "")
            )
            graph.add_dataset(built.dataset)
            state.datasets[built.dataset.id] = built.dataset
            vis = graph.add_vis_node(spec=built.spec, dataset_id=built.dataset.id, box=body.get("box"))
            state.node_index[vis.id] = graph.id
            state.persist(graph)
            return {
                "node": {"id": vis.id, "kind": vis.kind},
                "spec": serialize_spec(built.spec),
                "datasetSummary": summarize_dataset(built.dataset).to_json(),
                "provenance": built.provenance,
            }

    # -- export -------------------------------------------------------------

    @app.get("/stories/{story_id}/export")
    def export_story(story_id: str, format: str = "continuous"):
        with state.lock:
            graph = state.story(story_id)
            outline = story_export.build_outline(graph)
            render = story_export.render(outline, format, graph)
            files = story_export.render_bundle(outline, format, graph)
            return {"render": render.to_json(), "files": files}

    return app
