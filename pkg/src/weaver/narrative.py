"""Prompt assembly, narrative generation, and anchored revision.

Prompts carry facts, metadata, and ranges only; raw dataset rows never enter
a prompt. The default generator is a deterministic template backend so the
whole pipeline runs offline and reproducibly; a remote text-in/text-out
client can be swapped in behind the same boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from .charts import CHART_TYPE_WIRE, ChartMetadata
from .errors import FactError, GeneratorError
from .facts import DataFact
from .formatting import fmt_value

CONTEXT_LIMIT = 2000
CONNECTORS = ("Notably,", "In addition,", "Overall,")
EMPTY_CONTEXT = "(story begins here)"

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"

SHORTEN = "shorten"
EXPAND = "expand"
REGENERATE = "regenerate"
CUSTOM = "custom"
REVISION_MODES = (SHORTEN, EXPAND, REGENERATE, CUSTOM)


@dataclass(frozen=True)
class NarrativePrompt:
    chart_block: str
    context_block: str
    interaction_block: str
    facts_block: tuple[str, ...]
    instruction_block: str
    chart_metadata: ChartMetadata | None = None
    source_facts: tuple[DataFact, ...] = ()

    def to_text(self) -> str:
        facts = "\n".join(f"- {text}" for text in self.facts_block)
        return (
            f"## Visualization\n{self.chart_block}\n\n"
            f"## Context\n{self.context_block}\n\n"
            f"## Interaction\n{self.interaction_block}\n\n"
            f"## Data Facts\n{facts}\n\n"
            f"## Task\n{self.instruction_block}"
        )


@dataclass
class NarrativeResult:
    text: str
    anchored_facts: tuple[DataFact, ...]
    generator_id: str
    accepted: str = PENDING
    prompt: NarrativePrompt | None = None
    rotation: int = 0

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "anchoredFactIds": [f.id for f in self.anchored_facts],
            "generatorId": self.generator_id,
            "accepted": self.accepted,
        }


@dataclass(frozen=True)
class RevisionRequest:
    target_span: tuple[int, int]
    mode: str
    custom_instruction: str = ""


def _fmt_range(value_range) -> str:
    lo, hi = value_range
    lo = fmt_value(lo) if isinstance(lo, (int, float)) else str(lo)
    hi = fmt_value(hi) if isinstance(hi, (int, float)) else str(hi)
    return f"{lo} to {hi}"


def _describe_chart(meta: ChartMetadata) -> str:
    enc = meta.encodings
    parts = [f"chart type: {CHART_TYPE_WIRE[meta.chart_type]}"]
    if enc.get("y") and enc.get("x"):
        parts.append(f"{enc['y']} is plotted against {enc['x']}")
    elif enc.get("hierarchy"):
        parts.append(f"{enc.get('y')} is split across {' / '.join(enc['hierarchy'])}")
    if enc.get("color"):
        parts.append(f"colored by {enc['color']}")
    if meta.identity_label:
        parts.append(f"each mark is one {meta.identity_label}")
    if meta.x_range:
        parts.append(f"x axis spans {_fmt_range(meta.x_range)}")
    if meta.y_range:
        parts.append(f"y axis spans {_fmt_range(meta.y_range)}")
    return "; ".join(parts)


def _describe_interaction(interaction: dict, meta: ChartMetadata) -> str:
    kind = interaction.get("kind", "")
    params = interaction.get("params", {})
    enc = meta.encodings
    lines = [f"selection gesture: {kind}"]
    if "xValueRange" in params:
        lines.append(f"brushed {enc.get('x', 'x')} values {_fmt_range(params['xValueRange'])}")
        if meta.x_range:
            lines.append(f"full {enc.get('x', 'x')} axis {_fmt_range(meta.x_range)}")
    if "yValueRange" in params:
        lines.append(f"brushed {enc.get('y', 'y')} values {_fmt_range(params['yValueRange'])}")
        if meta.y_range:
            lines.append(f"full {enc.get('y', 'y')} axis {_fmt_range(meta.y_range)}")
    if "xCoordRange" in params:
        lines.append(f"brush pixels x {_fmt_range(params['xCoordRange'])}")
    if params.get("keys"):
        lines.append("clicked items: " + ", ".join(str(k) for k in params["keys"]))
    if params.get("categories"):
        lines.append("selected categories: " + ", ".join(str(c) for c in params["categories"]))
    if params.get("pairs"):
        lines.append(
            "selected segments: " + ", ".join(f"{a}/{b}" for a, b in params["pairs"])
        )
    if params.get("path"):
        lines.append("selected path: " + " / ".join(str(v) for v in params["path"]))
    if params.get("paths"):
        lines.append(
            "selected paths: " + "; ".join(" / ".join(str(v) for v in p) for p in params["paths"])
        )
    return "\n".join(lines)


INSTRUCTION = (
    "Weave the data facts above into a short narrative that fits the story so far. "
    "Use every fact, keep each number exactly as written, and add no data of your own."
)


def assemble_prompt(facts, chart_metadata: ChartMetadata, interaction_metadata: dict,
                    preceding_text: str = "") -> NarrativePrompt:
    """Build the generation prompt from facts, metadata, and story context."""
    facts = list(facts)
    if not facts:
        raise FactError("a narrative prompt needs at least one fact")
    context = (preceding_text or "").strip()
    context = context[-CONTEXT_LIMIT:] if context else EMPTY_CONTEXT
    return NarrativePrompt(
        chart_block=_describe_chart(chart_metadata),
        context_block=context,
        interaction_block=_describe_interaction(interaction_metadata or {}, chart_metadata),
        facts_block=tuple(f.template_text for f in facts),
        instruction_block=INSTRUCTION,
        chart_metadata=chart_metadata,
        source_facts=tuple(facts),
    )


class TextGenerator:
    """Boundary for narrative backends: prompt in, narrative text out."""

    generator_id = "abstract"

    def generate(self, prompt: NarrativePrompt, rotation: int = 0) -> str:
        raise NotImplementedError

    def revise(self, result: NarrativeResult, request: RevisionRequest) -> str:
        prompt_text = (
            result.prompt.to_text()
            + f"\n\n## Current Narrative\n{result.text}"
            + f"\n\n## Revision\n{_revision_instruction(request)}"
        )
        return self.generate_text(prompt_text)

    def generate_text(self, prompt_text: str) -> str:
        raise NotImplementedError


def _revision_instruction(request: RevisionRequest) -> str:
    if request.mode == SHORTEN:
        return "Shorten the narrative while keeping every fact number."
    if request.mode == EXPAND:
        return "Expand the narrative with the reference statistics, keeping every fact."
    if request.mode == REGENERATE:
        return "Rewrite the narrative with different phrasing and the same facts."
    return request.custom_instruction


class DeterministicGenerator(TextGenerator):
    """Offline backend: a chart lead-in, then facts joined by fixed connectors."""

    generator_id = "deterministic"

    def generate(self, prompt: NarrativePrompt, rotation: int = 0) -> str:
        meta = prompt.chart_metadata
        lead_in = self._lead_in(meta)
        facts = list(prompt.facts_block)
        sentences = [lead_in, f"{facts[0]}."]
        for i, fact in enumerate(facts[1:]):
            connector = CONNECTORS[(i + rotation) % len(CONNECTORS)]
            sentences.append(f"{connector} {fact}.")
        return " ".join(sentences)

    @staticmethod
    def _lead_in(meta: ChartMetadata | None) -> str:
        if meta is None:
            return "This chart frames the selection."
        enc = meta.encodings
        kind = CHART_TYPE_WIRE[meta.chart_type]
        if enc.get("hierarchy"):
            return f"This {kind} breaks {enc.get('y')} down by {' and '.join(enc['hierarchy'])}."
        if enc.get("x") and enc.get("y"):
            tail = f", grouped by {enc['color']}" if enc.get("color") else ""
            return f"This {kind} shows {enc['y']} by {enc['x']}{tail}."
        return f"This {kind} frames the selection."

    @staticmethod
    def stat_reference_sentence(meta: ChartMetadata | None) -> str:
        if meta is None or not (meta.x_range or meta.y_range):
            return "For reference, the chart covers the full extent of the data."
        enc = meta.encodings
        parts = []
        if meta.x_range:
            parts.append(f"{enc.get('x', 'x')} runs from {_fmt_range(meta.x_range)}")
        if meta.y_range:
            parts.append(f"{enc.get('y', 'y')} runs from {_fmt_range(meta.y_range)}")
        return "For reference, " + " and ".join(parts) + " across the whole chart."


class RemoteGenerator(TextGenerator):
    """Single text-in/text-out HTTP client for a remote completion service."""

    generator_id = "remote"

    def __init__(self, endpoint: str, api_key: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def generate(self, prompt: NarrativePrompt, rotation: int = 0) -> str:
        return self.generate_text(prompt.to_text())

    def generate_text(self, prompt_text: str) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            response = httpx.post(
                self.endpoint, json={"prompt": prompt_text}, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            return response.json()["text"]
        except Exception as exc:  # timeout, HTTP error, bad payload
            raise GeneratorError(f"remote generator failed: {exc}") from exc


def generate(prompt: NarrativePrompt, generator: TextGenerator,
             rotation: int = 0) -> NarrativeResult:
    """Run the generator; the result stays pending until accepted or rejected."""
    try:
        text = generator.generate(prompt, rotation=rotation)
    except GeneratorError as exc:
        exc.prompt = prompt
        raise
    return NarrativeResult(
        text=text,
        anchored_facts=prompt.source_facts,
        generator_id=generator.generator_id,
        prompt=prompt,
        rotation=rotation,
    )


def generate_from_facts(facts, chart_metadata, interaction_metadata,
                        preceding_text: str, generator: TextGenerator,
                        rotation: int = 0) -> NarrativeResult:
    prompt = assemble_prompt(facts, chart_metadata, interaction_metadata, preceding_text)
    return generate(prompt, generator, rotation=rotation)


def revise(result: NarrativeResult, request: RevisionRequest,
           generator: TextGenerator) -> NarrativeResult:
    """Produce a revised narrative; the anchored fact set never changes."""
    if result.accepted == REJECTED:
        raise FactError("cannot revise a rejected narrative")
    if result.accepted != ACCEPTED:
        raise FactError("accept the narrative before revising it")
    if request.mode not in REVISION_MODES:
        raise FactError(f"unknown revision mode '{request.mode}'")
    start, end = request.target_span
    if not (0 <= start <= end <= len(result.text)):
        raise FactError("revision span is out of bounds")
    if request.mode == CUSTOM and not request.custom_instruction.strip():
        raise FactError("custom revisions need an instruction")
    if request.mode != CUSTOM and request.custom_instruction:
        raise FactError("only custom revisions carry an instruction")

    rotation = result.rotation
    if isinstance(generator, DeterministicGenerator):
        facts = list(result.prompt.facts_block)
        if request.mode == SHORTEN:
            text = " ".join(f"{fact}." for fact in facts)
        elif request.mode == EXPAND:
            text = result.text + " " + DeterministicGenerator.stat_reference_sentence(
                result.prompt.chart_metadata
            )
        else:
            # regenerate and custom both re-run with shifted connectors; the
            # deterministic backend cannot interpret free-form instructions
            rotation = result.rotation + 1
            text = generator.generate(result.prompt, rotation=rotation)
    else:
        text = generator.revise(result, request)

    revised = NarrativeResult(
        text=text,
        anchored_facts=result.anchored_facts,
        generator_id=generator.generator_id,
        prompt=result.prompt,
        rotation=rotation,
    )
    return revised
