"""Text-to-vis: dataset summaries, chart recommendation, and materialization.

The default backend is an offline keyword heuristic; a remote backend can
plug in behind the same contract. Backend output is validated strictly
against the plan and spec schemas; unparseable entries are dropped with a
logged reason, never auto-repaired, while parseable-but-invalid ones are
kept and flagged so the UI can show why.
"""

from __future__ import annotations

import logging
import re
import uuid
from dataclasses import dataclass, field

import httpx

from .charts import ChartSpec, parse_spec, serialize_spec
from .errors import RecommendError, SpecError
from .errors import PlanError
from .tabular import (
    CATEGORICAL,
    QUANTITATIVE,
    TEMPORAL,
    DataOperationPlan,
    Dataset,
    parse_plan,
    plan_output_schema,
    serialize_plan,
    execute_plan,
)

logger = logging.getLogger(__name__)

MAX_RECOMMENDATIONS = 3
SUMMARY_SAMPLE_LIMIT = 3


@dataclass(frozen=True)
class ColumnSummary:
    name: str
    attr_type: str
    distinct_count: int
    sample_values: tuple = ()
    min: float | None = None
    max: float | None = None

    def to_json(self) -> dict:
        doc = {
            "name": self.name,
            "attrType": self.attr_type,
            "distinctCount": self.distinct_count,
            "sampleValues": list(self.sample_values),
        }
        if self.attr_type == QUANTITATIVE:
            doc["min"] = self.min
            doc["max"] = self.max
        return doc


@dataclass(frozen=True)
class DatasetSummary:
    dataset_id: str
    name: str
    columns: tuple[ColumnSummary, ...]

    def schema(self) -> dict[str, str]:
        return {c.name: c.attr_type for c in self.columns}

    def to_json(self) -> dict:
        return {
            "id": self.dataset_id,
            "name": self.name,
            "columns": [c.to_json() for c in self.columns],
        }


def summarize_dataset(dataset: Dataset) -> DatasetSummary:
    columns = []
    for col in dataset.columns:
        values = dataset.values(col.name)
        summary = ColumnSummary(
            name=col.name,
            attr_type=col.attr_type,
            distinct_count=col.distinct_count,
            sample_values=tuple(col.sample_values[:SUMMARY_SAMPLE_LIMIT]),
            min=min(values) if values and col.attr_type == QUANTITATIVE else None,
            max=max(values) if values and col.attr_type == QUANTITATIVE else None,
        )
        columns.append(summary)
    return DatasetSummary(dataset_id=dataset.id, name=dataset.name, columns=tuple(columns))


def summarize_datasets(datasets) -> list[DatasetSummary]:
    """One summary per distinct dataset id, in first-seen order."""
    seen = set()
    out = []
    for dataset in datasets:
        if dataset.id in seen:
            continue
        seen.add(dataset.id)
        out.append(summarize_dataset(dataset))
    return out


@dataclass
class VisRecommendation:
    rationale: str
    plan: DataOperationPlan
    spec: ChartSpec
    valid: bool = False
    violations: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "rationale": self.rationale,
            "plan": serialize_plan(self.plan),
            "spec": serialize_spec(self.spec),
            "valid": self.valid,
            "violations": list(self.violations),
        }


def recommendation_from_json(doc: dict) -> VisRecommendation:
    return VisRecommendation(
        rationale=doc.get("rationale", ""),
        plan=parse_plan(doc["plan"]),
        spec=parse_spec(doc["spec"]),
        valid=bool(doc.get("valid", False)),
        violations=tuple(doc.get("violations", ())),
    )


@dataclass
class RecommendResult:
    recommendations: list[VisRecommendation]
    reason: str | None = None

    def to_json(self) -> dict:
        doc = {"recommendations": [r.to_json() for r in self.recommendations]}
        if self.reason:
            doc["reason"] = self.reason
        return doc


# ---------------------------------------------------------------------------
# Heuristic backend
# ---------------------------------------------------------------------------

TEMPORAL_CUES = re.compile(
    r"over time|over the years|trend|increas|decreas|grow|declin|\byears?\b|\b(1[0-9]{3}|2[0-9]{3})\b",
    re.IGNORECASE,
)
COMPARE_CUES = re.compile(r"\bcompar|\bversus\b|\bvs\.?\b|\btop\b|\bhighest\b|\blowest\b", re.IGNORECASE)
RELATION_CUES = re.compile(r"relationship|correlat|associat|against", re.IGNORECASE)
SHARE_CUES = re.compile(r"share|proportion|percent|breakdown|makeup", re.IGNORECASE)


class RecommendBackend:
    """Boundary: selected text + summaries in, raw recommendation dicts out."""

    backend_id = "abstract"

    def recommend(self, selected_text: str, summaries: list[DatasetSummary]) -> list[dict]:
        raise NotImplementedError


def _content_spec_id(spec_doc: dict) -> str:
    import hashlib
    import json as _json

    digest = hashlib.sha1(_json.dumps(spec_doc, sort_keys=True).encode("utf-8")).hexdigest()
    return f"chart-{digest[:10]}"


def _first(summary: DatasetSummary, attr_type: str, exclude=()):
    for col in summary.columns:
        if col.attr_type == attr_type and col.name not in exclude:
            return col
    return None


def _lowest_cardinality_categorical(summary: DatasetSummary):
    cats = [c for c in summary.columns if c.attr_type == CATEGORICAL and c.distinct_count > 0]
    return min(cats, key=lambda c: c.distinct_count) if cats else None


def _grouping_candidate(summary: DatasetSummary, exclude=()):
    cats = [
        c
        for c in summary.columns
        if c.attr_type == CATEGORICAL and 2 <= c.distinct_count <= 10 and c.name not in exclude
    ]
    return min(cats, key=lambda c: c.distinct_count) if cats else None


def _mentioned_filter(text: str, summary: DatasetSummary):
    """A (column, value) pair whose sample value literally appears in the text."""
    lowered = text.lower()
    for col in summary.columns:
        if col.attr_type != CATEGORICAL:
            continue
        for value in col.sample_values:
            value_text = str(value)
            if len(value_text) >= 3 and value_text.lower() in lowered:
                return col.name, value
    return None


def _mentions_any_column(text: str, summary: DatasetSummary) -> bool:
    lowered = text.lower()
    return any(col.name.lower() in lowered for col in summary.columns)


class HeuristicBackend(RecommendBackend):
    """Deterministic keyword-rule recommender; needs no network."""

    backend_id = "heuristic"

    def recommend(self, selected_text: str, summaries: list[DatasetSummary]) -> list[dict]:
        out: list[dict] = []
        for summary in summaries:
            out.extend(self._for_dataset(selected_text, summary))
            if len(out) >= MAX_RECOMMENDATIONS:
                break
        for entry in out:
            entry["spec"]["id"] = _content_spec_id(entry["spec"])
        return out[:MAX_RECOMMENDATIONS]

    def _for_dataset(self, text: str, summary: DatasetSummary) -> list[dict]:
        recs: list[dict] = []
        filter_match = _mentioned_filter(text, summary)
        filter_steps = []
        if filter_match:
            column, value = filter_match
            filter_steps = [
                {"op": "filter", "column": column, "comparator": "=", "value": value}
            ]

        temporal = _first(summary, TEMPORAL)
        quantitative = _first(summary, QUANTITATIVE)

        if TEMPORAL_CUES.search(text) and temporal and quantitative:
            group = _grouping_candidate(summary, exclude=(filter_match[0],) if filter_match else ())
            group_by = [temporal.name] + ([group.name] if group else [])
            measure_col = f"sum_{quantitative.name}"
            spec = {
                "chartType": "line",
                "datasetId": summary.dataset_id,
                "xAttr": temporal.name,
                "yAttr": measure_col,
                "colorAttr": group.name if group else None,
                "title": f"{quantitative.name} over {temporal.name}",
            }
            recs.append(
                {
                    "rationale": f"Track how {quantitative.name} moves across {temporal.name}"
                    + (f" for each {group.name}" if group else ""),
                    "plan": {
                        "sourceDataset": summary.dataset_id,
                        "steps": filter_steps
                        + [
                            {
                                "op": "aggregate",
                                "groupBy": group_by,
                                "measure": quantitative.name,
                                "fn": "sum",
                            },
                            {"op": "sort", "column": temporal.name, "direction": "asc"},
                        ],
                    },
                    "spec": spec,
                }
            )

        if COMPARE_CUES.search(text) and quantitative:
            category = _lowest_cardinality_categorical(summary)
            if category:
                steps = filter_steps + [
                    {
                        "op": "aggregate",
                        "groupBy": [category.name],
                        "measure": quantitative.name,
                        "fn": "sum",
                    },
                    {"op": "sort", "column": f"sum_{quantitative.name}", "direction": "desc"},
                ]
                if re.search(r"\btop\b", text, re.IGNORECASE):
                    steps.append({"op": "limit", "n": 10})
                recs.append(
                    {
                        "rationale": f"Compare total {quantitative.name} across {category.name}",
                        "plan": {"sourceDataset": summary.dataset_id, "steps": steps},
                        "spec": {
                            "chartType": "bar",
                            "datasetId": summary.dataset_id,
                            "xAttr": category.name,
                            "yAttr": f"sum_{quantitative.name}",
                            "title": f"{quantitative.name} by {category.name}",
                        },
                    }
                )

        if RELATION_CUES.search(text):
            first = _first(summary, QUANTITATIVE)
            second = _first(summary, QUANTITATIVE, exclude=(first.name,)) if first else None
            if first and second:
                recs.append(
                    {
                        "rationale": f"Probe the relationship between {first.name} and {second.name}",
                        "plan": {"sourceDataset": summary.dataset_id, "steps": filter_steps},
                        "spec": {
                            "chartType": "scatterplot",
                            "datasetId": summary.dataset_id,
                            "xAttr": first.name,
                            "yAttr": second.name,
                            "title": f"{second.name} vs {first.name}",
                        },
                    }
                )

        if SHARE_CUES.search(text) and quantitative:
            category = _lowest_cardinality_categorical(summary)
            if category:
                recs.append(
                    {
                        "rationale": f"Show each {category.name}'s share of {quantitative.name}",
                        "plan": {
                            "sourceDataset": summary.dataset_id,
                            "steps": filter_steps
                            + [
                                {
                                    "op": "aggregate",
                                    "groupBy": [category.name],
                                    "measure": quantitative.name,
                                    "fn": "sum",
                                }
                            ],
                        },
                        "spec": {
                            "chartType": "pieDonut",
                            "datasetId": summary.dataset_id,
                            "xAttr": category.name,
                            "yAttr": f"sum_{quantitative.name}",
                            "title": f"Share of {quantitative.name} by {category.name}",
                        },
                    }
                )

        if not recs and (filter_match or _mentions_any_column(text, summary)):
            category = _lowest_cardinality_categorical(summary)
            if category:
                any_col = summary.columns[0].name
                recs.append(
                    {
                        "rationale": f"Count records by {category.name} as a starting point",
                        "plan": {
                            "sourceDataset": summary.dataset_id,
                            "steps": filter_steps
                            + [
                                {
                                    "op": "aggregate",
                                    "groupBy": [category.name],
                                    "measure": any_col,
                                    "fn": "count",
                                }
                            ],
                        },
                        "spec": {
                            "chartType": "bar",
                            "datasetId": summary.dataset_id,
                            "xAttr": category.name,
                            "yAttr": "count",
                            "title": f"Records by {category.name}",
                        },
                    }
                )
        return recs


class RemoteRecommendBackend(RecommendBackend):
    """HTTP backend: posts {selectedText, summaries}, expects {recommendations}."""

    backend_id = "remote"

    def __init__(self, endpoint: str, api_key: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def recommend(self, selected_text: str, summaries: list[DatasetSummary]) -> list[dict]:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            response = httpx.post(
                self.endpoint,
                json={"selectedText": selected_text, "summaries": [s.to_json() for s in summaries]},
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            body = response.json()
        except Exception as exc:
            raise RecommendError(f"recommendation backend failed: {exc}") from exc
        recommendations = body.get("recommendations")
        if not isinstance(recommendations, list):
            raise RecommendError("backend response is missing a recommendations array")
        return recommendations


def _validate_recommendation(raw: dict, summaries: list[DatasetSummary]) -> VisRecommendation | None:
    """Parse one raw entry; None means unparseable (dropped), invalid is kept."""
    try:
        plan = parse_plan(raw["plan"])
        spec = parse_spec(raw["spec"])
        rationale = str(raw.get("rationale", "")).strip() or "Suggested view"
    except (KeyError, TypeError, PlanError, SpecError) as exc:
        logger.warning("dropping unparseable recommendation: %s", exc)
        return None

    violations: list[str] = []
    by_id = {s.dataset_id: s for s in summaries}
    source = by_id.get(plan.source_dataset)
    if source is None:
        violations.append(f"unknown source dataset '{plan.source_dataset}'")
        return VisRecommendation(rationale, plan, spec, valid=False, violations=tuple(violations))
    try:
        schema = plan_output_schema(plan, source.schema())
    except PlanError as exc:
        violations.append(exc.message)
        return VisRecommendation(rationale, plan, spec, valid=False, violations=tuple(violations))
    violations.extend(_spec_schema_violations(spec, schema))
    return VisRecommendation(
        rationale, plan, spec, valid=not violations, violations=tuple(violations)
    )


def _spec_schema_violations(spec: ChartSpec, schema: dict[str, str]) -> list[str]:
    from .charts import REQUIRED_ENCODINGS

    violations = []
    for channel, allowed in REQUIRED_ENCODINGS[spec.chart_type].items():
        name = getattr(spec, channel)
        if name is None:
            violations.append(f"{channel} is required")
        elif name not in schema:
            violations.append(f"column '{name}' is not in the derived table")
        elif schema[name] not in allowed:
            violations.append(f"{channel} must be {' or '.join(allowed)}")
    for channel in ("color_attr", "identity_attr"):
        name = getattr(spec, channel)
        if channel in REQUIRED_ENCODINGS[spec.chart_type] or name is None:
            continue
        if name not in schema:
            violations.append(f"column '{name}' is not in the derived table")
    for name in spec.hierarchy_attrs:
        if name not in schema:
            violations.append(f"column '{name}' is not in the derived table")
    return violations


def recommend(selected_text: str, summaries: list[DatasetSummary],
              backend: RecommendBackend | None = None) -> RecommendResult:
    """Chart recommendations (at most 3) for a selected narrative span."""
    if not selected_text or not selected_text.strip():
        raise RecommendError("selected text is empty")
    backend = backend or HeuristicBackend()
    raw_entries = backend.recommend(selected_text, summaries)
    recommendations = []
    for raw in raw_entries[:MAX_RECOMMENDATIONS]:
        parsed = _validate_recommendation(raw, summaries)
        if parsed is not None:
            recommendations.append(parsed)
    reason = None if recommendations else "no matching attributes"
    return RecommendResult(recommendations=recommendations, reason=reason)


@dataclass(frozen=True)
class MaterializedChart:
    dataset: Dataset
    spec: ChartSpec
    provenance: dict = field(default_factory=dict)


def materialize(recommendation: VisRecommendation, datasets: dict[str, Dataset],
                source_text: str = "") -> MaterializedChart:
    """Execute a valid recommendation into a node-ready (dataset, spec) pair."""
    if not recommendation.valid:
        raise RecommendError(
            "cannot materialize an invalid recommendation: " + "; ".join(recommendation.violations)
        )
    source = datasets.get(recommendation.plan.source_dataset)
    if source is None:
        raise RecommendError(f"source dataset '{recommendation.plan.source_dataset}' is gone")
    derived = execute_plan(recommendation.plan, source)
    spec = ChartSpec(
        id=f"chart-{uuid.uuid4().hex[:10]}",
        chart_type=recommendation.spec.chart_type,
        dataset_id=derived.id,
        x_attr=recommendation.spec.x_attr,
        y_attr=recommendation.spec.y_attr,
        color_attr=recommendation.spec.color_attr,
        identity_attr=recommendation.spec.identity_attr,
        tooltip_attrs=recommendation.spec.tooltip_attrs,
        hierarchy_attrs=recommendation.spec.hierarchy_attrs,
        title=recommendation.spec.title,
    )
    from .charts import validate_spec

    report = validate_spec(spec, derived)
    if not report.ok:
        raise RecommendError(
            "materialized spec no longer validates: " + "; ".join(str(v) for v in report.violations)
        )
    return MaterializedChart(
        dataset=derived,
        spec=spec,
        provenance={"sourceText": source_text, "plan": serialize_plan(recommendation.plan)},
    )
