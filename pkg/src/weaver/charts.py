"""Declarative chart specs for the six supported families, with validation.

The JSON field names here are a fixed contract shared with the recommender
output and the canvas frontend: chartType, datasetId, xAttr, yAttr,
colorAttr, identityAttr, tooltipAttrs, hierarchyAttrs, title.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field

from .errors import SpecError
from .tabular import CATEGORICAL, QUANTITATIVE, TEMPORAL, Dataset, temporal_key

SCATTERPLOT = "scatterplot"
BAR = "bar"
LINE = "line"
STACKED_BAR = "stacked_bar"
PIE_DONUT = "pie_donut"
SUNBURST = "sunburst"

CHART_TYPES = (SCATTERPLOT, BAR, LINE, STACKED_BAR, PIE_DONUT, SUNBURST)

CHART_TYPE_WIRE = {
    SCATTERPLOT: "scatterplot",
    BAR: "bar",
    LINE: "line",
    STACKED_BAR: "stackedBar",
    PIE_DONUT: "pieDonut",
    SUNBURST: "sunburst",
}
WIRE_CHART_TYPE = {v: k for k, v in CHART_TYPE_WIRE.items()}

# Visual-channel requirements per chart family: channel -> allowed attr types.
REQUIRED_ENCODINGS: dict[str, dict[str, tuple[str, ...]]] = {
    SCATTERPLOT: {"x_attr": (QUANTITATIVE,), "y_attr": (QUANTITATIVE,)},
    BAR: {"x_attr": (CATEGORICAL, TEMPORAL), "y_attr": (QUANTITATIVE,)},
    LINE: {"x_attr": (TEMPORAL,), "y_attr": (QUANTITATIVE,)},
    STACKED_BAR: {
        "x_attr": (CATEGORICAL, TEMPORAL),
        "y_attr": (QUANTITATIVE,),
        "color_attr": (CATEGORICAL,),
    },
    PIE_DONUT: {"x_attr": (CATEGORICAL,), "y_attr": (QUANTITATIVE,)},
    SUNBURST: {"y_attr": (QUANTITATIVE,)},
}

_SPEC_FIELDS = {
    "id",
    "chartType",
    "datasetId",
    "xAttr",
    "yAttr",
    "colorAttr",
    "identityAttr",
    "tooltipAttrs",
    "hierarchyAttrs",
    "title",
}


@dataclass(frozen=True)
class ChartSpec:
    id: str
    chart_type: str
    dataset_id: str
    x_attr: str | None = None
    y_attr: str | None = None
    color_attr: str | None = None
    identity_attr: str | None = None
    tooltip_attrs: tuple[str, ...] = ()
    hierarchy_attrs: tuple[str, ...] = ()
    title: str = ""


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [{"field": v.field, "rule": v.rule} for v in self.violations],
        }


@dataclass(frozen=True)
class ChartMetadata:
    """Derived view of a spec bound to its data: encodings and axis extents."""

    chart_type: str
    encodings: dict = field(default_factory=dict)
    identity_label: str | None = None
    x_range: tuple | None = None
    y_range: tuple | None = None

    def to_json(self) -> dict:
        return {
            "chartType": CHART_TYPE_WIRE[self.chart_type],
            "encodings": dict(self.encodings),
            "identityLabel": self.identity_label,
            "xRange": list(self.x_range) if self.x_range else None,
            "yRange": list(self.y_range) if self.y_range else None,
        }


def new_spec(chart_type: str, dataset_id: str, **kwargs) -> ChartSpec:
    kwargs.setdefault("id", f"chart-{uuid.uuid4().hex[:10]}")
    return ChartSpec(chart_type=chart_type, dataset_id=dataset_id, **kwargs)


def _check_encoding(spec: ChartSpec, dataset: Dataset, channel: str, allowed, violations):
    name = getattr(spec, channel)
    if name is None:
        violations.append(Violation(channel, f"{channel} is required for {spec.chart_type}"))
        return
    schema = dataset.schema()
    if name not in schema:
        violations.append(Violation(channel, f"column '{name}' does not exist in the dataset"))
        return
    if schema[name] not in allowed:
        want = " or ".join(allowed) if len(allowed) > 1 else allowed[0]
        violations.append(Violation(channel, f"{channel} must be {want}"))


def validate_spec(spec: ChartSpec, dataset: Dataset) -> ValidationReport:
    """Check a spec's invariants against a dataset; violations are data, not errors."""
    violations: list[Violation] = []
    if spec.chart_type not in CHART_TYPES:
        violations.append(Violation("chart_type", f"unknown chart_type '{spec.chart_type}'"))
        return ValidationReport(False, tuple(violations))
    schema = dataset.schema()

    for channel, allowed in REQUIRED_ENCODINGS[spec.chart_type].items():
        _check_encoding(spec, dataset, channel, allowed, violations)

    if spec.chart_type == SUNBURST:
        if len(spec.hierarchy_attrs) < 2:
            violations.append(Violation("hierarchy_attrs", "sunburst needs at least 2 hierarchy attributes"))
        for name in spec.hierarchy_attrs:
            if name not in schema:
                violations.append(Violation("hierarchy_attrs", f"column '{name}' does not exist in the dataset"))
            elif schema[name] != CATEGORICAL:
                violations.append(Violation("hierarchy_attrs", f"hierarchy attribute '{name}' must be categorical"))
    elif spec.hierarchy_attrs:
        violations.append(Violation("hierarchy_attrs", "hierarchy_attrs only apply to sunburst"))

    optional_channels = ("color_attr", "identity_attr")
    for channel in optional_channels:
        if channel in REQUIRED_ENCODINGS[spec.chart_type]:
            continue
        name = getattr(spec, channel)
        if name is None:
            continue
        if name not in schema:
            violations.append(Violation(channel, f"column '{name}' does not exist in the dataset"))
        elif channel == "color_attr" and schema[name] != CATEGORICAL:
            violations.append(Violation(channel, "color_attr must be categorical"))

    for name in spec.tooltip_attrs:
        if name not in schema:
            violations.append(Violation("tooltip_attrs", f"column '{name}' does not exist in the dataset"))

    return ValidationReport(not violations, tuple(violations))


def _column_extent(dataset: Dataset, name: str):
    attr_type = dataset.column(name).attr_type
    values = dataset.values(name)
    if not values:
        raise SpecError(f"no plottable values in column '{name}'", field=name)
    if attr_type == TEMPORAL:
        lo = min(values, key=temporal_key)
        hi = max(values, key=temporal_key)
        return (lo, hi)
    return (min(values), max(values))


def derive_chart_metadata(spec: ChartSpec, dataset: Dataset) -> ChartMetadata:
    """Encoding map plus axis extents (nulls ignored) for a validating spec."""
    report = validate_spec(spec, dataset)
    if not report.ok:
        raise SpecError("spec does not validate: " + "; ".join(str(v) for v in report.violations))
    encodings: dict = {}
    if spec.x_attr:
        encodings["x"] = spec.x_attr
    if spec.y_attr:
        encodings["y"] = spec.y_attr
    if spec.color_attr:
        encodings["color"] = spec.color_attr
    if spec.identity_attr:
        encodings["identity"] = spec.identity_attr
    if spec.tooltip_attrs:
        encodings["tooltip"] = list(spec.tooltip_attrs)
    if spec.hierarchy_attrs:
        encodings["hierarchy"] = list(spec.hierarchy_attrs)
    return ChartMetadata(
        chart_type=spec.chart_type,
        encodings=encodings,
        identity_label=spec.identity_attr,
        x_range=_column_extent(dataset, spec.x_attr) if spec.x_attr else None,
        y_range=_column_extent(dataset, spec.y_attr) if spec.y_attr else None,
    )


def parse_spec(doc) -> ChartSpec:
    """Parse a chart spec from JSON; unknown fields are rejected by name."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed chart spec JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("chart spec must be a JSON object")
    unknown = sorted(set(doc) - _SPEC_FIELDS)
    if unknown:
        raise SpecError(f"unknown chart spec fields: {', '.join(unknown)}", field=unknown[0])
    wire_type = doc.get("chartType")
    if wire_type not in WIRE_CHART_TYPE:
        raise SpecError(f"unknown chartType '{wire_type}'", field="chartType")
    chart_type = WIRE_CHART_TYPE[wire_type]
    if not doc.get("datasetId"):
        raise SpecError("datasetId is required", field="datasetId")

    need = set(REQUIRED_ENCODINGS[chart_type])
    wire_of = {"x_attr": "xAttr", "y_attr": "yAttr", "color_attr": "colorAttr"}
    for channel in sorted(need):
        if not doc.get(wire_of[channel]):
            raise SpecError(
                f"{wire_of[channel]} is a required encoding for {wire_type}", field=wire_of[channel]
            )
    if chart_type == SUNBURST and len(doc.get("hierarchyAttrs") or []) < 2:
        raise SpecError("sunburst requires hierarchyAttrs with at least 2 columns", field="hierarchyAttrs")

    return ChartSpec(
        id=doc.get("id") or f"chart-{uuid.uuid4().hex[:10]}",
        chart_type=chart_type,
        dataset_id=doc["datasetId"],
        x_attr=doc.get("xAttr"),
        y_attr=doc.get("yAttr"),
        color_attr=doc.get("colorAttr"),
        identity_attr=doc.get("identityAttr"),
        tooltip_attrs=tuple(doc.get("tooltipAttrs") or ()),
        hierarchy_attrs=tuple(doc.get("hierarchyAttrs") or ()),
        title=doc.get("title") or "",
    )


def serialize_spec(spec: ChartSpec) -> dict:
    return {
        "id": spec.id,
        "chartType": CHART_TYPE_WIRE[spec.chart_type],
        "datasetId": spec.dataset_id,
        "xAttr": spec.x_attr,
        "yAttr": spec.y_attr,
        "colorAttr": spec.color_attr,
        "identityAttr": spec.identity_attr,
        "tooltipAttrs": list(spec.tooltip_attrs),
        "hierarchyAttrs": list(spec.hierarchy_attrs),
        "title": spec.title,
    }
