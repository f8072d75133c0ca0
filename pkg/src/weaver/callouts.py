"""Callout resolution: turn a chart interaction into a replayable data package.

Selection is always computed from VALUE ranges; pixel/coordinate ranges ride
along as interaction metadata only, so the engine stays renderer-independent.
Brush boundaries are inclusive on both ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .charts import (
    BAR,
    LINE,
    PIE_DONUT,
    SCATTERPLOT,
    STACKED_BAR,
    SUNBURST,
    ChartMetadata,
    ChartSpec,
    derive_chart_metadata,
)
from .errors import CalloutError, EmptySelectionError
from .tabular import Dataset, temporal_key

BRUSH_2D = "brush2d"
BRUSH_1D_X = "brush1d_x"
DISCRETE_CLICK = "discrete_click"
LEGEND_CLICK = "legend_click"
ADD_TRENDLINE = "add_trendline"
TIMEFRAME_BRUSH = "timeframe_brush"
LINE_SELECT = "line_select"
TEMPORAL_POINT_CLICK = "temporal_point_click"
SEGMENT_SELECT = "segment_select"
SUNBURST_CLICK = "sunburst_click"
SUNBURST_CHAIN = "sunburst_chain"

KIND_WIRE = {
    BRUSH_2D: "brush2d",
    BRUSH_1D_X: "brush1dX",
    DISCRETE_CLICK: "discreteClick",
    LEGEND_CLICK: "legendClick",
    ADD_TRENDLINE: "addTrendline",
    TIMEFRAME_BRUSH: "timeframeBrush",
    LINE_SELECT: "lineSelect",
    TEMPORAL_POINT_CLICK: "temporalPointClick",
    SEGMENT_SELECT: "segmentSelect",
    SUNBURST_CLICK: "sunburstClick",
    SUNBURST_CHAIN: "sunburstChain",
}
WIRE_KIND = {v: k for k, v in KIND_WIRE.items()}

# Legal interactions per chart family (the interaction half of the taxonomy).
LEGAL_CALLOUTS: dict[str, tuple[str, ...]] = {
    SCATTERPLOT: (BRUSH_2D, DISCRETE_CLICK, LEGEND_CLICK, ADD_TRENDLINE),
    BAR: (DISCRETE_CLICK, LEGEND_CLICK, BRUSH_1D_X),
    LINE: (TIMEFRAME_BRUSH, LINE_SELECT, TEMPORAL_POINT_CLICK),
    STACKED_BAR: (LEGEND_CLICK, SEGMENT_SELECT),
    PIE_DONUT: (DISCRETE_CLICK,),
    SUNBURST: (SUNBURST_CLICK, SUNBURST_CHAIN),
}


@dataclass(frozen=True)
class Callout:
    chart_id: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CalloutPackage:
    """The S1 artifact: row selection plus data/chart/interaction metadata."""

    selection: tuple[int, ...]
    data_metadata: tuple[dict, ...]
    chart_metadata: ChartMetadata
    interaction_metadata: dict

    def to_json(self) -> dict:
        return {
            "selection": list(self.selection),
            "dataMetadata": [dict(m) for m in self.data_metadata],
            "chartMetadata": self.chart_metadata.to_json(),
            "interactionMetadata": dict(self.interaction_metadata),
        }


def legal_callouts(chart_type: str) -> frozenset[str]:
    if chart_type not in LEGAL_CALLOUTS:
        raise CalloutError(f"unknown chart type '{chart_type}'")
    return frozenset(LEGAL_CALLOUTS[chart_type])


def parse_callout(doc: dict) -> Callout:
    kind = doc.get("kind")
    if kind not in WIRE_KIND:
        raise CalloutError(f"unknown callout kind '{kind}'", field="kind")
    if not doc.get("chartId"):
        raise CalloutError("callout is missing chartId", field="chartId")
    params = doc.get("params") or {}
    if not isinstance(params, dict):
        raise CalloutError("params must be an object", field="params")
    return Callout(chart_id=doc["chartId"], kind=WIRE_KIND[kind], params=dict(params))


def serialize_callout(callout: Callout) -> dict:
    return {
        "chartId": callout.chart_id,
        "kind": KIND_WIRE[callout.kind],
        "params": dict(callout.params),
    }


def _ordered_range(value, label: str) -> tuple[float, float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise CalloutError(f"{label} must be a [low, high] numeric pair", field=label)
    lo, hi = value
    if lo > hi:
        raise CalloutError(f"{label} must be ordered low <= high", field=label)
    return float(lo), float(hi)


def _nonempty_list(params: dict, key: str) -> list:
    value = params.get(key)
    if not isinstance(value, list) or not value:
        raise CalloutError(f"'{key}' must be a non-empty list", field=key)
    return value


def _matches(cell, key) -> bool:
    if cell is None:
        return False
    return cell == key or str(cell) == str(key)


def _x_brush_indices(dataset: Dataset, spec: ChartSpec, lo, hi) -> list[int]:
    """Rows whose x value falls inside [lo, hi] (inclusive).

    Quantitative and temporal axes compare by value; a categorical axis
    treats the bounds as category values and selects everything between
    them in the dataset's first-appearance category order.
    """
    attr_type = dataset.column(spec.x_attr).attr_type
    if attr_type == "categorical":
        order: list = []
        for row in dataset.rows:
            v = row[spec.x_attr]
            if v is not None and v not in order:
                order.append(v)
        if lo not in order or hi not in order:
            raise CalloutError("brush bounds must be category values on a categorical axis")
        i, j = order.index(lo), order.index(hi)
        if i > j:
            raise CalloutError("xValueRange must be ordered low <= high")
        wanted = set(order[i : j + 1])
        return [k for k, row in enumerate(dataset.rows) if row[spec.x_attr] in wanted]
    if attr_type == "temporal":
        lo_k, hi_k = temporal_key(lo), temporal_key(hi)
        if lo_k is None or hi_k is None:
            raise CalloutError("temporal brush bounds must be years or ISO dates")
        if lo_k > hi_k:
            raise CalloutError("xValueRange must be ordered low <= high")
        out = []
        for k, row in enumerate(dataset.rows):
            key = temporal_key(row[spec.x_attr])
            if key is not None and lo_k <= key <= hi_k:
                out.append(k)
        return out
    lo_f, hi_f = _ordered_range([lo, hi], "xValueRange")
    return [
        k
        for k, row in enumerate(dataset.rows)
        if isinstance(row[spec.x_attr], (int, float)) and lo_f <= row[spec.x_attr] <= hi_f
    ]


def _key_attr(spec: ChartSpec) -> str:
    name = spec.identity_attr or spec.x_attr
    if not name:
        raise CalloutError("chart has no identity or x attribute to match clicked keys against")
    return name


def _resolve_selection(callout: Callout, spec: ChartSpec, dataset: Dataset) -> list[int]:
    kind = callout.kind
    params = callout.params

    if kind == BRUSH_2D:
        x_lo, x_hi = _ordered_range(params.get("xValueRange"), "xValueRange")
        y_lo, y_hi = _ordered_range(params.get("yValueRange"), "yValueRange")
        return [
            i
            for i, row in enumerate(dataset.rows)
            if isinstance(row[spec.x_attr], (int, float))
            and isinstance(row[spec.y_attr], (int, float))
            and x_lo <= row[spec.x_attr] <= x_hi
            and y_lo <= row[spec.y_attr] <= y_hi
        ]

    if kind in (BRUSH_1D_X, TIMEFRAME_BRUSH):
        rng = params.get("xValueRange")
        if not isinstance(rng, (list, tuple)) or len(rng) != 2:
            raise CalloutError("xValueRange must be a [low, high] pair", field="xValueRange")
        return _x_brush_indices(dataset, spec, rng[0], rng[1])

    if kind in (DISCRETE_CLICK, TEMPORAL_POINT_CLICK):
        keys = _nonempty_list(params, "keys")
        attr = spec.x_attr if kind == TEMPORAL_POINT_CLICK else _key_attr(spec)
        return [i for i, row in enumerate(dataset.rows) if any(_matches(row[attr], k) for k in keys)]

    if kind in (LEGEND_CLICK, LINE_SELECT):
        categories = _nonempty_list(params, "categories")
        if not spec.color_attr:
            raise CalloutError("legend selection requires a color encoding", field="categories")
        return [
            i
            for i, row in enumerate(dataset.rows)
            if any(_matches(row[spec.color_attr], c) for c in categories)
        ]

    if kind == ADD_TRENDLINE:
        return [
            i
            for i, row in enumerate(dataset.rows)
            if row[spec.x_attr] is not None and row[spec.y_attr] is not None
        ]

    if kind == SEGMENT_SELECT:
        pairs = _nonempty_list(params, "pairs")
        if not spec.color_attr:
            raise CalloutError("segment selection requires a color encoding", field="pairs")
        out = []
        for i, row in enumerate(dataset.rows):
            for pair in pairs:
                if len(pair) != 2:
                    raise CalloutError("each segment is a [bar, segment] pair", field="pairs")
                if _matches(row[spec.x_attr], pair[0]) and _matches(row[spec.color_attr], pair[1]):
                    out.append(i)
                    break
        return out

    if kind in (SUNBURST_CLICK, SUNBURST_CHAIN):
        paths = params.get("paths") if kind == SUNBURST_CLICK else [params.get("path")]
        if not isinstance(paths, list) or not paths or any(not p for p in paths):
            key = "paths" if kind == SUNBURST_CLICK else "path"
            raise CalloutError(f"'{key}' must contain at least one non-empty path", field=key)
        hierarchy = spec.hierarchy_attrs
        out = []
        for i, row in enumerate(dataset.rows):
            for path in paths:
                if len(path) > len(hierarchy):
                    raise CalloutError("path is deeper than the hierarchy")
                if all(_matches(row[attr], v) for attr, v in zip(hierarchy, path)):
                    out.append(i)
                    break
        return out

    raise CalloutError(f"unknown callout kind '{kind}'")


def resolve_callout(callout: Callout, spec: ChartSpec, dataset: Dataset) -> CalloutPackage:
    """Resolve a callout into its package; raises on illegal or empty selections."""
    if callout.kind not in legal_callouts(spec.chart_type):
        raise CalloutError(
            f"callout kind '{callout.kind}' is not legal on a {spec.chart_type}", field="kind"
        )
    selection = _resolve_selection(callout, spec, dataset)
    if not selection:
        raise EmptySelectionError("the callout selected no rows")
    return CalloutPackage(
        selection=tuple(selection),
        data_metadata=tuple(
            {"name": c.name, "attrType": c.attr_type} for c in dataset.columns
        ),
        chart_metadata=derive_chart_metadata(spec, dataset),
        interaction_metadata=serialize_callout(callout),
    )
