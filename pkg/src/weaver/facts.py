"""Fact computation: statistics and template-rendered facts per callout family.

Only the fact families marked as computed in the callout taxonomy are emitted
by compute_facts; the remaining families stay visible in the dispatch table
and surface as explicit "not implemented" skip records instead of vanishing.
The individual family functions are all usable standalone.

Payload numerics are stored raw and formatted only at template-rendering
time: a payload value always appears verbatim (in formatted form) in its
fact's template text.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

from .callouts import WIRE_KIND, CalloutPackage
from .errors import EmptySelectionError, FactError
from .formatting import fmt_percent, fmt_value, formatted_forms
from .tabular import CATEGORICAL, QUANTITATIVE, Dataset, temporal_key

SUMMARY_STATS = "summary_stats"
FREQUENCY = "frequency"
RANK = "rank"
EXTREME = "extreme"
VALUES = "values"
OUTLIER = "outlier"
GROUP_VS_GLOBAL = "group_vs_global"
GROUP_VS_GROUP = "group_vs_group"
DIFFERENCE = "difference"
TREND = "trend"
CORRELATION = "correlation"
TRENDLINE = "trendline"
PROPORTION = "proportion"
CHAINED_PROPORTION = "chained_proportion"
LINE_COMPARISON = "line_comparison"

FACT_TYPES = (
    SUMMARY_STATS,
    FREQUENCY,
    RANK,
    EXTREME,
    VALUES,
    OUTLIER,
    GROUP_VS_GLOBAL,
    GROUP_VS_GROUP,
    DIFFERENCE,
    TREND,
    CORRELATION,
    TRENDLINE,
    PROPORTION,
    CHAINED_PROPORTION,
    LINE_COMPARISON,
)

with resources.files("weaver.data").joinpath("templates.json").open(encoding="utf-8") as _fh:
    TEMPLATES: dict[str, str] = json.load(_fh)


class CorrelationUndefinedError(FactError):
    code = "undefined_correlation"


@dataclass
class DataFact:
    fact_type: str
    attributes: tuple[str, ...]
    payload: dict
    template_text: str
    score: float = 0.0
    source_node: str | None = None
    provenance: dict | None = None
    id: str | None = None
    aux: dict = field(default_factory=dict, repr=False)  # scoring context, never serialized

    def numeric_payload(self) -> dict[str, float]:
        return {
            k: v
            for k, v in self.payload.items()
            if isinstance(v, (int, float)) and not isinstance(v, bool)
        }

    def embeds_payload(self) -> bool:
        """True when every numeric payload value appears formatted in the text."""
        return all(
            any(form in self.template_text for form in formatted_forms(v))
            for v in self.numeric_payload().values()
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "factType": self.fact_type,
            "attributes": list(self.attributes),
            "payload": dict(self.payload),
            "templateText": self.template_text,
            "score": self.score,
            "sourceNode": self.source_node,
            "provenance": dict(self.provenance) if self.provenance else None,
        }


def fact_from_json(doc: dict) -> DataFact:
    return DataFact(
        fact_type=doc["factType"],
        attributes=tuple(doc.get("attributes", ())),
        payload=dict(doc.get("payload", {})),
        template_text=doc["templateText"],
        score=doc.get("score", 0.0),
        source_node=doc.get("sourceNode"),
        provenance=doc.get("provenance"),
        id=doc.get("id"),
    )


def _render(template_key: str, numeric: dict | None = None, text: dict | None = None,
            fact_type: str = "", attributes=(), aux: dict | None = None) -> DataFact:
    """Build a fact whose payload is exactly the rendered numbers plus text slots.

    `numeric` maps slot name -> (value, kind) with kind "raw" or "percent".
    """
    numeric = numeric or {}
    text = text or {}
    slots = dict(text)
    payload: dict = dict(text)
    for name, (value, kind) in numeric.items():
        value = float(value) if isinstance(value, float) else value
        if not math.isfinite(float(value)):
            raise FactError(f"non-finite payload value for '{name}'")
        slots[name] = fmt_percent(value) if kind == "percent" else fmt_value(value)
        payload[name] = value
    template = TEMPLATES[template_key]
    return DataFact(
        fact_type=fact_type,
        attributes=tuple(attributes),
        payload=payload,
        template_text=template.format(**slots),
        aux=aux or {},
    )


# ---------------------------------------------------------------------------
# Descriptive statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatRow:
    count: int
    mean: float
    median: float
    min: float
    max: float
    std: float

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "median": self.median,
            "min": self.min,
            "max": self.max,
            "std": self.std,
        }


@dataclass(frozen=True)
class StatTable:
    """Selection and full-dataset stats per quantitative attribute."""

    entries: tuple[tuple[str, StatRow, StatRow], ...]  # (attribute, selection, global)

    def to_json(self) -> dict:
        return {
            "attributes": [
                {"attribute": attr, "selection": sel.to_json(), "global": glob.to_json()}
                for attr, sel, glob in self.entries
            ]
        }


def stat_table_from_json(doc: dict) -> StatTable:
    entries = []
    for row in doc.get("attributes", []):
        entries.append(
            (
                row["attribute"],
                StatRow(**row["selection"]),
                StatRow(**row["global"]),
            )
        )
    return StatTable(entries=tuple(entries))


def _mean(values) -> float:
    return sum(values) / len(values)


def _median(values) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2


def _sample_std(values) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / (n - 1))


def _quartile(values, p: float) -> float:
    """Linear-interpolation quantile over sorted values."""
    ordered = sorted(values)
    h = (len(ordered) - 1) * p
    lo = math.floor(h)
    hi = math.ceil(h)
    if lo == hi:
        return float(ordered[lo])
    return ordered[lo] + (h - lo) * (ordered[hi] - ordered[lo])


def summary_stats(values: list[float]) -> StatRow:
    """Count, mean, median, min, max, and sample (n-1) standard deviation."""
    values = [v for v in values if v is not None]
    if not values:
        raise FactError("summary statistics need at least one non-null value")
    return StatRow(
        count=len(values),
        mean=_mean(values),
        median=_median(values),
        min=min(values),
        max=max(values),
        std=_sample_std(values),
    )


def build_stat_table(selection_rows, dataset: Dataset, attrs) -> StatTable:
    entries = []
    for attr in attrs:
        sel_values = [r[attr] for r in selection_rows if r[attr] is not None]
        glob_values = dataset.values(attr)
        if not sel_values or not glob_values:
            continue
        entries.append((attr, summary_stats(sel_values), summary_stats(glob_values)))
    return StatTable(entries=tuple(entries))


# ---------------------------------------------------------------------------
# Fact families
# ---------------------------------------------------------------------------


def frequency_facts(selection_rows, attr: str, dataset: Dataset) -> list[DataFact]:
    """Per-category share of the selection, including zero-share categories."""
    if dataset.column(attr).attr_type != CATEGORICAL:
        raise FactError(f"frequency facts need a categorical attribute, got '{attr}'")
    categories: list = []
    for row in dataset.rows:
        v = row[attr]
        if v is not None and v not in categories:
            categories.append(v)
    sel_values = [r[attr] for r in selection_rows if r[attr] is not None]
    if not sel_values:
        return []
    glob_values = dataset.values(attr)
    n_sel = len(sel_values)
    n_glob = len(glob_values)
    distribution = [sel_values.count(c) / n_sel for c in categories]
    facts = []
    for cat, p_sel in zip(categories, distribution):
        p_glob = glob_values.count(cat) / n_glob
        aux = {
            "p_sel": p_sel,
            "p_glob": p_glob,
            "distribution": list(distribution),
        }
        if p_sel > 0:
            fact = _render(
                "frequency",
                numeric={"percent": (100.0 * p_sel, "percent")},
                text={"attribute": attr, "category": str(cat)},
                fact_type=FREQUENCY,
                attributes=(attr,),
                aux=aux,
            )
        else:
            fact = _render(
                "frequency_zero",
                text={"attribute": attr, "category": str(cat)},
                fact_type=FREQUENCY,
                attributes=(attr,),
                aux=aux,
            )
        facts.append(fact)
    return facts


def tukey_fences(values) -> tuple[float, float, float]:
    """(low fence, high fence, IQR) with interpolated quartiles."""
    q1 = _quartile(values, 0.25)
    q3 = _quartile(values, 0.75)
    iqr = q3 - q1
    return q1 - 1.5 * iqr, q3 + 1.5 * iqr, iqr


def detect_outliers(values, attr: str, identities) -> list[DataFact]:
    """Tukey-fence outliers among the selection; empty below 5 values."""
    pairs = [(v, i) for v, i in zip(values, identities) if v is not None]
    if len(pairs) < 5:
        return []
    low, high, iqr = tukey_fences([v for v, _ in pairs])
    facts = []
    for value, identity in pairs:
        if value < low or value > high:
            distance = max(low - value, value - high)
            facts.append(
                _render(
                    "outlier",
                    text={"identity": str(identity), "attribute": attr},
                    fact_type=OUTLIER,
                    attributes=(attr,),
                    aux={"value": value, "low_fence": low, "high_fence": high, "iqr": iqr,
                         "fence_distance": distance},
                )
            )
    return facts


def dense_ranks(values) -> dict[float, int]:
    """Dense descending rank per distinct value (ties share a rank)."""
    ranking = {}
    for i, v in enumerate(sorted(set(values), reverse=True)):
        ranking[v] = i + 1
    return ranking


def rank_extreme_facts(selection_rows, attr: str, dataset: Dataset, identity_attr: str):
    """(rank facts, extreme facts) for one quantitative attribute.

    Ranks are global (whole dataset, descending, dense); extremes name the
    selection's max and min items.
    """
    glob_values = dataset.values(attr)
    if not glob_values:
        return [], []
    ranking = dense_ranks(glob_values)
    n_glob = len(glob_values)
    items = [
        (r[attr], r[identity_attr])
        for r in selection_rows
        if r[attr] is not None and r[identity_attr] is not None
    ]
    rank_facts = []
    for value, identity in items:
        rank = ranking[value]
        rank_facts.append(
            _render(
                "rank",
                numeric={"rank": (rank, "raw"), "total": (n_glob, "raw")},
                text={"identity": str(identity), "attribute": attr},
                fact_type=RANK,
                attributes=(attr,),
                aux={"rank": rank, "n": n_glob, "value": value},
            )
        )
    extreme_facts = []
    if items:
        hi_value, hi_id = max(items, key=lambda p: p[0])
        lo_value, lo_id = min(items, key=lambda p: p[0])
        extreme_facts.append(
            _render(
                "extreme_high",
                numeric={"value": (hi_value, "raw")},
                text={"identity": str(hi_id), "attribute": attr},
                fact_type=EXTREME,
                attributes=(attr,),
                aux={"rank": ranking[hi_value], "n": n_glob},
            )
        )
        extreme_facts.append(
            _render(
                "extreme_low",
                numeric={"value": (lo_value, "raw")},
                text={"identity": str(lo_id), "attribute": attr},
                fact_type=EXTREME,
                attributes=(attr,),
                aux={"rank": ranking[lo_value], "n": n_glob},
            )
        )
    return rank_facts, extreme_facts


def value_facts(selection_rows, attr: str, labels) -> list[DataFact]:
    """Plain per-item value statements; reference material, scored low."""
    facts = []
    for row, label in zip(selection_rows, labels):
        if row[attr] is None:
            continue
        facts.append(
            _render(
                "value",
                numeric={"value": (row[attr], "raw")},
                text={"identity": str(label), "attribute": attr},
                fact_type=VALUES,
                attributes=(attr,),
            )
        )
    return facts


def group_comparison(sel_values, glob_values, attr: str) -> DataFact:
    """Selection mean vs overall mean, absolute and percent."""
    sel_values = [v for v in sel_values if v is not None]
    glob_values = [v for v in glob_values if v is not None]
    if not sel_values or not glob_values:
        raise FactError("group comparison needs non-empty groups")
    mean_sel = _mean(sel_values)
    mean_glob = _mean(glob_values)
    diff = abs(mean_sel - mean_glob)
    direction = "above" if mean_sel >= mean_glob else "below"
    if mean_glob == 0:
        return _render(
            "group_vs_global_absolute",
            numeric={"mean": (mean_sel, "raw"), "difference": (diff, "raw")},
            text={"attribute": attr},
            fact_type=GROUP_VS_GLOBAL,
            attributes=(attr,),
        )
    percent = 100.0 * diff / abs(mean_glob)
    return _render(
        "group_vs_global",
        numeric={
            "mean": (mean_sel, "raw"),
            "percent": (percent, "percent"),
            "difference": (diff, "raw"),
        },
        text={"attribute": attr, "direction": direction},
        fact_type=GROUP_VS_GLOBAL,
        attributes=(attr,),
        aux={"percent": percent},
    )


def group_vs_group(label_a: str, values_a, label_b: str, values_b, attr: str) -> DataFact:
    """Mean comparison between two named groups."""
    values_a = [v for v in values_a if v is not None]
    values_b = [v for v in values_b if v is not None]
    if not values_a or not values_b:
        raise FactError("group comparison needs non-empty groups")
    mean_a, mean_b = _mean(values_a), _mean(values_b)
    diff = abs(mean_a - mean_b)
    if mean_b == 0:
        return _render(
            "group_vs_group_absolute",
            numeric={"mean_a": (mean_a, "raw"), "mean_b": (mean_b, "raw"), "difference": (diff, "raw")},
            text={"group_a": label_a, "group_b": label_b, "attribute": attr},
            fact_type=GROUP_VS_GROUP,
            attributes=(attr,),
        )
    percent = 100.0 * diff / abs(mean_b)
    return _render(
        "group_vs_group",
        numeric={
            "mean_a": (mean_a, "raw"),
            "mean_b": (mean_b, "raw"),
            "percent": (percent, "percent"),
            "difference": (diff, "raw"),
        },
        text={
            "group_a": label_a,
            "group_b": label_b,
            "attribute": attr,
            "direction": "above" if mean_a >= mean_b else "below",
        },
        fact_type=GROUP_VS_GROUP,
        attributes=(attr,),
        aux={"percent": percent},
    )


def difference_facts(items: list[tuple[str, float]], attr: str) -> list[DataFact]:
    """Pairwise differences between consecutive clicked items, in click order."""
    usable = [(label, v) for label, v in items if v is not None]
    facts = []
    for (label_a, a), (label_b, b) in zip(usable, usable[1:]):
        diff = abs(b - a)
        if a == b:
            facts.append(
                _render(
                    "difference_equal",
                    numeric={"value": (a, "raw")},
                    text={"label_a": str(label_a), "label_b": str(label_b), "attribute": attr},
                    fact_type=DIFFERENCE,
                    attributes=(attr,),
                )
            )
            continue
        if a == 0:
            facts.append(
                _render(
                    "difference_no_base",
                    numeric={"value_a": (a, "raw"), "value_b": (b, "raw"), "difference": (diff, "raw")},
                    text={"label_a": str(label_a), "label_b": str(label_b), "attribute": attr},
                    fact_type=DIFFERENCE,
                    attributes=(attr,),
                )
            )
            continue
        percent = 100.0 * diff / abs(a)
        facts.append(
            _render(
                "difference",
                numeric={
                    "value_a": (a, "raw"),
                    "value_b": (b, "raw"),
                    "difference": (diff, "raw"),
                    "percent": (percent, "percent"),
                },
                text={
                    "label_a": str(label_a),
                    "label_b": str(label_b),
                    "attribute": attr,
                    "direction": "higher" if b > a else "lower",
                },
                fact_type=DIFFERENCE,
                attributes=(attr,),
                aux={"percent": percent},
            )
        )
    return facts


def ols_slope_intercept(xs, ys) -> tuple[float, float]:
    n = len(xs)
    mean_x = _mean(xs)
    mean_y = _mean(ys)
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0:
        raise FactError("zero x variance: cannot fit a slope")
    slope = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / sxx
    return slope, mean_y - slope * mean_x


FLATNESS_THRESHOLD = 0.05  # on the span-normalized slope


def trend_facts(points, attr: str, series: str | None = None,
                flatness: float = FLATNESS_THRESHOLD) -> list[DataFact]:
    """Trend direction plus start/end, extreme, range, and change facts.

    `points` is a list of (x_text, x_key, y) tuples; they are sorted by x_key
    here. Direction compares the index-step OLS slope, normalized by
    (index span / y range), against the flatness threshold.
    """
    points = sorted(
        [(t, k, y) for t, k, y in points if y is not None and k is not None],
        key=lambda p: p[1],
    )
    if len(points) < 2:
        raise FactError("trend facts need at least 2 points in the timeframe")
    ys = [y for _, _, y in points]
    slope, _ = ols_slope_intercept(list(range(len(ys))), ys)
    y_range = max(ys) - min(ys)
    if y_range == 0:
        normalized = 0.0
        direction = "flat"
    else:
        normalized = slope * (len(ys) - 1) / y_range
        if normalized > flatness:
            direction = "increasing"
        elif normalized < -flatness:
            direction = "decreasing"
        else:
            direction = "flat"
    subject = f"{attr} for {series}" if series else attr
    attrs = (attr,)

    facts = [
        _render(
            "trend",
            numeric={"slope": (slope, "raw")},
            text={"subject": subject, "direction": direction},
            fact_type=TREND,
            attributes=attrs,
            aux={"normalized_slope": normalized, "series": series, "template": "trend"},
        )
    ]
    start_text, _, start_y = points[0]
    end_text, _, end_y = points[-1]
    facts.append(
        _render(
            "span_edges",
            numeric={"start": (start_y, "raw"), "end": (end_y, "raw")},
            text={"subject": subject, "start_time": str(start_text), "end_time": str(end_text)},
            fact_type=VALUES,
            attributes=attrs,
            aux={"series": series, "template": "span_edges"},
        )
    )
    hi_text, _, hi_y = max(points, key=lambda p: p[2])
    lo_text, _, lo_y = min(points, key=lambda p: p[2])
    facts.append(
        _render(
            "span_max",
            numeric={"value": (hi_y, "raw")},
            text={"subject": subject, "time": str(hi_text)},
            fact_type=EXTREME,
            attributes=attrs,
            aux={"rank": 1, "n": len(points), "series": series, "template": "span_max"},
        )
    )
    facts.append(
        _render(
            "span_min",
            numeric={"value": (lo_y, "raw")},
            text={"subject": subject, "time": str(lo_text)},
            fact_type=EXTREME,
            attributes=attrs,
            aux={"rank": 1, "n": len(points), "series": series, "template": "span_min"},
        )
    )
    facts.append(
        _render(
            "span_range",
            numeric={"low": (lo_y, "raw"), "high": (hi_y, "raw"), "range": (y_range, "raw")},
            text={"subject": subject},
            fact_type=VALUES,
            attributes=attrs,
            aux={"series": series, "template": "span_range"},
        )
    )
    change = abs(end_y - start_y)
    if y_range == 0 or start_y == 0:
        facts.append(
            _render(
                "span_change_flat",
                numeric={"difference": (change, "raw")},
                text={"subject": subject},
                fact_type=DIFFERENCE,
                attributes=attrs,
                aux={"series": series, "template": "span_change_flat"},
            )
        )
    else:
        percent = 100.0 * change / abs(start_y)
        facts.append(
            _render(
                "span_change",
                numeric={"difference": (change, "raw"), "percent": (percent, "percent")},
                text={"subject": subject, "direction": "higher" if end_y > start_y else "lower"},
                fact_type=DIFFERENCE,
                attributes=attrs,
                aux={"percent": percent, "series": series, "template": "span_change"},
            )
        )
    return facts


def correlation_trendline(xs, ys, x_attr: str, y_attr: str) -> list[DataFact]:
    """Pearson correlation plus a fitted-line fact over paired values."""
    pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    if len(pairs) < 3:
        raise FactError("correlation needs at least 3 paired points")
    px = [x for x, _ in pairs]
    py = [y for _, y in pairs]
    mean_x, mean_y = _mean(px), _mean(py)
    sxx = sum((x - mean_x) ** 2 for x in px)
    syy = sum((y - mean_y) ** 2 for y in py)
    if sxx == 0 or syy == 0:
        raise CorrelationUndefinedError("correlation is undefined: zero variance")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(px, py))
    r = sxy / math.sqrt(sxx * syy)
    if abs(r) < 0.3:
        strength = "weak"
    elif abs(r) < 0.7:
        strength = "moderate"
    else:
        strength = "strong"
    slope, intercept = ols_slope_intercept(px, py)
    corr = _render(
        "correlation",
        numeric={"r": (r, "raw")},
        text={"x": x_attr, "y": y_attr, "strength": strength,
              "sign": "positive" if r >= 0 else "negative"},
        fact_type=CORRELATION,
        attributes=(x_attr, y_attr),
    )
    line = _render(
        "trendline",
        numeric={"slope": (slope, "raw"), "intercept": (abs(intercept), "raw")},
        text={"x": x_attr, "y": y_attr, "op": "+" if intercept >= 0 else "-"},
        fact_type=TRENDLINE,
        attributes=(x_attr, y_attr),
        aux={"intercept_signed": intercept},
    )
    return [corr, line]


def proportion_facts(segments: list[tuple[str, float]], whole: float, attr: str) -> list[DataFact]:
    """Per-segment shares of a whole, pairwise gaps, and the summed share."""
    if whole <= 0:
        raise FactError("proportions need a positive whole total")
    if any(v < 0 for _, v in segments):
        raise FactError("negative segment values are not allowed")
    facts = []
    shares = []
    for label, value in segments:
        pct = 100.0 * value / whole
        shares.append((str(label), pct))
        facts.append(
            _render(
                "proportion",
                numeric={"percent": (pct, "percent")},
                text={"category": str(label), "attribute": attr},
                fact_type=PROPORTION,
                attributes=(attr,),
                aux={"share": pct / 100.0},
            )
        )
    for (label_a, pct_a), (label_b, pct_b) in zip(shares, shares[1:]):
        if pct_a == pct_b:
            facts.append(
                _render(
                    "proportion_pair_equal",
                    numeric={"percent": (pct_a, "percent")},
                    text={"category_a": label_a, "category_b": label_b},
                    fact_type=PROPORTION,
                    attributes=(attr,),
                    aux={"share": pct_a / 100.0},
                )
            )
        else:
            facts.append(
                _render(
                    "proportion_pair",
                    numeric={
                        "percent_a": (pct_a, "percent"),
                        "percent_b": (pct_b, "percent"),
                        "gap": (abs(pct_a - pct_b), "percent"),
                    },
                    text={"category_a": label_a, "category_b": label_b},
                    fact_type=PROPORTION,
                    attributes=(attr,),
                    aux={"share": max(pct_a, pct_b) / 100.0},
                )
            )
    if len(segments) >= 2:
        total_pct = 100.0 * sum(v for _, v in segments) / whole
        facts.append(
            _render(
                "proportion_sum",
                numeric={"percent": (total_pct, "percent")},
                text={"attribute": attr},
                fact_type=PROPORTION,
                attributes=(attr,),
                aux={"share": total_pct / 100.0},
            )
        )
    return facts


def chained_proportion(path: list, dataset: Dataset, hierarchy_attrs, measure: str) -> DataFact:
    """Conditional share at each hierarchy hop and their product (= leaf/root)."""
    if not path:
        raise FactError("chained proportion needs a non-empty path")
    if len(path) > len(hierarchy_attrs):
        raise FactError("path is deeper than the hierarchy")

    def total(prefix) -> float:
        out = 0.0
        for row in dataset.rows:
            if row[measure] is None or row[measure] < 0:
                if row[measure] is not None:
                    raise FactError("negative measure values are not allowed")
                continue
            if all(
                row[attr] is not None and str(row[attr]) == str(v)
                for attr, v in zip(hierarchy_attrs, prefix)
            ):
                out += row[measure]
        return out

    numeric = {}
    hop_strings = []
    parent: list = []
    for i, value in enumerate(path):
        parent_total = total(parent)
        if parent_total == 0:
            raise FactError(f"zero parent total at path step {i}")
        child_total = total(parent + [value])
        hop_pct = 100.0 * child_total / parent_total
        numeric[f"hop_{i + 1}"] = (hop_pct, "percent")
        hop_strings.append(fmt_percent(hop_pct) + "%")
        parent.append(value)

    chained_pct = 1.0
    for key, (pct, _) in numeric.items():
        chained_pct *= pct / 100.0
    chained_pct *= 100.0
    numeric["chained"] = (chained_pct, "percent")
    # Assemble via the stored template; the hop list is pre-joined text.
    slots = {name: fmt_percent(v) for name, (v, _) in numeric.items()}
    text = TEMPLATES["chained_proportion"].format(
        path=" / ".join(str(v) for v in path),
        hops=", ".join(hop_strings),
        chained=slots["chained"],
        attribute=measure,
    )
    payload = {name: v for name, (v, _) in numeric.items()}
    payload["path"] = " / ".join(str(v) for v in path)
    return DataFact(
        fact_type=CHAINED_PROPORTION,
        attributes=tuple(hierarchy_attrs[: len(path)]) + (measure,),
        payload=payload,
        template_text=text,
        aux={"share": chained_pct / 100.0},
    )


def line_comparison(series_points: dict[str, list], attr: str) -> list[DataFact]:
    """Per-series trends plus pairwise mean/end comparisons over the shared x range."""
    if len(series_points) < 2:
        raise FactError("line comparison needs at least 2 series")
    key_sets = [
        {k for _, k, y in pts if y is not None and k is not None}
        for pts in series_points.values()
    ]
    shared = set.intersection(*key_sets)
    if not shared:
        raise FactError("selected series share no x range")
    facts = []
    stats = []
    for label, pts in series_points.items():
        clean = sorted([(t, k, y) for t, k, y in pts if y is not None and k is not None],
                       key=lambda p: p[1])
        if len(clean) >= 2:
            facts.extend(trend_facts(clean, attr, series=str(label)))
        overlap = [p for p in clean if p[1] in shared]
        mean = _mean([y for _, _, y in overlap])
        end = overlap[-1][2]
        stats.append((str(label), mean, end))
    for (label_a, mean_a, end_a), (label_b, mean_b, end_b) in zip(stats, stats[1:]):
        numeric = {
            "mean_a": (mean_a, "raw"),
            "mean_b": (mean_b, "raw"),
            "end_a": (end_a, "raw"),
            "end_b": (end_b, "raw"),
        }
        aux = {}
        if mean_b != 0:
            numeric["ratio"] = (mean_a / mean_b, "raw")
            template = "line_comparison_ratio"
            aux["percent"] = 100.0 * abs(mean_a - mean_b) / abs(mean_b)
        else:
            template = "line_comparison"
        facts.append(
            _render(
                template,
                numeric=numeric,
                text={"series_a": label_a, "series_b": label_b, "attribute": attr},
                fact_type=LINE_COMPARISON,
                attributes=(attr,),
                aux=aux,
            )
        )
    return facts


# ---------------------------------------------------------------------------
# Dispatch: (chart type, callout kind) -> ordered fact families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyCell:
    slug: str           # functional family name
    executor: str | None  # None = present in the taxonomy but not computed
    starred: bool


DISPATCH: dict[tuple[str, str], tuple[FamilyCell, ...]] = {
    ("scatterplot", "brush2d"): (
        FamilyCell("summary_stats", "stats", True),
        FamilyCell("frequency", "frequency", True),
        FamilyCell("group_vs_global", None, False),
        FamilyCell("rank", "rank", True),
        FamilyCell("values", "values", True),
    ),
    ("scatterplot", "discrete_click"): (
        FamilyCell("values", "values", True),
        FamilyCell("outlier", "outliers", True),
        FamilyCell("rank", "rank", True),
        FamilyCell("summary_stats", "stats", True),
        FamilyCell("group_vs_global", None, False),
        FamilyCell("frequency", "frequency", True),
    ),
    ("scatterplot", "legend_click"): (
        FamilyCell("summary_stats", "stats", True),
        FamilyCell("frequency", "frequency", True),
        FamilyCell("rank", "rank", True),
        FamilyCell("group_vs_global", None, False),
        FamilyCell("group_vs_group", None, False),
        FamilyCell("outlier", "outliers", True),
        FamilyCell("values", "values", True),
    ),
    ("scatterplot", "add_trendline"): (
        FamilyCell("correlation", None, False),
        FamilyCell("trendline", None, False),
    ),
    ("bar", "discrete_click"): (
        FamilyCell("values", "values", True),
        FamilyCell("rank_extreme", "rank_extreme", True),
        FamilyCell("difference", "difference_clicks", True),
        FamilyCell("summary_stats", "stats", True),
    ),
    ("bar", "legend_click"): (
        FamilyCell("summary_stats", "stats", True),
        FamilyCell("frequency", "frequency", True),
        FamilyCell("rank", "rank", True),
        FamilyCell("group_vs_global", None, False),
        FamilyCell("group_vs_group", None, False),
        FamilyCell("outlier", "outliers", True),
        FamilyCell("values", "values", True),
    ),
    ("bar", "brush1d_x"): (
        FamilyCell("summary_stats", "stats", True),
        FamilyCell("frequency", "frequency", True),
        FamilyCell("rank", "rank", True),
        FamilyCell("group_vs_global", None, False),
        FamilyCell("values", "values", True),
    ),
    ("line", "timeframe_brush"): (
        FamilyCell("trend", "trend", True),
        FamilyCell("span_edges", "span_edges", True),
        FamilyCell("span_extremes", "span_extremes", True),
        FamilyCell("span_range", "span_range", True),
        FamilyCell("span_change", "span_change", True),
    ),
    ("line", "line_select"): (
        FamilyCell("trend", "line_trends", True),
        FamilyCell("line_comparison", "line_comparison", True),
        FamilyCell("compare_to_others", None, False),
    ),
    ("line", "temporal_point_click"): (
        FamilyCell("point_value_rank", None, False),
        FamilyCell("date_comparison", None, False),
        FamilyCell("trend_position", None, False),
    ),
    ("stacked_bar", "legend_click"): (
        FamilyCell("joint_contribution", None, False),
        FamilyCell("joint_relation", None, False),
        FamilyCell("subcategory_comparison", None, False),
        FamilyCell("individual_vs_group", None, False),
    ),
    ("stacked_bar", "segment_select"): (
        FamilyCell("proportion", None, False),
        FamilyCell("proportion_comparison", None, False),
    ),
    ("pie_donut", "discrete_click"): (
        FamilyCell("proportion", None, False),
        FamilyCell("proportion_comparison", None, False),
        FamilyCell("proportion_sum_vs_total", None, False),
    ),
    ("sunburst", "sunburst_click"): (
        FamilyCell("proportion", None, False),
        FamilyCell("proportion_comparison", None, False),
        FamilyCell("hierarchical_proportion", None, False),
    ),
    ("sunburst", "sunburst_chain"): (
        FamilyCell("chained_proportion", None, False),
    ),
}


@dataclass(frozen=True)
class SkipRecord:
    family: str
    reason: str

    def to_json(self) -> dict:
        return {"family": self.family, "reason": self.reason}


@dataclass
class FactBundle:
    facts: list[DataFact]
    stat_table: StatTable
    skipped: list[SkipRecord]

    def to_json(self) -> dict:
        return {
            "facts": [f.to_json() for f in self.facts],
            "statTable": self.stat_table.to_json(),
            "skipped": [s.to_json() for s in self.skipped],
        }


class _FactContext:
    """Shared state for one compute_facts run."""

    def __init__(self, package: CalloutPackage, dataset: Dataset, attrs_of_interest):
        self.package = package
        self.dataset = dataset
        meta = package.chart_metadata
        self.chart_type = meta.chart_type
        self.kind = WIRE_KIND[package.interaction_metadata["kind"]]
        self.params = package.interaction_metadata.get("params", {})
        enc = meta.encodings
        self.x_attr = enc.get("x")
        self.y_attr = enc.get("y")
        self.color_attr = enc.get("color")
        self.identity_attr = enc.get("identity")
        mapped: list[str] = []
        for name in (self.x_attr, self.y_attr, self.color_attr, self.identity_attr):
            if name:
                mapped.append(name)
        mapped.extend(enc.get("tooltip", []))
        mapped.extend(enc.get("hierarchy", []))
        wanted = set(mapped) | set(attrs_of_interest)
        self.attrs = [c.name for c in dataset.columns if c.name in wanted]
        self.quant_attrs = [a for a in self.attrs if dataset.column(a).attr_type == QUANTITATIVE]
        self.cat_attrs = [
            a
            for a in self.attrs
            if dataset.column(a).attr_type == CATEGORICAL and a != self.identity_attr
        ]
        self.selection_rows = [dataset.rows[i] for i in package.selection]
        self._trend_bundles: dict | None = None

    def labels(self) -> list[str]:
        attr = self.identity_attr or self.x_attr
        out = []
        for i, row in zip(self.package.selection, self.selection_rows):
            if attr and row[attr] is not None:
                out.append(str(row[attr]))
            else:
                out.append(f"row {i}")
        return out

    def series_split(self) -> dict[str | None, list]:
        """Selection points grouped by the color series (or one unnamed series)."""
        groups: dict[str | None, list] = {}
        for row in self.selection_rows:
            x = row[self.x_attr]
            y = row[self.y_attr]
            series = str(row[self.color_attr]) if self.color_attr and row[self.color_attr] is not None else None
            key = temporal_key(x)
            groups.setdefault(series, []).append((x, key, y))
        return groups

    def trend_bundles(self) -> dict:
        """Per-series trend fact bundles, keyed by series label, computed once."""
        if self._trend_bundles is None:
            bundles = {}
            for series, points in self.series_split().items():
                usable = [(t, k, y) for t, k, y in points if y is not None and k is not None]
                if len(usable) < 2:
                    bundles[series] = None
                    continue
                bundles[series] = trend_facts(usable, self.y_attr, series=series)
            self._trend_bundles = bundles
        return self._trend_bundles


def _exec_frequency(ctx: _FactContext):
    facts, skips = [], []
    if not ctx.cat_attrs:
        skips.append(SkipRecord("frequency", "no categorical attributes to profile"))
    for attr in ctx.cat_attrs:
        facts.extend(frequency_facts(ctx.selection_rows, attr, ctx.dataset))
    return facts, skips


def _exec_rank(ctx: _FactContext, include_extremes: bool = False):
    facts, skips = [], []
    label_attr = ctx.identity_attr or ctx.x_attr
    if not label_attr:
        return [], [SkipRecord("rank", "no identity attribute to name ranked items")]
    for attr in ctx.quant_attrs:
        ranks, extremes = rank_extreme_facts(ctx.selection_rows, attr, ctx.dataset, label_attr)
        facts.extend(ranks)
        if include_extremes:
            facts.extend(extremes)
    return facts, skips


def _exec_values(ctx: _FactContext):
    facts = []
    labels = ctx.labels()
    for attr in ctx.quant_attrs:
        facts.extend(value_facts(ctx.selection_rows, attr, labels))
    return facts, []


def _exec_outliers(ctx: _FactContext):
    facts, skips = [], []
    labels = ctx.labels()
    for attr in ctx.quant_attrs:
        values = [r[attr] for r in ctx.selection_rows]
        usable = [v for v in values if v is not None]
        if len(usable) < 5:
            skips.append(SkipRecord("outlier", f"fewer than 5 values for '{attr}'"))
            continue
        facts.extend(detect_outliers(values, attr, labels))
    return facts, skips


def _exec_difference_clicks(ctx: _FactContext):
    keys = ctx.params.get("keys", [])
    if len(keys) < 2:
        return [], [SkipRecord("difference", "needs at least 2 clicked items")]
    attr = ctx.y_attr
    key_attr = ctx.identity_attr or ctx.x_attr
    items = []
    for key in keys:
        rows = [r for r in ctx.selection_rows if r[key_attr] is not None and str(r[key_attr]) == str(key)]
        values = [r[attr] for r in rows if r[attr] is not None]
        items.append((str(key), sum(values) if values else None))
    return difference_facts(items, attr), []


def _trend_pick(ctx: _FactContext, wanted_templates: tuple[str, ...], family: str):
    facts, skips = [], []
    bundles = ctx.trend_bundles()
    for series, bundle in bundles.items():
        if bundle is None:
            label = f" for series '{series}'" if series else ""
            skips.append(SkipRecord(family, f"fewer than 2 points in the timeframe{label}"))
            continue
        for fact in bundle:
            if fact.aux.get("template") in wanted_templates:
                facts.append(fact)
    return facts, skips


def _exec_line_trends(ctx: _FactContext):
    return _trend_pick(ctx, ("trend",), "trend")


def _exec_line_comparison(ctx: _FactContext):
    groups = ctx.series_split()
    named = {k: v for k, v in groups.items() if k is not None}
    if len(named) < 2:
        return [], [SkipRecord("line_comparison", "needs at least 2 selected series")]
    try:
        facts = line_comparison(named, ctx.y_attr)
    except FactError as exc:
        return [], [SkipRecord("line_comparison", exc.message)]
    return [f for f in facts if f.fact_type == LINE_COMPARISON], []


_EXECUTORS = {
    "frequency": _exec_frequency,
    "rank": _exec_rank,
    "rank_extreme": lambda ctx: _exec_rank(ctx, include_extremes=True),
    "values": _exec_values,
    "outliers": _exec_outliers,
    "difference_clicks": _exec_difference_clicks,
    "trend": lambda ctx: _trend_pick(ctx, ("trend",), "trend"),
    "span_edges": lambda ctx: _trend_pick(ctx, ("span_edges",), "span_edges"),
    "span_extremes": lambda ctx: _trend_pick(ctx, ("span_max", "span_min"), "span_extremes"),
    "span_range": lambda ctx: _trend_pick(ctx, ("span_range",), "span_range"),
    "span_change": lambda ctx: _trend_pick(ctx, ("span_change", "span_change_flat"), "span_change"),
    "line_trends": _exec_line_trends,
    "line_comparison": _exec_line_comparison,
}


def compute_facts(package: CalloutPackage, dataset: Dataset,
                  attrs_of_interest=()) -> FactBundle:
    """Compute the taxonomy's facts for one callout package.

    Attributes processed are the visually mapped ones plus any explicitly
    requested. Families the taxonomy lists but does not compute become skip
    records, as do families whose preconditions fail.
    """
    if not package.selection:
        raise EmptySelectionError("cannot compute facts for an empty selection")
    for attr in attrs_of_interest:
        dataset.column(attr)  # raises on unknown columns
    ctx = _FactContext(package, dataset, attrs_of_interest)
    cells = DISPATCH.get((ctx.chart_type, ctx.kind))
    if cells is None:
        raise FactError(f"no taxonomy entry for ({ctx.chart_type}, {ctx.kind})")

    facts: list[DataFact] = []
    skipped: list[SkipRecord] = []
    for cell in cells:
        if cell.executor is None:
            skipped.append(SkipRecord(cell.slug, "not implemented"))
            continue
        if cell.executor == "stats":
            continue  # realized by the statistical table below
        new_facts, skips = _EXECUTORS[cell.executor](ctx)
        facts.extend(new_facts)
        skipped.extend(skips)

    for fact in facts:
        fact.provenance = dict(package.interaction_metadata)

    stat_table = build_stat_table(ctx.selection_rows, dataset, ctx.quant_attrs)
    return FactBundle(facts=facts, stat_table=stat_table, skipped=skipped)
