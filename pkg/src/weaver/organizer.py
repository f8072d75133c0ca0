"""Significance scoring and the Fact Types > Attributes > Data Facts hierarchy.

The frequency score is a weighted blend of four [0,1] terms: deviation from
the global share, a capped selection/global ratio, prominence within the
selection, and the concentration (1 - normalized entropy) of the selection's
category distribution. Weights live in ScoringConfig so they can be retuned
without code changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import FactError
from .facts import (
    CHAINED_PROPORTION,
    CORRELATION,
    DIFFERENCE,
    EXTREME,
    FREQUENCY,
    GROUP_VS_GLOBAL,
    GROUP_VS_GROUP,
    LINE_COMPARISON,
    OUTLIER,
    PROPORTION,
    RANK,
    SUMMARY_STATS,
    TREND,
    TRENDLINE,
    VALUES,
    DataFact,
    StatTable,
    fact_from_json,
    stat_table_from_json,
)

VALUES_FLAT_SCORE = 0.1


@dataclass(frozen=True)
class ScoringConfig:
    w_dev: float = 0.4
    w_ratio: float = 0.3
    w_prom: float = 0.2
    w_entropy: float = 0.1
    ratio_cap: float = 10.0
    epsilon: float = 1e-9
    leaf_top_k: int = 8

    def __post_init__(self):
        weights = (self.w_dev, self.w_ratio, self.w_prom, self.w_entropy)
        if any(w < 0 for w in weights):
            raise FactError("scoring weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise FactError("scoring weights must sum to 1")


def shannon_entropy(distribution) -> float:
    return -sum(p * math.log(p) for p in distribution if p > 0)


def blend_terms(deviation: float, ratio_term: float, prominence: float,
                entropy_term: float, config: ScoringConfig) -> float:
    """The weighted blend; monotone non-decreasing in every term."""
    return (
        config.w_dev * deviation
        + config.w_ratio * ratio_term
        + config.w_prom * prominence
        + config.w_entropy * entropy_term
    )


def score_frequency_fact(p_sel: float, p_glob: float, selection_distribution,
                         config: ScoringConfig | None = None) -> float:
    """Score one category's frequency fact in [0, 1].

    `selection_distribution` holds the selection's share of every global
    category (sums to 1); its entropy term is shared across all facts of one
    frequency computation, boosting concentrated selections as a whole.
    """
    config = config or ScoringConfig()
    deviation = abs(p_sel - p_glob)
    ratio_term = min(p_sel / max(p_glob, config.epsilon), config.ratio_cap) / config.ratio_cap
    k = len(selection_distribution)
    if k <= 1:
        entropy_term = 1.0
    else:
        entropy_term = 1.0 - shannon_entropy(selection_distribution) / math.log(k)
    return blend_terms(deviation, ratio_term, p_sel, entropy_term, config)


def score_generic_fact(fact: DataFact, config: ScoringConfig | None = None) -> float:
    """Family-specific normalized score in [0, 1] for non-frequency facts."""
    config = config or ScoringConfig()
    kind = fact.fact_type
    if kind == OUTLIER:
        iqr = fact.aux.get("iqr", 0.0)
        distance = fact.aux.get("fence_distance", 0.0)
        if distance <= 0:
            return 0.0
        if iqr == 0:
            return 1.0
        return min(distance / iqr, 3.0) / 3.0
    if kind in (RANK, EXTREME):
        rank = fact.aux.get("rank", fact.payload.get("rank"))
        n = fact.aux.get("n", fact.payload.get("total"))
        if not rank or not n:
            return 0.0
        return 1.0 - (rank - 1) / n
    if kind == TREND:
        return min(abs(fact.aux.get("normalized_slope", 0.0)), 1.0)
    if kind == CORRELATION:
        return min(abs(fact.payload.get("r", 0.0)), 1.0)
    if kind in (DIFFERENCE, GROUP_VS_GLOBAL, GROUP_VS_GROUP, LINE_COMPARISON):
        percent = fact.aux.get("percent", fact.payload.get("percent"))
        if percent is None:
            return 0.0
        return min(abs(percent) / 100.0, 1.0)
    if kind in (PROPORTION, CHAINED_PROPORTION):
        share = fact.aux.get("share")
        if share is None:
            share = fact.payload.get("percent", 0.0) / 100.0
        return max(0.0, min(share, 1.0))
    if kind == VALUES:
        return VALUES_FLAT_SCORE
    if kind == TRENDLINE:
        return VALUES_FLAT_SCORE
    raise FactError(f"unknown fact family '{kind}'")


def score_facts(facts: list[DataFact], config: ScoringConfig | None = None) -> None:
    """Assign scores in place; frequency facts use their stored distribution."""
    config = config or ScoringConfig()
    for fact in facts:
        if fact.fact_type == FREQUENCY:
            fact.score = score_frequency_fact(
                fact.aux.get("p_sel", 0.0),
                fact.aux.get("p_glob", 0.0),
                fact.aux.get("distribution", [1.0]),
                config,
            )
        else:
            fact.score = score_generic_fact(fact, config)


# ---------------------------------------------------------------------------
# Hierarchy
# ---------------------------------------------------------------------------

# Display precedence when a dispatch entry does not pin a family explicitly.
_CANONICAL_ORDER = (
    FREQUENCY,
    GROUP_VS_GLOBAL,
    GROUP_VS_GROUP,
    RANK,
    EXTREME,
    VALUES,
    OUTLIER,
    DIFFERENCE,
    TREND,
    LINE_COMPARISON,
    CORRELATION,
    TRENDLINE,
    PROPORTION,
    CHAINED_PROPORTION,
    SUMMARY_STATS,
)

# Lead ordering per (chart type, callout kind); families not named here
# follow in canonical order. Frequency precedes Rank for scatterplot
# brushes by design.
_GROUP_ORDER_OVERRIDES: dict[tuple[str, str], tuple[str, ...]] = {
    ("scatterplot", "brush2d"): (FREQUENCY, GROUP_VS_GLOBAL, RANK, VALUES, OUTLIER),
    ("scatterplot", "discrete_click"): (VALUES, OUTLIER, RANK, GROUP_VS_GLOBAL, FREQUENCY),
    ("scatterplot", "legend_click"): (FREQUENCY, RANK, GROUP_VS_GLOBAL, GROUP_VS_GROUP, OUTLIER, VALUES),
    ("bar", "discrete_click"): (VALUES, RANK, EXTREME, DIFFERENCE),
    ("bar", "legend_click"): (FREQUENCY, RANK, GROUP_VS_GLOBAL, GROUP_VS_GROUP, OUTLIER, VALUES),
    ("bar", "brush1d_x"): (FREQUENCY, RANK, GROUP_VS_GLOBAL, VALUES),
    ("line", "timeframe_brush"): (TREND, VALUES, EXTREME, DIFFERENCE),
    ("line", "line_select"): (TREND, LINE_COMPARISON),
}


def group_order(chart_type: str, callout_kind: str) -> tuple[str, ...]:
    lead = _GROUP_ORDER_OVERRIDES.get((chart_type, callout_kind), ())
    rest = tuple(t for t in _CANONICAL_ORDER if t not in lead)
    return lead + rest


@dataclass(frozen=True)
class AttributeGroup:
    attribute: str
    facts: tuple[DataFact, ...]

    def to_json(self) -> dict:
        return {"attribute": self.attribute, "facts": [f.to_json() for f in self.facts]}


@dataclass(frozen=True)
class FactTypeGroup:
    fact_type: str
    attribute_groups: tuple[AttributeGroup, ...]

    def to_json(self) -> dict:
        return {
            "factType": self.fact_type,
            "attributeGroups": [g.to_json() for g in self.attribute_groups],
        }


@dataclass(frozen=True)
class FactHierarchy:
    """Stat table pinned first, then fact-type groups holding attribute groups."""

    stat_table: StatTable
    groups: tuple[FactTypeGroup, ...] = ()

    def all_facts(self) -> list[DataFact]:
        out = []
        for group in self.groups:
            for attr_group in group.attribute_groups:
                out.extend(attr_group.facts)
        return out

    def fact_ids(self) -> set[str]:
        return {f.id for f in self.all_facts() if f.id}

    def to_json(self) -> dict:
        return {
            "statTable": self.stat_table.to_json(),
            "factTypeGroups": [g.to_json() for g in self.groups],
        }


def hierarchy_from_json(doc: dict) -> FactHierarchy:
    groups = []
    for g in doc.get("factTypeGroups", []):
        attr_groups = tuple(
            AttributeGroup(
                attribute=a["attribute"],
                facts=tuple(fact_from_json(f) for f in a.get("facts", [])),
            )
            for a in g.get("attributeGroups", [])
        )
        groups.append(FactTypeGroup(fact_type=g["factType"], attribute_groups=attr_groups))
    return FactHierarchy(
        stat_table=stat_table_from_json(doc.get("statTable", {})),
        groups=tuple(groups),
    )


def organize(facts: list[DataFact], stat_table: StatTable,
             config: ScoringConfig | None = None,
             chart_type: str = "", callout_kind: str = "",
             column_order: list[str] | None = None) -> FactHierarchy:
    """Nest scored facts into the display hierarchy.

    Group order follows the per-callout dispatch, attribute groups follow
    dataset column order, and leaf lists sort by score (descending) with
    lexicographic template-text tie-breaks, truncated to the configured k.
    The result is independent of the input fact order.
    """
    config = config or ScoringConfig()
    by_type: dict[str, dict[str, list[DataFact]]] = {}
    for fact in facts:
        attr = fact.attributes[0] if fact.attributes else ""
        by_type.setdefault(fact.fact_type, {}).setdefault(attr, []).append(fact)

    column_rank = {name: i for i, name in enumerate(column_order or [])}
    groups = []
    for fact_type in group_order(chart_type, callout_kind):
        if fact_type not in by_type:
            continue
        attr_map = by_type[fact_type]
        attr_names = sorted(attr_map, key=lambda a: (column_rank.get(a, len(column_rank)), a))
        attr_groups = []
        for attr in attr_names:
            leaf = sorted(attr_map[attr], key=lambda f: (-f.score, f.template_text))
            attr_groups.append(AttributeGroup(attribute=attr, facts=tuple(leaf[: config.leaf_top_k])))
        groups.append(FactTypeGroup(fact_type=fact_type, attribute_groups=tuple(attr_groups)))
    unknown = set(by_type) - set(group_order(chart_type, callout_kind))
    if unknown:
        raise FactError(f"unknown fact families: {sorted(unknown)}")
    return FactHierarchy(stat_table=stat_table, groups=tuple(groups))
