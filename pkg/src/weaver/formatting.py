"""Number formatting for fact templates.

Percentages render with two decimals; raw values keep up to four decimal
places with trailing zeros trimmed; thousands separators appear only in
rendered text, never in payloads.
"""

from __future__ import annotations


def fmt_percent(value: float) -> str:
    """Two-decimal percentage body, e.g. 95.238095 -> '95.24' (caller adds '%')."""
    return f"{value:.2f}"


def fmt_value(value) -> str:
    """Render a raw numeric: up to 4 decimals, trimmed, with thousands separators."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return f"{value:,}"
    rounded = round(float(value), 4)
    if rounded == int(rounded):
        return f"{int(rounded):,}"
    text = f"{rounded:,.4f}".rstrip("0").rstrip(".")
    return text


def formatted_forms(value) -> tuple[str, ...]:
    """All renderings a numeric payload value may take inside template text."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (fmt_value(value), fmt_percent(float(value)))
    return ()
