"""Tabular core: CSV ingestion, attribute typing, and data-operation plans.

Datasets are immutable after load; every operation here is a pure function,
so values can be shared freely across threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
import uuid
from dataclasses import dataclass, field
from datetime import date, datetime

from .errors import DataError, PlanError

QUANTITATIVE = "quantitative"
CATEGORICAL = "categorical"
TEMPORAL = "temporal"
ATTR_TYPES = (QUANTITATIVE, CATEGORICAL, TEMPORAL)

NULL_SPELLINGS = {"", "na", "null"}
TYPE_PARSE_THRESHOLD = 0.95
DATE_NAME_TOKEN = re.compile(r"year|date|time|month|day", re.IGNORECASE)
SAMPLE_LIMIT = 5

FILTER_COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "in", "contains")
# Unicode spellings accepted on the wire for convenience.
_COMPARATOR_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">="}
AGGREGATE_FNS = ("sum", "mean", "count", "min", "max")
SORT_DIRECTIONS = ("asc", "desc")


@dataclass(frozen=True)
class Column:
    name: str
    attr_type: str
    distinct_count: int
    sample_values: tuple = ()
    null_count: int = 0
    parse_failures: int = 0
    all_null: bool = False


@dataclass(frozen=True)
class Dataset:
    id: str
    name: str
    columns: tuple[Column, ...]
    rows: tuple[dict, ...]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise DataError(f"unknown column '{name}'", field=name)

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def schema(self) -> dict[str, str]:
        return {c.name: c.attr_type for c in self.columns}

    def values(self, name: str, skip_null: bool = True) -> list:
        self.column(name)
        out = [row[name] for row in self.rows]
        if skip_null:
            out = [v for v in out if v is not None]
        return out

    def to_csv(self) -> str:
        """Canonical CSV serialization (RFC 4180, nulls as empty cells)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names())
        for row in self.rows:
            writer.writerow(["" if row[c] is None else row[c] for c in self.column_names()])
        return buf.getvalue()

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_csv().encode("utf-8")).hexdigest()


def parse_number(text: str):
    """Parse a numeric cell; ints stay ints. Returns None on failure."""
    text = text.strip()
    if not text:
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        return None
    if value != value or value in (float("inf"), float("-inf")):
        return None
    return value


def temporal_key(value) -> float | None:
    """Comparable ordering key for a temporal cell (year or ISO date)."""
    if value is None:
        return None
    if isinstance(value, (int, float)):
        year = int(value)
        if 1000 <= year <= 2999:
            return float(date(year, 1, 1).toordinal())
        return None
    text = str(value).strip()
    if re.fullmatch(r"\d{4}", text):
        year = int(text)
        if 1000 <= year <= 2999:
            return float(date(year, 1, 1).toordinal())
        return None
    try:
        return float(datetime.fromisoformat(text).toordinal())
    except ValueError:
        pass
    try:
        return float(date.fromisoformat(text).toordinal())
    except ValueError:
        return None


def _is_null_text(text: str) -> bool:
    return text.strip().lower() in NULL_SPELLINGS


def infer_attribute_type(values: list, name: str = "") -> str:
    """Infer the attribute type of a column from its raw cell texts.

    Temporal wins when at least 95% of non-null cells look like ISO dates or
    4-digit years AND the column name carries a date-ish token; this runs
    before the quantitative check so year columns do not become numbers.
    Quantitative needs 95% numeric parses. Everything else is categorical,
    including all-null columns (callers flag those via Column.all_null).
    """
    if not values:
        raise DataError("cannot infer a type from an empty value list")
    non_null = [str(v) for v in values if v is not None and not _is_null_text(str(v))]
    if not non_null:
        return CATEGORICAL
    if DATE_NAME_TOKEN.search(name or ""):
        temporal_hits = sum(1 for v in non_null if temporal_key(v) is not None)
        if temporal_hits / len(non_null) >= TYPE_PARSE_THRESHOLD:
            return TEMPORAL
    numeric_hits = sum(1 for v in non_null if parse_number(v) is not None)
    if numeric_hits / len(non_null) >= TYPE_PARSE_THRESHOLD:
        return QUANTITATIVE
    return CATEGORICAL


def _parse_cell(text: str | None, attr_type: str):
    """Parse one raw cell under a fixed type; returns (value, parse_failed)."""
    if text is None or _is_null_text(text):
        return None, False
    text = text.strip()
    if attr_type == QUANTITATIVE:
        value = parse_number(text)
        return (value, value is None)
    if attr_type == TEMPORAL:
        if temporal_key(text) is None:
            return None, True
        return text, False
    return text, False


def _build_column(name: str, attr_type: str, cells: list) -> Column:
    non_null = [v for v in cells if v is not None]
    distinct: list = []
    seen = set()
    for v in non_null:
        key = (type(v).__name__, v)
        if key not in seen:
            seen.add(key)
            distinct.append(v)
    return Column(
        name=name,
        attr_type=attr_type,
        distinct_count=len(distinct),
        sample_values=tuple(distinct[:SAMPLE_LIMIT]),
        null_count=len(cells) - len(non_null),
        all_null=not non_null,
    )


def load_dataset(csv_text: str, name: str, dataset_id: str | None = None) -> Dataset:
    """Load a CSV document (first row = header) into a typed Dataset.

    Cell parse failures under the inferred column type become nulls and are
    counted on the column. Short rows are padded with nulls; long rows are
    rejected.
    """
    if not csv_text or not csv_text.strip():
        raise DataError("empty CSV input")
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV input") from None
    header = [h.strip() for h in header]
    if any(not h for h in header):
        raise DataError("blank column name in header")
    dupes = {h for h in header if header.count(h) > 1}
    if dupes:
        raise DataError(f"duplicate column names: {sorted(dupes)}")

    raw_rows: list[list] = []
    for i, row in enumerate(reader):
        if not row:
            continue
        if len(row) > len(header):
            raise DataError(f"row {i + 1} has {len(row)} cells, expected {len(header)}")
        row = row + [None] * (len(header) - len(row))
        raw_rows.append(row)
    if not raw_rows:
        raise DataError("CSV has a header but no data rows")

    columns: list[Column] = []
    parsed_by_col: dict[str, list] = {}
    for idx, col_name in enumerate(header):
        raw = [row[idx] for row in raw_rows]
        attr_type = infer_attribute_type(raw, name=col_name)
        cells = []
        failures = 0
        for text in raw:
            value, failed = _parse_cell(text, attr_type)
            cells.append(value)
            failures += failed
        parsed_by_col[col_name] = cells
        col = _build_column(col_name, attr_type, cells)
        columns.append(
            Column(
                name=col.name,
                attr_type=col.attr_type,
                distinct_count=col.distinct_count,
                sample_values=col.sample_values,
                null_count=col.null_count,
                parse_failures=failures,
                all_null=col.all_null,
            )
        )

    rows = tuple(
        {col: parsed_by_col[col][i] for col in header} for i in range(len(raw_rows))
    )
    return Dataset(
        id=dataset_id or f"ds-{uuid.uuid4().hex[:12]}",
        name=name,
        columns=tuple(columns),
        rows=rows,
    )


# ---------------------------------------------------------------------------
# Data-operation plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FilterStep:
    column: str
    comparator: str
    value: object

    op = "filter"


@dataclass(frozen=True)
class AggregateStep:
    group_by: tuple[str, ...]
    measure: str
    fn: str

    op = "aggregate"

    @property
    def output_column(self) -> str:
        return "count" if self.fn == "count" else f"{self.fn}_{self.measure}"


@dataclass(frozen=True)
class DeriveStep:
    new_column: str
    expression: str

    op = "derive"


@dataclass(frozen=True)
class SortStep:
    column: str
    direction: str = "asc"

    op = "sort"


@dataclass(frozen=True)
class LimitStep:
    n: int

    op = "limit"


Step = FilterStep | AggregateStep | DeriveStep | SortStep | LimitStep


@dataclass(frozen=True)
class DataOperationPlan:
    source_dataset: str
    steps: tuple[Step, ...] = field(default_factory=tuple)


def parse_plan(doc) -> DataOperationPlan:
    """Parse a plan from its JSON wire form."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise PlanError(f"malformed plan JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise PlanError("plan must be a JSON object")
    source = doc.get("sourceDataset")
    if not source:
        raise PlanError("plan is missing sourceDataset", field="sourceDataset")
    steps: list[Step] = []
    for i, raw in enumerate(doc.get("steps", [])):
        op = raw.get("op")
        where = f"steps[{i}]"
        if op == "filter":
            comparator = _COMPARATOR_ALIASES.get(raw.get("comparator"), raw.get("comparator"))
            if comparator not in FILTER_COMPARATORS:
                raise PlanError(f"unknown comparator '{raw.get('comparator')}'", field=where)
            steps.append(FilterStep(raw["column"], comparator, raw.get("value")))
        elif op == "aggregate":
            fn = raw.get("fn")
            if fn not in AGGREGATE_FNS:
                raise PlanError(f"unknown aggregate fn '{fn}'", field=where)
            steps.append(AggregateStep(tuple(raw.get("groupBy", [])), raw["measure"], fn))
        elif op == "derive":
            steps.append(DeriveStep(raw["newColumn"], raw["expression"]))
        elif op == "sort":
            direction = raw.get("direction", "asc")
            if direction not in SORT_DIRECTIONS:
                raise PlanError(f"unknown sort direction '{direction}'", field=where)
            steps.append(SortStep(raw["column"], direction))
        elif op == "limit":
            n = raw.get("n")
            if not isinstance(n, int) or n < 1:
                raise PlanError("limit n must be an integer >= 1", field=where)
            steps.append(LimitStep(n))
        else:
            raise PlanError(f"unknown step op '{op}'", field=where)
    return DataOperationPlan(source_dataset=source, steps=tuple(steps))


def serialize_plan(plan: DataOperationPlan) -> dict:
    steps = []
    for step in plan.steps:
        if isinstance(step, FilterStep):
            steps.append(
                {"op": "filter", "column": step.column, "comparator": step.comparator, "value": step.value}
            )
        elif isinstance(step, AggregateStep):
            steps.append(
                {"op": "aggregate", "groupBy": list(step.group_by), "measure": step.measure, "fn": step.fn}
            )
        elif isinstance(step, DeriveStep):
            steps.append({"op": "derive", "newColumn": step.new_column, "expression": step.expression})
        elif isinstance(step, SortStep):
            steps.append({"op": "sort", "column": step.column, "direction": step.direction})
        elif isinstance(step, LimitStep):
            steps.append({"op": "limit", "n": step.n})
    return {"sourceDataset": plan.source_dataset, "steps": steps}


# --- Derive expression mini-language ---------------------------------------
# expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*
# factor := NUMBER | column | pct_total(column) | '(' expr ')'
# Column refs are bare identifiers or backtick-quoted names.

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_]\w*)|`(?P<quoted>[^`]+)`|(?P<op>[()+\-*/]))"
)


def _tokenize_expression(expression: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(expression):
        match = _TOKEN_RE.match(expression, pos)
        if not match or match.end() == pos:
            if expression[pos:].strip():
                raise PlanError(f"bad token in expression at '{expression[pos:]}'")
            break
        if match.group("num") is not None:
            tokens.append(("num", match.group("num")))
        elif match.group("name") is not None:
            tokens.append(("name", match.group("name")))
        elif match.group("quoted") is not None:
            tokens.append(("name", match.group("quoted")))
        else:
            tokens.append(("op", match.group("op")))
        pos = match.end()
    return tokens


class _ExpressionParser:
    """Recursive-descent parser producing a tiny AST of tuples."""

    def __init__(self, expression: str):
        self.tokens = _tokenize_expression(expression)
        self.pos = 0

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def _take(self):
        tok = self._peek()
        self.pos += 1
        return tok

    def parse(self):
        node = self._expr()
        if self.pos != len(self.tokens):
            raise PlanError("trailing tokens in expression")
        return node

    def _expr(self):
        node = self._term()
        while self._peek() == ("op", "+") or self._peek() == ("op", "-"):
            _, op = self._take()
            node = ("bin", op, node, self._term())
        return node

    def _term(self):
        node = self._factor()
        while self._peek() == ("op", "*") or self._peek() == ("op", "/"):
            _, op = self._take()
            node = ("bin", op, node, self._factor())
        return node

    def _factor(self):
        kind, text = self._take()
        if kind == "num":
            return ("lit", float(text))
        if kind == "name":
            if text == "pct_total":
                if self._take() != ("op", "("):
                    raise PlanError("pct_total requires a parenthesized column")
                inner_kind, inner = self._take()
                if inner_kind != "name":
                    raise PlanError("pct_total takes a single column name")
                if self._take() != ("op", ")"):
                    raise PlanError("unclosed pct_total(...)")
                return ("pct_total", inner)
            return ("col", text)
        if (kind, text) == ("op", "("):
            node = self._expr()
            if self._take() != ("op", ")"):
                raise PlanError("unbalanced parentheses in expression")
            return node
        raise PlanError(f"unexpected token '{text}' in expression")


def expression_columns(expression: str) -> set[str]:
    """Column names an expression reads."""
    cols: set[str] = set()

    def walk(node):
        if node[0] in ("col", "pct_total"):
            cols.add(node[1])
        elif node[0] == "bin":
            walk(node[2])
            walk(node[3])

    walk(_ExpressionParser(expression).parse())
    return cols


def _eval_expression(node, row: dict, totals: dict):
    kind = node[0]
    if kind == "lit":
        return node[1]
    if kind == "col":
        return row.get(node[1])
    if kind == "pct_total":
        value = row.get(node[1])
        total = totals.get(node[1])
        if value is None or not total:
            return None
        return 100.0 * value / total
    _, op, left, right = node
    a = _eval_expression(left, row, totals)
    b = _eval_expression(right, row, totals)
    if a is None or b is None:
        return None
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        return None  # division by zero becomes a null cell
    return a / b


# --- Static schema propagation ----------------------------------------------


def plan_output_schema(plan: DataOperationPlan, input_schema: dict[str, str]) -> dict[str, str]:
    """Schema of the plan's output, or raise PlanError where it cannot run."""
    schema = dict(input_schema)
    for i, step in enumerate(plan.steps):
        where = f"steps[{i}]"
        if isinstance(step, FilterStep):
            if step.column not in schema:
                raise PlanError(f"unknown column '{step.column}'", field=where)
            if step.comparator in ("<", "<=", ">", ">="):
                if schema[step.column] == CATEGORICAL:
                    raise PlanError(
                        f"ordering comparator '{step.comparator}' on categorical column '{step.column}'",
                        field=where,
                    )
        elif isinstance(step, AggregateStep):
            for col in step.group_by:
                if col not in schema:
                    raise PlanError(f"unknown column '{col}'", field=where)
            if step.measure not in schema:
                raise PlanError(f"unknown column '{step.measure}'", field=where)
            if step.fn in ("sum", "mean") and schema[step.measure] != QUANTITATIVE:
                raise PlanError(f"{step.fn} requires a quantitative measure", field=where)
            out = {col: schema[col] for col in step.group_by}
            if step.fn in ("min", "max"):
                out[step.output_column] = schema[step.measure]
            else:
                out[step.output_column] = QUANTITATIVE
            schema = out
        elif isinstance(step, DeriveStep):
            for col in expression_columns(step.expression):
                if col not in schema:
                    raise PlanError(f"unknown column '{col}'", field=where)
                if schema[col] != QUANTITATIVE:
                    raise PlanError(f"derive reads non-quantitative column '{col}'", field=where)
            schema[step.new_column] = QUANTITATIVE
        elif isinstance(step, SortStep):
            if step.column not in schema:
                raise PlanError(f"unknown column '{step.column}'", field=where)
        elif isinstance(step, LimitStep):
            if step.n < 1:
                raise PlanError("limit n must be >= 1", field=where)
    return schema


def validate_plan(plan: DataOperationPlan, input_schema: dict[str, str]) -> list[str]:
    """Violation messages for a plan, empty when it is executable."""
    try:
        plan_output_schema(plan, input_schema)
        return []
    except PlanError as exc:
        return [exc.message]


# --- Execution ---------------------------------------------------------------


def _sort_rows(rows: list[dict], column: str, attr_type: str, direction: str) -> list[dict]:
    def key(row):
        value = row[column]
        if attr_type == TEMPORAL:
            return temporal_key(value)
        return value

    non_null = [r for r in rows if key(r) is not None]
    nulls = [r for r in rows if key(r) is None]
    non_null.sort(key=key, reverse=direction == "desc")
    return non_null + nulls  # nulls last in either direction


def _filter_match(cell, comparator: str, literal, attr_type: str) -> bool:
    if cell is None:
        return False
    if comparator == "contains":
        return str(literal).lower() in str(cell).lower()
    if comparator == "in":
        options = literal if isinstance(literal, (list, tuple, set)) else [literal]
        return any(_filter_match(cell, "=", opt, attr_type) for opt in options)
    if comparator in ("=", "!="):
        equal = cell == literal or str(cell) == str(literal)
        return equal if comparator == "=" else not equal
    # ordering comparators
    if attr_type == TEMPORAL:
        left, right = temporal_key(cell), temporal_key(literal)
    else:
        left = cell if isinstance(cell, (int, float)) else parse_number(str(cell))
        right = literal if isinstance(literal, (int, float)) else parse_number(str(literal))
    if left is None or right is None:
        raise PlanError(f"comparator '{comparator}' got a non-comparable literal '{literal}'")
    if comparator == "<":
        return left < right
    if comparator == "<=":
        return left <= right
    if comparator == ">":
        return left > right
    return left >= right


def _aggregate(rows: list[dict], step: AggregateStep, schema: dict[str, str]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row[c] for c in step.group_by)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        members = groups[key]
        values = [r[step.measure] for r in members if r[step.measure] is not None]
        if step.fn == "count":
            agg = len(values)
        elif not values:
            agg = None
        elif step.fn == "sum":
            agg = sum(values)
        elif step.fn == "mean":
            agg = sum(values) / len(values)
        elif step.fn == "min":
            agg = min(values, key=lambda v: temporal_key(v) if schema[step.measure] == TEMPORAL else v)
        else:
            agg = max(values, key=lambda v: temporal_key(v) if schema[step.measure] == TEMPORAL else v)
        record = {c: k for c, k in zip(step.group_by, key)}
        record[step.output_column] = agg
        out.append(record)
    return out


def execute_plan(plan: DataOperationPlan, dataset: Dataset) -> Dataset:
    """Run a plan against a dataset, producing a new derived Dataset.

    The source dataset is never modified and the result is deterministic:
    the derived id is a content hash of (source id, plan).
    """
    output_schema = plan_output_schema(plan, dataset.schema())  # raises on bad plans
    schema = dataset.schema()
    rows = [dict(r) for r in dataset.rows]
    for step in plan.steps:
        if isinstance(step, FilterStep):
            attr_type = schema[step.column]
            rows = [r for r in rows if _filter_match(r[step.column], step.comparator, step.value, attr_type)]
        elif isinstance(step, AggregateStep):
            rows = _aggregate(rows, step, schema)
            measure_type = schema[step.measure]
            schema = {c: schema[c] for c in step.group_by}
            schema[step.output_column] = measure_type if step.fn in ("min", "max") else QUANTITATIVE
        elif isinstance(step, DeriveStep):
            ast = _ExpressionParser(step.expression).parse()
            needed = expression_columns(step.expression)
            totals = {
                c: sum(r[c] for r in rows if r[c] is not None) for c in needed
            }
            for row in rows:
                row[step.new_column] = _eval_expression(ast, row, totals)
            schema[step.new_column] = QUANTITATIVE
        elif isinstance(step, SortStep):
            rows = _sort_rows(rows, step.column, schema[step.column], step.direction)
        elif isinstance(step, LimitStep):
            rows = rows[: step.n]

    digest = hashlib.sha1(
        (dataset.id + json.dumps(serialize_plan(plan), sort_keys=True)).encode("utf-8")
    ).hexdigest()[:12]
    columns = tuple(
        _build_column(name, output_schema[name], [r.get(name) for r in rows])
        for name in output_schema
    )
    return Dataset(
        id=f"{dataset.id}-d{digest}",
        name=f"{dataset.name} (derived)",
        columns=columns,
        rows=tuple({c.name: r.get(c.name) for c in columns} for r in rows),
    )
