"""Tactics that group, partition or re-express values.

``classify``, ``categorize``, ``derive`` and ``encode_select`` keep the sample
kind; ``aggregate`` and ``band`` produce summaries.
"""

from __future__ import annotations

import ast
import bisect
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..core import (
    Column,
    ColumnKind,
    Evaluator,
    Group,
    Interval,
    Kind,
    KindError,
    Representation,
    SummaryRep,
    Table,
    fmt_num,
)
from ..numerics import hdr_cells, normalized_masses, quantile_sorted
from ._common import ParameterError, sample_out, start, step


# --- bin specifications ---------------------------------------------------

@dataclass(frozen=True)
class ExplicitEdges:
    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if len(edges) < 2:
            raise ParameterError("explicit edges need at least 2 values")
        if any(not math.isfinite(e) for e in edges):
            raise ParameterError("edges must be finite")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ParameterError(f"edges must be strictly ascending: {list(edges)}")
        object.__setattr__(self, "edges", edges)

    @property
    def count(self) -> int:
        return len(self.edges) - 1

    def resolve(self, values: Sequence[float]) -> tuple[float, ...]:
        return self.edges


@dataclass(frozen=True)
class EqualWidth:
    count: int
    range: tuple[float, float] | None = None

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ParameterError("bin count must be a positive integer")
        if self.range is not None and not self.range[0] < self.range[1]:
            raise ParameterError(f"bin range must have lo < hi: {self.range}")

    def resolve(self, values: Sequence[float]) -> tuple[float, ...]:
        if self.range is not None:
            lo, hi = map(float, self.range)
        else:
            if not values:
                raise ParameterError("equal-width bins need values or an explicit range")
            lo, hi = float(min(values)), float(max(values))
        if not lo < hi:
            raise ParameterError("all values are equal; equal-width bins need an explicit range")
        width = (hi - lo) / self.count
        edges = [lo + width * i for i in range(self.count)] + [hi]
        return tuple(edges)


@dataclass(frozen=True)
class EqualFrequency:
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ParameterError("bin count must be a positive integer")

    def resolve(self, values: Sequence[float]) -> tuple[float, ...]:
        xs = sorted(values)
        n = len(xs)
        if n < self.count:
            raise ParameterError(f"{self.count} equal-frequency bins need at least {self.count} values, got {n}")
        edges = [float(xs[0])]
        for j in range(1, self.count):
            r = (j * n) // self.count  # size of the lower part
            below, above = xs[r - 1], xs[r]
            # a boundary value belongs to the lower bin
            edge = (below + above) / 2.0 if above > below else math.nextafter(below, math.inf)
            if edge > edges[-1]:
                edges.append(edge)
        top = float(xs[-1])
        if top > edges[-1]:
            edges.append(top)
        else:
            edges.append(math.nextafter(edges[-1], math.inf))
        return tuple(edges)


BinSpec = ExplicitEdges | EqualWidth | EqualFrequency


def intervals_from_edges(edges: Sequence[float]) -> tuple[Interval, ...]:
    last = len(edges) - 2
    return tuple(Interval(a, b, closed_hi=(i == last)) for i, (a, b) in enumerate(zip(edges, edges[1:])))


def locate(edges: Sequence[float], v: float) -> int | None:
    """Bin index of ``v`` with right-open bins and a closed last bin."""
    if v < edges[0] or v > edges[-1]:
        return None
    if v == edges[-1]:
        return len(edges) - 2
    return bisect.bisect_right(edges, v) - 1


def classify(rep, column: str, bins: BinSpec, *, node: str | None = None) -> Representation:
    """Add ``<column>__bin`` holding the index of each value's bin.

    The label column is ordinal; its levels are the bin intervals.  Missing
    cells and values outside explicit edges get a missing label and are counted
    in the lineage step.
    """
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    col = t.numeric(column)
    present = col.present()
    edges = bins.resolve(present)
    labels = []
    outside = 0
    for v in col.values:
        if v is None:
            labels.append(None)
            continue
        idx = locate(edges, v)
        outside += idx is None
        labels.append(idx)
    out_name = f"{column}__bin"
    label_col = Column(out_name, ColumnKind.ORDINAL, tuple(labels), intervals_from_edges(edges))
    return sample_out(rep, t.with_column(label_col), "classify", node,
                      column=column, output=out_name, edges=list(edges), bins=len(edges) - 1,
                      out_of_range=outside or None)


def categorize(rep, column: str, mapping: Mapping[str, str], default_group: str | None = None,
               *, node: str | None = None) -> Representation:
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    col = t.column(column)
    if col.kind is not ColumnKind.NOMINAL:
        raise KindError(f"categorize needs a nominal column; {column!r} is {col.kind.value}")
    unmapped = sorted({v for v in col.values if v is not None and v not in mapping})
    if unmapped and default_group is None:
        raise ParameterError(f"unmapped values in {column!r}: {unmapped}")
    values = [None if v is None else mapping.get(v, default_group) for v in col.values]
    return sample_out(rep, t.with_column(col.with_values(values)), "categorize", node,
                      column=column, groups=sorted(set(mapping.values()) | ({default_group} - {None})))


# --- aggregation ----------------------------------------------------------

STATS = ("count", "sum", "mean", "median", "min", "max", "quantile")


@dataclass(frozen=True)
class StatSpec:
    stat: str
    column: str | None = None
    p: float | None = None

    def __post_init__(self):
        if self.stat not in STATS:
            raise ParameterError(f"unknown stat {self.stat!r}; expected one of {STATS}")
        if self.stat != "count" and not self.column:
            raise ParameterError(f"stat {self.stat!r} needs a target column")
        if self.stat == "quantile":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ParameterError("quantile stat needs p in [0, 1]")

    @property
    def name(self) -> str:
        if self.stat == "count":
            return "count"
        if self.stat == "quantile":
            return f"q{fmt_num(float(self.p))}_{self.column}"
        return f"{self.stat}_{self.column}"

    def compute(self, values: list[float]):
        if self.stat == "count":
            return len(values)
        if not values:
            return None
        if self.stat == "sum":
            return math.fsum(values)
        if self.stat == "mean":
            return math.fsum(values) / len(values)
        if self.stat == "min":
            return float(min(values))
        if self.stat == "max":
            return float(max(values))
        xs = sorted(values)
        return quantile_sorted(xs, 0.5 if self.stat == "median" else self.p)


def _key_value(col: Column, v):
    ivs = col.intervals
    if ivs is not None:
        return ivs[int(v)]
    if col.kind is ColumnKind.ORDINAL and col.levels:
        return col.levels[int(v)]
    return v


def _sort_key(v):
    if isinstance(v, Interval):
        return (0, v.lo, v.hi, "")
    if isinstance(v, str):
        return (1, 0.0, 0.0, v)
    return (0, float(v), float(v), "")


def aggregate(rep, group_by: Sequence[str], stats: Sequence[StatSpec], *, node: str | None = None) -> Representation:
    """One group per key combination present; rows missing any used column are dropped."""
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    group_by = list(group_by)
    targets = [s.column for s in stats if s.column]
    for name in targets:
        t.numeric(name)
    used = list(dict.fromkeys(group_by + targets))
    t, dropped = t.complete_rows(used)
    key_cols = [t.column(g) for g in group_by]
    buckets: dict[tuple, list[int]] = {}
    for i in range(t.n_rows):
        buckets.setdefault(tuple(c.values[i] for c in key_cols), []).append(i)
    if not group_by and t.n_rows == 0:
        buckets = {}
    groups = []
    for raw in sorted(buckets, key=lambda k: tuple(_sort_key(_key_value(c, v)) for c, v in zip(key_cols, k))):
        rows = buckets[raw]
        values = []
        for s in stats:
            col_vals = [t.column(s.column).values[i] for i in rows] if s.column else rows
            values.append(s.compute(col_vals))
        key = tuple(_key_value(c, v) for c, v in zip(key_cols, raw))
        groups.append(Group(key, tuple(values)))
    key_levels = {c.name: c.intervals for c in key_cols if c.intervals is not None}
    summary = SummaryRep(tuple(group_by), tuple(s.name for s in stats), tuple(groups),
                         key_levels=key_levels, origin="aggregate")
    return rep.extend(step("aggregate", node, group_by=group_by, stats=[s.name for s in stats],
                           columns=targets, dropped_missing=dropped or None),
                      summary, Kind.SUMMARY)


# --- banding --------------------------------------------------------------

def _check_levels(levels, lo_open: bool, name: str) -> list[float]:
    levels = [float(x) for x in levels]
    if not levels:
        raise ParameterError(f"{name} levels must be non-empty")
    for x in levels:
        ok = 0.0 < x < 1.0 if lo_open else 0.0 <= x <= 1.0
        if not ok:
            raise ParameterError(f"{name} level {x} out of range")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ParameterError(f"{name} levels must be strictly ascending")
    return levels


def band(rep, *, column: str | None = None, cuts: Sequence[float] | None = None,
         quantiles: Sequence[float] | None = None, masses: Sequence[float] | None = None,
         node: str | None = None) -> Representation:
    """Summarize a sample column or a density grid with cut points, quantile levels or HDR masses.

    Exactly one of ``cuts``, ``quantiles`` and ``masses`` is given.  Mass
    levels need a density grid and yield nested cell-set regions.
    """
    if sum(x is not None for x in (cuts, quantiles, masses)) != 1:
        raise ParameterError("band needs exactly one of cuts, quantiles or masses")
    rep = start(rep, Kind.SAMPLE, Kind.MODEL)
    if rep.kind is Kind.MODEL and rep.payload.evaluator is not Evaluator.DENSITY_GRID:
        raise KindError(f"band needs a density grid model, got {rep.payload.evaluator.value}")
    if masses is not None:
        if rep.kind is not Kind.MODEL:
            raise KindError("mass-level banding needs a density grid, got a sample")
        return _band_hdr(rep, _check_levels(masses, True, "mass"), node)
    if rep.kind is Kind.SAMPLE:
        return _band_sample(rep, column, cuts, quantiles, node)
    return _band_density_1d(rep, cuts, quantiles, node)


def _band_sample(rep, column, cuts, quantiles, node):
    if column is None:
        raise ParameterError("banding a sample needs a column")
    t = rep.table
    xs = sorted(t.numeric(column).present())
    dropped = t.n_rows - len(xs)
    if not xs:
        raise ParameterError(f"column {column!r} has no values to band")
    n = len(xs)
    if cuts is not None:
        edges = ExplicitEdges(tuple(cuts)).edges
        ivs = intervals_from_edges(edges)
        counts = [0] * len(ivs)
        for v in xs:
            idx = locate(edges, v)
            if idx is not None:
                counts[idx] += 1
        groups = tuple(Group((iv,), (c, c / n)) for iv, c in zip(ivs, counts))
        summary = SummaryRep((column,), ("count", "fraction"), groups,
                             key_levels={column: ivs}, origin="band")
        detail = dict(column=column, cuts=list(edges), out_of_range=n - sum(counts) or None)
    else:
        levels = _check_levels(quantiles, False, "quantile")
        if len(levels) < 2:
            raise ParameterError("quantile banding needs at least 2 levels")
        edges = [quantile_sorted(xs, p) for p in levels]
        last = len(edges) - 2
        groups = tuple(
            Group((Interval(a, b, closed_hi=(i == last)),), (pa, pb, pb - pa))
            for i, (a, b, pa, pb) in enumerate(zip(edges, edges[1:], levels, levels[1:]))
        )
        summary = SummaryRep((column,), ("level_lo", "level_hi", "mass"), groups, origin="band")
        detail = dict(column=column, quantiles=levels)
    return rep.extend(step("band", node, columns=[column], dropped_missing=dropped or None, **detail),
                      summary, Kind.SUMMARY)


def _band_density_1d(rep, cuts, quantiles, node):
    model = rep.payload
    if len(model.axes) != 1:
        raise KindError("cut-point and quantile banding of a density need a 1-D grid")
    axis = model.axes[0]
    coords = axis.coords()
    mass = normalized_masses(model.grid)
    if cuts is not None:
        edges = ExplicitEdges(tuple(cuts)).edges
        ivs = intervals_from_edges(edges)
        acc = [0.0] * len(ivs)
        for x, m in zip(coords.tolist(), mass.tolist()):
            idx = locate(edges, x)
            if idx is not None:
                acc[idx] += m
        groups = tuple(Group((iv,), (m,)) for iv, m in zip(ivs, acc))
        summary = SummaryRep((axis.name,), ("mass",), groups, key_levels={axis.name: ivs}, origin="band")
        detail = dict(cuts=list(edges))
    else:
        levels = _check_levels(quantiles, False, "quantile")
        if len(levels) < 2:
            raise ParameterError("quantile banding needs at least 2 levels")
        edges = [grid_quantile(coords, mass, p) for p in levels]
        last = len(edges) - 2
        groups = tuple(
            Group((Interval(a, b, closed_hi=(i == last)),), (pa, pb, pb - pa))
            for i, (a, b, pa, pb) in enumerate(zip(edges, edges[1:], levels, levels[1:]))
        )
        summary = SummaryRep((axis.name,), ("level_lo", "level_hi", "mass"), groups, origin="band")
        detail = dict(quantiles=levels)
    return rep.extend(step("band", node, columns=[axis.name], **detail), summary, Kind.SUMMARY)


def grid_quantile(coords: np.ndarray, mass: np.ndarray, p: float) -> float:
    """Quantile of a gridded distribution, interpolating its cumulative mass linearly."""
    cdf = np.cumsum(mass)
    if p <= 0.0:
        return float(coords[int(np.argmax(mass > 0))])
    if p >= cdf[-1]:
        return float(coords[int(np.nonzero(mass > 0)[0][-1])])
    i = int(np.searchsorted(cdf, p, side="left"))
    if i == 0:
        return float(coords[0])
    c0, c1 = cdf[i - 1], cdf[i]
    frac = (p - c0) / (c1 - c0) if c1 > c0 else 0.0
    return float(coords[i - 1] + (coords[i] - coords[i - 1]) * frac)


def _band_hdr(rep, levels, node):
    model = rep.payload
    groups = []
    for level in levels:
        cells, mass = hdr_cells(model.grid, level)
        threshold = float(model.grid[cells[-1]])
        groups.append(Group((level,), (mass, threshold, len(cells)), frozenset(cells)))
    summary = SummaryRep(("level",), ("mass", "density_threshold", "cells"), tuple(groups),
                         intervals_nested=len(levels) > 1, domain=model.axes, origin="band")
    return rep.extend(step("band", node, columns=[a.name for a in model.axes], masses=levels),
                      summary, Kind.SUMMARY)


# --- derived values -------------------------------------------------------

_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/"}


class _DivideByZero(Exception):
    pass


def parse_expression(expr: str) -> tuple[ast.expr, list[str]]:
    """Parse arithmetic over column names; return the tree and referenced names."""
    try:
        tree = ast.parse(expr, mode="eval").body
    except SyntaxError as exc:
        raise ParameterError(f"bad expression {expr!r}: {exc.msg}") from None
    names: list[str] = []

    def check(node):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name):
            if node.id not in names:
                names.append(node.id)
        else:
            raise ParameterError(f"unsupported syntax in {expr!r}: {ast.dump(node)[:40]}")

    check(tree)
    return tree, names


def _evaluate(node, row: Mapping[str, float]) -> float:
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return float(row[node.id])
    if isinstance(node, ast.UnaryOp):
        v = _evaluate(node.operand, row)
        return -v if isinstance(node.op, ast.USub) else v
    a = _evaluate(node.left, row)
    b = _evaluate(node.right, row)
    op = type(node.op)
    if op is ast.Add:
        return a + b
    if op is ast.Sub:
        return a - b
    if op is ast.Mult:
        return a * b
    if b == 0:
        raise _DivideByZero
    return a / b


def derive(rep, expr: str, out_col: str, *, node: str | None = None) -> Representation:
    """Append ``out_col`` computed from ``expr``; division by zero yields a missing cell."""
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    if out_col in t:
        raise ParameterError(f"output column {out_col!r} already exists")
    tree, names = parse_expression(expr)
    for name in names:
        t.numeric(name)
    t, dropped = t.complete_rows(names)
    cols = {n: t.column(n).values for n in names}
    out = []
    zero_div = 0
    for i in range(t.n_rows):
        try:
            v = _evaluate(tree, {n: cols[n][i] for n in names})
        except _DivideByZero:
            zero_div += 1
            v = None
        if v is not None and not math.isfinite(v):
            v = None
        out.append(v)
    t = t.with_column(Column(out_col, ColumnKind.CONTINUOUS, tuple(out)))
    return sample_out(rep, t, "derive", node, expr=expr, output=out_col, columns=names,
                      division_by_zero=zero_div or None, dropped_missing=dropped or None)


# --- encoded values -------------------------------------------------------

def encode_select(rep, cols: Sequence[str], *, node: str | None = None) -> Representation:
    """Keep only ``cols``; the dropped names go into the lineage step."""
    rep = start(rep)
    cols = list(cols)
    if not cols:
        raise ParameterError("select at least one column")
    if rep.kind is Kind.SAMPLE:
        t = rep.table
        for c in cols:
            t.column(c)
        dropped = [n for n in t.names if n not in cols]
        return sample_out(rep, t.select(cols), "encode_select", node, columns=cols, dropped=dropped)
    if rep.kind is Kind.SUMMARY:
        s = rep.payload
        available = s.column_names()
        unknown = [c for c in cols if c not in available]
        if unknown:
            raise KeyError(f"unknown columns {unknown}; have {available}")
        lost_keys = [k for k in s.keys if k not in cols]
        if lost_keys:
            raise ParameterError(f"cannot drop group keys {lost_keys}; merging groups is aggregate's job")
        keep = [i for i, n in enumerate(s.stat_names) if n in cols]
        groups = tuple(Group(g.key, tuple(g.stats[i] for i in keep), g.region) for g in s.groups)
        out = SummaryRep(s.keys, tuple(s.stat_names[i] for i in keep), groups, s.intervals_nested,
                         s.key_levels, s.domain, s.origin)
        dropped = [n for n in s.stat_names if n not in cols]
        return rep.extend(step("encode_select", node, columns=cols, dropped=dropped), out)
    m = rep.payload
    names = [a.name for a in m.axes]
    unknown = [c for c in cols if c not in names + [m.target]]
    if unknown:
        raise KeyError(f"unknown axes {unknown}; have {names}")
    lost = [n for n in names if n not in cols]
    if lost:
        raise ParameterError(f"cannot drop model axes {lost}")
    return rep.extend(step("encode_select", node, columns=cols, dropped=[]))
