"""Pipeline IR, JSON parser, kind checker and deterministic executor.

A pipeline document is JSON::

    {"nodes": [{"id": "src", "op": "source", "params": {"table": "data"}}, ...],
     "edges": [["src", "bins", 0], ...],
     "outputs": ["hist"],
     "signals": [...]}

Branching is fan-out, chaining is a path, and ``combine`` nodes fan in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Any, Callable, Mapping, Sequence

from .core import (
    Bundle,
    ColumnKind,
    Evaluator,
    Kind,
    KindError,
    Representation,
    Table,
    derive_seed,
)
from . import tactics as T
from .tactics import ParameterError


class PipelineError(Exception):
    """Malformed pipeline document (exit code 2 territory)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


class ExecutionError(RuntimeError):
    def __init__(self, node: str, cause: Exception):
        super().__init__(f"node {node!r}: {cause}")
        self.node = node
        self.cause = cause


@dataclass(frozen=True)
class StaticKind:
    kind: Kind
    evaluator: Evaluator | None = None

    def __str__(self) -> str:
        return self.kind.value if self.evaluator is None else f"model[{self.evaluator.value}]"


SAMPLE = StaticKind(Kind.SAMPLE)
SUMMARY = StaticKind(Kind.SUMMARY)
BUNDLE = StaticKind(Kind.BUNDLE)
DENSITY = StaticKind(Kind.MODEL, Evaluator.DENSITY_GRID)
OLS = StaticKind(Kind.MODEL, Evaluator.OLS_LINE)
PCA = StaticKind(Kind.MODEL, Evaluator.PCA_LOADINGS)


def static_kind_of(value) -> StaticKind:
    if isinstance(value, Bundle):
        return BUNDLE
    if value.kind is Kind.MODEL:
        return StaticKind(Kind.MODEL, value.payload.evaluator)
    return StaticKind(value.kind)


@dataclass(frozen=True)
class Node:
    id: str
    op: str
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineGraph:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[str, str, int], ...]
    outputs: tuple[str, ...]
    signals: tuple[Mapping[str, Any], ...] = ()
    sweep: Mapping[str, Any] | None = None

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def inputs_of(self, node_id: str) -> list[str]:
        """Upstream node ids ordered by input slot."""
        return [a for a, _, _ in sorted((e for e in self.edges if e[1] == node_id), key=lambda e: e[2])]

    def children(self, node_id: str) -> list[str]:
        return sorted({b for a, b, _ in self.edges if a == node_id})

    def sources(self) -> list[Node]:
        return [n for n in self.nodes if n.op == "source"]

    def topological_order(self) -> list[str]:
        ts = TopologicalSorter({n.id: set(self.inputs_of(n.id)) for n in self.nodes})
        order: list[str] = []
        ts.prepare()
        while ts.is_active():
            ready = sorted(ts.get_ready())
            order.extend(ready)
            ts.done(*ready)
        return order

    def to_dict(self) -> dict:
        doc = {
            "nodes": [{"id": n.id, "op": n.op, "params": dict(n.params)} for n in self.nodes],
            "edges": [list(e) for e in self.edges],
            "outputs": list(self.outputs),
        }
        if self.signals:
            doc["signals"] = [dict(s) for s in self.signals]
        if self.sweep is not None:
            doc["sweep"] = dict(self.sweep)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_params(self, node_id: str, params: Mapping[str, Any]) -> "PipelineGraph":
        doc = self.to_dict()
        for n in doc["nodes"]:
            if n["id"] == node_id:
                n["params"] = dict(params)
        return graph_from_dict(doc)


# --- op registry ----------------------------------------------------------

def _req(params, key, types=None):
    if key not in params:
        raise ParameterError(f"missing parameter {key!r}")
    v = params[key]
    if types is not None:
        allowed = types if isinstance(types, tuple) else (types,)
        if not isinstance(v, allowed) or (isinstance(v, bool) and bool not in allowed):
            raise ParameterError(f"parameter {key!r} has the wrong type: {v!r}")
    return v


def _names(params, key, required=True) -> list[str]:
    if key not in params:
        if required:
            raise ParameterError(f"missing parameter {key!r}")
        return []
    v = params[key]
    if not isinstance(v, list) or not all(isinstance(x, str) and x for x in v):
        raise ParameterError(f"parameter {key!r} must be a list of column names")
    return v


_NUM = (int, float)


def _bins(spec) -> T.ExplicitEdges | T.EqualWidth | T.EqualFrequency:
    if not isinstance(spec, dict) or len({"edges", "equal_width", "equal_frequency"} & spec.keys()) != 1:
        raise ParameterError("bins must give exactly one of edges, equal_width, equal_frequency")
    if "edges" in spec:
        return T.ExplicitEdges(tuple(_req(spec, "edges", list)))
    if "equal_width" in spec:
        rng = spec.get("range")
        return T.EqualWidth(_req(spec, "equal_width", int), tuple(rng) if rng is not None else None)
    return T.EqualFrequency(_req(spec, "equal_frequency", int))


def _stats(raw) -> list[T.StatSpec]:
    if not isinstance(raw, list) or not raw:
        raise ParameterError("stats must be a non-empty list")
    out = []
    for s in raw:
        if not isinstance(s, dict):
            raise ParameterError(f"bad stat entry {s!r}")
        extra = set(s) - {"stat", "column", "p"}
        if extra:
            raise ParameterError(f"unknown stat keys {sorted(extra)}")
        out.append(T.StatSpec(_req(s, "stat", str), s.get("column"), s.get("p")))
    return out


@dataclass(frozen=True)
class Op:
    name: str
    keys: frozenset
    parse: Callable[[Mapping], dict]
    # (input kinds, parsed params) -> output kind; raises KindError
    signature: Callable[[list[StaticKind], dict], StaticKind]
    run: Callable[..., Any]
    arity: tuple[int, int | None] = (1, 1)
    randomized: bool = False
    doc: str = ""


def _only(*allowed: StaticKind):
    def check(kinds, params):
        if kinds[0] not in allowed:
            raise KindError(f"expected {' or '.join(map(str, allowed))}, got {kinds[0]}")
        return kinds[0]
    return check


def _maps(src: tuple, dst: StaticKind):
    def check(kinds, params):
        if kinds[0] not in src:
            raise KindError(f"expected {' or '.join(map(str, src))}, got {kinds[0]}")
        return dst
    return check


def _band_sig(kinds, p):
    k = kinds[0]
    if p["mode"] == "masses":
        if k != DENSITY:
            raise KindError(f"mass-level banding expected {DENSITY}, got {k}")
    elif k not in (SAMPLE, DENSITY):
        raise KindError(f"expected {SAMPLE} or {DENSITY}, got {k}")
    return SUMMARY


def _select_sig(kinds, p):
    if kinds[0] == BUNDLE:
        raise KindError("layered bundles are terminal")
    return kinds[0]


def _emit_sig(model_kind):
    def check(kinds, p):
        if kinds[0] != SAMPLE:
            raise KindError(f"expected {SAMPLE}, got {kinds[0]}")
        return model_kind if p["emit"] == "model" else SAMPLE
    return check


def _combine_sig(kinds, p):
    if BUNDLE in kinds:
        raise KindError("layered bundles are terminal")
    mode = p["spec"].mode
    if mode == "layer":
        return BUNDLE
    bad = [str(k) for k in kinds if k != SAMPLE]
    if bad:
        raise KindError(f"{mode} combine expected sample inputs, got {', '.join(bad)}")
    return SAMPLE


def _p_source(p):
    out = {"table": _req(p, "table", str), "columns": _names(p, "columns", False)}
    kinds = p.get("kinds", {})
    if not isinstance(kinds, dict):
        raise ParameterError("kinds must map column names to kinds")
    out["kinds"] = {c: ColumnKind(k) for c, k in kinds.items()}
    out["levels"] = dict(p.get("levels", {}))
    out["rows"] = p.get("rows")
    return out


def _p_band(p):
    modes = [m for m in ("cuts", "quantiles", "masses") if m in p]
    if len(modes) != 1:
        raise ParameterError("band needs exactly one of cuts, quantiles, masses")
    levels = _req(p, modes[0], list)
    if not all(isinstance(x, _NUM) and not isinstance(x, bool) for x in levels):
        raise ParameterError(f"{modes[0]} must be numbers")
    column = p.get("column")
    if modes[0] == "masses":
        T.summarizing._check_levels(levels, True, "mass")
    elif modes[0] == "quantiles":
        T.summarizing._check_levels(levels, False, "quantile")
        if len(levels) < 2:
            raise ParameterError("quantile banding needs at least 2 levels")
    else:
        T.ExplicitEdges(tuple(levels))
    return {"mode": modes[0], "levels": levels, "column": column}


def _p_noise(p):
    return {"model": T.NoiseModel(_req(p, "family", str), float(_req(p, "scale", _NUM)),
                                  tuple(_names(p, "columns")))}


def _p_kde(p):
    cols = _names(p, "columns")
    if len(cols) not in (1, 2):
        raise ParameterError("smooth_kde takes 1 or 2 columns")
    bw = p.get("bandwidth", "auto")
    for b in bw if isinstance(bw, list) else [bw]:
        if b != "auto" and not (isinstance(b, _NUM) and b > 0):
            raise ParameterError(f"bandwidth must be 'auto' or a positive number, got {b!r}")
    grid = _req(p, "grid")
    for g in grid if isinstance(grid, list) else [grid]:
        if not isinstance(g, int) or isinstance(g, bool) or g < 2:
            raise ParameterError("grid sizes must be integers >= 2")
    return {"cols": cols, "bandwidth": bw, "grid_n": grid, "ranges": p.get("range")}


def _p_emit(p):
    emit = p.get("emit", "model")
    if emit not in ("model", "table"):
        raise ParameterError("emit must be 'model' or 'table'")
    return emit


def _p_combine(p):
    mode = _req(p, "mode", str)
    if mode not in ("join", "concat", "layer"):
        raise ParameterError(f"unknown combine mode {mode!r}")
    keys = _names(p, "keys", mode == "join")
    if mode == "join" and not keys:
        raise ParameterError("join needs at least one key column")
    return {"spec": CombineSpec(mode, tuple(keys))}


def _r_ols(rep, p, node):
    model, fitted = T.predict_ols(rep, p["y"], p["xs"], node=node)
    return model if p["emit"] == "model" else fitted


def _r_pca(rep, p, node):
    table, model = T.project_pca(rep, p["cols"], p["k"], node=node)
    return model if p["emit"] == "model" else table


OPS: dict[str, Op] = {}


def _register(op: Op):
    OPS[op.name] = op


_register(Op("source", frozenset({"table", "columns", "kinds", "levels", "rows"}), _p_source,
             lambda k, p: SAMPLE, None, (0, 0), doc="bound input table"))
_register(Op("full_disclosure", frozenset(), lambda p: {}, _only(SAMPLE),
             lambda r, p, node: T.full_disclosure(r), doc="sample -> sample"))
_register(Op("classify", frozenset({"column", "bins"}),
             lambda p: {"column": _req(p, "column", str), "bins": _bins(_req(p, "bins"))},
             _only(SAMPLE), lambda r, p, node: T.classify(r, p["column"], p["bins"], node=node),
             doc="sample -> sample"))
_register(Op("categorize", frozenset({"column", "mapping", "default"}),
             lambda p: {"column": _req(p, "column", str), "mapping": dict(_req(p, "mapping", dict)),
                        "default": p.get("default")},
             _only(SAMPLE), lambda r, p, node: T.categorize(r, p["column"], p["mapping"], p["default"], node=node),
             doc="sample -> sample"))
_register(Op("aggregate", frozenset({"group_by", "stats"}),
             lambda p: {"group_by": _names(p, "group_by", False), "stats": _stats(_req(p, "stats"))},
             _maps((SAMPLE,), SUMMARY),
             lambda r, p, node: T.aggregate(r, p["group_by"], p["stats"], node=node),
             doc="sample -> summary"))
_register(Op("band", frozenset({"column", "cuts", "quantiles", "masses"}), _p_band, _band_sig,
             lambda r, p, node: T.band(r, column=p["column"], node=node, **{p["mode"]: p["levels"]}),
             doc="sample | model[density_grid] -> summary (masses need model[density_grid])"))
_register(Op("derive", frozenset({"expr", "out"}),
             lambda p: {"expr": _req(p, "expr", str), "out": _req(p, "out", str),
                        "refs": T.parse_expression(p["expr"])[1]},
             _only(SAMPLE), lambda r, p, node: T.derive(r, p["expr"], p["out"], node=node),
             doc="sample -> sample"))
_register(Op("encode_select", frozenset({"columns"}), lambda p: {"cols": _names(p, "columns")},
             _select_sig, lambda r, p, node: T.encode_select(r, p["cols"], node=node),
             doc="sample | summary | model -> same"))
_register(Op("subsample", frozenset({"n", "replacement"}),
             lambda p: {"n": _req(p, "n", int), "replacement": bool(p.get("replacement", False))},
             _only(SAMPLE), lambda r, p, node, seed: T.subsample(r, p["n"], p["replacement"], seed, node=node),
             randomized=True, doc="sample -> sample"))
_register(Op("noise", frozenset({"family", "scale", "columns"}), _p_noise, _only(SAMPLE),
             lambda r, p, node, seed: T.noise(r, p["model"], seed, node=node),
             randomized=True, doc="sample -> sample"))
_register(Op("permute", frozenset({"column"}), lambda p: {"column": _req(p, "column", str)}, _only(SAMPLE),
             lambda r, p, node, seed: T.permute(r, p["column"], seed, node=node),
             randomized=True, doc="sample -> sample"))
_register(Op("smooth_kde", frozenset({"columns", "bandwidth", "grid", "range"}), _p_kde,
             _maps((SAMPLE,), DENSITY),
             lambda r, p, node: T.smooth_kde(r, p["cols"], p["bandwidth"], p["grid_n"], p["ranges"], node=node),
             doc="sample -> model[density_grid]"))
_register(Op("magnitude_adjust", frozenset({"value", "uncertainty", "pivot", "u_max"}),
             lambda p: {"value": _req(p, "value", str),
                        "spec": T.AdjustmentSpec(float(_req(p, "pivot", _NUM)), float(_req(p, "u_max", _NUM)),
                                                 _req(p, "uncertainty", str))},
             _only(SAMPLE, SUMMARY), lambda r, p, node: T.magnitude_adjust(r, p["spec"], p["value"], node=node),
             doc="sample | summary -> same"))
_register(Op("predict_ols", frozenset({"y", "xs", "emit"}),
             lambda p: {"y": _req(p, "y", str), "xs": _names(p, "xs"), "emit": _p_emit(p)},
             _emit_sig(OLS), _r_ols, doc="sample -> model[ols_line] (emit=table: sample)"))
_register(Op("project_pca", frozenset({"columns", "k", "emit"}),
             lambda p: {"cols": _names(p, "columns"), "k": _req(p, "k", int), "emit": _p_emit(p)},
             _emit_sig(PCA), _r_pca, doc="sample -> model[pca_loadings] (emit=table: sample)"))
_register(Op("combine", frozenset({"mode", "keys"}), _p_combine, _combine_sig,
             lambda reps, p, node: combine(reps, p["spec"]), (2, None),
             doc="join/concat: sample* -> sample; layer: any* -> bundle"))

TACTIC_OPS = tuple(n for n in OPS if n not in ("source", "combine"))


def node_signatures() -> dict[str, str]:
    """Human-readable kind signature of every op."""
    return {name: op.doc for name, op in OPS.items()}


def parse_params(node: Node) -> dict:
    op = OPS[node.op]
    if not isinstance(node.params, Mapping):
        raise PipelineError(f"node {node.id!r}: params must be an object")
    unknown = set(node.params) - op.keys
    if unknown:
        raise PipelineError(f"node {node.id!r}: unknown parameters {sorted(unknown)} for {node.op}")
    try:
        return op.parse(node.params)
    except (ParameterError, ValueError, TypeError, KeyError) as exc:
        raise PipelineError(f"node {node.id!r} ({node.op}): {exc}") from None


# --- parsing --------------------------------------------------------------

def parse_pipeline(text: str) -> PipelineGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PipelineError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from None
    return graph_from_dict(doc)


def graph_from_dict(doc: Mapping) -> PipelineGraph:
    if not isinstance(doc, Mapping):
        raise PipelineError("pipeline document must be a JSON object")
    unknown = set(doc) - {"nodes", "edges", "outputs", "signals", "sweep", "description"}
    if unknown:
        raise PipelineError(f"unknown top-level keys {sorted(unknown)}")
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise PipelineError("'nodes' must be a non-empty array")
    nodes = []
    seen = set()
    for i, rn in enumerate(raw_nodes):
        if not isinstance(rn, Mapping) or not isinstance(rn.get("id"), str) or not rn["id"]:
            raise PipelineError(f"node #{i} needs a non-empty string 'id'")
        nid = rn["id"]
        if nid in seen:
            raise PipelineError(f"duplicate node id {nid!r}")
        seen.add(nid)
        op = rn.get("op")
        if op not in OPS:
            raise PipelineError(f"node {nid!r}: unknown op {op!r}")
        node = Node(nid, op, dict(rn.get("params", {})))
        parse_params(node)
        nodes.append(node)
    edges = []
    for e in doc.get("edges", []):
        if not isinstance(e, list) or len(e) not in (2, 3):
            raise PipelineError(f"edge {e!r} must be [from, to] or [from, to, slot]")
        a, b = e[0], e[1]
        slot = e[2] if len(e) == 3 else 0
        for x in (a, b):
            if x not in seen:
                raise PipelineError(f"edge {e!r} references unknown node {x!r}")
        if not isinstance(slot, int) or isinstance(slot, bool) or slot < 0:
            raise PipelineError(f"edge {e!r}: slot must be a non-negative integer")
        edges.append((a, b, slot))
    dupes = {(b, s) for _, b, s in edges if sum(1 for _, b2, s2 in edges if (b2, s2) == (b, s)) > 1}
    if dupes:
        b, s = sorted(dupes)[0]
        raise PipelineError(f"node {b!r} slot {s} has more than one incoming edge")
    outputs = doc.get("outputs")
    if not isinstance(outputs, list) or not outputs:
        raise PipelineError("'outputs' must be a non-empty array")
    for o in outputs:
        if o not in seen:
            raise PipelineError(f"output references unknown node {o!r}")
    signals = doc.get("signals", [])
    if not isinstance(signals, list):
        raise PipelineError("'signals' must be an array")
    from .signals import SignalSpec

    ids = set()
    for raw in signals:
        try:
            sig = SignalSpec.from_dict(raw)
        except (ParameterError, KeyError, TypeError, AttributeError) as exc:
            raise PipelineError(f"bad signal {raw!r}: {exc}") from None
        if sig.id in ids:
            raise PipelineError(f"duplicate signal id {sig.id!r}")
        ids.add(sig.id)
        if sig.output is not None and sig.output not in outputs:
            raise PipelineError(f"signal {sig.id!r} names {sig.output!r}, which is not an output")
    g = PipelineGraph(tuple(nodes), tuple(edges), tuple(outputs), tuple(signals), doc.get("sweep"))
    try:
        g.topological_order()
    except CycleError as exc:
        raise PipelineError(f"cycle through nodes {sorted(set(exc.args[1]))}") from None
    return g


# --- kind checking --------------------------------------------------------

@dataclass(frozen=True)
class KindMismatch:
    """A static typing error: the node, what it accepts, what reached it."""

    node: str
    op: str
    expected: str
    actual: str
    message: str

    def __str__(self) -> str:
        return f"node {self.node!r} ({self.op}): {self.message}"


def infer_kinds(g: PipelineGraph) -> tuple[dict[str, StaticKind], list[KindMismatch]]:
    """Propagate representation kinds from the sources; sources are samples."""
    kinds: dict[str, StaticKind] = {}
    errors: list[KindMismatch] = []
    for nid in g.topological_order():
        node = g.node(nid)
        op = OPS[node.op]
        ups = g.inputs_of(nid)
        slots = sorted(s for _, b, s in g.edges if b == nid)
        lo, hi = op.arity
        if slots != list(range(len(slots))) or len(ups) < lo or (hi is not None and len(ups) > hi):
            want = f"{lo}" if lo == hi else f"at least {lo}"
            errors.append(KindMismatch(nid, node.op, f"{want} inputs on slots 0..", f"slots {slots}",
                                       f"expects {want} input(s) on consecutive slots from 0, got slots {slots}"))
            continue
        if any(u not in kinds for u in ups):
            continue  # upstream already failed
        nested = [u for u in ups if _nested_band(g.node(u))]
        if nested:
            errors.append(KindMismatch(nid, node.op, "non-nested input", f"nested band from {nested[0]!r}",
                                       f"nested band {nested[0]!r} is terminal and cannot feed further nodes"))
            continue
        in_kinds = [kinds[u] for u in ups]
        params = parse_params(node)
        try:
            kinds[nid] = op.signature(in_kinds, params)
        except KindError as exc:
            errors.append(KindMismatch(nid, node.op, op.doc, ", ".join(map(str, in_kinds)), str(exc)))
    return kinds, errors


def _nested_band(node: Node) -> bool:
    return node.op == "band" and len(node.params.get("masses", ())) > 1


def validate_pipeline(g: PipelineGraph) -> list[KindMismatch]:
    """Kind errors of ``g``; empty when every node accepts what reaches it."""
    return infer_kinds(g)[1]


# --- combine --------------------------------------------------------------

@dataclass(frozen=True)
class CombineSpec:
    mode: str  # "join" | "concat" | "layer"
    keys: tuple[str, ...] = ()


def combine(reps: Sequence, spec: CombineSpec):
    """Join, concatenate or layer representations.

    Combining is not a tactic: a joined or concatenated sample carries the
    concatenated lineages of its inputs and adds no step of its own.
    """
    reps = [r if isinstance(r, (Representation, Bundle)) else Representation.sample(r) for r in reps]
    if spec.mode == "layer":
        if any(isinstance(r, Bundle) for r in reps):
            raise KindError("layered bundles are terminal")
        return Bundle(tuple(reps))
    for r in reps:
        if not isinstance(r, Representation) or r.kind is not Kind.SAMPLE:
            raise KindError(f"{spec.mode} needs sample inputs")
    lineage = tuple(s for r in reps for s in r.lineage)
    tables = [r.table for r in reps]
    out = tables[0]
    for t in tables[1:]:
        out = _join(out, t, spec.keys) if spec.mode == "join" else _concat(out, t)
    return Representation.sample(out, lineage)


def _concat(a: Table, b: Table) -> Table:
    if not b.columns or (b.n_rows == 0 and b.names == a.names):
        return a
    if not a.columns:
        return b
    sig_a = [(c.name, c.kind, c.levels) for c in a.columns]
    sig_b = [(c.name, c.kind, c.levels) for c in b.columns]
    if sig_a != sig_b:
        raise ParameterError(f"schema mismatch: {[s[:2] for s in sig_a]} vs {[s[:2] for s in sig_b]}")
    return Table(tuple(ca.with_values(ca.values + cb.values) for ca, cb in zip(a.columns, b.columns)), a.source_id)


def _join(a: Table, b: Table, keys: Sequence[str]) -> Table:
    for t, side in ((a, "left"), (b, "right")):
        missing = [k for k in keys if k not in t]
        if missing:
            raise KeyError(f"join key {missing} absent from {side} input")
    clash = [n for n in b.names if n in a and n not in keys]
    if clash:
        raise ParameterError(f"schema mismatch: non-key columns {clash} exist on both sides")
    index: dict[tuple, list[int]] = {}
    bkeys = [b.column(k).values for k in keys]
    for j in range(b.n_rows):
        key = tuple(col[j] for col in bkeys)
        if None not in key:
            index.setdefault(key, []).append(j)
    akeys = [a.column(k).values for k in keys]
    pairs = [(i, j) for i in range(a.n_rows) for j in index.get(tuple(col[i] for col in akeys), [])]
    extra = [c for c in b.columns if c.name not in keys]
    cols = [c.with_values(c.values[i] for i, _ in pairs) for c in a.columns]
    cols += [c.with_values(c.values[j] for _, j in pairs) for c in extra]
    return Table(tuple(cols), a.source_id)


# --- execution ------------------------------------------------------------

def run_graph(g: PipelineGraph, inputs: Mapping[str, Table], seed: int = 0) -> dict[str, Any]:
    """Evaluate every node; returns node id -> representation (or bundle)."""
    errors = validate_pipeline(g)
    if errors:
        raise PipelineError("invalid pipeline: " + "; ".join(map(str, errors)))
    results: dict[str, Any] = {}
    for nid in g.topological_order():
        node = g.node(nid)
        op = OPS[node.op]
        params = parse_params(node)
        if node.op == "source":
            table = inputs.get(nid)
            if table is None:
                table = inputs.get(params["table"])
            if table is None:
                raise PipelineError(f"source {nid!r} (table {params['table']!r}) is not bound")
            results[nid] = Representation.sample(table)
            continue
        ups = [results[u] for u in g.inputs_of(nid)]
        try:
            if node.op == "combine":
                results[nid] = op.run(ups, params, nid)
            elif op.randomized:
                results[nid] = op.run(ups[0], params, nid, derive_seed(seed, nid))
            else:
                results[nid] = op.run(ups[0], params, nid)
        except (ValueError, TypeError, KeyError, ArithmeticError) as exc:
            raise ExecutionError(nid, exc) from exc
    return results


def execute(g: PipelineGraph, inputs: Mapping[str, Table], seed: int = 0) -> dict[str, Any]:
    results = run_graph(g, inputs, seed)
    return {o: results[o] for o in g.outputs}
