"""Static disclosure analysis: vulnerability findings and per-column status reports.

Everything here is computed from the pipeline graph and the declared source
schemas.  Data only enters through optional row counts (for the bin
occupancy rule) and optional executed outputs (for distortion magnitudes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .core import LEVEL_OF_DETAIL, Kind, Table
from .pipeline import (
    BUNDLE,
    SAMPLE,
    PipelineGraph,
    infer_kinds,
    parse_params,
)

CATEGORIES = ("Confuser", "Jumbler", "HallucinatorRisk", "MisleaderRisk")

DEFAULT_MIN_OCCUPANCY = 5.0

PERCEPTUAL_CAVEAT = (
    "Perceptual confusers are not analysed: whether two encoded values can be told apart "
    "depends on scales, mark sizes and viewing conditions, which this tool does not model."
)


@dataclass(frozen=True)
class Rule:
    id: str
    category: str
    trigger: str
    description: str


RULEBOOK: dict[str, Rule] = {r.id: r for r in (
    Rule("R1", "Confuser", "encode_select drops a column",
         "The column is left out of the encoded output, so changes to it cannot show up."),
    Rule("R2", "Confuser", "classify, aggregate or band",
         "Values that fall in the same partition become indistinguishable."),
    Rule("R3", "Confuser", "smooth_kde",
         "Smoothing replaces records with a density; structure finer than the bandwidth is lost."),
    Rule("R4", "Jumbler", "magnitude_adjust",
         "Encoded values pass through an adjustment function the reader cannot invert, "
         "so a visible change cannot be attributed to value or uncertainty alone."),
    Rule("R5", "Jumbler", "derive over two or more columns",
         "The derived column mixes several sources; a change in it cannot be traced to one of them."),
    Rule("R6", "HallucinatorRisk", "output of kind sample",
         "Point-level output leaves ordering, stacking and overlap to the layout, "
         "which can produce patterns that are not in the data."),
    Rule("R7", "MisleaderRisk", "classify with low expected bin occupancy",
         "Too few records per bin; bin-to-bin variation may reflect noise rather than data."),
    Rule("R8", "Confuser", "subsample, noise or permute",
         "Individual points are perturbed or unrepresentative of the records they stand for."),
)}


@dataclass(frozen=True)
class Finding:
    category: str
    rule_id: str
    node_id: str
    subject: tuple[str, ...]
    justification: str
    detail: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"category": self.category, "rule_id": self.rule_id, "node_id": self.node_id,
                "subject": list(self.subject), "justification": self.justification,
                "detail": dict(self.detail)}


def _finding(rule_id: str, node: str, subject: Sequence[str], **detail) -> Finding:
    rule = RULEBOOK[rule_id]
    subject = tuple(subject)
    named = f" Affected: {', '.join(subject)}." if subject else ""
    text = f"[{rule.id}] {rule.trigger}: {rule.description}{named}"
    return Finding(rule.category, rule.id, node, subject, text, {k: v for k, v in detail.items() if v is not None})


# --- column provenance ----------------------------------------------------

@dataclass(frozen=True)
class Prov:
    """Which original columns feed a column, which of them verbatim, and which nodes touched it."""

    origins: frozenset = frozenset()
    raw: frozenset = frozenset()
    causes: frozenset = frozenset()

    def touched(self, node: str) -> "Prov":
        return Prov(self.origins, frozenset(), self.causes | {node})

    def __or__(self, other: "Prov") -> "Prov":
        return Prov(self.origins | other.origins, self.raw | other.raw, self.causes | other.causes)


@dataclass(frozen=True)
class _State:
    cols: dict  # name -> Prov; insertion order mirrors the table
    vanished: dict  # original -> frozenset of node ids where its last trace disappeared
    known: bool = True  # every source schema on the path is declared


_EMPTY = Prov()


def _merge(*provs: Prov) -> Prov:
    out = _EMPTY
    for p in provs:
        out = out | p
    return out


_BAND_STATS = {
    ("sample", "cuts"): ("count", "fraction"),
    ("sample", "quantiles"): ("level_lo", "level_hi", "mass"),
    ("model", "cuts"): ("mass",),
    ("model", "quantiles"): ("level_lo", "level_hi", "mass"),
    ("model", "masses"): ("mass", "density_threshold", "cells"),
}


def _flow(node, params: dict, ins: list[_State], schema: Sequence[str] | None,
          in_kind: Kind | None = None) -> _State:
    nid = node.id
    op = node.op
    if op == "source":
        if schema is None:
            return _State({}, {}, False)
        return _State({c: Prov(frozenset({(nid, c)}), frozenset({(nid, c)})) for c in schema}, {})
    known = all(s.known for s in ins)
    cur = dict(ins[0].cols) if ins else {}

    def get(c):
        return cur.get(c, _EMPTY)

    if op == "combine":
        cols: dict = {}
        for s in ins:
            for c, p in s.cols.items():
                cols[c] = cols[c] | p if c in cols else p
        out = cols
    elif op in ("full_disclosure",):
        out = cur
    elif op == "classify":
        out = {**cur, f"{params['column']}__bin": get(params["column"]).touched(nid)}
    elif op == "categorize":
        out = {**cur, params["column"]: get(params["column"]).touched(nid)}
    elif op == "aggregate":
        keys = params["group_by"]
        out = {k: get(k).touched(nid) for k in keys}
        key_prov = _merge(*(get(k) for k in keys)).touched(nid)
        for st in params["stats"]:
            out[st.name] = get(st.column).touched(nid) if st.column else key_prov
    elif op == "band":
        # mirror the summary's own column names: band key(s) then its stats
        on_model = in_kind is Kind.MODEL
        src = _merge(*cur.values()) if on_model else get(params["column"])
        prov = src.touched(nid)
        if params["mode"] == "masses":
            out = {"level": prov}
        elif on_model:
            out = {c: p.touched(nid) for c, p in cur.items()}
        else:
            out = {params["column"]: prov}
        for stat in _BAND_STATS[("model" if on_model else "sample", params["mode"])]:
            out[stat] = prov
    elif op == "derive":
        out = {**cur, params["out"]: _merge(*(get(r) for r in params["refs"])).touched(nid)}
    elif op == "encode_select":
        # on a model the select only names axes; nothing is removed
        out = cur if in_kind is Kind.MODEL else {c: cur[c] for c in params["cols"] if c in cur}
    elif op == "subsample":
        out = {c: p.touched(nid) for c, p in cur.items()}
    elif op in ("noise", "permute"):
        targets = params["model"].columns if op == "noise" else (params["column"],)
        out = {c: (p.touched(nid) if c in targets else p) for c, p in cur.items()}
    elif op == "smooth_kde":
        out = {c: get(c).touched(nid) for c in params["cols"]}
    elif op == "magnitude_adjust":
        spec = params["spec"]
        out = {**cur, params["value"]: (get(params["value"]) | get(spec.uncertainty)).touched(nid)}
    elif op == "predict_ols":
        fit = _merge(get(params["y"]), *(get(x) for x in params["xs"])).touched(nid)
        if params["emit"] == "model":
            out = {params["y"]: fit, **{x: get(x).touched(nid) for x in params["xs"]}}
        else:
            out = {**cur, f"{params['y']}__fit": fit}
    elif op == "project_pca":
        mixed = _merge(*(get(c) for c in params["cols"])).touched(nid)
        if params["emit"] == "model":
            out = {c: get(c).touched(nid) for c in params["cols"]}
        else:
            out = {c: p for c, p in cur.items() if c not in params["cols"]}
            out.update({f"pc{i + 1}": mixed for i in range(params["k"])})
    else:  # pragma: no cover - registry and analysis must stay in step
        raise KeyError(f"no provenance rule for op {op!r}")
    before = set().union(*(p.origins for s in ins for p in s.cols.values())) if ins else set()
    after = set().union(*(p.origins for p in out.values())) if out else set()
    vanished: dict = {}
    for s in ins:
        for o, nodes in s.vanished.items():
            vanished[o] = vanished.get(o, frozenset()) | nodes
    for o in before - after:
        vanished[o] = vanished.get(o, frozenset()) | {nid}
    for o in after:
        vanished.pop(o, None)
    return _State(out, vanished, known)


def _schemas(g: PipelineGraph, schemas: Mapping[str, Sequence[str]] | None) -> dict[str, list[str] | None]:
    """Column names per source id: explicit mapping (by id or table name) first, then declared columns."""
    out = {}
    for n in g.sources():
        params = parse_params(n)
        cols = None
        if schemas:
            cols = schemas.get(n.id, schemas.get(params["table"]))
        if cols is None and params["columns"]:
            cols = params["columns"]
        out[n.id] = list(cols) if cols is not None else None
    return out


def column_flow(g: PipelineGraph, schemas: Mapping[str, Sequence[str]] | None = None) -> dict[str, _State]:
    sch = _schemas(g, schemas)
    kinds = infer_kinds(g)[0]
    states: dict[str, _State] = {}
    for nid in g.topological_order():
        node = g.node(nid)
        ups = g.inputs_of(nid)
        ins = [states[u] for u in ups]
        in_kind = kinds[ups[0]].kind if ups and ups[0] in kinds else None
        states[nid] = _flow(node, parse_params(node), ins, sch.get(nid), in_kind)
    return states


# --- findings -------------------------------------------------------------

def _bin_count(bins) -> int:
    if hasattr(bins, "edges"):
        return len(bins.edges) - 1
    return int(bins.count)


def _row_estimates(g: PipelineGraph, row_counts: Mapping[str, int] | None):
    """Static (rows, cells) per node: expected rows and product of bin counts on the path."""
    est: dict[str, tuple[int | None, int]] = {}
    for nid in g.topological_order():
        node = g.node(nid)
        p = parse_params(node)
        ins = [est[u] for u in g.inputs_of(nid)]
        if node.op == "source":
            rows = None
            if row_counts:
                rows = row_counts.get(nid, row_counts.get(p["table"]))
            est[nid] = (rows if rows is not None else p["rows"], 1)
        elif node.op == "subsample":
            est[nid] = (p["n"], ins[0][1])
        elif node.op == "classify":
            est[nid] = (ins[0][0], ins[0][1] * _bin_count(p["bins"]))
        elif node.op == "combine":
            spec = p["spec"]
            if spec.mode == "concat" and all(r is not None for r, _ in ins):
                est[nid] = (sum(r for r, _ in ins), max(c for _, c in ins))
            else:
                est[nid] = (None, 1)
        else:
            est[nid] = ins[0]
    return est


def detect_vulnerabilities(g: PipelineGraph, row_counts: Mapping[str, int] | None = None,
                           min_occupancy: float = DEFAULT_MIN_OCCUPANCY,
                           schemas: Mapping[str, Sequence[str]] | None = None) -> list[Finding]:
    """Apply the rulebook to a validated graph.

    ``row_counts`` (by source id or table name) enables the bin occupancy
    rule; ``schemas`` lets dropped columns be named when sources do not
    declare their columns.
    """
    kinds, errors = infer_kinds(g)
    if errors:
        raise ValueError("detect_vulnerabilities needs a validated graph")
    states = column_flow(g, schemas)
    est = _row_estimates(g, row_counts)
    findings: list[Finding] = []
    for nid in g.topological_order():
        node = g.node(nid)
        p = parse_params(node)
        ups = g.inputs_of(nid)
        before = states[ups[0]].cols if ups else {}
        op = node.op
        if op == "encode_select" and kinds[ups[0]].kind is not Kind.MODEL:
            for c in before:
                if c not in p["cols"]:
                    findings.append(_finding("R1", nid, [c]))
        elif op == "classify":
            findings.append(_finding("R2", nid, [p["column"]]))
            rows, cells = est[nid]
            if rows is not None and rows / cells < min_occupancy:
                findings.append(_finding("R7", nid, [p["column"]], rows=rows, bins=cells,
                                         expected_occupancy=rows / cells, threshold=min_occupancy))
        elif op == "aggregate":
            findings.append(_finding("R2", nid, p["group_by"]))
        elif op == "band":
            subject = [p["column"]] if p["column"] else list(before)
            findings.append(_finding("R2", nid, subject))
        elif op == "smooth_kde":
            findings.append(_finding("R3", nid, p["cols"]))
        elif op == "magnitude_adjust":
            findings.append(_finding("R4", nid, [p["value"], p["spec"].uncertainty]))
        elif op == "derive":
            refs = sorted(set(p["refs"]))
            if len(refs) >= 2:
                findings.append(_finding("R5", nid, refs))
        elif op == "subsample":
            findings.append(_finding("R8", nid, list(before)))
        elif op == "noise":
            findings.append(_finding("R8", nid, p["model"].columns))
        elif op == "permute":
            findings.append(_finding("R8", nid, [p["column"]]))
    for out in g.outputs:
        if kinds[out] == SAMPLE:
            findings.append(_finding("R6", out, list(states[out].cols)))
    return findings


# --- report ---------------------------------------------------------------

@dataclass(frozen=True)
class ColumnStatus:
    status: str  # revealed | distorted | hidden
    nodes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"status": self.status, "nodes": list(self.nodes)}


@dataclass(frozen=True)
class OutputReport:
    node: str
    kind: str
    family: str
    level_of_detail: str
    columns: Mapping[str, ColumnStatus]
    encoded: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "family": self.family, "level_of_detail": self.level_of_detail,
                "encoded": list(self.encoded),
                "columns": {c: s.to_dict() for c, s in self.columns.items()}}


@dataclass(frozen=True)
class DisclosureReport:
    columns: tuple[str, ...]
    outputs: Mapping[str, OutputReport]
    findings: tuple[Finding, ...]
    distortions: tuple | None = None
    caveats: tuple[str, ...] = (PERCEPTUAL_CAVEAT,)
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        doc = {
            "columns": list(self.columns),
            "outputs": {k: v.to_dict() for k, v in self.outputs.items()},
            "findings": [f.to_dict() for f in self.findings],
            "caveats": list(self.caveats),
            "notes": list(self.notes),
            "rulebook": {r.id: {"category": r.category, "trigger": r.trigger, "description": r.description}
                         for r in RULEBOOK.values()},
        }
        if self.distortions is not None:
            doc["distortions"] = [d.to_dict() for d in self.distortions]
        return doc

    def to_json(self) -> str:
        from .io import dumps_json
        return dumps_json(self.to_dict())

    def to_text(self) -> str:
        lines = ["Disclosure report", "=================", ""]
        for name, out in self.outputs.items():
            lines.append(f"output {name}: {out.kind} ({out.family}; {out.level_of_detail})")
            for c, st in out.columns.items():
                via = f" via {', '.join(st.nodes)}" if st.nodes else ""
                lines.append(f"  {c:<24} {st.status}{via}")
            lines.append("")
        lines.append(f"findings ({len(self.findings)}):")
        for f in self.findings:
            lines.append(f"  {f.category:<16} {f.rule_id} at {f.node_id}: {f.justification}")
        if not self.findings:
            lines.append("  none")
        if self.distortions is not None:
            lines += ["", "signals:"]
            for d in self.distortions:
                err = "" if d.abs_error is None else f" abs_error={d.abs_error!r}"
                bound = "" if d.bound is None else f" bound=[{d.bound[0]!r}, {d.bound[1]!r}]"
                lines.append(f"  {d.signal} on {d.output}: {d.status} original={_short(d.original)} "
                             f"disclosed={_short(d.disclosed)}{err}{bound}")
        lines.append("")
        for note in self.notes + self.caveats:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def _short(v) -> str:
    if isinstance(v, list):
        return f"<{len(v)} items>"
    return repr(v) if isinstance(v, float) else str(v)


def _normalize_originals(g: PipelineGraph, original) -> dict[str, Table]:
    if original is None:
        return {}
    if isinstance(original, Table):
        sources = g.sources()
        if len(sources) != 1:
            raise ValueError("a single original table needs a single-source graph")
        return {sources[0].id: original}
    out = {}
    for n in g.sources():
        t = original.get(n.id, original.get(parse_params(n)["table"]))
        if t is not None:
            out[n.id] = t
    return out


def _family(g: PipelineGraph, kinds, nid: str, tactic_path: dict) -> str:
    k = kinds[nid]
    if k == BUNDLE:
        return "layered"
    if k.kind is Kind.SAMPLE:
        return "sampling" if tactic_path[nid] else "full"
    return "summarizing" if k.kind is Kind.SUMMARY else "modeling"


def disclosure_report(g: PipelineGraph, original=None, outputs: Mapping[str, Any] | None = None,
                      min_occupancy: float = DEFAULT_MIN_OCCUPANCY,
                      schemas: Mapping[str, Sequence[str]] | None = None) -> DisclosureReport:
    """Statuses of every original column in every output, plus findings.

    ``original`` is a table (single source) or a mapping from source id or
    table name to table; it supplies schemas and row counts.  With executed
    ``outputs`` the declared signals are evaluated as well.
    """
    originals = _normalize_originals(g, original)
    schemas = {**(schemas or {}), **{k: t.names for k, t in originals.items()}}
    kinds, errors = infer_kinds(g)
    if errors:
        raise ValueError("disclosure_report needs a validated graph")
    states = column_flow(g, schemas)
    findings = detect_vulnerabilities(g, {k: t.n_rows for k, t in originals.items()} or None,
                                      min_occupancy, schemas)
    sch = _schemas(g, schemas)
    multi = len(sch) > 1
    all_cols = [(s, c) for s, cols in sch.items() if cols for c in cols]
    label = {o: (f"{o[0]}.{o[1]}" if multi else o[1]) for o in all_cols}
    notes = [f"source {s!r} declares no schema; its columns are not tracked" for s, c in sch.items() if c is None]

    tactic_path: dict[str, bool] = {}
    for nid in g.topological_order():
        op = g.node(nid).op
        ups = g.inputs_of(nid)
        tactic_path[nid] = op not in ("source", "full_disclosure", "combine") or any(tactic_path[u] for u in ups)

    reports = {}
    for out in g.outputs:
        st = states[out]
        statuses = {}
        for o in all_cols:
            feeding = [p for p in st.cols.values() if o in p.origins]
            if any(o in p.raw for p in feeding):
                statuses[label[o]] = ColumnStatus("revealed")
            elif feeding:
                statuses[label[o]] = ColumnStatus("distorted", tuple(sorted(_merge(*feeding).causes)))
            else:
                statuses[label[o]] = ColumnStatus("hidden", tuple(sorted(st.vanished.get(o, ()))))
        fam = _family(g, kinds, out, tactic_path)
        reports[out] = OutputReport(out, str(kinds[out]), fam,
                                    LEVEL_OF_DETAIL.get(fam, "several layered representations"),
                                    statuses, tuple(st.cols))
    distortions = None
    if outputs is not None and g.signals and originals:
        from .signals import evaluate_declared
        distortions = tuple(evaluate_declared(g, originals, outputs))
    return DisclosureReport(tuple(label[o] for o in all_cols), reports, tuple(findings), distortions,
                            notes=tuple(notes))


def rulebook_table() -> str:
    """The shipped rulebook as a plain-text table."""
    rows = [("rule", "category", "trigger", "meaning")]
    rows += [(r.id, r.category, r.trigger, r.description) for r in RULEBOOK.values()]
    w = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(f"{a:<{w[0]}}  {b:<{w[1]}}  {c:<{w[2]}}  {d}" for a, b, c, d in rows) + "\n"
