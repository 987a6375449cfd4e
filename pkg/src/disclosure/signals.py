"""Task-relevant signals, their distortion under a disclosure, and parameter sweeps."""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    Bundle,
    Evaluator,
    Interval,
    Kind,
    ModelRep,
    Representation,
    SummaryRep,
    Table,
    as_representation,
)
from .numerics import count_modes, hdr_cells, normalized_masses, quantile_sorted
from .tactics import ParameterError, grid_quantile, smooth_kde

SIGNAL_KINDS = ("exceedance", "quantile", "mode_count", "cluster_count", "cluster_summary",
                "reidentification_risk")

_DEFAULTS = {
    "mode_count": {"prominence": 0.05, "bandwidth": "auto", "grid": 256},
    "cluster_count": {"bandwidth": "auto", "grid": 64, "connectivity": 4},
    "cluster_summary": {"bandwidth": "auto", "grid": 64, "connectivity": 4},
}


@dataclass(frozen=True)
class SignalSpec:
    """A named query; ``params`` hold threshold, p, prominence, level or k."""

    id: str
    kind: str
    target: tuple[str, ...]
    params: Mapping[str, Any] = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ParameterError(f"unknown signal kind {self.kind!r}; expected one of {SIGNAL_KINDS}")
        object.__setattr__(self, "target", tuple(self.target))
        params = {**_DEFAULTS.get(self.kind, {}), **self.params}
        object.__setattr__(self, "params", params)
        need = {"exceedance": "threshold", "quantile": "p", "cluster_count": "level",
                "cluster_summary": "level", "reidentification_risk": "k"}.get(self.kind)
        if need and need not in params:
            raise ParameterError(f"signal {self.id!r} needs parameter {need!r}")
        if self.kind == "exceedance" and not math.isfinite(params["threshold"]):
            raise ParameterError("threshold must be finite")
        if self.kind == "quantile" and not 0.0 <= params["p"] <= 1.0:
            raise ParameterError("p must lie in [0, 1]")
        if self.kind == "mode_count" and not params["prominence"] >= 0:
            raise ParameterError("prominence must be >= 0")
        if self.kind in ("cluster_count", "cluster_summary") and not 0.0 < params["level"] < 1.0:
            raise ParameterError("mass level must lie in (0, 1)")
        if self.kind == "reidentification_risk" and not (int(params["k"]) == params["k"] and params["k"] >= 1):
            raise ParameterError("k must be an integer >= 1")
        if self.kind in ("exceedance", "quantile", "mode_count") and len(self.target) != 1:
            raise ParameterError(f"{self.kind} targets exactly one column")
        if self.kind in ("cluster_count", "cluster_summary") and len(self.target) not in (1, 2):
            raise ParameterError(f"{self.kind} targets one or two columns")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SignalSpec":
        extra = set(d) - {"id", "kind", "target", "params", "output", "source"}
        if extra:
            raise ParameterError(f"unknown signal keys {sorted(extra)}")
        target = d.get("target", [])
        if isinstance(target, str):
            target = [target]
        return cls(d["id"], d["kind"], tuple(target), dict(d.get("params", {})), d.get("output"))

    def to_dict(self) -> dict:
        out = {"id": self.id, "kind": self.kind, "target": list(self.target), "params": dict(self.params)}
        if self.output is not None:
            out["output"] = self.output
        return out


@dataclass(frozen=True)
class SignalValue:
    value: Any = None
    bound: tuple[float, float] | None = None
    detail: Mapping[str, Any] = field(default_factory=dict)
    answerable: bool = True

    @property
    def numeric(self) -> bool:
        return self.answerable and isinstance(self.value, (int, float)) and not isinstance(self.value, bool)


def unanswerable(reason: str) -> SignalValue:
    return SignalValue(None, None, {"reason": reason}, False)


# --- shared views of a representation ------------------------------------

def _key_for(s: SummaryRep, target: str) -> str | None:
    """Summary key standing for ``target``: the column itself or its classified bins."""
    for k in (target, f"{target}__bin"):
        if k in s.keys:
            return k
    return None


def _interval_profile(s: SummaryRep, target: str):
    """Per-interval mass along ``target`` for histogram-like summaries.

    Returns ``(intervals, masses)`` with empty cells included, or ``None``
    when the summary does not carry interval-keyed counts or masses.
    """
    target = _key_for(s, target)
    if target is None:
        return None
    if "count" in s.stat_names:
        stat = "count"
    elif "mass" in s.stat_names and "level_lo" not in s.stat_names:
        stat = "mass"
    else:
        return None
    axis = s.keys.index(target)
    ivs = s.key_levels.get(target)
    if ivs is None:
        ivs = sorted({g.key[axis] for g in s.groups}, key=lambda iv: (iv.lo, iv.hi)) \
            if all(isinstance(g.key[axis], Interval) for g in s.groups) else None
    if not ivs:
        return None
    pos = {iv: i for i, iv in enumerate(ivs)}
    masses = [0.0] * len(ivs)
    for g in s.groups:
        iv = g.key[axis]
        v = s.stat(g, stat)
        if iv in pos and v is not None:
            masses[pos[iv]] += float(v)
    return list(ivs), masses


def _density_axis(m: ModelRep, target: str):
    """``(coords, marginal weights)`` of a density grid along ``target``."""
    if m.evaluator is not Evaluator.DENSITY_GRID:
        return None
    names = [a.name for a in m.axes]
    if target not in names:
        return None
    i = names.index(target)
    grid = m.grid_array()
    other = tuple(j for j in range(grid.ndim) if j != i)
    marginal = grid.sum(axis=other) if other else grid
    return m.axes[i].coords(), np.asarray(marginal, dtype=float)


def _present(t: Table, name: str) -> list[float]:
    return sorted(float(v) for v in t.numeric(name).present())


# --- individual signals ---------------------------------------------------

def _exceedance(s: SignalSpec, rep):
    t0 = float(s.params["threshold"])
    target = s.target[0]
    if rep.kind is Kind.SAMPLE:
        if target not in rep.table:
            return unanswerable(f"column {target!r} not disclosed")
        xs = _present(rep.table, target)
        if not xs:
            return unanswerable("no values")
        return SignalValue(sum(1 for v in xs if v > t0) / len(xs))
    if rep.kind is Kind.SUMMARY:
        prof = _interval_profile(rep.payload, target)
        if prof is None:
            return unanswerable("summary carries no interval masses for the target")
        ivs, masses = prof
        total = math.fsum(masses)
        if total <= 0:
            return unanswerable("summary holds no mass")
        above = 0.0
        straddle = 0.0
        share = 0.0
        for iv, m in zip(ivs, masses):
            frac = m / total
            if iv.lo > t0:
                above += frac
            elif iv.hi > t0:
                straddle += frac
                share += frac * (iv.hi - t0) / iv.width if iv.width > 0 else 0.0
        return SignalValue(above + share, (above, above + straddle),
                           {"straddling_mass": straddle})
    if rep.kind is Kind.MODEL:
        view = _density_axis(rep.payload, target)
        if view is None:
            return unanswerable("model is not a density over the target")
        coords, weights = view
        mass = normalized_masses(weights)
        return SignalValue(float(math.fsum(mass[coords > t0].tolist())))
    return unanswerable("unsupported representation")


def _quantile(s: SignalSpec, rep):
    p = float(s.params["p"])
    target = s.target[0]
    if rep.kind is Kind.SAMPLE:
        if target not in rep.table:
            return unanswerable(f"column {target!r} not disclosed")
        xs = _present(rep.table, target)
        return SignalValue(quantile_sorted(xs, p)) if xs else unanswerable("no values")
    if rep.kind is Kind.SUMMARY:
        sm = rep.payload
        if target in sm.keys and "level_lo" in sm.stat_names:
            axis = sm.keys.index(target)
            bands = sorted(((sm.stat(g, "level_lo"), sm.stat(g, "level_hi"), g.key[axis]) for g in sm.groups),
                           key=lambda b: b[0])
            for lo_p, hi_p, iv in bands:
                if p == lo_p:
                    return SignalValue(iv.lo, (iv.lo, iv.lo))
                if p == hi_p:
                    return SignalValue(iv.hi, (iv.hi, iv.hi))
                if lo_p < p < hi_p:
                    est = iv.lo + (iv.hi - iv.lo) * (p - lo_p) / (hi_p - lo_p)
                    return SignalValue(est, (iv.lo, iv.hi))
            return unanswerable("quantile level outside the banded range")
        prof = _interval_profile(sm, target)
        if prof is None:
            return unanswerable("summary carries no interval masses for the target")
        ivs, masses = prof
        return _histogram_quantile(ivs, masses, p, "count" in sm.stat_names)
    if rep.kind is Kind.MODEL:
        view = _density_axis(rep.payload, target)
        if view is None:
            return unanswerable("model is not a density over the target")
        coords, weights = view
        return SignalValue(grid_quantile(coords, normalized_masses(weights), p))
    return unanswerable("unsupported representation")


def _histogram_quantile(ivs, masses, p, counts: bool) -> SignalValue:
    total = math.fsum(masses)
    if total <= 0:
        return unanswerable("histogram holds no mass")
    cum = list(itertools.accumulate(masses))
    # value: invert the piecewise-uniform cdf
    target = p * total
    k = next((i for i, c in enumerate(cum) if c >= target and masses[i] > 0), len(cum) - 1)
    before = cum[k] - masses[k]
    frac = (target - before) / masses[k] if masses[k] > 0 else 0.0
    est = ivs[k].lo + ivs[k].width * min(max(frac, 0.0), 1.0)
    if not counts:
        return SignalValue(est, (ivs[k].lo, ivs[k].hi))
    # with counts, the interpolated ranks pin the answer between two bins
    n = int(round(total))
    r = p * (n - 1)

    def bin_of(rank):
        return next(i for i, c in enumerate(cum) if c > rank)

    lo_bin, hi_bin = bin_of(math.floor(r)), bin_of(math.ceil(r))
    bound = (ivs[lo_bin].lo, ivs[hi_bin].hi)
    return SignalValue(min(max(est, bound[0]), bound[1]), bound)


def _mode_count(s: SignalSpec, rep):
    prom = float(s.params["prominence"])
    target = s.target[0]
    if rep.kind is Kind.SAMPLE:
        if target not in rep.table:
            return unanswerable(f"column {target!r} not disclosed")
        try:
            model = smooth_kde(rep.table, [target], s.params["bandwidth"], s.params["grid"]).payload
        except ValueError as exc:
            return unanswerable(str(exc))
        return SignalValue(count_modes(model.grid.tolist(), prom), detail={"bandwidth": model.params[0]})
    if rep.kind is Kind.SUMMARY:
        prof = _interval_profile(rep.payload, target)
        if prof is None:
            return unanswerable("summary carries no shape information for the target")
        ivs, masses = prof
        heights = [m / iv.width if iv.width > 0 else 0.0 for iv, m in zip(ivs, masses)]
        return SignalValue(count_modes(heights, prom))
    if rep.kind is Kind.MODEL:
        view = _density_axis(rep.payload, target)
        if view is None:
            return unanswerable("model is not a density over the target")
        return SignalValue(count_modes(view[1].tolist(), prom))
    return unanswerable("unsupported representation")


def _cell_geometry(s: SignalSpec, rep):
    """Weights and per-axis cell boxes for the clustering signals.

    Returns ``(shape, region cells or None, weights or None, boxes)`` where
    ``boxes[axis][i]`` is ``(lo, mid, hi)`` of cell ``i`` along ``axis``.
    """
    target = list(s.target)
    level = float(s.params["level"])
    if rep.kind is Kind.SAMPLE:
        if any(c not in rep.table for c in target):
            return unanswerable("target columns not disclosed")
        try:
            rep = smooth_kde(rep.table, target, s.params["bandwidth"], s.params["grid"])
        except ValueError as exc:
            return unanswerable(str(exc))
    if rep.kind is Kind.MODEL:
        m = rep.payload
        if m.evaluator is not Evaluator.DENSITY_GRID or [a.name for a in m.axes] != target:
            return unanswerable("model is not a density over the target axes")
        boxes = [[(c - a.step / 2, c, c + a.step / 2) for c in a.coords().tolist()] for a in m.axes]
        cells, _ = hdr_cells(m.grid, level)
        return m.shape, cells, m.grid, boxes
    if rep.kind is Kind.SUMMARY:
        sm = rep.payload
        if sm.keys == ("level",) and sm.domain is not None:
            if [a.name for a in sm.domain] != target:
                return unanswerable("banded region is over other axes")
            match = [g for g in sm.groups if g.key[0] == level]
            if not match:
                return unanswerable(f"no region at mass level {level}")
            boxes = [[(c - a.step / 2, c, c + a.step / 2) for c in a.coords().tolist()] for a in sm.domain]
            return tuple(a.n for a in sm.domain), sorted(match[0].region), None, boxes
        target = [_key_for(sm, c) for c in target]
        if "count" not in sm.stat_names or any(c not in sm.key_levels for c in target):
            return unanswerable("summary carries no gridded counts over the target")
        levels = [sm.key_levels[c] for c in target]
        axes_idx = [sm.keys.index(c) for c in target]
        pos = [{iv: i for i, iv in enumerate(lv)} for lv in levels]
        shape = tuple(len(lv) for lv in levels)
        counts = np.zeros(shape)
        for g in sm.groups:
            idx = tuple(p[g.key[a]] for p, a in zip(pos, axes_idx))
            counts[idx] += sm.stat(g, "count") or 0
        if counts.sum() <= 0:
            return unanswerable("no counts")
        boxes = [[(iv.lo, iv.mid, iv.hi) for iv in lv] for lv in levels]
        cells, _ = hdr_cells(counts.reshape(-1), level)
        return shape, cells, counts.reshape(-1), boxes
    return unanswerable("unsupported representation")


def _clusters(s: SignalSpec, rep):
    from .numerics import connected_components

    geo = _cell_geometry(s, rep)
    if isinstance(geo, SignalValue):
        return geo, None
    shape, cells, weights, boxes = geo
    comps = connected_components(cells, shape, int(s.params["connectivity"]))
    return comps, (shape, weights, boxes)


def _cluster_count(s, rep):
    comps, _ = _clusters(s, rep)
    if isinstance(comps, SignalValue):
        return comps
    return SignalValue(len(comps), detail={"cells": sum(len(c) for c in comps)})


def _cluster_summary(s, rep):
    comps, geo = _clusters(s, rep)
    if isinstance(comps, SignalValue):
        return comps
    shape, weights, boxes = geo
    out = []
    for comp in comps:
        idx = np.array(np.unravel_index(comp, shape)).T
        w = np.ones(len(comp)) if weights is None else np.asarray(weights)[comp]
        if w.sum() <= 0:
            w = np.ones(len(comp))
        centroid = [float(np.dot(w, [boxes[a][i][1] for i in idx[:, a]]) / w.sum()) for a in range(len(shape))]
        bbox = [[float(min(boxes[a][i][0] for i in idx[:, a])), float(max(boxes[a][i][2] for i in idx[:, a]))]
                for a in range(len(shape))]
        out.append({"centroid": centroid, "bbox": bbox, "cells": len(comp)})
    return SignalValue(out)


def _reidentification(s: SignalSpec, rep, original: Table | None):
    k = int(s.params["k"])
    if rep.kind is Kind.SUMMARY:
        sm = rep.payload
        if "count" not in sm.stat_names:
            return unanswerable("summary carries no group counts")
        occ = [int(sm.stat(g, "count")) for g in sm.groups if sm.stat(g, "count")]
        if not occ:
            return unanswerable("no occupied groups")
        at_risk = sum(c for c in occ if c < k)
        return SignalValue(at_risk / sum(occ), detail={"min_occupancy": min(occ), "passes": min(occ) >= k})
    if rep.kind is not Kind.SAMPLE:
        return unanswerable("no record-level disclosure")
    t = rep.table
    cols = list(s.target) or t.names
    if any(c not in t for c in cols):
        return unanswerable("target columns not disclosed")
    if (original is not None and "noise" in rep.ops and original.n_rows == t.n_rows
            and all(c in original for c in cols) and t.n_rows > 0):
        return _nearest_neighbour_risk(original, t, cols)
    rows = [tuple(t.column(c).values[i] for c in cols) for i in range(t.n_rows)]
    rows = [r for r in rows if None not in r]
    if not rows:
        return unanswerable("no complete records")
    occupancy: dict[tuple, int] = {}
    for r in rows:
        occupancy[r] = occupancy.get(r, 0) + 1
    at_risk = sum(c for c in occupancy.values() if c < k)
    least = min(occupancy.values())
    return SignalValue(at_risk / len(rows), detail={"min_occupancy": least, "passes": least >= k})


def _nearest_neighbour_risk(original: Table, disclosed: Table, cols) -> SignalValue:
    """Share of original points whose nearest disclosed point is their own image."""
    keep = [i for i in range(original.n_rows)
            if all(original.column(c).values[i] is not None and disclosed.column(c).values[i] is not None
                   for c in cols)]
    if not keep:
        return unanswerable("no complete records")
    a = np.array([[original.column(c).values[i] for c in cols] for i in keep], dtype=float)
    b = np.array([[disclosed.column(c).values[i] for c in cols] for i in keep], dtype=float)
    span = a.max(axis=0) - a.min(axis=0)
    span[span == 0] = 1.0
    a, b = a / span, b / span
    d = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    own = np.diag(d)
    hits = int(np.sum(own <= d.min(axis=1)))
    return SignalValue(hits / len(keep), detail={"method": "nearest_neighbour", "metric": "range-normalized euclidean"})


def eval_signal(s: SignalSpec, rep, original: Table | None = None) -> SignalValue:
    """Evaluate ``s`` on a representation; information absent by construction is unanswerable.

    A layered bundle answers with its first member that can.
    """
    if isinstance(rep, Bundle):
        for member in rep.members:
            v = eval_signal(s, member, original)
            if v.answerable:
                return v
        return unanswerable("no layer answers the signal")
    rep = as_representation(rep)
    if s.kind == "exceedance":
        return _exceedance(s, rep)
    if s.kind == "quantile":
        return _quantile(s, rep)
    if s.kind == "mode_count":
        return _mode_count(s, rep)
    if s.kind == "cluster_count":
        return _cluster_count(s, rep)
    if s.kind == "cluster_summary":
        return _cluster_summary(s, rep)
    return _reidentification(s, rep, original)


# --- distortion -----------------------------------------------------------

@dataclass(frozen=True)
class Distortion:
    signal: str
    original: Any
    disclosed: Any
    abs_error: float | None
    rel_error: float | None
    bound: tuple[float, float] | None
    status: str  # revealed | distorted | hidden
    detail: Mapping[str, Any] = field(default_factory=dict)
    output: str | None = None

    def to_dict(self) -> dict:
        return {
            "signal": self.signal,
            "output": self.output,
            "original": self.original,
            "disclosed": self.disclosed,
            "abs_error": self.abs_error,
            "rel_error": self.rel_error,
            "bound": list(self.bound) if self.bound is not None else None,
            "status": self.status,
            "detail": dict(self.detail),
        }


def distortion(s: SignalSpec, original: Table, disclosed, output: str | None = None) -> Distortion:
    base = eval_signal(s, Representation.sample(original), original)
    if not base.answerable:
        raise ParameterError(f"signal {s.id!r} is not evaluable on the original data: {base.detail['reason']}")
    got = eval_signal(s, disclosed, original)
    if not got.answerable:
        return Distortion(s.id, base.value, "unanswerable", None, None, None, "hidden", dict(got.detail), output)
    if base.numeric and got.numeric:
        err = abs(float(got.value) - float(base.value))
        rel = err / abs(base.value) if base.value != 0 else (0.0 if err == 0 else None)
        status = "revealed" if err == 0 else "distorted"
    else:
        err = rel = None
        status = "revealed" if got.value == base.value else "distorted"
    return Distortion(s.id, base.value, got.value, err, rel, got.bound, status, dict(got.detail), output)


def declared_signals(g) -> list[SignalSpec]:
    return [SignalSpec.from_dict(d) for d in g.signals]


def source_table_for(g, spec: Mapping, originals: Mapping[str, Table]) -> Table:
    src = spec.get("source")
    if src is not None:
        return originals[src]
    if len(originals) != 1:
        raise ParameterError(f"signal {spec.get('id')!r} must name its source among {sorted(originals)}")
    return next(iter(originals.values()))


def evaluate_declared(g, originals: Mapping[str, Table], outputs: Mapping[str, Any]) -> list[Distortion]:
    """Distortion of every declared signal on its output (or on every output)."""
    rows = []
    for raw in g.signals:
        spec = SignalSpec.from_dict(raw)
        original = source_table_for(g, raw, originals)
        targets = [spec.output] if spec.output else list(outputs)
        for out in targets:
            rows.append(distortion(spec, original, outputs[out], out))
    return rows


# --- sweep ----------------------------------------------------------------

@dataclass(frozen=True)
class Objective:
    signal: SignalSpec
    goal: str  # preserve | hide
    output: str

    def __post_init__(self):
        if self.goal not in ("preserve", "hide"):
            raise ParameterError(f"goal must be 'preserve' or 'hide', got {self.goal!r}")

    def score(self, d: Distortion) -> float:
        """Smaller is better."""
        if d.status == "hidden":
            return math.inf if self.goal == "preserve" else -math.inf
        if d.abs_error is None:
            raise ParameterError(f"signal {self.signal.id!r} is not numeric; it cannot drive a sweep")
        return d.abs_error if self.goal == "preserve" else -d.abs_error


@dataclass(frozen=True)
class SweepPoint:
    params: Mapping[str, Any]
    distortions: tuple[Distortion, ...]
    pareto: bool = False

    def to_dict(self) -> dict:
        return {"params": dict(self.params), "pareto": self.pareto,
                "objectives": [d.to_dict() for d in self.distortions]}


def _expand(values) -> list:
    if isinstance(values, Mapping):
        start, stop = values["start"], values["stop"]
        step = values.get("step", 1)
        if step <= 0:
            raise ParameterError("sweep step must be positive")
        out = []
        i = 0
        while start + i * step <= stop + 1e-12 * abs(step):
            v = start + i * step
            out.append(int(v) if all(isinstance(x, int) for x in (start, step)) else v)
            i += 1
        return out
    return sorted(values)


def _set_path(params: dict, path: list[str], value):
    cur = params
    for key in path[:-1]:
        if not isinstance(cur, dict) or key not in cur:
            raise ParameterError(f"parameter path {'.'.join(path)!r} not found")
        cur = cur[key]
    if not isinstance(cur, dict) or path[-1] not in cur:
        raise ParameterError(f"parameter path {'.'.join(path)!r} not found")
    if isinstance(cur[path[-1]], bool) or not isinstance(cur[path[-1]], (int, float)):
        raise ParameterError(f"parameter {'.'.join(path)!r} is not numeric")
    cur[path[-1]] = value


def pareto_flags(scores: Sequence[Sequence[float]]) -> list[bool]:
    """Not dominated: no other point at least as good everywhere and better somewhere."""
    flags = []
    for i, a in enumerate(scores):
        dominated = any(
            all(y <= x for x, y in zip(a, b)) and any(y < x for x, y in zip(a, b))
            for j, b in enumerate(scores) if j != i
        )
        flags.append(not dominated)
    return flags


def sweep(g, vary: Mapping[str, Any], objectives: Sequence[Objective], inputs: Mapping[str, Table],
          seed: int = 0, originals: Mapping[str, Table] | None = None) -> list[SweepPoint]:
    """Exhaustive grid over node parameters, Pareto-flagged.

    ``vary`` maps ``"node.param[.sub]"`` paths (comma-joined paths move in
    lockstep) to a value list or ``{"start", "stop", "step"}``.  Points come
    out in lexicographic order of the sorted paths.
    """
    from .pipeline import execute, graph_from_dict, validate_pipeline, PipelineError

    keys = sorted(vary)
    axes = [_expand(vary[k]) for k in keys]
    total = math.prod(len(a) for a in axes)
    if total > 10_000:
        raise ParameterError(f"sweep grid has {total} points; the limit is 10000")
    if not objectives:
        raise ParameterError("sweep needs at least one objective")
    base = g.to_dict()
    node_ids = {n["id"] for n in base["nodes"]}
    for k in keys:
        for path in k.split(","):
            if path.split(".")[0] not in node_ids:
                raise ParameterError(f"parameter path {path!r} not found")
    original = _single(originals or _originals_from(g, inputs))
    points = []
    for combo in itertools.product(*axes):
        doc = copy.deepcopy(base)
        by_id = {n["id"]: n for n in doc["nodes"]}
        for k, value in zip(keys, combo):
            for path in k.split(","):
                node_id, *rest = path.split(".")
                _set_path(by_id[node_id].setdefault("params", {}), rest, value)
        pg = graph_from_dict(doc)
        errors = validate_pipeline(pg)
        if errors:
            raise PipelineError("; ".join(map(str, errors)))
        outs = execute(pg, inputs, seed)
        ds = []
        for ob in objectives:
            ds.append(distortion(ob.signal, original, outs[ob.output], ob.output))
        points.append((dict(zip(keys, combo)), tuple(ds)))
    scores = [[ob.score(d) for ob, d in zip(objectives, ds)] for _, ds in points]
    flags = pareto_flags(scores)
    return [SweepPoint(p, ds, f) for (p, ds), f in zip(points, flags)]


def _originals_from(g, inputs: Mapping[str, Table]) -> dict[str, Table]:
    out = {}
    for n in g.sources():
        t = inputs.get(n.id)
        if t is None:
            t = inputs.get(n.params.get("table"))
        if t is not None:
            out[n.id] = t
    return out


def _single(originals: Mapping[str, Table]) -> Table:
    if len(originals) != 1:
        raise ParameterError("sweeps over multi-source pipelines are not supported")
    return next(iter(originals.values()))


def objectives_from(g) -> tuple[dict, list[Objective]]:
    """``(vary, objectives)`` from a pipeline document's ``sweep`` section."""
    if not g.sweep:
        raise ParameterError("pipeline declares no sweep")
    sigs = {d["id"]: SignalSpec.from_dict(d) for d in g.signals}
    obs = []
    for o in g.sweep.get("objectives", []):
        if o["signal"] not in sigs:
            raise ParameterError(f"objective names unknown signal {o['signal']!r}")
        sig = sigs[o["signal"]]
        out = o.get("output") or sig.output
        if out is None:
            raise ParameterError(f"objective {o['signal']!r} needs an output node")
        obs.append(Objective(sig, o["goal"], out))
    return dict(g.sweep.get("vary", {})), obs
