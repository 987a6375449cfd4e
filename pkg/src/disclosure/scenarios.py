"""Three worked scenarios: synthetic datasets plus the pipeline variants that disclose them.

The generating constants below are illustrative choices, fixed in code:

========  =====================================================================
fred      150 cells, 2-D Gaussian mixture over (gene_expression, effective_dose)
          means (5.7, 10), (6.1, 8.9), (5.7, 4.8); sd 0.67/0.36/0.36;
          weights 0.4/0.46/0.21 (normalized); two of the groups sit close together
anne      260 weekly tonnages; lognormal bulk (median 520, log-sd 0.35) with a
          second lognormal hump (median 1350, log-sd 0.12) in 30% of weeks
claudia   60 counties; value uniform on [0, 100); uncertainty Beta-like on [0, 1)
          (mean of two uniforms)
========  =====================================================================
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .core import ColumnKind, Rng, Table, derive_seed

SCENARIOS = ("fred", "anne", "claudia")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    seed: int = 0
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}")
        object.__setattr__(self, "params", {**DEFAULTS[self.name], **self.params})


DEFAULTS: dict[str, dict] = {
    "fred": {
        "n": 150,
        "means": ((5.7, 10.0), (6.1, 8.9), (5.7, 4.8)),
        "sd": (0.67, 0.36, 0.36),
        "weights": (0.4, 0.46, 0.21),
    },
    "anne": {"n": 260, "bulk_median": 520.0, "bulk_logsd": 0.35,
             "hump_median": 1350.0, "hump_logsd": 0.12, "hump_share": 0.3},
    "claudia": {"n": 60},
}


def _counts(n: int, weights) -> list[int]:
    """Largest-remainder apportionment of ``n`` over ``weights``."""
    raw = [n * w / sum(weights) for w in weights]
    base = [math.floor(r) for r in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[: n - sum(base)]:
        base[i] += 1
    return base


def generate(spec: ScenarioSpec) -> Table:
    rng = Rng(derive_seed(spec.seed, f"scenario:{spec.name}"))
    p = spec.params
    if spec.name == "fred":
        gx, dose = [], []
        sds = p["sd"] if isinstance(p["sd"], (list, tuple)) else [p["sd"]] * len(p["means"])
        for (mx, my), sd, k in zip(p["means"], sds, _counts(p["n"], p["weights"])):
            for _ in range(k):
                gx.append(round(mx + sd * rng.normal(), 4))
                dose.append(round(my + sd * rng.normal(), 4))
        return Table.from_columns({"cell": [f"c{i + 1:03d}" for i in range(len(gx))],
                                   "gene_expression": gx, "effective_dose": dose},
                                  {"cell": ColumnKind.NOMINAL}, "fred")
    if spec.name == "anne":
        tons = []
        for _ in range(p["n"]):
            if rng.uniform() < p["hump_share"]:
                v = p["hump_median"] * math.exp(p["hump_logsd"] * rng.normal())
            else:
                v = p["bulk_median"] * math.exp(p["bulk_logsd"] * rng.normal())
            tons.append(round(v, 1))
        return Table.from_columns({"week": list(range(1, p["n"] + 1)), "tons": tons}, None, "anne")
    counties, value, unc = [], [], []
    for i in range(p["n"]):
        counties.append(f"county{i + 1:02d}")
        value.append(round(100.0 * rng.uniform(), 2))
        unc.append(round((rng.uniform() + rng.uniform()) / 2.0, 3))
    return Table.from_columns({"county": counties, "value": value, "uncertainty": unc},
                              {"county": ColumnKind.NOMINAL}, "claudia")


# --- pipeline variants ----------------------------------------------------

def _source(columns) -> dict:
    return {"id": "src", "op": "source", "params": {"table": "data", "columns": list(columns)}}


def _chain(*nodes, outputs=None, signals=(), sweep=None) -> dict:
    edges = [[a["id"], b["id"], 0] for a, b in zip(nodes, nodes[1:])]
    doc = {"nodes": list(nodes), "edges": edges, "outputs": outputs or [nodes[-1]["id"]],
           "signals": [copy.deepcopy(s) for s in signals]}
    out = doc["outputs"][0]
    for s in doc["signals"]:
        s["output"] = out
    if sweep is not None:
        doc["sweep"] = sweep
    return doc


FRED_COLS = ("cell", "gene_expression", "effective_dose")
FRED_SIGNALS = (
    {"id": "clusters", "kind": "cluster_count", "target": ["gene_expression", "effective_dose"],
     "params": {"level": 0.85}},
    {"id": "reidentification", "kind": "reidentification_risk", "target": ["gene_expression", "effective_dose"],
     "params": {"k": 5}},
)


def _heatmap(bins: int) -> dict:
    return _chain(
        _source(FRED_COLS),
        {"id": "bin_gene", "op": "classify",
         "params": {"column": "gene_expression", "bins": {"equal_width": bins}}},
        {"id": "bin_dose", "op": "classify",
         "params": {"column": "effective_dose", "bins": {"equal_width": bins}}},
        {"id": "heat", "op": "aggregate",
         "params": {"group_by": ["gene_expression__bin", "effective_dose__bin"], "stats": [{"stat": "count"}]}},
        signals=FRED_SIGNALS,
    )


def _fred_variants() -> dict[str, dict]:
    noised = {}
    for label, scale in (("noise_small", 0.25), ("noise_large", 1.0)):
        noised[label] = _chain(
            _source(FRED_COLS),
            {"id": "noised", "op": "noise",
             "params": {"family": "laplace", "scale": scale, "columns": ["gene_expression", "effective_dose"]}},
            {"id": "plot", "op": "encode_select", "params": {"columns": ["gene_expression", "effective_dose"]}},
            signals=FRED_SIGNALS,
        )
    return {
        "scatter": _chain(
            _source(FRED_COLS),
            {"id": "full", "op": "full_disclosure", "params": {}},
            {"id": "plot", "op": "encode_select", "params": {"columns": ["gene_expression", "effective_dose"]}},
            signals=FRED_SIGNALS),
        "contour": _chain(
            _source(FRED_COLS),
            {"id": "density", "op": "smooth_kde",
             "params": {"columns": ["gene_expression", "effective_dose"], "bandwidth": "auto", "grid": 64}},
            {"id": "contour", "op": "band", "params": {"masses": [0.85]}},
            signals=FRED_SIGNALS),
        "heatmap_8": _heatmap(8),
        "heatmap_40": _heatmap(40),
        **noised,
    }


def fred_sweep(lo: int = 4, hi: int = 40) -> dict:
    """Heatmap bin count (same on both axes) traded off between cluster shape and occupancy."""
    doc = _heatmap(8)
    doc["sweep"] = {
        "vary": {"bin_dose.bins.equal_width,bin_gene.bins.equal_width": {"start": lo, "stop": hi, "step": 1}},
        "objectives": [{"signal": "clusters", "goal": "preserve", "output": "heat"},
                       {"signal": "reidentification", "goal": "hide", "output": "heat"}],
    }
    return doc


ANNE_SIGNALS = (
    {"id": "exceed_1000", "kind": "exceedance", "target": ["tons"], "params": {"threshold": 1000}},
    {"id": "median", "kind": "quantile", "target": ["tons"], "params": {"p": 0.5}},
    {"id": "modes", "kind": "mode_count", "target": ["tons"], "params": {"prominence": 0.1}},
)
ANNE_BANDWIDTHS = (40, 120, 300)
ANNE_EDGES = [float(e) for e in range(50, 2051, 100)]


def _anne_variants() -> dict[str, dict]:
    out = {
        "dotplot": _chain(
            _source(("week", "tons")),
            {"id": "plot", "op": "encode_select", "params": {"columns": ["tons"]}},
            signals=ANNE_SIGNALS),
        "five_number": _chain(
            _source(("week", "tons")),
            {"id": "five", "op": "band", "params": {"column": "tons", "quantiles": [0, 0.25, 0.5, 0.75, 1]}},
            signals=ANNE_SIGNALS),
        "histogram": _chain(
            _source(("week", "tons")),
            {"id": "bins", "op": "classify", "params": {"column": "tons", "bins": {"edges": ANNE_EDGES}}},
            {"id": "hist", "op": "aggregate", "params": {"group_by": ["tons__bin"], "stats": [{"stat": "count"}]}},
            signals=ANNE_SIGNALS),
    }
    for bw in ANNE_BANDWIDTHS:
        out[f"kde_{bw}"] = _chain(
            _source(("week", "tons")),
            {"id": "density", "op": "smooth_kde",
             "params": {"columns": ["tons"], "bandwidth": bw, "grid": 512, "range": [[-1000, 3000]]}},
            signals=ANNE_SIGNALS)
    return out


CLAUDIA_SIGNALS = (
    {"id": "exceed_50", "kind": "exceedance", "target": ["value"], "params": {"threshold": 50}},
    {"id": "median", "kind": "quantile", "target": ["value"], "params": {"p": 0.5}},
)


def _claudia_variants() -> dict[str, dict]:
    return {
        "palette_bins": _chain(
            _source(("county", "value", "uncertainty")),
            {"id": "unc_bins", "op": "classify",
             "params": {"column": "uncertainty", "bins": {"edges": [0, 0.25, 0.5, 0.75, 1.0]}}},
            {"id": "value_bins", "op": "classify",
             "params": {"column": "value", "bins": {"edges": [0, 25, 50, 75, 100]}}},
            {"id": "palette", "op": "aggregate",
             "params": {"group_by": ["uncertainty__bin", "value__bin"], "stats": [{"stat": "count"}]}},
            signals=CLAUDIA_SIGNALS),
        "magnitude": _chain(
            _source(("county", "value", "uncertainty")),
            {"id": "adjust", "op": "magnitude_adjust",
             "params": {"value": "value", "uncertainty": "uncertainty", "pivot": 50, "u_max": 1.0}},
            {"id": "map", "op": "encode_select", "params": {"columns": ["county", "value"]}},
            signals=CLAUDIA_SIGNALS),
    }


def variants(name: str) -> dict[str, dict]:
    """Pipeline documents for every variant of a scenario, in a fixed order."""
    return {"fred": _fred_variants, "anne": _anne_variants, "claudia": _claudia_variants}[name]()


def sweeps(name: str) -> dict[str, dict]:
    return {"heatmap_bins": fred_sweep()} if name == "fred" else {}


# chart per variant output; absent means "pick from the representation"
CHARTS = {
    ("fred", "scatter"): "scatter",
    ("fred", "contour"): "contour-band",
    ("anne", "dotplot"): "dotplot",
    ("anne", "five_number"): "histogram",
    ("anne", "histogram"): "histogram",
    ("claudia", "palette_bins"): "heatmap",
    ("claudia", "magnitude"): "dotplot",
}
