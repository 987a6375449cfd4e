"""Random valid pipeline documents plus kind-breaking mutations, for property tests."""

from __future__ import annotations

import random

from disclosure.core import ColumnKind, Table

COLUMNS = ("a", "b", "c", "u", "g")


def base_table(rows: int = 40, seed: int = 0) -> Table:
    rnd = random.Random(seed)
    return Table.from_columns({
        "a": [round(rnd.gauss(10, 3), 3) for _ in range(rows)],
        "b": [round(rnd.uniform(-5, 5), 3) for _ in range(rows)],
        "c": [round(rnd.expovariate(0.5), 3) for _ in range(rows)],
        "u": [round(rnd.random(), 3) for _ in range(rows)],
        "g": [rnd.choice(["x", "y", "z"]) for _ in range(rows)],
    }, {"g": ColumnKind.NOMINAL}, "data")


class _Builder:
    def __init__(self, rnd: random.Random, rows: int):
        self.rnd = rnd
        self.nodes = [{"id": "src", "op": "source", "params": {"table": "data", "columns": list(COLUMNS)}}]
        self.edges = []
        # node id -> (kind, info); sample info = {"num": [...], "nom": [...], "rows": int}
        self.state = {"src": ("sample", {"num": ["a", "b", "c", "u"], "nom": ["g"], "rows": rows})}
        self.count = 0

    def add(self, op, params, ups, kind, info):
        self.count += 1
        nid = f"n{self.count}_{op}"
        self.nodes.append({"id": nid, "op": op, "params": params})
        self.edges += [[u, nid, i] for i, u in enumerate(ups)]
        self.state[nid] = (kind, info)
        return nid

    def sample_step(self, up):
        info = self.state[up][1]
        num, nom, rows = list(info["num"]), list(info["nom"]), info["rows"]
        cont = [c for c in num if not c.endswith("__bin")]
        choices = ["full_disclosure", "encode_select", "permute"]
        if cont:
            choices += ["classify", "noise", "derive", "band", "smooth_kde"]
        if rows > 8:
            choices.append("subsample")
        if "u" in num and "a" in num:
            choices.append("magnitude_adjust")
        if "a" in num and "b" in num:
            choices += ["predict_ols", "project_pca"]
        if nom or any(c.endswith("__bin") for c in num):
            choices.append("aggregate")
        if "g" in nom:
            choices.append("categorize")
        op = self.rnd.choice(choices)
        r = self.rnd
        if op == "full_disclosure":
            return self.add(op, {}, [up], "sample", info)
        if op == "encode_select":
            allc = num + nom
            keep = sorted(r.sample(allc, r.randint(1, len(allc))), key=allc.index)
            return self.add(op, {"columns": keep}, [up], "sample",
                            {"num": [c for c in num if c in keep], "nom": [c for c in nom if c in keep], "rows": rows})
        if op == "permute":
            return self.add(op, {"column": r.choice(num + nom)}, [up], "sample", info)
        if op == "classify":
            c = r.choice(cont)
            name = f"{c}__bin"
            new_num = num + ([name] if name not in num else [])
            return self.add(op, {"column": c, "bins": {"equal_width": r.randint(2, 12)}}, [up], "sample",
                            {**info, "num": new_num})
        if op == "noise":
            cols = r.sample(cont, r.randint(1, len(cont)))
            return self.add(op, {"family": r.choice(["gaussian", "laplace"]), "scale": r.choice([0, 0.5, 2.0]),
                                 "columns": cols}, [up], "sample", info)
        if op == "derive":
            a, b = r.choice(cont), r.choice(cont)
            self.count += 0
            out = f"d{self.count + 1}"
            return self.add(op, {"expr": r.choice([f"{a} + {b}", f"{a} * 2", f"{a} - {b} / 4", "3"]), "out": out},
                            [up], "sample", {**info, "num": num + [out]})
        if op == "band":
            c = r.choice(cont)
            if r.random() < 0.5:
                params = {"column": c, "quantiles": [0, 0.25, 0.5, 0.75, 1]}
                stats = ["level_lo", "level_hi", "mass"]
            else:
                params = {"column": c, "cuts": [-100, 0, 10, 1000]}
                stats = ["count", "fraction"]
            return self.add(op, params, [up], "summary", {"keys": [c], "stats": stats})
        if op == "smooth_kde":
            c = r.choice(cont)
            return self.add(op, {"columns": [c], "bandwidth": 1.5, "grid": 64}, [up], "density", {"axes": [c]})
        if op == "subsample":
            n = r.randint(6, rows)
            return self.add(op, {"n": n, "replacement": r.random() < 0.3}, [up], "sample", {**info, "rows": n})
        if op == "magnitude_adjust":
            return self.add(op, {"value": "a", "uncertainty": "u", "pivot": 10, "u_max": 1.0}, [up], "sample", info)
        if op == "predict_ols":
            emit = r.choice(["model", "table"])
            if emit == "model":
                return self.add(op, {"y": "a", "xs": ["b"], "emit": emit}, [up], "ols", {})
            return self.add(op, {"y": "a", "xs": ["b"], "emit": emit}, [up], "sample",
                            {**info, "num": num + ["a__fit"]})
        if op == "project_pca":
            emit = r.choice(["model", "table"])
            if emit == "model":
                return self.add(op, {"columns": ["a", "b"], "k": 1, "emit": emit}, [up], "pca", {})
            return self.add(op, {"columns": ["a", "b"], "k": 2, "emit": emit}, [up], "sample",
                            {**info, "num": [c for c in num if c not in ("a", "b")] + ["pc1", "pc2"]})
        if op == "aggregate":
            keys = [c for c in nom + num if c in nom or c.endswith("__bin")]
            key = r.choice(keys)
            stats = [{"stat": "count"}]
            names = ["count"]
            if "a" in num:
                stats.append({"stat": "mean", "column": "a"})
                names.append("mean_a")
            if "u" in num:
                stats.append({"stat": "mean", "column": "u"})
                names.append("mean_u")
            return self.add(op, {"group_by": [key], "stats": stats}, [up], "summary", {"keys": [key], "stats": names})
        if op == "categorize":
            return self.add(op, {"column": "g", "mapping": {"x": "xy", "y": "xy"}, "default": "other"},
                            [up], "sample", info)
        raise AssertionError(op)

    def summary_step(self, up):
        info = self.state[up][1]
        r = self.rnd
        if "mean_a" in info["stats"] and "mean_u" in info["stats"] and r.random() < 0.5:
            return self.add("magnitude_adjust", {"value": "mean_a", "uncertainty": "mean_u", "pivot": 10,
                                                 "u_max": 1.0}, [up], "summary", info)
        keep = info["keys"] + sorted(r.sample(info["stats"], r.randint(1, len(info["stats"]))),
                                     key=info["stats"].index)
        return self.add("encode_select", {"columns": keep}, [up], "summary",
                        {"keys": info["keys"], "stats": [s for s in info["stats"] if s in keep]})

    def density_step(self, up):
        axes = self.state[up][1]["axes"]
        r = self.rnd.random()
        if r < 0.4:
            return self.add("band", {"masses": [0.85]}, [up], "summary",
                            {"keys": ["level"], "stats": ["mass", "density_threshold", "cells"]})
        if r < 0.7:
            return self.add("band", {"quantiles": [0, 0.5, 1]}, [up], "summary",
                            {"keys": axes, "stats": ["level_lo", "level_hi", "mass"]})
        return self.add("encode_select", {"columns": axes}, [up], "density", {"axes": axes})


def random_graph(seed: int, rows: int = 40, max_steps: int = 7) -> dict:
    rnd = random.Random(seed)
    b = _Builder(rnd, rows)
    for _ in range(rnd.randint(1, max_steps)):
        up = rnd.choice(list(b.state))
        kind = b.state[up][0]
        if kind == "sample":
            b.sample_step(up)
        elif kind == "summary":
            b.summary_step(up)
        elif kind == "density":
            b.density_step(up)
        # ols / pca models are terminal here
    sinks = [n["id"] for n in b.nodes if not any(e[0] == n["id"] for e in b.edges)]
    outputs = sorted(rnd.sample(sinks, rnd.randint(1, len(sinks))))
    samples = [n for n, (k, _) in b.state.items() if k == "sample"]
    if len(outputs) >= 2 and rnd.random() < 0.3:
        layer = b.add("combine", {"mode": "layer"}, outputs[:2], "bundle", {})
        outputs = [layer] + outputs[2:]
    elif len(samples) >= 2 and rnd.random() < 0.2:
        pair = rnd.sample(samples, 2)
        if b.state[pair[0]][1]["num"] == b.state[pair[1]][1]["num"] and \
                b.state[pair[0]][1]["nom"] == b.state[pair[1]][1]["nom"]:
            outputs.append(b.add("combine", {"mode": "concat"}, pair, "sample",
                                 {**b.state[pair[0]][1], "rows": sum(b.state[p][1]["rows"] for p in pair)}))
    return {"nodes": b.nodes, "edges": b.edges, "outputs": sorted(set(outputs))}


SAMPLE_ONLY = ("classify", "aggregate", "noise", "subsample", "smooth_kde", "derive")


def mutate(doc: dict, seed: int) -> dict:
    """Break a valid graph: feed a non-sample node into an op that only accepts samples,
    or mass-band a sample."""
    rnd = random.Random(seed)
    kinds = _kinds_by_op(doc)
    non_sample = [nid for nid, k in kinds.items() if k != "sample"]
    nodes = [dict(n) for n in doc["nodes"]]
    edges = [list(e) for e in doc["edges"]]
    if non_sample and rnd.random() < 0.7:
        up = rnd.choice(non_sample)
        op = rnd.choice(SAMPLE_ONLY)
        params = {
            "classify": {"column": "a", "bins": {"equal_width": 3}},
            "aggregate": {"group_by": [], "stats": [{"stat": "count"}]},
            "noise": {"family": "gaussian", "scale": 1.0, "columns": ["a"]},
            "subsample": {"n": 1},
            "smooth_kde": {"columns": ["a"], "bandwidth": 1.0, "grid": 8},
            "derive": {"expr": "1", "out": "z"},
        }[op]
    else:
        up = rnd.choice([nid for nid, k in kinds.items() if k == "sample"])
        op, params = "band", {"masses": [0.5]}
    nodes.append({"id": "bad", "op": op, "params": params})
    edges.append([up, "bad", 0])
    return {"nodes": nodes, "edges": edges, "outputs": ["bad"]}


def _kinds_by_op(doc) -> dict:
    from disclosure.pipeline import graph_from_dict, infer_kinds

    kinds, _ = infer_kinds(graph_from_dict(doc))
    return {nid: k.kind.value for nid, k in kinds.items()}
