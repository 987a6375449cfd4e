"""Command-line entry point: ``disclosure {run,analyze,sweep,scenario,render}``.

Exit codes: 0 success, 2 validation or parse error, 1 runtime error.
Every command builds its complete output in memory before writing, so a
failed run leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Mapping

from . import scenarios as S
from .analysis import disclosure_report, rulebook_table
from .core import Table
from .io import CsvError, dumps_json, load_csv, rows_to_csv, serialize, table_csv
from .pipeline import ExecutionError, PipelineError, PipelineGraph, graph_from_dict, parse_params, \
    parse_pipeline, run_graph, validate_pipeline
from .signals import objectives_from, sweep
from .svg import ChartError, auto_chart, render_svg
from .tactics import ParameterError

log = logging.getLogger("disclosure")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    pass


# --- shared helpers -------------------------------------------------------

def _load_spec(path: str) -> PipelineGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read spec: {exc}") from None
    g = parse_pipeline(text)
    errors = validate_pipeline(g)
    if errors:
        raise PipelineError("invalid pipeline:\n  " + "\n  ".join(map(str, errors)))
    return g


def _hints_for(g: PipelineGraph, table_name: str) -> dict:
    hints = {}
    for n in g.sources():
        p = parse_params(n)
        if table_name in (n.id, p["table"]):
            hints.update({c: k.value for c, k in p["kinds"].items()})
    return hints


def _bind_inputs(g: PipelineGraph, bindings) -> dict[str, Table]:
    tables = {}
    for b in bindings or []:
        if "=" not in b:
            raise UsageError(f"--input expects NAME=CSVPATH, got {b!r}")
        name, path = b.split("=", 1)
        try:
            tables[name] = load_csv(path, _hints_for(g, name), source_id=name)
        except OSError as exc:
            raise UsageError(f"cannot read input {name!r}: {exc}") from None
    return tables


def _originals(g: PipelineGraph, tables: Mapping[str, Table]) -> dict[str, Table]:
    out = {}
    for n in g.sources():
        t = tables.get(n.id, tables.get(parse_params(n)["table"]))
        if t is not None:
            out[n.id] = t
    return out


def _write_tree(out_dir: Path, files: Mapping[str, bytes | str]):
    for rel in sorted(files):
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = files[rel]
        path.write_bytes(data.encode("utf-8") if isinstance(data, str) else data)


def run_files(g: PipelineGraph, tables: Mapping[str, Table], seed: int) -> dict[str, str]:
    """Output files of one pipeline run, keyed by relative path."""
    results = run_graph(g, tables, seed)
    outputs = {o: results[o] for o in g.outputs}
    files = {}
    for o, rep in outputs.items():
        ext, text = serialize(rep)
        files[f"{o}.{ext}"] = text
    report = disclosure_report(g, _originals(g, tables) or None, outputs)
    doc = report.to_dict()
    doc["seed"] = seed
    files["report.json"] = dumps_json(doc)
    files["report.txt"] = report.to_text()
    return files


def _sweep_files(g: PipelineGraph, tables: Mapping[str, Table], seed: int, prefix: str = "sweep") -> dict[str, str]:
    vary, objectives = objectives_from(g)
    points = sweep(g, vary, objectives, tables, seed, _originals(g, tables))
    keys = sorted(vary)
    header = ["point"] + keys
    for ob in objectives:
        header += [f"{ob.signal.id}:{c}" for c in ("goal", "original", "disclosed", "abs_error", "status", "detail")]
    header.append("pareto")
    rows = []
    for i, p in enumerate(points):
        row = [i] + [p.params[k] for k in keys]
        for ob, d in zip(objectives, p.distortions):
            disclosed = d.disclosed if not isinstance(d.disclosed, (list, dict)) else json.dumps(d.disclosed)
            row += [ob.goal, d.original, disclosed, d.abs_error, d.status,
                    json.dumps(dict(d.detail), sort_keys=True) if d.detail else ""]
        row.append("true" if p.pareto else "false")
        rows.append(row)
    return {f"{prefix}.json": dumps_json([p.to_dict() for p in points]),
            f"{prefix}.csv": rows_to_csv(header, rows)}


# --- commands -------------------------------------------------------------

def cmd_run(args) -> int:
    g = _load_spec(args.spec)
    tables = _bind_inputs(g, args.input)
    files = run_files(g, tables, args.seed)
    if args.out:
        _write_tree(Path(args.out), files)
    else:
        sys.stdout.write(files["report.json" if args.format == "json" else "report.txt"])
    return EXIT_OK


def cmd_analyze(args) -> int:
    g = _load_spec(args.spec)
    tables = _bind_inputs(g, args.input)
    schemas = {k: t.names for k, t in tables.items()}
    originals = _originals(g, tables)
    report = disclosure_report(g, originals or None, None, schemas=schemas)
    text = dumps_json(report.to_dict()) if args.format == "json" else report.to_text()
    if args.out:
        name = "report.json" if args.format == "json" else "report.txt"
        _write_tree(Path(args.out), {name: text})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    g = _load_spec(args.spec)
    tables = _bind_inputs(g, args.input)
    files = _sweep_files(g, tables, args.seed)
    if args.out:
        _write_tree(Path(args.out), files)
    else:
        sys.stdout.write(files["sweep.json" if args.format == "json" else "sweep.csv"])
    return EXIT_OK


def scenario_files(name: str, seed: int = 0) -> dict[str, bytes | str]:
    """Every artifact of a scenario, keyed by path relative to the output directory."""
    spec = S.ScenarioSpec(name, seed)
    data = S.generate(spec)
    tables = {"data": data}
    files: dict[str, bytes | str] = {"dataset.csv": table_csv(data)}
    header = ["variant", "signal", "output", "original", "disclosed", "abs_error", "rel_error",
              "bound_lo", "bound_hi", "status"]
    rows = []
    for variant, doc in S.variants(name).items():
        g = graph_from_dict(doc)
        files[f"pipelines/{variant}.json"] = dumps_json(doc)
        results = run_graph(g, tables, seed)
        outputs = {o: results[o] for o in g.outputs}
        for o, rep in outputs.items():
            ext, text = serialize(rep)
            files[f"outputs/{variant}/{o}.{ext}"] = text
            try:
                chart = S.CHARTS.get((name, variant)) or auto_chart(rep)
            except ChartError:
                continue  # models have no chart of their own
            files[f"svg/{variant}.svg"] = render_svg(rep, chart, {"title": f"{name}: {variant}"})
        report = disclosure_report(g, {"src": data}, outputs)
        doc_r = report.to_dict()
        doc_r["seed"] = seed
        files[f"reports/{variant}.json"] = dumps_json(doc_r)
        files[f"reports/{variant}.txt"] = report.to_text()
        for d in report.distortions or ():
            disclosed = d.disclosed if not isinstance(d.disclosed, list) else json.dumps(d.disclosed)
            original = d.original if not isinstance(d.original, list) else json.dumps(d.original)
            lo, hi = d.bound if d.bound is not None else (None, None)
            rows.append([variant, d.signal, d.output, original, disclosed, d.abs_error, d.rel_error, lo, hi, d.status])
    files["distortions.csv"] = rows_to_csv(header, rows)
    for label, doc in S.sweeps(name).items():
        g = graph_from_dict(doc)
        files[f"pipelines/sweep_{label}.json"] = dumps_json(doc)
        files.update(_sweep_files(g, tables, seed, f"sweeps/{label}"))
    return files


def cmd_scenario(args) -> int:
    files = scenario_files(args.name, args.seed)
    out = Path(args.out or args.name)
    _write_tree(out, files)
    log.info("wrote %d files to %s", len(files), out)
    return EXIT_OK


def cmd_render(args) -> int:
    g = _load_spec(args.spec)
    tables = _bind_inputs(g, args.input)
    results = run_graph(g, tables, args.seed)
    targets = [args.node] if args.node else list(g.outputs)
    files = {}
    for nid in targets:
        if nid not in results:
            raise UsageError(f"unknown node {nid!r}")
        files[f"{nid}.svg"] = render_svg(results[nid], args.chart)
    if args.out:
        _write_tree(Path(args.out), files)
    elif len(files) == 1:
        sys.stdout.buffer.write(next(iter(files.values())))
    else:
        raise UsageError("several outputs: pass --out DIR or --node ID")
    return EXIT_OK


def cmd_rules(args) -> int:
    sys.stdout.write(rulebook_table())
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disclosure", description="Disclosure-first data transformation engine")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, seed=True):
        p.add_argument("--spec", required=True, help="pipeline JSON document")
        if data:
            p.add_argument("--input", action="append", metavar="NAME=CSVPATH",
                           help="bind a CSV file to a source (by node id or table name); repeatable")
        if seed:
            p.add_argument("--seed", type=_u64, default=0, help="run seed (unsigned 64-bit, default 0)")
        p.add_argument("--out", help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=("json", "text"), default="json")

    p = sub.add_parser("run", help="execute a pipeline and write outputs plus report")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("analyze", help="static findings and column statuses; no data needed")
    common(p, seed=False)
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("sweep", help="grid sweep declared under the pipeline's 'sweep' key")
    common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("scenario", help="regenerate a worked scenario")
    p.add_argument("name", choices=S.SCENARIOS)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", help="output directory (default: ./NAME)")
    p.set_defaults(func=cmd_scenario)
    p = sub.add_parser("render", help="render pipeline outputs as SVG")
    common(p)
    p.add_argument("--node", help="node to render (default: every output)")
    p.add_argument("--chart", choices=("dotplot", "scatter", "histogram", "heatmap", "contour-band"))
    p.set_defaults(func=cmd_render)
    p = sub.add_parser("rules", help="print the rulebook")
    p.set_defaults(func=cmd_rules)
    return parser


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PipelineError, CsvError, UsageError, ChartError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ExecutionError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ParameterError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
