import pytest

from disclosure.core import ColumnKind, Table


@pytest.fixture
def people():
    return Table.from_columns(
        {"name": ["ann", "bob", "cy", "dee"], "age": [31, 45, 27, 60], "x": [1.0, 2.0, 3.0, 4.0]},
        {"name": ColumnKind.NOMINAL}, "people")


def chain(*nodes, outputs=None, signals=None):
    """Pipeline document for a straight chain of nodes."""
    doc = {"nodes": list(nodes),
           "edges": [[a["id"], b["id"], 0] for a, b in zip(nodes, nodes[1:])],
           "outputs": outputs or [nodes[-1]["id"]]}
    if signals:
        doc["signals"] = signals
    return doc


def source(table="data", columns=None, **extra):
    params = {"table": table, **extra}
    if columns is not None:
        params["columns"] = list(columns)
    return {"id": "src", "op": "source", "params": params}


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
