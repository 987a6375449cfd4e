from __future__ import annotations

from ..core import Kind, KindError, Representation, Step, Table, as_representation


class ParameterError(ValueError):
    """A tactic parameter is malformed or inconsistent with its input."""


def start(rep, *kinds: Kind) -> Representation:
    rep = as_representation(rep)
    if kinds and rep.kind not in kinds:
        allowed = " or ".join(k.value for k in kinds)
        raise KindError(f"expected {allowed} input, got {rep.kind.value}")
    return rep


def step(op: str, node: str | None, **detail) -> Step:
    return Step(op, node, {k: v for k, v in detail.items() if v is not None})


def sample_out(rep: Representation, table: Table, op: str, node: str | None, **detail) -> Representation:
    return Representation.sample(table, rep.lineage + (step(op, node, **detail),))
