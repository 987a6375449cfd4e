"""Tables, column kinds, representation kinds and the shared PRNG.

Everything here is immutable once constructed.  Missing cells are ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

MISSING = None

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class ColumnKind(str, Enum):
    CONTINUOUS = "continuous"
    ORDINAL = "ordinal"
    NOMINAL = "nominal"

    @property
    def numeric(self) -> bool:
        return self is not ColumnKind.NOMINAL


class Kind(str, Enum):
    SAMPLE = "sample"
    SUMMARY = "summary"
    MODEL = "model"
    BUNDLE = "bundle"


class Evaluator(str, Enum):
    DENSITY_GRID = "density_grid"
    OLS_LINE = "ols_line"
    PCA_LOADINGS = "pca_loadings"
    ADJUSTMENT_FN = "adjustment_fn"


FAMILIES = ("full", "sampling", "summarizing", "modeling")


def is_number(value: Any) -> bool:
    return (
        isinstance(value, (int, float, np.integer, np.floating))
        and not isinstance(value, bool)
        and math.isfinite(value)
    )


def _as_number(value: Any):
    """Number for ``value`` or ``None`` when it is not a finite number."""
    if is_number(value):
        return value
    if isinstance(value, str):
        try:
            parsed = float(value)
        except ValueError:
            return None
        return parsed if math.isfinite(parsed) else None
    return None


def is_missing(value: Any) -> bool:
    return value is None or (isinstance(value, str) and value == "")


def infer_column_kind(values: Sequence[Any]) -> ColumnKind:
    """Nominal as soon as one present cell is not a finite number.

    Ordinal is never inferred; it has to be declared through a schema hint.
    """
    if len(values) == 0:
        raise ValueError("no values")
    for v in values:
        if is_missing(v):
            continue
        if _as_number(v) is None:
            return ColumnKind.NOMINAL
    return ColumnKind.CONTINUOUS


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    closed_hi: bool = False

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval bounds out of order: {self.lo} > {self.hi}")

    def contains(self, v: float) -> bool:
        if self.closed_hi:
            return self.lo <= v <= self.hi
        return self.lo <= v < self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return (self.lo + self.hi) / 2.0

    def overlaps(self, other: "Interval") -> bool:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo < hi:
            return True
        if lo > hi:
            return False
        # touching at a single point: shared only if both sides include it
        a_has = self.contains(lo) if self.lo < self.hi or self.closed_hi else False
        b_has = other.contains(lo) if other.lo < other.hi or other.closed_hi else False
        return a_has and b_has

    def __str__(self) -> str:
        return f"[{fmt_num(self.lo)}, {fmt_num(self.hi)}{']' if self.closed_hi else ')'}"


def fmt_num(v: Any) -> str:
    """Shortest round-trip text for numbers; integral floats keep their ``.0``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    return str(v)


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind
    values: tuple
    # ordinal: labels for the integer ranks, or the intervals of a classified column
    levels: tuple | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("column names must be non-empty")
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))
        numeric = self.kind.numeric
        for i, v in enumerate(self.values):
            if v is None:
                continue
            if numeric and not is_number(v):
                raise ValueError(f"column {self.name!r} row {i}: {v!r} is not a finite number")
            if not numeric and not isinstance(v, str):
                raise ValueError(f"column {self.name!r} row {i}: nominal cells must be strings")

    @property
    def intervals(self) -> tuple[Interval, ...] | None:
        if self.levels and all(isinstance(lv, Interval) for lv in self.levels):
            return self.levels
        return None

    def present(self) -> list:
        return [v for v in self.values if v is not None]

    def with_values(self, values: Iterable, kind: ColumnKind | None = None, levels=...) -> "Column":
        return Column(
            self.name,
            kind or self.kind,
            tuple(values),
            self.levels if levels is ... else levels,
        )


@dataclass(frozen=True)
class Table:
    columns: tuple[Column, ...]
    source_id: str = ""

    def __post_init__(self):
        if not isinstance(self.columns, tuple):
            object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate column names: {dupes}")
        lengths = {len(c.values) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"columns differ in length: {sorted(lengths)}")

    @classmethod
    def from_columns(cls, data: Mapping[str, Sequence], kinds: Mapping[str, ColumnKind] | None = None,
                     source_id: str = "") -> "Table":
        kinds = kinds or {}
        cols = []
        for name, values in data.items():
            values = [None if is_missing(v) else v for v in values]
            kind = kinds.get(name) or (infer_column_kind(values) if values else ColumnKind.CONTINUOUS)
            if kind.numeric:
                values = [None if v is None else _as_number(v) for v in values]
            else:
                values = [None if v is None else str(v) for v in values]
            cols.append(Column(name, ColumnKind(kind), tuple(values)))
        return cls(tuple(cols), source_id)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_rows(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def rows(self) -> list[tuple]:
        return list(zip(*(c.values for c in self.columns))) if self.columns else []

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(f"unknown column {name!r}; have {self.names}")

    def numeric(self, name: str) -> Column:
        col = self.column(name)
        if not col.kind.numeric:
            raise KindError(f"column {name!r} is {col.kind.value}, expected a numeric column")
        return col

    def take(self, indices: Sequence[int]) -> "Table":
        return Table(
            tuple(c.with_values(c.values[i] for i in indices) for c in self.columns),
            self.source_id,
        )

    def with_column(self, column: Column) -> "Table":
        """Replace the column of the same name, or append it."""
        if column.name in self:
            cols = tuple(column if c.name == column.name else c for c in self.columns)
        else:
            cols = self.columns + (column,)
        return Table(cols, self.source_id)

    def select(self, names: Sequence[str]) -> "Table":
        return Table(tuple(self.column(n) for n in names), self.source_id)

    def complete_rows(self, names: Sequence[str]) -> tuple["Table", int]:
        """Drop rows with a missing cell in any of ``names``; return the drop count."""
        cols = [self.column(n) for n in names]
        keep = [i for i in range(self.n_rows) if all(c.values[i] is not None for c in cols)]
        if len(keep) == self.n_rows:
            return self, 0
        return self.take(keep), self.n_rows - len(keep)


class KindError(TypeError):
    """An operation was applied to a column or representation of the wrong kind."""


@dataclass(frozen=True)
class Step:
    """One applied tactic in a representation's lineage."""

    op: str
    node: str | None = None
    detail: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Group:
    key: tuple
    stats: tuple
    region: frozenset | None = None


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name!r}: lo must be < hi ({self.lo}, {self.hi})")
        if self.n < 2:
            raise ValueError(f"axis {self.name!r}: grid needs at least 2 points")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def coords(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class SummaryRep:
    keys: tuple[str, ...]
    stat_names: tuple[str, ...]
    groups: tuple[Group, ...]
    intervals_nested: bool = False
    # full partition for every interval-valued key, empty cells included
    key_levels: Mapping[str, tuple[Interval, ...]] = field(default_factory=dict)
    # grid geometry when groups carry cell-set regions
    domain: tuple[Axis, ...] | None = None
    origin: str = "aggregate"

    def __post_init__(self):
        for g in self.groups:
            if len(g.key) != len(self.keys):
                raise ValueError("group key arity does not match the declared keys")
            if len(g.stats) != len(self.stat_names):
                raise ValueError("every group needs a value for every declared stat")
        if not self.intervals_nested:
            for axis, name in enumerate(self.keys):
                seen = sorted({g.key[axis] for g in self.groups if isinstance(g.key[axis], Interval)},
                              key=lambda iv: (iv.lo, iv.hi, iv.closed_hi))
                for i, a in enumerate(seen):
                    for b in seen[i + 1:]:
                        if b.lo > a.hi:
                            break
                        if a.overlaps(b):
                            raise ValueError(f"overlapping intervals on {name!r}: {a} and {b}")

    def stat(self, group: Group, name: str):
        return group.stats[self.stat_names.index(name)]

    def column_names(self) -> list[str]:
        return list(self.keys) + list(self.stat_names)


@dataclass(frozen=True, eq=False)
class ModelRep:
    evaluator: Evaluator
    axes: tuple[Axis, ...]
    params: tuple[float, ...]
    param_names: tuple[str, ...]
    grid: np.ndarray
    target: str = "value"

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float).reshape(-1)
        expected = math.prod(a.n for a in self.axes)
        if grid.size != expected:
            raise ValueError(f"grid has {grid.size} values, axes imply {expected}")
        if len(self.params) != len(self.param_names):
            raise ValueError("params and param_names differ in length")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def __eq__(self, other):
        if not isinstance(other, ModelRep):
            return NotImplemented
        return (
            self.evaluator == other.evaluator
            and self.axes == other.axes
            and self.params == other.params
            and self.param_names == other.param_names
            and self.target == other.target
            and np.array_equal(self.grid, other.grid)
        )

    __hash__ = None

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return math.prod(a.step for a in self.axes)

    def grid_array(self) -> np.ndarray:
        return self.grid.reshape(self.shape)

    def param(self, name: str) -> float:
        return self.params[self.param_names.index(name)]


_PAYLOAD = {Kind.SAMPLE: Table, Kind.SUMMARY: SummaryRep, Kind.MODEL: ModelRep}


@dataclass(frozen=True)
class Representation:
    kind: Kind
    payload: Any
    lineage: tuple[Step, ...] = ()

    def __post_init__(self):
        expected = _PAYLOAD.get(self.kind)
        if expected is None:
            raise ValueError(f"{self.kind} is not a representation kind")
        if not isinstance(self.payload, expected):
            raise TypeError(f"{self.kind.value} representation needs a {expected.__name__} payload")
        if not isinstance(self.lineage, tuple):
            object.__setattr__(self, "lineage", tuple(self.lineage))

    @classmethod
    def sample(cls, table: Table, lineage: Sequence[Step] = ()) -> "Representation":
        return cls(Kind.SAMPLE, table, tuple(lineage))

    @classmethod
    def summary(cls, rep: SummaryRep, lineage: Sequence[Step] = ()) -> "Representation":
        return cls(Kind.SUMMARY, rep, tuple(lineage))

    @classmethod
    def model(cls, rep: ModelRep, lineage: Sequence[Step] = ()) -> "Representation":
        return cls(Kind.MODEL, rep, tuple(lineage))

    @property
    def table(self) -> Table:
        if self.kind is not Kind.SAMPLE:
            raise KindError(f"expected a sample representation, got {self.kind.value}")
        return self.payload

    def extend(self, step: Step, payload=None, kind: Kind | None = None) -> "Representation":
        return Representation(kind or self.kind, self.payload if payload is None else payload,
                              self.lineage + (step,))

    @property
    def ops(self) -> list[str]:
        return [s.op for s in self.lineage]


@dataclass(frozen=True)
class Bundle:
    """Layered output of a combine node; terminal."""

    members: tuple[Representation, ...]
    kind: Kind = Kind.BUNDLE

    @property
    def lineage(self) -> tuple[Step, ...]:
        return tuple(s for m in self.members for s in m.lineage)


def as_representation(value) -> Representation:
    if isinstance(value, Representation):
        return value
    if isinstance(value, Table):
        return Representation.sample(value)
    raise TypeError(f"cannot treat {type(value).__name__} as a representation")


def representation_family(rep: Representation | Table) -> str:
    rep = as_representation(rep)
    if rep.kind is Kind.SAMPLE:
        return "full" if not rep.lineage else "sampling"
    if rep.kind is Kind.SUMMARY:
        return "summarizing"
    return "modeling"


LEVEL_OF_DETAIL = {
    "full": "every original record",
    "sampling": "individual points",
    "summarizing": "groups or partitions",
    "modeling": "continuous domain",
}


# --- randomness -----------------------------------------------------------

def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: ``(output, next_state)``."""
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


def rng_next(state: int) -> tuple[float, int]:
    """Uniform draw in [0, 1) from the high 53 bits of the next output."""
    out, state = splitmix64(state & MASK64)
    return (out >> 11) * 2.0 ** -53, state


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, label: str) -> int:
    """Per-node sub-seed; depends only on the run seed and the node id."""
    out, _ = splitmix64((seed ^ fnv1a64(label)) & MASK64)
    return out


class Rng:
    """Stateful wrapper over :func:`rng_next`."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK64

    def uniform(self) -> float:
        u, self.state = rng_next(self.state)
        return u

    def below(self, n: int) -> int:
        """Index in ``range(n)``."""
        return min(int(self.uniform() * n), n - 1)

    def normal(self) -> float:
        # Box-Muller, cosine branch only
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def laplace(self, scale: float) -> float:
        while True:
            u = 0.5 - self.uniform()  # (-0.5, 0.5]
            if abs(u) < 0.5:
                return laplace_inverse_cdf(u, scale)

    def fisher_yates(self, n: int, prefix: int | None = None) -> list[int]:
        """Seeded forward Fisher-Yates; returns the first ``prefix`` positions."""
        prefix = n if prefix is None else prefix
        idx = list(range(n))
        for i in range(min(prefix, n - 1)):
            j = i + self.below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:prefix]


def laplace_inverse_cdf(u: float, scale: float) -> float:
    """Centered Laplace quantile for ``u`` in (-0.5, 0.5)."""
    if u == 0:
        return 0.0
    return -scale * math.copysign(1.0, u) * math.log(1.0 - 2.0 * abs(u))
