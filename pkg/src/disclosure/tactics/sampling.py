"""Tactics that emit individual points: subsampling, noising, permutation."""

from __future__ import annotations

from dataclasses import dataclass

from ..core import ColumnKind, Kind, Representation, Rng
from ._common import ParameterError, sample_out, start


def subsample(rep, n: int, replacement: bool, seed: int, *, node: str | None = None) -> Representation:
    """Rows chosen by a seeded Fisher-Yates prefix, or ``n`` independent draws."""
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    if int(n) != n or n < 0:
        raise ParameterError("subsample size must be a non-negative integer")
    n = int(n)
    rng = Rng(seed)
    if replacement:
        if n and not t.n_rows:
            raise ParameterError("cannot draw from an empty table")
        idx = [rng.below(t.n_rows) for _ in range(n)]
    else:
        if n > t.n_rows:
            raise ParameterError(f"cannot take {n} rows without replacement from {t.n_rows}")
        idx = rng.fisher_yates(t.n_rows, n)
    return sample_out(rep, t.take(idx), "subsample", node, n=n, replacement=replacement,
                      columns=t.names)


@dataclass(frozen=True)
class NoiseModel:
    family: str  # "gaussian" (scale = sigma) or "laplace"
    scale: float
    columns: tuple[str, ...]

    def __post_init__(self):
        if self.family not in ("gaussian", "laplace"):
            raise ParameterError(f"unknown noise family {self.family!r}")
        if not self.scale >= 0:
            raise ParameterError("noise scale must be >= 0")
        if not self.columns:
            raise ParameterError("noise needs at least one column")
        object.__setattr__(self, "columns", tuple(self.columns))


def noise(rep, model: NoiseModel, seed: int, *, node: str | None = None) -> Representation:
    """Add seeded noise to the listed columns.

    Draws run row by row, columns in model order; missing cells stay missing
    and consume no draw.  Scale 0 returns the values untouched.
    """
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    cols = [t.numeric(c) for c in model.columns]
    if model.scale == 0:
        out = t
    else:
        rng = Rng(seed)
        new = [list(c.values) for c in cols]
        for i in range(t.n_rows):
            for j, c in enumerate(cols):
                v = c.values[i]
                if v is None:
                    continue
                if model.family == "laplace":
                    new[j][i] = float(v) + rng.laplace(model.scale)
                else:
                    new[j][i] = float(v) + model.scale * rng.normal()
        out = t
        for c, vals in zip(cols, new):
            out = out.with_column(c.with_values(vals, ColumnKind.CONTINUOUS, None))
    return sample_out(rep, out, "noise", node, family=model.family, scale=model.scale,
                      columns=list(model.columns))


def permute(rep, column: str, seed: int, *, node: str | None = None) -> Representation:
    """Shuffle one column (seeded Fisher-Yates), leaving the others in place."""
    rep = start(rep, Kind.SAMPLE)
    t = rep.table
    col = t.column(column)
    order = Rng(seed).fisher_yates(t.n_rows)
    return sample_out(rep, t.with_column(col.with_values(col.values[i] for i in order)),
                      "permute", node, columns=[column])

