"""Disclosure-first transformation engine for tabular data."""

from .core import (
    Bundle,
    Column,
    ColumnKind,
    Interval,
    Kind,
    KindError,
    Representation,
    Table,
    infer_column_kind,
    representation_family,
    rng_next,
)

__version__ = "0.1.0"
