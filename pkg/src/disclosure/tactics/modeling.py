"""Tactics that replace rows with a function over the data domain."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import (
    Axis,
    Column,
    ColumnKind,
    Evaluator,
    Group,
    Kind,
    KindError,
    ModelRep,
    Representation,
    SummaryRep,
    Table,
    as_representation,
)
from ..numerics import gaussian_kernel_matrix, silverman_bandwidth
from ._common import ParameterError, sample_out, start, step

log = logging.getLogger(__name__)

GRID_BUDGET = 4096


def _per_axis(value, n_axes: int, name: str) -> list:
    if isinstance(value, (list, tuple)):
        if len(value) != n_axes:
            raise ParameterError(f"{name} needs one entry per axis ({n_axes})")
        return list(value)
    return [value] * n_axes


def smooth_kde(rep, cols: Sequence[str], bandwidth="auto", grid_n=None, ranges=None,
               *, node: str | None = None) -> Representation:
    """Gaussian (product) kernel density of one or two columns on a regular grid.

    ``bandwidth`` is a positive number, ``"auto"`` (Silverman), or one of those
    per axis.  Without ``ranges`` the grid spans the data range widened by
    three bandwidths on each side.  Rows missing any axis are dropped.
    """
    rep = start(rep, Kind.SAMPLE)
    cols = list(cols)
    if len(cols) not in (1, 2):
        raise ParameterError("smooth_kde takes 1 or 2 columns")
    if grid_n is None:
        raise ParameterError("smooth_kde needs an explicit grid size")
    t = rep.table
    for c in cols:
        t.numeric(c)
    t, dropped = t.complete_rows(cols)
    n = t.n_rows
    if n == 0:
        raise ParameterError("smooth_kde needs at least one complete row")
    data = [np.array(t.column(c).values, dtype=float) for c in cols]
    hs = []
    for c, h, xs in zip(cols, _per_axis(bandwidth, len(cols), "bandwidth"), data):
        if h == "auto":
            h = silverman_bandwidth(xs.tolist())
        h = float(h)
        if not h > 0:
            raise ParameterError(f"bandwidth for {c!r} must be positive")
        hs.append(h)
    sizes = [int(g) for g in _per_axis(grid_n, len(cols), "grid")]
    spans = _per_axis(ranges, len(cols), "range") if ranges is not None else [None] * len(cols)
    axes = []
    for c, h, xs, g, span in zip(cols, hs, data, sizes, spans):
        lo, hi = (float(span[0]), float(span[1])) if span is not None else \
            (float(xs.min()) - 3 * h, float(xs.max()) + 3 * h)
        axes.append(Axis(c, lo, hi, g))
    kernels = [gaussian_kernel_matrix(xs, a.coords(), h) for xs, a, h in zip(data, axes, hs)]
    if len(cols) == 1:
        dens = kernels[0].sum(axis=0) / (n * hs[0])
    else:
        # einsum without BLAS keeps the summation order fixed
        dens = np.einsum("ig,ih->gh", kernels[0], kernels[1], optimize=False) / (n * hs[0] * hs[1])
    coarse = [a.name for a, h in zip(axes, hs) if a.step > h]
    if coarse:
        log.warning("smooth_kde: grid step exceeds the bandwidth on %s; the grid under-resolves the density",
                    coarse)
    model = ModelRep(Evaluator.DENSITY_GRID, tuple(axes), tuple(hs) + (n,),
                     tuple(f"bandwidth_{c}" for c in cols) + ("n",), dens.reshape(-1), "density")
    return rep.extend(step("smooth_kde", node, columns=cols, bandwidth=hs, grid=sizes,
                           dropped_missing=dropped or None, coarse_grid=coarse or None),
                      model, Kind.MODEL)


@dataclass(frozen=True)
class AdjustmentSpec:
    """Pull values toward ``pivot`` with weight ``clamp(1 - u / u_max, 0, 1)``."""

    pivot: float
    u_max: float
    uncertainty: str

    def __post_init__(self):
        if not self.u_max > 0:
            raise ParameterError("u_max must be positive")

    def weight(self, u: float) -> float:
        return min(1.0, max(0.0, 1.0 - u / self.u_max))

    def adjust(self, value: float, u: float) -> float:
        w = self.weight(u)
        if w == 1.0:
            return value  # exact identity; the affine form can round
        return self.pivot + (value - self.pivot) * w


def magnitude_adjust(rep, spec: AdjustmentSpec, value_col: str, *, node: str | None = None) -> Representation:
    """Adjust ``value_col`` in place by its uncertainty; sample or summary input.

    On a summary both names refer to stats.  Rows (groups) missing either
    value are dropped from a sample and left untouched in a summary.
    """
    rep = start(rep, Kind.SAMPLE, Kind.SUMMARY)
    detail = dict(columns=[value_col, spec.uncertainty], value=value_col, uncertainty=spec.uncertainty,
                  pivot=spec.pivot, u_max=spec.u_max, weight="clamp(1 - u / u_max, 0, 1)")
    if rep.kind is Kind.SAMPLE:
        t = rep.table
        t.numeric(value_col)
        t.numeric(spec.uncertainty)
        t, dropped = t.complete_rows([value_col, spec.uncertainty])
        vals = t.column(value_col).values
        us = t.column(spec.uncertainty).values
        adjusted = [spec.adjust(v, u) for v, u in zip(vals, us)]
        col = t.column(value_col).with_values(adjusted, ColumnKind.CONTINUOUS, None)
        return sample_out(rep, t.with_column(col), "magnitude_adjust", node,
                          dropped_missing=dropped or None, **detail)
    s = rep.payload
    for name in (value_col, spec.uncertainty):
        if name not in s.stat_names:
            raise KeyError(f"unknown stat {name!r}; have {list(s.stat_names)}")
    vi = s.stat_names.index(value_col)
    ui = s.stat_names.index(spec.uncertainty)
    groups = []
    for g in s.groups:
        stats = list(g.stats)
        if stats[vi] is not None and stats[ui] is not None:
            stats[vi] = spec.adjust(stats[vi], stats[ui])
        groups.append(Group(g.key, tuple(stats), g.region))
    out = SummaryRep(s.keys, s.stat_names, tuple(groups), s.intervals_nested, s.key_levels, s.domain, s.origin)
    return rep.extend(step("magnitude_adjust", node, **detail), out)


def adjustment_curve(spec: AdjustmentSpec, grid_n: int = 64) -> ModelRep:
    """The weight function itself as a model over ``[0, u_max]``, e.g. for a legend."""
    axis = Axis(spec.uncertainty, 0.0, spec.u_max, grid_n)
    grid = [spec.weight(u) for u in axis.coords().tolist()]
    return ModelRep(Evaluator.ADJUSTMENT_FN, (axis,), (spec.pivot, spec.u_max), ("pivot", "u_max"), grid, "weight")


def _grid_points(n_axes: int) -> int:
    n = 2
    while (n + 1) ** n_axes <= GRID_BUDGET:
        n += 1
    if n ** n_axes > GRID_BUDGET:
        raise ParameterError(f"{n_axes} axes are too many to materialize a model grid")
    return n


def _domain_axes(t: Table, cols: Sequence[str]) -> list[Axis]:
    g = _grid_points(len(cols))
    axes = []
    for c in cols:
        vals = t.column(c).values
        lo, hi = float(min(vals)), float(max(vals))
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        axes.append(Axis(c, lo, hi, g))
    return axes


def _mesh(axes: Sequence[Axis]) -> np.ndarray:
    """Grid points as rows, first axis varying slowest."""
    grids = np.meshgrid(*[a.coords() for a in axes], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


class RankError(ParameterError):
    pass


def predict_ols(rep, y: str, xs: Sequence[str], *, node: str | None = None) -> tuple[Representation, Representation]:
    """Least-squares fit of ``y`` on ``xs`` with an intercept.

    Returns the model and the input table with ``<y>__fit`` appended (rows
    missing any used column dropped).  Solved through a QR factorization of
    the design matrix, which yields the normal-equation solution.
    """
    rep = start(rep, Kind.SAMPLE)
    xs = list(xs)
    if not xs:
        raise ParameterError("predict_ols needs at least one regressor")
    t = rep.table
    for c in [y] + xs:
        t.numeric(c)
    t, dropped = t.complete_rows([y] + xs)
    n, p = t.n_rows, len(xs) + 1
    if n < p:
        raise ParameterError(f"need at least {p} complete rows, got {n}")
    X = np.column_stack([np.ones(n)] + [np.array(t.column(c).values, dtype=float) for c in xs])
    Y = np.array(t.column(y).values, dtype=float)
    names = ["intercept"] + xs
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    scale = np.linalg.norm(X, axis=0)
    bad = [j for j in range(p) if diag[j] <= 1e-10 * max(scale[j], 1.0)]
    if bad:
        raise RankError(f"rank-deficient design: {[names[j] for j in bad]} are collinear with "
                        f"{[names[j] for j in range(p) if j not in bad]}")
    beta = np.linalg.solve(r, q.T @ Y)
    fitted = X @ beta
    fit_name = f"{y}__fit"
    fitted_rep = sample_out(rep, t.with_column(Column(fit_name, ColumnKind.CONTINUOUS, tuple(fitted.tolist()))),
                            "predict_ols", node, y=y, columns=[y] + xs, output=fit_name,
                            dropped_missing=dropped or None)
    axes = _domain_axes(t, xs)
    mesh = _mesh(axes)
    grid = beta[0] + mesh @ beta[1:]
    model = ModelRep(Evaluator.OLS_LINE, tuple(axes), tuple(beta.tolist()), tuple(names), grid, y)
    model_rep = rep.extend(step("predict_ols", node, y=y, columns=[y] + xs, dropped_missing=dropped or None),
                           model, Kind.MODEL)
    return model_rep, fitted_rep


def power_iteration(cov: np.ndarray, k: int, tol: float = 1e-12, max_iter: int = 100_000):
    """Leading ``k`` eigenpairs of a symmetric PSD matrix by power iteration with deflation.

    Iterates are kept orthogonal to the vectors already found, so a
    degenerate or zero spectrum still yields an orthonormal basis.  Sign:
    the largest-magnitude entry of each vector is positive.
    """
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    a = cov.copy()
    vecs: list[np.ndarray] = []
    vals: list[float] = []
    scale = max(float(np.abs(cov).max()), 1e-300)

    def orth(v):
        for _ in range(2):
            for u in vecs:
                v = v - (u @ v) * u
        return v

    for _ in range(k):
        cand = [orth(a[:, j].copy()) for j in range(d)] + [orth(np.eye(d)[j]) for j in range(d)]
        norms = [float(np.linalg.norm(c)) for c in cand]
        best = int(np.argmax(norms[:d]))
        if norms[best] <= 1e-12 * scale:
            best = d + int(np.argmax(norms[d:]))
        v = cand[best] / norms[best]
        for _ in range(max_iter):
            w = orth(a @ v)
            nw = float(np.linalg.norm(w))
            if nw <= 1e-14 * scale:
                break  # remaining spectrum is numerically zero; v spans part of the null space
            w /= nw
            diff = float(np.linalg.norm(w - v))
            v = w
            if diff < tol:
                break
        v = orth(v)
        v /= np.linalg.norm(v)
        i = int(np.argmax(np.abs(v)))
        if v[i] < 0:
            v = -v
        lam = float(v @ cov @ v)
        vecs.append(v)
        vals.append(lam)
        a = a - lam * np.outer(v, v)
    order = sorted(range(k), key=lambda j: -vals[j])
    return [vals[j] for j in order], np.array([vecs[j] for j in order]).T


def project_pca(rep, cols: Sequence[str], k: int, *, node: str | None = None) -> tuple[Representation, Representation]:
    """Embed ``cols`` onto their first ``k`` principal axes.

    Returns the table with ``cols`` replaced by ``pc1..pck`` and the loadings
    model.  Loadings are columns of the returned matrix, eigenvalues are of
    the sample covariance (divisor n - 1).
    """
    rep = start(rep, Kind.SAMPLE)
    cols = list(cols)
    if not cols:
        raise ParameterError("project_pca needs at least one column")
    if int(k) != k or k < 1 or k > len(cols):
        raise ParameterError(f"k must be in 1..{len(cols)}, got {k}")
    k = int(k)
    t = rep.table
    for c in cols:
        t.numeric(c)
    t, dropped = t.complete_rows(cols)
    if t.n_rows < 2:
        raise ParameterError("project_pca needs at least 2 complete rows")
    X = np.column_stack([np.array(t.column(c).values, dtype=float) for c in cols])
    means = X.mean(axis=0)
    Xc = X - means
    cov = (Xc.T @ Xc) / (t.n_rows - 1)
    eigvals, loadings = power_iteration(cov, k)
    scores = Xc @ loadings
    out = Table(tuple(c for c in t.columns if c.name not in cols), t.source_id)
    pc_names = [f"pc{i + 1}" for i in range(k)]
    for i, name in enumerate(pc_names):
        out = out.with_column(Column(name, ColumnKind.CONTINUOUS, tuple(scores[:, i].tolist())))
    table_rep = sample_out(rep, out, "project_pca", node, columns=cols, k=k, output=pc_names,
                           dropped_missing=dropped or None)
    axes = _domain_axes(t, cols)
    grid = (_mesh(axes) - means) @ loadings[:, 0]
    params = list(means) + loadings.T.reshape(-1).tolist() + list(eigvals)
    names = [f"mean_{c}" for c in cols] + [f"loading{i + 1}_{c}" for i in range(k) for c in cols] + \
        [f"eigenvalue{i + 1}" for i in range(k)]
    model = ModelRep(Evaluator.PCA_LOADINGS, tuple(axes), tuple(params), tuple(names), grid, "pc1")
    model_rep = rep.extend(step("project_pca", node, columns=cols, k=k, dropped_missing=dropped or None),
                           model, Kind.MODEL)
    return table_rep, model_rep


def pca_loadings(model: ModelRep) -> tuple[np.ndarray, np.ndarray]:
    """``(eigenvalues, loadings)`` from a PCA model; loadings as columns."""
    d = len(model.axes)
    k = sum(1 for n in model.param_names if n.startswith("eigenvalue"))
    p = np.array(model.params)
    load = p[d:d + k * d].reshape(k, d).T
    return p[d + k * d:], load


def full_disclosure(t, *, node: str | None = None) -> Representation:
    """Wrap a table as a sample with no tactic applied."""
    rep = as_representation(t)
    if rep.kind is not Kind.SAMPLE:
        raise KindError(f"full disclosure applies to samples, got {rep.kind.value}")
    return rep
