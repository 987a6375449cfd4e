import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from disclosure.core import ColumnKind, Interval, Kind, KindError, Table
from disclosure.numerics import phi
from disclosure.tactics import (
    AdjustmentSpec,
    EqualFrequency,
    EqualWidth,
    ExplicitEdges,
    NoiseModel,
    ParameterError,
    RankError,
    StatSpec,
    aggregate,
    band,
    categorize,
    classify,
    derive,
    encode_select,
    full_disclosure,
    magnitude_adjust,
    noise,
    pca_loadings,
    permute,
    predict_ols,
    project_pca,
    smooth_kde,
    subsample,
)


def col(values, name="v", **kinds):
    return Table.from_columns({name: values}, kinds or None)


def labels(rep, name="v__bin"):
    return list(rep.table.column(name).values)


# --- classify ---------------------------------------------------------------

def test_classify_examples():
    assert labels(classify(col([1, 5, 9]), "v", ExplicitEdges((0, 10)))) == [0, 0, 0]
    out = classify(col([0, 1, 2, 3]), "v", EqualWidth(2))
    assert out.lineage[-1].detail["edges"] == [0.0, 1.5, 3.0]
    assert labels(out) == [0, 0, 1, 1]
    assert out.kind is Kind.SAMPLE
    assert out.table.column("v__bin").levels == (Interval(0, 1.5), Interval(1.5, 3, True))
    # split after the second sorted value
    eq = classify(col([4, 1, 3, 2]), "v", EqualFrequency(2))
    assert labels(eq) == [1, 0, 1, 0]


def test_classify_errors():
    with pytest.raises(KindError):
        classify(Table.from_columns({"v": ["a"]}), "v", EqualWidth(2))
    with pytest.raises(ParameterError):
        ExplicitEdges((0, 2, 1))


def test_classify_out_of_range_is_missing():
    out = classify(col([-1, 5, 11, None]), "v", ExplicitEdges((0, 10)))
    assert labels(out) == [None, 0, None, None]
    assert out.lineage[-1].detail["out_of_range"] == 2


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200),
       st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=12, unique=True))
def test_classify_partitions_range(values, edges):
    edges = sorted(edges)
    out = classify(col(values), "v", ExplicitEdges(tuple(edges)))
    ivs = out.table.column("v__bin").levels
    for a, b in zip(ivs, ivs[1:]):
        assert not a.overlaps(b) and a.hi == b.lo
    assert ivs[0].lo == edges[0] and ivs[-1].hi == edges[-1] and ivs[-1].closed_hi
    for v, lab in zip(values, labels(out)):
        homes = [i for i, iv in enumerate(ivs) if iv.contains(v)]
        assert homes == ([] if lab is None else [lab])


# --- categorize / derive / encode_select ------------------------------------

def test_categorize():
    t = Table.from_columns({"c": ["cook", "lake", "miami-dade"]})
    out = categorize(t, "c", {"cook": "IL", "lake": "IL", "miami-dade": "FL"})
    assert out.table.column("c").values == ("IL", "IL", "FL")
    ident = categorize(t, "c", {v: v for v in t.column("c").values})
    assert ident.table == t and ident.ops == ["categorize"]
    with pytest.raises(ParameterError, match="unknown"):
        categorize(Table.from_columns({"c": ["unknown"]}), "c", {"x": "y"})


def test_derive():
    t = Table.from_columns({"a": [10.0, 3.0], "b": [4.0, 0.0]})
    assert derive(t, "a", "c").table.column("c").values == (10.0, 3.0)
    out = derive(t, "a / b", "c")
    assert out.table.column("c").values == (2.5, None)
    assert out.lineage[-1].detail["division_by_zero"] == 1
    assert derive(t, "7", "c").table.column("c").values == (7.0, 7.0)
    with pytest.raises(ParameterError):
        derive(t, "a ** b", "c")


def test_encode_select(people):
    assert encode_select(people, people.names).table == people
    out = encode_select(people, ["name", "x"])
    assert out.lineage[-1].detail["dropped"] == ["age"]
    with pytest.raises(KeyError):
        encode_select(people, ["nope"])
    summary = aggregate(classify(people, "x", EqualWidth(2)), ["x__bin"], [StatSpec("count")])
    with pytest.raises(ParameterError):
        encode_select(summary, ["count"])


# --- aggregate ----------------------------------------------------------------

def test_aggregate_examples():
    one = aggregate(col([4.5]), [], [StatSpec("mean", "v")])
    assert [g.stats for g in one.payload.groups] == [(4.5,)]
    t = Table.from_columns({"lab": ["A", "A", "B"], "v": [1, 3, 5]})
    out = aggregate(t, ["lab"], [StatSpec("mean", "v")])
    assert {g.key[0]: g.stats[0] for g in out.payload.groups} == {"A": 2.0, "B": 5.0}
    empty = aggregate(Table.from_columns({"v": []}), [], [StatSpec("count")])
    assert empty.payload.groups == ()
    assert aggregate(t, ["lab"], [StatSpec("count")]).kind is Kind.SUMMARY


@settings(max_examples=60)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.floats(-1e3, 1e3)), max_size=80))
def test_aggregate_against_direct_recomputation(rows):
    t = Table.from_columns({"g": [r[0] for r in rows], "v": [r[1] for r in rows]}, {"g": ColumnKind.NOMINAL})
    stats = [StatSpec("count"), StatSpec("sum", "v"), StatSpec("mean", "v"), StatSpec("max", "v")]
    out = aggregate(t, ["g"], stats).payload
    assert sum(g.stats[0] for g in out.groups) == len(rows)
    for g in out.groups:
        vs = [v for k, v in rows if k == g.key[0]]
        assert g.stats[0] == len(vs)
        assert g.stats[1] == pytest.approx(math.fsum(vs), rel=1e-9, abs=1e-9)
        assert g.stats[2] * g.stats[0] == pytest.approx(g.stats[1], rel=1e-9, abs=1e-9)
        assert g.stats[3] == max(vs)


# --- band -----------------------------------------------------------------------

def test_band_examples():
    out = band(col([3, 1, 2]), column="v", quantiles=[0, 1])
    assert [g.key[0] for g in out.payload.groups] == [Interval(1, 3, True)]
    five = band(col(list(range(1, 10))), column="v", quantiles=[0, 0.25, 0.5, 0.75, 1])
    edges = [g.key[0].lo for g in five.payload.groups] + [five.payload.groups[-1].key[0].hi]
    assert edges == [1, 3, 5, 7, 9]


def test_band_masses_need_density():
    with pytest.raises(KindError):
        band(col([1.0, 2.0]), masses=[0.5])


def test_band_hdr_symmetric_grid():
    dens = smooth_kde(col([-1.0, 0.0, 1.0]), ["v"], 1.0, 101, [[-6, 6]])
    out = band(dens, masses=[0.85])
    g = out.payload.groups[0]
    mass = dens.payload.grid / dens.payload.grid.sum()
    assert 0.85 <= g.stats[0] <= 0.85 + mass.max()
    assert not out.payload.intervals_nested
    nested = band(dens, masses=[0.5, 0.85])
    assert nested.payload.intervals_nested
    small, large = (grp.region for grp in nested.payload.groups)
    assert small < large


# --- sampling tactics -------------------------------------------------------------

def test_subsample(people):
    full = subsample(people, 4, False, 3)
    assert sorted(full.table.rows) == sorted(people.rows)
    assert subsample(people, 0, False, 3).table.n_rows == 0
    assert subsample(people, 2, False, 9).table == subsample(people, 2, False, 9).table
    with pytest.raises(ParameterError):
        subsample(people, 5, False, 0)
    drawn = subsample(col(list(range(10))), 5, True, 7)
    assert drawn.table.column("v").values == (3, 0, 9, 5, 4)


def test_noise(people):
    assert noise(people, NoiseModel("laplace", 0.0, ("x",)), 1).table == people
    a = noise(people, NoiseModel("gaussian", 1.0, ("x",)), 1)
    assert a.table == noise(people, NoiseModel("gaussian", 1.0, ("x",)), 1).table
    assert a.table.column("age") == people.column("age")
    assert a.table.column("x") != people.column("x")


def test_laplace_moments():
    t = col([0.0] * 100_000)
    xs = np.array(noise(t, NoiseModel("laplace", 1.0, ("v",)), 2024).table.column("v").values)
    assert abs(xs.mean()) < 0.02
    assert abs(np.abs(xs).mean() - 1.0) < 0.02


def test_permute(people):
    assert permute(col([5]), "v", 1).table == col([5])
    out = permute(people, "x", 42)
    assert sorted(out.table.column("x").values) == sorted(people.column("x").values)
    assert out.table.column("name") == people.column("name")
    # order of the seeded Fisher-Yates trace for n = 4, seed 42
    from disclosure.core import Rng
    order = Rng(42).fisher_yates(4)
    assert out.table.column("x").values == tuple(people.column("x").values[i] for i in order)


@given(st.lists(st.integers(-50, 50), max_size=60), st.integers(0, 2 ** 64 - 1))
def test_permute_and_subsample_preserve_multisets(values, seed):
    t = col(values)
    assert sorted(permute(t, "v", seed).table.column("v").values) == sorted(values)
    k = len(values) // 2
    sub = list(subsample(t, k, False, seed).table.column("v").values)
    pool = list(values)
    for v in sub:
        pool.remove(v)


# --- modeling tactics -------------------------------------------------------------

def test_kde_examples():
    one = smooth_kde(col([0.0]), ["v"], 1.0, 61)
    coords = one.payload.axes[0].coords()
    assert abs(coords[int(np.argmax(one.payload.grid))]) == np.abs(coords).min()
    two = smooth_kde(col([-1.0, 1.0]), ["v"], 1.0, 101, [[-5, 5]])
    assert two.payload.grid[50] == pytest.approx(phi(1.0), abs=1e-12)
    assert phi(1.0) == pytest.approx(0.2420, abs=1e-4)


def test_kde_zero_variance():
    with pytest.raises(ParameterError):
        smooth_kde(col([2.0, 2.0]), ["v"], 0, 16)
    with pytest.raises(ValueError, match="explicit positive bandwidth"):
        smooth_kde(col([2.0, 2.0]), ["v"], "auto", 16)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-10_000, 10_000), min_size=2, max_size=60), st.integers(0, 1))
def test_kde_riemann_mass(ints, two_d):
    values = [i / 100 for i in ints]
    assume(len(set(values)) >= 4)
    if two_d:
        t = Table.from_columns({"a": values, "b": values[::-1]})
        m = smooth_kde(t, ["a", "b"], "auto", 48).payload
    else:
        m = smooth_kde(col(values), ["v"], "auto", 256).payload
    # the Riemann sum is only meaningful when the grid resolves the kernel
    assume(all(a.step <= h for a, h in zip(m.axes, m.params)))
    assert float(m.grid.sum()) * m.cell_volume == pytest.approx(1.0, abs=0.01)


def test_kde_flags_coarse_grid():
    rep = smooth_kde(col([0.0, 0.0, 0.0, 1.0, 0.004]), ["v"], "auto", 256)
    assert rep.lineage[-1].detail["coarse_grid"] == ["v"]
    assert "coarse_grid" not in smooth_kde(col([0.0, 1.0, 2.0]), ["v"], 1.0, 64).lineage[-1].detail


def test_magnitude_adjust():
    spec = AdjustmentSpec(0.0, 2.0, "u")
    t = Table.from_columns({"v": [10.0, 10.0, 10.0, 10.0], "u": [0.0, 1.0, 2.0, 5.0]})
    out = magnitude_adjust(t, spec, "v")
    assert out.table.column("v").values == (10.0, 5.0, 0.0, 0.0)
    d = out.lineage[-1].detail
    assert (d["pivot"], d["u_max"], d["uncertainty"]) == (0.0, 2.0, "u")


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0, 10)), min_size=1, max_size=30),
       st.floats(-100, 100), st.floats(0.1, 5))
def test_magnitude_adjust_between_pivot_and_value(rows, pivot, u_max):
    t = Table.from_columns({"v": [r[0] for r in rows], "u": [r[1] for r in rows]})
    out = magnitude_adjust(t, AdjustmentSpec(pivot, u_max, "u"), "v").table.column("v").values
    for (v, _), a in zip(rows, out):
        assert min(v, pivot) - 1e-9 <= a <= max(v, pivot) + 1e-9
    ident = magnitude_adjust(Table.from_columns({"v": [r[0] for r in rows], "u": [0.0] * len(rows)}),
                             AdjustmentSpec(pivot, u_max, "u"), "v")
    assert ident.table.column("v").values == tuple(float(r[0]) for r in rows)


def test_ols_examples():
    model, fitted = predict_ols(Table.from_columns({"x": [0.0, 1.0], "y": [1.0, 3.0]}), "y", ["x"])
    assert model.payload.params == pytest.approx((1.0, 2.0), abs=1e-12)
    assert fitted.table.column("y__fit").values == pytest.approx((1.0, 3.0), abs=1e-12)
    flat, _ = predict_ols(Table.from_columns({"x": [0.0, 1.0, 5.0], "y": [2.0, 2.0, 2.0]}), "y", ["x"])
    assert flat.payload.params == pytest.approx((2.0, 0.0), abs=1e-12)
    t = Table.from_columns({"x": [0.0, 1.0, 2.0], "y": [1.0, 0.0, 4.0]})
    _, fit = predict_ols(t, "y", ["x"])
    resid = np.array(t.column("y").values) - np.array(fit.table.column("y__fit").values)
    assert abs(resid @ np.array(t.column("x").values)) < 1e-9
    with pytest.raises(RankError, match="x2"):
        predict_ols(Table.from_columns({"x": [0.0, 1.0, 2.0], "x2": [0.0, 2.0, 4.0], "y": [1.0, 0.0, 4.0]}),
                    "y", ["x", "x2"])


def test_pca_examples():
    t = Table.from_columns({"a": [0.0, 1.0, 2.0, 3.0], "b": [0.0, 1.0, 2.0, 3.0]})
    _, model = project_pca(t, ["a", "b"], 2)
    vals, load = pca_loadings(model.payload)
    assert load[:, 0] == pytest.approx([1 / math.sqrt(2)] * 2, abs=1e-9)
    assert vals[1] == pytest.approx(0.0, abs=1e-12)
    # covariance diag(2, 1): x spread larger than y
    t2 = Table.from_columns({"a": [-2.0, 2.0, 0.0, 0.0], "b": [0.0, 0.0, -math.sqrt(2), math.sqrt(2)]})
    cov = np.cov(np.array([t2.column("a").values, t2.column("b").values]))
    _, m2 = project_pca(t2, ["a", "b"], 2)
    vals2, load2 = pca_loadings(m2.payload)
    assert vals2 == pytest.approx(np.sort(np.linalg.eigvalsh(cov))[::-1], abs=1e-9)
    assert np.abs(load2) == pytest.approx(np.eye(2), abs=1e-9)
    with pytest.raises(ParameterError):
        project_pca(t, ["a", "b"], 3)


def test_pca_full_reconstruction():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3)) @ rng.normal(size=(3, 3))
    t = Table.from_columns({c: X[:, i].tolist() for i, c in enumerate("abc")})
    scores, model = project_pca(t, ["a", "b", "c"], 3)
    _, L = pca_loadings(model.payload)
    S = np.column_stack([scores.table.column(f"pc{i}").values for i in (1, 2, 3)])
    assert np.abs(S @ L.T - (X - X.mean(axis=0))).max() < 1e-9
    assert np.abs(L.T @ L - np.eye(3)).max() < 1e-9


def test_full_disclosure(people):
    rep = full_disclosure(people)
    assert rep.table is people and rep.lineage == ()
