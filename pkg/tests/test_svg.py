import xml.etree.ElementTree as ET

import pytest

from disclosure.core import Table
from disclosure.pipeline import CombineSpec, combine
from disclosure.svg import ChartError, auto_chart, compatible_charts, mark_count, render_svg
from disclosure.tactics import ExplicitEdges, StatSpec, aggregate, band, classify, smooth_kde

NS = "{http://www.w3.org/2000/svg}"


def parse(svg: bytes):
    return ET.fromstring(svg)


def hist3():
    t = Table.from_columns({"v": [1, 2, 3, 4, 5, 6]})
    return aggregate(classify(t, "v", ExplicitEdges((0, 2, 4, 6))), ["v__bin"], [StatSpec("count")])


def test_histogram_three_rects():
    root = parse(render_svg(hist3(), "histogram"))
    assert len(root.findall(f".//{NS}rect")) == 3
    assert root.get("version") == "1.1"


def test_empty_dotplot():
    svg = render_svg(Table.from_columns({"v": []}), "dotplot")
    assert len(parse(svg).findall(f".//{NS}circle")) == 0


def test_identical_bytes():
    assert render_svg(hist3(), "histogram") == render_svg(hist3(), "histogram")


def test_dotplot_stacks_one_mark_per_row():
    t = Table.from_columns({"v": [1.0, 1.0, 1.0, 5.0]})
    svg = render_svg(t, "dotplot")
    circles = parse(svg).findall(f".//{NS}circle")
    assert len(circles) == mark_count(svg) == 4
    xs = [c.get("cx") for c in circles]
    ys = [c.get("cy") for c in circles]
    assert xs.count(xs[0]) == 3 and len(set(ys[:3])) == 3


def test_heatmap_and_contour():
    t = Table.from_columns({"x": [0.0, 1.0, 2.0, 3.0, 0.5], "y": [0.0, 1.0, 2.0, 3.0, 2.5]})
    binned = classify(classify(t, "x", ExplicitEdges((0, 2, 4))), "y", ExplicitEdges((0, 2, 4)))
    heat = aggregate(binned, ["x__bin", "y__bin"], [StatSpec("count")])
    assert mark_count(render_svg(heat, "heatmap")) == len(heat.payload.groups)
    dens = smooth_kde(t, ["x", "y"], 0.5, 24)
    hdr = band(dens, masses=[0.5, 0.9])
    assert compatible_charts(hdr) == ["contour-band"]
    assert mark_count(render_svg(hdr, "contour-band")) == 2


def test_incompatible_pairing_suggests_kinds():
    with pytest.raises(ChartError, match="compatible: histogram"):
        render_svg(hist3(), "scatter")
    with pytest.raises(ChartError):
        auto_chart(smooth_kde(Table.from_columns({"v": [0.0, 1.0]}), ["v"], 1.0, 8))


def test_bundle_layers():
    t = Table.from_columns({"v": [1.0, 2.0, 3.0]})
    b = combine([t, band(t, column="v", quantiles=[0, 0.5, 1])], CombineSpec("layer"))
    root = parse(render_svg(b))
    assert len(root.findall(f".//{NS}g[@class='layer']")) == 2
