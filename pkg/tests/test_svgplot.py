import xml.etree.ElementTree as ET

from sparsecast.svgplot import line_chart, stem_plot

NS = "{http://www.w3.org/2000/svg}"


def test_line_chart_is_valid_svg():
    svg = line_chart({"actual": [1, 2, 3], "predicted": [1.5, 2.5, 2.0]}, ["14:00", "14:05", "14:10"], title="a < b")
    root = ET.fromstring(svg)
    assert len(root.findall(f"{NS}polyline")) == 2
    assert "a &lt; b" in svg


def test_stem_plot_skips_zero_coefficients():
    svg = stem_plot([0.0, 0.5, 0.0, -0.2, 0.0], boundaries=[0, 2, 4], block_labels=["x", "y", "z"])
    root = ET.fromstring(svg)
    assert len(root.findall(f"{NS}circle")) == 2
    assert svg.count("stroke-dasharray") == 2


def test_degenerate_inputs():
    ET.fromstring(line_chart({"flat": [5, 5, 5]}))
    ET.fromstring(stem_plot([0.0, 0.0]))
    assert line_chart({"a": [1, 2]}) == line_chart({"a": [1, 2]})
