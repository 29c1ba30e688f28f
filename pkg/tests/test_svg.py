import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from thermoforge.errors import InvalidParameterError
from thermoforge.svg import PLOT_KINDS, emit_svg, nice_ticks, render_svg

NS = "{http://www.w3.org/2000/svg}"


def sample(kind):
    rng = np.random.default_rng(0)
    grid = np.add.outer(np.linspace(0, 1, 6), np.linspace(0, 2, 5) ** 2)
    return {
        "actual_vs_predicted": {"actual": [1.0, 2.0, 3.5], "predicted": [1.2, 1.9, 3.0]},
        "residual": {"predicted": [1.0, 2.0, 3.0], "residual": [0.1, -0.2, 0.05]},
        "qq": {"points": [(-1.0, -1.1), (0.0, 0.1), (1.0, 0.9)]},
        "roc": {"points": [(0.0, 0.0), (0.0, 0.5), (0.5, 1.0), (1.0, 1.0)], "auc": 0.875},
        "confusion_heatmap": {"matrix": [[3, 1], [0, 4]]},
        "contour": {"grid": grid, "x": np.linspace(200, 600, 6), "y": np.linspace(60, 240, 5)},
        "surface_isometric": {"grid": grid, "x": np.linspace(200, 600, 6), "y": np.linspace(60, 240, 5)},
        "correlation_heatmap": {"values": np.corrcoef(rng.normal(size=(3, 10))), "labels": ["RR", "TS", "PT"]},
        "feature_importance_bars": {"values": [0.6, 0.3, 0.1], "labels": ["RR", "TS", "DMFR"]},
    }[kind]


@pytest.mark.parametrize("kind", PLOT_KINDS)
def test_well_formed_and_deterministic(kind, tmp_path):
    text = render_svg(kind, sample(kind))
    root = ET.fromstring(text)
    assert root.tag == NS + "svg"
    assert (root.get("width"), root.get("height"), root.get("version")) == ("800", "600", "1.1")
    assert root.findall(f".//{NS}text"), "axis or cell labels expected"
    assert render_svg(kind, sample(kind)) == text
    path = emit_svg(kind, sample(kind), tmp_path / f"{kind}.svg")
    assert path.read_text(encoding="utf-8") == text


def test_perfect_fit_markers_on_reference_line():
    v = np.random.default_rng(3).uniform(250, 450, 20)
    root = ET.fromstring(render_svg("actual_vs_predicted", {"actual": v, "predicted": v}))
    ref = root.find(f".//{NS}line[@class='reference']")
    x1, y1, x2, y2 = (float(ref.get(k)) for k in ("x1", "y1", "x2", "y2"))
    markers = root.findall(f".//{NS}circle[@class='marker']")
    assert len(markers) == 20
    for m in markers:
        cx, cy = float(m.get("cx")), float(m.get("cy"))
        dist = abs((y2 - y1) * cx - (x2 - x1) * cy + x2 * y1 - y2 * x1) / np.hypot(x2 - x1, y2 - y1)
        assert dist <= 0.5


def test_no_timestamps_or_nan():
    text = render_svg("roc", sample("roc"))
    assert not re.search(r"\d{4}-\d{2}-\d{2}", text)
    assert "nan" not in text.lower()


def test_rejects_unknown_kind_and_empty_data():
    with pytest.raises(InvalidParameterError):
        render_svg("pie", {"values": [1]})
    with pytest.raises(InvalidParameterError):
        render_svg("actual_vs_predicted", {"actual": [], "predicted": []})
    with pytest.raises(InvalidParameterError):
        render_svg("roc", {})


def test_nice_ticks_cover_range():
    ticks = nice_ticks(3.2, 97.0)
    assert ticks[0] <= 3.2 and ticks[-1] >= 97.0
    assert np.allclose(np.diff(ticks), ticks[1] - ticks[0])
