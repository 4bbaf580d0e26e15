import xml.etree.ElementTree as ET

import pytest

from turnmove.pipeline import PipelineConfig, train
from turnmove.render import render_svg
from turnmove.synth import SceneSpec, generate
from turnmove.trajectory import ApproachDataset

NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def scene():
    d, _ = generate(SceneSpec(seed=2, noise_sigma=1.0))
    return d, train(d, PipelineConfig())


def test_scatter_only(scene):
    d, _ = scene
    root = ET.fromstring(render_svg(d).encode())
    assert root.tag == f"{NS}svg" and root.get("version") == "1.1"
    assert len(root.findall(f"{NS}g/{NS}circle")) == sum(len(t) for t in d)


def test_with_model(scene):
    d, model = scene
    root = ET.fromstring(render_svg(d, model).encode())
    groups = {g.get("id"): g for g in root.findall(f"{NS}g")}
    assert set(groups) == {"clusters", "stopped", "modelling", "legend"}
    assert len(groups["clusters"]) == len(d)
    assert len(groups["modelling"]) == sum(len(m.trajectories) for m in model.movements)
    assert len(groups["stopped"]) > 0
    bar = root.find(f"{NS}line")
    assert float(bar.get("y1")) == pytest.approx(model.stopbar.y_sl, abs=1e-3)
    colours = {p.get("data-label"): p.get("stroke") for p in groups["clusters"]}
    assert len(set(colours.values())) == len(colours) == 3


def test_empty_canvas():
    root = ET.fromstring(render_svg(ApproachDataset("e")).encode())
    assert root.get("width") and root.findall(f"{NS}g/{NS}circle") == []


def test_deterministic(scene):
    d, model = scene
    assert render_svg(d, model) == render_svg(d, model)
