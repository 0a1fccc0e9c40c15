import json
import os
from pathlib import Path

import pytest

import coreplace

DATA = Path(os.environ.get("COREPLACE_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
TOY = DATA / "models" / "toy8.json"


@pytest.fixture(scope="module")
def graph():
    return coreplace.partition(TOY, 6)


def test_version():
    assert coreplace.__version__.count(".") == 2


def test_partition_matches_bundled_dataset():
    g = coreplace.partition(coreplace.load_model(DATA / "models" / "spike_resnet18.json"), 32)
    bundled = json.loads((DATA / "datasets" / "spike_resnet18_32_inference" / "taskgraph.json").read_text())
    assert g == bundled


def test_place_and_cost(graph):
    assert len(graph["nodes"]) == 6
    zigzag = coreplace.place(graph, "2x3")
    oracle = coreplace.place(graph, "2x3", engine="oracle")
    assert coreplace.cost(graph, oracle) <= coreplace.cost(graph, zigzag)
    m = coreplace.metrics(graph, zigzag)
    assert m["communication_cost"] == coreplace.cost(graph, zigzag)
    assert sum(sum(loads) for loads in m["directional_loads"]) == m["communication_cost"]


def test_train_is_deterministic(graph):
    a = coreplace.train(graph, "2x3", episodes=5, batch_size=8, seed=3)
    b = coreplace.train(graph, "2x3", episodes=5, batch_size=8, seed=3)
    assert a["checkpoint"] == b["checkpoint"]
    assert len(a["curve"]) == 5
    assert a["best_cost"] <= a["zigzag_cost"]
    assert coreplace.cost(graph, a["placement"]) == a["best_cost"]


def test_simulate(graph):
    p = coreplace.place(graph, "2x3")
    lw = coreplace.simulate(graph, p, "layerwise", batch=4)
    fd = coreplace.simulate(graph, p, "fpdeep", batch=4)
    assert 0 < fd["makespan"] < lw["makespan"]


def test_errors_map_to_python_exceptions(graph):
    with pytest.raises(coreplace.ValidationError):
        coreplace.place(graph, "1x2")
    with pytest.raises(ValueError):
        coreplace.partition(TOY, 0)
    with pytest.raises(coreplace.ValidationError):
        coreplace.train(graph, "2x3", no_such_option=1)


def test_cli_in_process(tmp_path):
    code, out, err = coreplace.run_cli("partition", TOY, "--cores", "8", "--out", tmp_path / "g")
    assert code == 0, err
    assert (tmp_path / "g" / "manifest.json").exists()
    code, _, err = coreplace.run_cli("place", tmp_path / "nope.json", "--mesh", "2x4", "--out", tmp_path / "p")
    assert code == 2
    assert json.loads(err)["error"] == "validation"
