"""Python front end to the coreplace library.

Models, task graphs, placements and simulation results are plain dicts with
the same layout as the JSON files the command-line tool writes.
"""

import json

from . import _coreplace
from ._coreplace import InternalError, ValidationError

__version__ = _coreplace.__version__

__all__ = [
    "InternalError",
    "ValidationError",
    "cost",
    "default_hardware",
    "default_train_config",
    "load_model",
    "metrics",
    "partition",
    "place",
    "run_cli",
    "simulate",
    "train",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def load_model(path):
    return json.loads(_coreplace.load_model(str(path)))


def default_hardware():
    return json.loads(_coreplace.default_hardware())


def default_train_config():
    return json.loads(_coreplace.default_train_config())


def partition(model, cores, mode="inference", hardware=None, strategy="contiguous"):
    """Partition a model dict (or a path to one) into a task graph dict."""
    if not isinstance(model, dict):
        model = load_model(model)
    hw = "" if hardware is None else json.dumps(hardware)
    return json.loads(_coreplace.partition(json.dumps(model), int(cores), mode, hw, strategy))


def place(graph, mesh, engine="zigzag", seed=0, iterations=1000):
    return json.loads(_coreplace.place(_text(graph), mesh, engine, int(seed), int(iterations)))


def cost(graph, placement):
    return _coreplace.cost(_text(graph), _text(placement))


def metrics(graph, placement):
    return _coreplace.metrics(_text(graph), _text(placement))


def train(graph, mesh, **config):
    """Run PPO placement. Keyword arguments override default_train_config()."""
    c = default_train_config()
    ppo = c.get("ppo", {})
    for key, value in config.items():
        if key in c:
            c[key] = value
        elif key in ppo:
            ppo[key] = value
        else:
            raise ValidationError(f"unknown train option '{key}'")
    r = _coreplace.train(_text(graph), mesh, json.dumps(c))
    return {
        "placement": json.loads(r["placement"]),
        "best_cost": r["best_cost"],
        "zigzag_cost": r["zigzag_cost"],
        "curve": [
            {"episode": e, "mean_reward": m, "best_cost": b} for e, m, b in r["curve"]
        ],
        "checkpoint": json.loads(r["checkpoint"]),
    }


def simulate(graph, placement, pipeline="layerwise", batch=8, bandwidth=0, tile_fraction=1 / 16):
    """Packet-level NoC simulation. bandwidth 0 uses the graph's hardware link bandwidth."""
    return json.loads(
        _coreplace.simulate(
            _text(graph), _text(placement), pipeline, int(batch), int(bandwidth), float(tile_fraction)
        )
    )


def run_cli(*args):
    """Run a coreplace command in-process. Returns (exit_code, stdout, stderr)."""
    return _coreplace.run_cli([str(a) for a in args])
