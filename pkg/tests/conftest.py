"""Pytest configuration and fixtures"""

import json
from pathlib import Path

import numpy as np
import pytest

from stratclass.services.costs import make_cost_spec
from stratclass.services.environment import AgentProfile


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow rate diagnostics")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute diagnostics, run with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def identity_spec():
    """p = r = 2, A = I₂: f*(β) = ½||β||² and x̂ = x + β."""
    return make_cost_spec(2, 2, np.eye(2), 0.5)


@pytest.fixture
def strategic_agent(identity_spec):
    return AgentProfile(x=np.array([1.0, 0.0]), y=-1, cost=identity_spec)


@pytest.fixture
def write_config(tmp_path):
    """Write a schema-1 JSON config and return its path."""

    def _write(name: str = "experiment.json", **overrides) -> Path:
        body = {
            "schema": 1,
            "n": 64,
            "d": 2,
            "R1": 1.0,
            "R2": 2.0,
            "loss": "logistic",
            "stream": {"stochastic": {"theta": 0.5}},
            "cost": {"p": 2.0, "r": 2.0, "eps": 1.0},
            "seed": 7,
            "replicates": 2,
            "baseline": {"iterations": 2000, "tol": 1e-4},
        }
        body.update(overrides)
        path = tmp_path / name
        path.write_text(json.dumps(body))
        return path

    return _write


@pytest.fixture
def write_stream(tmp_path):
    """Write a scripted stream CSV with identity p = r = 2 costs for label −1 rows."""

    def _write(rows, name: str = "stream.csv", d: int = 2):
        header = ["y"] + [f"x_{j}" for j in range(1, d + 1)] + ["p", "r", "eps"]
        header += [f"A_{k}" for k in range(1, d * d + 1)]
        identity = np.eye(d).ravel().tolist()
        lines = [",".join(header)]
        for y, x in rows:
            cells = [str(y)] + [repr(float(v)) for v in x]
            cells += ["2", "2", "1"] + [repr(v) for v in identity] if y == -1 else [""] * (3 + d * d)
            lines.append(",".join(cells))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return _write
