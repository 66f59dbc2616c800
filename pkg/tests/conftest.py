from __future__ import annotations

import json
from pathlib import Path

import pytest

import hpctune
from hpctune.space import Parameter, ParamSpace

FIXTURES = Path(hpctune.__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def tiny_space() -> ParamSpace:
    """3x2 space, small enough to enumerate in every test."""
    return ParamSpace(
        parameters=(
            Parameter("a", "ordinal", ("1", "2", "4"), "2"),
            Parameter("b", "categorical", ("on", "off"), "off"),
        ),
        seed=7,
    )


@pytest.fixture
def space30() -> ParamSpace:
    """5x3x2 = 30 configurations."""
    return ParamSpace(
        parameters=(
            Parameter("u", "ordinal", ("1", "2", "3", "4", "5"), "3"),
            Parameter("v", "ordinal", ("10", "20", "30"), "20"),
            Parameter("w", "categorical", ("x", "y"), "x"),
        ),
        seed=11,
    )


def write_problem(directory: Path, doc: dict, name: str = "problem.json") -> Path:
    path = directory / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def local_problem_doc(**overrides) -> dict:
    """A minimal live local_shell problem; tests override what they exercise."""
    doc = {
        "name": "test-problem",
        "evaluator": "live",
        "space": {
            "seed": 3,
            "parameters": [
                {"name": "a", "kind": "ordinal", "values": ["1", "2", "4"], "default": "2"},
                {"name": "b", "kind": "categorical", "values": ["on", "off"], "default": "off"},
            ],
        },
        "molds": [],
        "env_bindings": {},
        "build_command": None,
        "launch": {"kind": "local_shell", "exe_template": "sh {exe}"},
        "executable": "app.sh",
        "metric": "runtime",
    }
    doc.update(overrides)
    return doc
