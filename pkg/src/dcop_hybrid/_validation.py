"""Input validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

import json
import numbers
from pathlib import Path

import numpy as np

from .model import ProblemInstance

U64 = 2**64


def check_instance(X) -> ProblemInstance:
    """Coerce ``X`` into a :class:`ProblemInstance`.

    Accepts an instance, its dict form, a JSON string, or a path to a JSON file.
    """
    if isinstance(X, ProblemInstance):
        return X
    if isinstance(X, dict):
        return ProblemInstance.from_dict(X)
    if isinstance(X, Path) or (isinstance(X, str) and not X.lstrip().startswith("{")):
        return ProblemInstance.from_json(Path(X).read_text())
    if isinstance(X, str):
        return ProblemInstance.from_json(X)
    raise TypeError(f"expected a problem instance, got {type(X).__name__}")


def check_seed(random_state) -> int:
    """64-bit unsigned run seed from an int, ``None`` or a numpy generator."""
    if random_state is None:
        return int(np.random.default_rng().integers(U64, dtype=np.uint64))
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool):
        if not 0 <= int(random_state) < U64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {random_state}")
        return int(random_state)
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(U64, dtype=np.uint64))
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**63, dtype=np.int64))
    raise ValueError(f"{random_state!r} cannot be used to seed a run")


def check_probability(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def load_json(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return doc
