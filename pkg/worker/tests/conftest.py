import json
from pathlib import Path

import pytest

WORKER_TESTS = Path(__file__).parent
PRIMARY_GOLDEN = WORKER_TESTS.parent.parent / "tests" / "golden"


def full_phenotype(filter_size="3x3", num_filters=16, activation="ReLU",
                   optimizer="Adam", dropout=0.1, neurons=128) -> dict:
    p = {}
    for b in range(1, 6):
        p[f"conv_block_{b}.filter_size"] = filter_size
        p[f"conv_block_{b}.num_filters"] = num_filters
    p["global.activation"] = activation
    p["global.optimizer"] = optimizer
    p["global.dropout"] = dropout
    p["fc_1.neurons"] = neurons
    p["fc_2.neurons"] = neurons
    return p


def eval_line(phenotype: dict, rid=1, epochs=1, seed=0) -> str:
    return json.dumps({"type": "eval", "id": rid, "phenotype": phenotype,
                       "budget": {"epochs": epochs, "seed": seed}})


@pytest.fixture
def phenotype():
    return full_phenotype()
