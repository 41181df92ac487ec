import numpy as np
import pytest

from lcsae import neural, xcsf
from lcsae.config import ExperimentConfig


def write_csv(path, arr):
    with open(path, "w", encoding="utf-8") as f:
        for row in np.atleast_2d(arr):
            f.write(",".join(repr(float(v)) for v in row) + "\n")
    return str(path)


def write_config(path, **keys):
    with open(path, "w", encoding="utf-8") as f:
        for key, value in keys.items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            f.write(f"{key}={value}\n")
    return str(path)


def saturated_network(n_inputs, outputs):
    """Network with all-zero weights and huge output biases, so the output
    vector is exactly the requested 0/1 pattern."""
    rng = np.random.default_rng(0)
    net = neural.new_network(n_inputs, 1, len(outputs), rng, sigma=0.0)
    net.layers[1].biases[:] = [1000.0 if o else -1000.0 for o in outputs]
    return net


def always_match_condition(n_inputs):
    return saturated_network(n_inputs, [1])


def never_match_condition(n_inputs):
    return saturated_network(n_inputs, [0])


def make_classifier(n=4, h=1, seed=0, condition=None, prediction=None, **attrs):
    rng = np.random.default_rng(seed)
    if condition is None:
        condition = neural.new_network(n, h, 1, rng)
    if prediction is None:
        prediction = neural.new_network(n, h, n, rng)
    fields = dict(err=0.0, fit=0.01, num=1, exp=0, set_size=1.0,
                  ts=0, born=0, mtotal=0)
    fields.update(attrs)
    return xcsf.Classifier(condition=condition, prediction=prediction, **fields)


@pytest.fixture
def cfg():
    return ExperimentConfig()
