import pathlib

import numpy as np
import pytest

from sapd import Scenario

ROOT = pathlib.Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# moderate coupling where the partial-overlap form wins; reference optimum
# 6.547871765... bits/s from an independent multistart search
INTERMEDIATE = Scenario(1.0, (48.103, 38.523), (1.0, 1.0), ((1.0, 0.08), (0.115, 1.0)))
INTERMEDIATE_VALUE = 6.547871765


def log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


COUPLING = {"weak": (1e-3, 1e-2), "intermediate": (0.1, 1.0), "strong": (10.0, 100.0)}


def random_flat(rng, coupling=None, lo=1e-2, hi=1e2):
    """Flat instance with log-uniform parameters.

    ``coupling`` picks the cross-to-direct gain ratio range; ``None`` draws
    every gain from ``[lo, hi]`` independently.
    """
    W = log_uniform(rng, 0.1, 10.0)
    P = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi))
    N = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi))
    if coupling is None:
        g = [[log_uniform(rng, lo, hi) for _ in range(2)] for _ in range(2)]
    else:
        h11, h22 = log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0)
        a, b = COUPLING[coupling]
        g = [[h11, log_uniform(rng, a, b) * h11], [log_uniform(rng, a, b) * h22, h22]]
    return Scenario(W, P, N, g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def intermediate():
    return INTERMEDIATE
