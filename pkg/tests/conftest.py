import warnings

import numpy as np
import pytest

import skewevt as sk

warnings.filterwarnings("ignore", message=".*TBB.*")

SEED = 90210


@pytest.fixture(scope="session")
def doubling():
    return sk.linear_expanding(2)


@pytest.fixture(scope="session")
def tripling():
    return sk.linear_expanding(3)


@pytest.fixture(scope="session")
def trig_flagship():
    """Mixing skew product: exact x3 base with a trig cocycle."""
    return sk.circle_extension(sk.linear_expanding(3),
                               sk.CocycleSpec(form="trig", amplitude=0.4))


@pytest.fixture(scope="session")
def linear_flagship():
    """Degenerate skew product (3x, theta + x): conserves x - 2*theta mod 1."""
    return sk.circle_extension(sk.linear_expanding(3),
                               sk.CocycleSpec(form="linear"))


@pytest.fixture(scope="session")
def zoo():
    """One representative of every map kind."""
    return {
        "linear-expanding": sk.linear_expanding(3),
        "piecewise-c2": sk.piecewise_c2(2, 0.5),
        "lsv": sk.lsv(0.5),
        "circle-extension": sk.circle_extension(
            sk.linear_expanding(3), sk.CocycleSpec(form="trig", amplitude=0.4)),
        "circle-extension-linear": sk.circle_extension(
            sk.linear_expanding(2), sk.CocycleSpec(form="linear")),
        "circle-extension-lsv": sk.circle_extension(
            sk.lsv(0.5), sk.CocycleSpec(form="trig", amplitude=0.3)),
        "gouezel": sk.gouezel(sk.AlphaProfile(0.10, 0.14)),
        "viana": sk.viana(),
    }


def rng(salt=0):
    return np.random.default_rng(SEED + salt)
