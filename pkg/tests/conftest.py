import numpy as np
import pytest

from kronred import _backend, enumerate_complexes, parse_network

FIG1 = """\
species X1, X2, X3, X4
reaction r1: X1 + 2 X2 <-> X3 ; massaction kf=1 kr=1
reaction r3: X3 -> 2 X1 + X2 ; massaction kf=1
reaction r4: 2 X1 + X2 -> X4 ; massaction kf=1
reaction r5: X3 -> X4 ; massaction kf=1
"""

EXAMPLE1 = """\
species X1, X2, X3, X4, X5, X6
reaction v1: X1 + X2 <-> X3 + X4 ; mm kf=1 kr=1 Km(X1)=1 Km(X2)=1 Km(X3)=1 Km(X4)=1
reaction v2: X3 + X4 <-> X5 + X6 ; mm kf=1 kr=1 Km(X3)=1 Km(X4)=1 Km(X5)=1 Km(X6)=1
"""

REACTION3 = "reaction r: X1 + 3 X2 -> X3 + 3 X4 ; mm kf=2 Km(X1)=1 Km(X2)=2 Km(X3)=3 Km(X4)=4\n"


@pytest.fixture
def fig1():
    net = parse_network(FIG1)
    return net, enumerate_complexes(net)


@pytest.fixture
def example1():
    net = parse_network(EXAMPLE1)
    return net, enumerate_complexes(net)


@pytest.fixture(params=_backend.available())
def backend(request):
    previous = _backend.name
    _backend.use(request.param)
    yield request.param
    _backend.use(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
