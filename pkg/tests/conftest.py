import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hybridgrid.grid_model import Branch, Bus, Generator, HvdcLink, make_network  # noqa: E402


def linear_gen(gid, bus, p_max, mc, p_min=0.0, **kw):
    return Generator(gid, bus, p_min, p_max, ((p_min, 0.0), (p_max, mc * (p_max - p_min))), **kw)


@pytest.fixture
def two_bus():
    """Cheap generator at bus 1, expensive one at bus 2, 100 MW load at bus 2."""
    def make(rating=50.0):
        return make_network(
            [Bus(1), Bus(2, load_mw=100.0)],
            [Branch(1, 1, 2, r=0.01, b=10.0, rating=rating, length_km=50.0)],
            [linear_gen(1, 1, 200.0, 10.0), linear_gen(2, 2, 200.0, 50.0)])
    return make


@pytest.fixture
def triangle():
    """Three buses, one congested edge (1-2) and two slack edges."""
    return make_network(
        [Bus(1), Bus(2, load_mw=150.0), Bus(3, load_mw=50.0)],
        [Branch(1, 1, 2, r=0.05, b=10.0, rating=80.0, length_km=100.0),
         Branch(2, 1, 3, r=0.02, b=10.0, rating=500.0, length_km=120.0),
         Branch(3, 3, 2, r=0.015, b=10.0, rating=500.0, length_km=80.0)],
        [linear_gen(1, 1, 400.0, 10.0), linear_gen(2, 2, 400.0, 60.0)])


@pytest.fixture
def b2b_pair():
    """Two AC islands joined by one lossless-capable B2B link."""
    def make(loss_d=1.9, p_max=400.0):
        return make_network(
            [Bus(1), Bus(2, load_mw=100.0)], [],
            [linear_gen(1, 1, 300.0, 10.0), linear_gen(2, 2, 300.0, 80.0)],
            [HvdcLink(1, 1, 2, p_max=p_max, q_max=p_max / 2, loss_d=loss_d, converter_id="M3")])
    return make


ACCEPTANCE_RESULTS: dict[int, tuple[str, str, float]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        status, title, secs = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}  ({secs:.2f} s)")
