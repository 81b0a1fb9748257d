import numpy as np
import pytest

from hazgrid.hexgrid import CellId
from hazgrid.ingest import SynthSpec, synth_region
from hazgrid.optimizer import SitingInstance
from hazgrid.pipeline import RegionModel
from hazgrid.riskmodel import TransformSpec


LINE_CELLS = [CellId(0, 0), CellId(1, 0), CellId(2, 0)]

# verdict lines collected by tests/test_acceptance.py, one per criterion
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_line_instance(existing=()):
    """Three cells in a row, 60 s between neighbors, unit base risk.

    With one station the middle cell is optimal: costs (0.5, 0, 0.5)
    under the t/120 capped transform, so the average objective is 1/3.
    """
    travel = np.array([
        [0, 60_000, 120_000],
        [60_000, 0, 60_000],
        [120_000, 60_000, 0],
    ], dtype=np.int64)
    return SitingInstance(
        station_cells=list(LINE_CELLS),
        demand_cells=list(LINE_CELLS),
        base=np.ones(3),
        weights=np.ones(3),
        travel_ms=travel,
        s_transform=TransformSpec(kind="linear_capped", cap=120.0),
        existing_cells=tuple(existing),
    )


@pytest.fixture
def line_instance():
    return make_line_instance()


@pytest.fixture(scope="session")
def small_bundle():
    return synth_region(seed=3, n=10, m=10, spec=SynthSpec(n_stations=4))


@pytest.fixture(scope="session")
def small_model(small_bundle):
    return RegionModel.build(small_bundle)
