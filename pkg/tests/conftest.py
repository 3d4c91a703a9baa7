import pytest

from monofollow.depth_target import Source, TargetEstimate
from monofollow.geometry import CameraIntrinsics, Point3

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def intr100():
    return CameraIntrinsics(100.0, 100.0, 50.0, 50.0)


@pytest.fixture
def make_estimate():
    def make(pos, t, source=Source.PNP):
        return TargetEstimate(Point3(*map(float, pos)), float(t), Source(source))

    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
