import numpy as np
import pytest

from seld3d import scenegen


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def single_source_scene():
    def make(az, el, dist=1.5, seed=3, onset=1.0, offset=4.0, cls=0, n_classes=3, signal="noise"):
        spec = scenegen.SceneSpec(seed, n_classes, 5.0, [
            scenegen.SceneEvent(cls, onset, offset, az, el, dist, signal)])
        spec.validate()
        return spec
    return make


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE = []


@pytest.fixture
def criterion():
    def record(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
