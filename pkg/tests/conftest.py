import numpy as np
import pytest

from lprkit.image import LabeledImage


def make_image(h=32, w=64, label="GJ01AB1234", value=None, seed=0):
    if value is None:
        px = np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    else:
        px = np.full((h, w, 3), value, dtype=np.uint8)
    return LabeledImage(px, label)


@pytest.fixture
def random_image():
    return make_image()


# acceptance reporting: one PASS/FAIL line per criterion

_acceptance_results = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        number, title = marker.args
        status = "PASS" if rep.passed else "FAIL"
        line = f"{status} criterion {number:2d}: {title} ({rep.duration:.1f}s)"
        _acceptance_results.append((number, line))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_acceptance_results):
        terminalreporter.write_line(line)
