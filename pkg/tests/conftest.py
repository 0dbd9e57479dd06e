import numpy as np
import pytest

from rgbd_facekit import features
from rgbd_facekit.synthdata import generate, two_subject_scene

_criteria: list[tuple[int, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        n, text = mark.args
        _criteria.append((n, text, "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n, text, status in sorted(_criteria):
        terminalreporter.write_line(f"[{status}] criterion {n:2d}: {text}")


@pytest.fixture(params=sorted(features.BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def train_dir(tmp_path_factory):
    return generate(two_subject_scene(60), tmp_path_factory.mktemp("train"))


@pytest.fixture(scope="session")
def test_dir(tmp_path_factory):
    return generate(two_subject_scene(30, illumination=True, seed=1),
                    tmp_path_factory.mktemp("test"))
