import numpy as np
import pytest

from omnitrack.synth import generate, parse_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def seam_seq(tmp_path_factory):
    return generate(parse_scenario("seam:frames=24,width=512"), tmp_path_factory.mktemp("seam"))


@pytest.fixture(scope="session")
def equator_seq(tmp_path_factory):
    return generate(parse_scenario("equator:frames=12,width=512"), tmp_path_factory.mktemp("equator"))


def haversine(lon1, lat1, lon2, lat2):
    # independent great-circle oracle
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * np.arcsin(np.sqrt(np.clip(a, 0, 1)))


_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None and rep.when == "call":
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _CRITERIA.append((mark.args[0], mark.args[1], rep.outcome.upper(), detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"AC{num} {status:6s} {title}" + (f" ({detail})" if detail else ""))
