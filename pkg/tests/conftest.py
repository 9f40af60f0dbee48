from __future__ import annotations

import numpy as np
import pytest

from synthmetric.builtin import PlantedSpec, make_planted
from synthmetric.tabular import Dataset, FeatureKind, FeatureSchema


def binary_dataset(rows, labels=None) -> Dataset:
    rows = np.asarray(rows, dtype=np.float64)
    if labels is None:
        labels = np.arange(rows.shape[0]) % 2
    return Dataset(FeatureSchema.binary(rows.shape[1]), rows, labels)


def random_dataset(rng: np.random.Generator, n: int, d: int, continuous: int = 0) -> Dataset:
    """Random table; the last ``continuous`` columns hold uniform floats."""
    rows = (rng.random((n, d)) < rng.uniform(0.1, 0.9, size=d)).astype(np.float64)
    kinds = [FeatureKind.BINARY] * d
    for j in range(d - continuous, d):
        rows[:, j] = rng.random(n)
        kinds[j] = FeatureKind.CONTINUOUS
    labels = np.arange(n) % 2
    schema = FeatureSchema(tuple(f"f{j}" for j in range(d)), tuple(kinds), "label")
    return Dataset(schema, rows, labels)


@pytest.fixture(scope="session")
def planted() -> Dataset:
    return make_planted(PlantedSpec(n=1000, d=30, seed=1))


@pytest.fixture(scope="session")
def small_planted() -> Dataset:
    return make_planted(PlantedSpec(n=200, d=12, seed=7, block_size=4))


# -- acceptance verdicts ---------------------------------------------------------

_VERDICTS: dict[int, tuple[str, str]] = {}


@pytest.fixture
def verdict(request):
    """Callable that stores a one-line detail for the current acceptance criterion."""
    details: list[str] = []
    request.node._acceptance_details = details
    return details.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (report.when != "call" and report.passed):
        return
    number = marker.args[0]
    detail = "; ".join(getattr(item, "_acceptance_details", []))
    if report.failed:
        _VERDICTS[number] = ("FAIL", detail or str(report.longrepr).splitlines()[-1])
    elif report.when == "call":
        _VERDICTS[number] = ("PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        status, detail = _VERDICTS[number]
        terminalreporter.write_line(f"{status} criterion {number}: {detail}")
