from __future__ import annotations

from pathlib import Path

import pytest

from rubric_audit.items import load_items

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

_criteria: dict[int, tuple[str, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = getattr(report, "criterion", None)
    if number is None:
        return
    title, outcomes = _criteria.setdefault(number[0], (number[1], []))
    outcomes.append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcomes = _criteria[number]
        verdict = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")


@pytest.fixture(scope="session")
def fixture_items():
    return load_items(FIXTURES / "items.json")


@pytest.fixture(scope="session")
def items_by_id(fixture_items):
    return {it.id: it for it in fixture_items}


@pytest.fixture(scope="session")
def worked_item(items_by_id):
    return items_by_id["thermal-dishes"]



@pytest.fixture
def fixture_cfg(tmp_path):
    """Factory for the committed fixture config with absolute inputs and scratch outputs."""
    from dataclasses import asdict

    from rubric_audit.experiment import ExperimentConfig

    base = asdict(ExperimentConfig.from_file(FIXTURES / "config.json"))

    def make(name="run", **overrides):
        doc = {
            "items": str(FIXTURES / "items.json"),
            "backend": "mock:" + str(FIXTURES / "mock_responses.json"),
            "out": str(tmp_path / name),
            "cache": str(tmp_path / f"{name}-cache.jsonl"),
        }
        doc.update(overrides)
        return ExperimentConfig.from_dict({**base, **doc})

    return make
