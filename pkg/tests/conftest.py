from __future__ import annotations

import pytest

from ragbench.testkit import MockBehavior, start_mock_chat_service, start_mock_rerank_service

_acceptance: dict[str, dict] = {}


def pytest_runtest_logreport(report):
    marker = _markers.get(report.nodeid)
    if marker is None:
        return
    code, title = marker
    entry = _acceptance.setdefault(code, {"title": title, "ok": True, "seen": False})
    if report.when == "call" or report.failed:
        entry["seen"] = True
        entry["ok"] = entry["ok"] and report.passed


_markers: dict[str, tuple[str, str]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _markers[item.nodeid] = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(_acceptance, key=lambda c: int(c[2:])):
        entry = _acceptance[code]
        if not entry["seen"]:
            status = "SKIP"
        else:
            status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"{code:<5} {status}  {entry['title']}")


@pytest.fixture
def chat_service():
    services = []

    def start(behavior: MockBehavior):
        svc = start_mock_chat_service(behavior)
        services.append(svc)
        return svc

    yield start
    for svc in services:
        svc.stop()


@pytest.fixture
def rerank_service():
    services = []

    def start(behavior: MockBehavior):
        svc = start_mock_rerank_service(behavior)
        services.append(svc)
        return svc

    yield start
    for svc in services:
        svc.stop()
