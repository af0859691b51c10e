from pathlib import Path

import pytest

PRESETS = sorted(p.stem for p in (Path(__file__).resolve().parents[1] / "src" / "dvpp" / "presets").glob("*.yaml"))

# criterion number -> (passed, title, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def presets():
    return PRESETS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
