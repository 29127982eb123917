import mpmath
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

mpmath.mp.dps = 40


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("QESDISORDER_OUTPUT_DIR", str(tmp_path))
    return tmp_path


ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Record one pass/fail line per acceptance check and echo it immediately."""

    def emit(tag, ok, detail, elapsed=None):
        t = "" if elapsed is None else f" ({elapsed:.2f} s)"
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}{t}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
