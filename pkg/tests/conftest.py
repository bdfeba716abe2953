import contextlib
import time

import pytest

_LINES = []


class _Criterion:
    def __init__(self, label):
        self.label = label
        self.ok = None
        self.details = []
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check(self, ok, detail):
        self.ok = bool(ok) if self.ok is None else self.ok and bool(ok)
        self.details.append(("" if ok else "NOT OK: ") + detail)


@pytest.fixture
def criterion():
    """``with criterion("3 ...") as c: c.check(cond, detail)`` prints and asserts one result line."""

    @contextlib.contextmanager
    def run(label):
        c = _Criterion(label)
        try:
            yield c
        except Exception as exc:
            c.check(False, f"raised {type(exc).__name__}: {exc}")
            raise
        finally:
            status = "PASS" if c.ok else "FAIL"
            line = f"[{status}] criterion {c.label} ({c.elapsed:.1f} s): " + "; ".join(c.details)
            _LINES.append(line)
            print(line)
        assert c.ok, line

    return run


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
