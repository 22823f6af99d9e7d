from hypothesis import HealthCheck, settings

settings.register_profile(
    "casimir",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("casimir")

import contextlib
import time

import pytest

_CRITERIA: dict[int, str] = {}


class _Record:
    detail = ""


class AcceptanceLog:
    @contextlib.contextmanager
    def criterion(self, number: int, title: str):
        rec = _Record()
        start = time.perf_counter()
        try:
            yield rec
        except BaseException as exc:
            message = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            _CRITERIA[number] = f"criterion {number} FAIL: {title}: {message}"
            raise
        timing = "" if "runtime" in rec.detail else f" ({time.perf_counter() - start:.2f}s)"
        _CRITERIA[number] = f"criterion {number} PASS: {title}: {rec.detail}{timing}"


@pytest.fixture(scope="session")
def acceptance_log():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
