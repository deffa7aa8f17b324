import pytest
from hypothesis import settings

# compiled kernels make the first example slow; timing is not what these tests check
settings.register_profile("default", deadline=None)
settings.load_profile("default")

# acceptance outcomes, printed one line each at the end of the session
ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    def _record(key: str, passed: bool, detail: str):
        ACCEPTANCE[key] = (bool(passed), detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
