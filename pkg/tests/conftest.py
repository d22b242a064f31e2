import pytest

from grwfuzzy import kernels

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def each_backend(request, monkeypatch):
    """Route the dynamics through one kernel backend."""
    mod = kernels.backend(request.param)
    for name in ("log_total_mass", "grouped_log_mass", "hit_update"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
