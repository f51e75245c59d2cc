import pytest

from longmem import CovarianceModel

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; all lines are echoed in the terminal summary."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


BUILTIN_MODELS = [
    CovarianceModel.white(),
    CovarianceModel.fgn(0.55),
    CovarianceModel.fgn(0.58),
    CovarianceModel.fgn(0.7),
    CovarianceModel.arfima(0.08),
    CovarianceModel.arfima(0.2),
]


@pytest.fixture(params=BUILTIN_MODELS, ids=lambda m: m.describe().replace(" ", ","))
def builtin_model(request):
    return request.param
