import pytest

from entroshift.flux import FluxEntropyModel

PAIRS = [("burgers", "square"), ("quartic", "exp-cosh"), ("burgers", "exp-cosh")]


@pytest.fixture(params=PAIRS, ids=["-".join(p) for p in PAIRS])
def model(request):
    flux, entropy = request.param
    return FluxEntropyModel.from_spec(flux, entropy, B=2.0)


@pytest.fixture
def burgers():
    return FluxEntropyModel.from_spec("burgers", "square", B=2.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
