import pytest

from qsatlink import _backend, _fallback

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one verdict line per acceptance criterion."""
    def record(label: str, passed: bool, detail: str) -> None:
        line = f"{label} {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def kernel_impls():
    impls = [pytest.param(_fallback, id="python")]
    try:
        from qsatlink import _kernels
        impls.insert(0, pytest.param(_kernels, id="compiled"))
    except ImportError:
        pass
    return impls


@pytest.fixture(params=kernel_impls())
def kernels(request):
    return request.param


@pytest.fixture
def compiled_backend():
    if _backend.BACKEND != "compiled":
        pytest.skip("compiled extension not built")
    from qsatlink import _kernels
    return _kernels
