import numpy as np
import pytest

_ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail=""):
    _ACCEPTANCE[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} | {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def scaled(X, norm):
    return X * (norm / np.linalg.norm(X, 2))
