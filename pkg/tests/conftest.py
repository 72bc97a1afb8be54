import numpy as np
import pytest

from bivrbs.datasets import load_stiffness, stiffness_path


@pytest.fixture(scope="session")
def stiffness():
    if not stiffness_path().exists():
        pytest.skip("bundled stiffness dataset not present")
    return load_stiffness()


def geometric_grid(lo, hi, k=25):
    return np.geomspace(lo, hi, k)


def is_monotone(values, increasing=True, slack=1e-10):
    d = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(d >= -slack)) if increasing else bool(np.all(d <= slack))


_VERDICTS = {}


@pytest.fixture(scope="session")
def verdict():
    """Record the outcome of one acceptance criterion; returns ``passed``."""

    def record(k, passed, detail):
        word = "PASS" if passed is True else ("SKIP" if passed is None else "FAIL")
        _VERDICTS[k] = f"criterion {k:>2}: {word}  {detail}"
        print(_VERDICTS[k])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria (seed 12345)")
        for k in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[k])
