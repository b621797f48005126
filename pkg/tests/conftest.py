import numpy as np
import pytest


def ks_statistic(samples, cdf):
    """One-sample Kolmogorov-Smirnov statistic against a vectorised CDF."""
    x = np.sort(np.asarray(samples, float))
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


@pytest.fixture
def ks():
    return ks_statistic


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
