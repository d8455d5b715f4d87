import numpy as np
import pytest

from corrx.simulate import default_config, simulate_panel


@pytest.fixture(scope="session")
def small_sim():
    """A 1200-day three-asset panel with one regressor."""
    return simulate_panel(default_config(T=1200, seed=11))


@pytest.fixture(scope="session")
def small_dataset(small_sim):
    return small_sim.dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_corr(rng, n, strength=1.0):
    a = rng.normal(size=(n, n + 2)) * strength
    c = a @ a.T + 0.5 * np.eye(n)
    d = np.sqrt(np.diag(c))
    out = c / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return out


def random_pd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + 0.1 * np.eye(n)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def check(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
