import numpy as np
import pytest

from proxyfavar.model import McmcSettings, ModelSpec, default_true_params, simulate_dgp

# criterion number -> list of (passed, detail), one entry per checked part
ACCEPTANCE_RESULTS: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        parts = ACCEPTANCE_RESULTS[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def small_spec():
    return ModelSpec.baseline(2, ["rate", "spread"], var_lag_order=2,
                              mcmc=McmcSettings(40, 20, 2))


@pytest.fixture
def small_data(small_spec):
    tp = default_true_params(small_spec, 120, seed=11)
    data, truth = simulate_dgp(small_spec, tp, 120, seed=12)
    return data, truth


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
