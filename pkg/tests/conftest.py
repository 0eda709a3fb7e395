import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by the acceptance tests
ACCEPTANCE = {}


def record(number: int, title: str, passed: bool, detail: str):
    ACCEPTANCE[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def canonical():
    """Default run configuration, seed 0: 3 synthetic classes, 500 spikes
    each, band-limited noise sigma 0.03, 60/40 split."""
    from neurosort.config import build_config
    from neurosort.pipeline import prepare, train_model

    rc = build_config({}, seed=0)
    ds = prepare(rc)
    w, best, accs = train_model(rc, ds)
    return {"rc": rc, "ds": ds, "w": w, "best": best, "accs": accs}
