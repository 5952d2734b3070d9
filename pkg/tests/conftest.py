import numpy as np
import pytest

from perspecta.random_ensembles import EnsembleConfig, RngStream, random_pd

# (number, description, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pd_pair():
    def make(dim, seed=0, cond=100.0):
        cfg = EnsembleConfig(dim, cond)
        s = RngStream(seed).child("fixture", dim)
        return random_pd(cfg, s.child("a")), random_pd(cfg, s.child("b"))
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {desc}  [{detail}]")
