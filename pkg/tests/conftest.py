import math

import numpy as np
import pytest

from effh_sim.baths import BathSpec

GAMMA = 0.05 / math.pi
TABLE_ROWS = [  # (lambda_x, lambda_z)
    (0.8, 0.8),
    (0.8, 4.0),
    (0.8, 8.0),
]


def make_bath(lam, omega=8.0, gamma=GAMMA, cutoff=1000.0, temperature=1.0, label=""):
    return BathSpec(lam, omega, gamma, cutoff, temperature, label)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return a + a.conj().T


# ---- acceptance summary --------------------------------------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
    n_pass = sum(o == "passed" for o in _ACCEPTANCE.values())
    terminalreporter.write_line(f"{n_pass}/{len(_ACCEPTANCE)} acceptance checks passed")
