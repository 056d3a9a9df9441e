"""Shared fixtures and the acceptance-report hook.

The selection matrices used across the suite:

    SIGMA_1   : the strong asymmetric benchmark matrix
    SIGMA_HET : pure heterozygote advantage (zero diagonal, off-diagonal 15)
"""

import numpy as np
import pytest

SIGMA_1 = np.array([[12.0, 14.0, 15.0],
                    [14.0, 11.0, 13.0],
                    [15.0, 13.0, 0.0]])

SIGMA_HET = np.array([[0.0, 15.0, 15.0],
                      [15.0, 0.0, 15.0],
                      [15.0, 15.0, 0.0]])

THETA_SMALL = (0.01, 0.02, 0.03)
THETA_UNIT = (0.3, 0.4, 0.3)


@pytest.fixture(scope="session")
def sigma_1():
    return SIGMA_1.copy()


@pytest.fixture(scope="session")
def sigma_het():
    return SIGMA_HET.copy()


@pytest.fixture(scope="session")
def theta_small():
    return np.array(THETA_SMALL)


@pytest.fixture(scope="session")
def theta_unit():
    return np.array(THETA_UNIT)


# -- acceptance criterion reporting ------------------------------------------
# test_acceptance.py names its tests test_criterion_NN_label; after the run,
# print one PASS/FAIL line per criterion so the gate is readable at a glance.

_acceptance_reports = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_criterion_"):
        _acceptance_reports[name] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_reports:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_acceptance_reports):
        outcome, duration = _acceptance_reports[name]
        label = name[len("test_criterion_"):]
        number, _, rest = label.partition("_")
        text = rest.replace("_", " ")
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"criterion {number} [{status}] {text} ({duration:.1f}s)")
