"""Shared fixtures and the acceptance-criteria summary hook."""

import time

import pytest

ACCEPTANCE_PREFIX = "test_criterion_"
_DESCRIPTIONS = {}
_OUTCOMES = {}


def register_criterion(name: str, description: str) -> None:
    _DESCRIPTIONS[name] = description


def pytest_runtest_logreport(report):
    base = report.nodeid.split("::")[-1]
    if ACCEPTANCE_PREFIX in base and report.when == "call":
        _OUTCOMES[base] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_OUTCOMES):
        desc = _DESCRIPTIONS.get(name.split("[")[0], name)
        status = "PASS" if _OUTCOMES[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {desc}")


@pytest.fixture(scope="session")
def corpus():
    """Desk-scale expert corpus: 25 training paths x 5 expert variants."""
    from hapticdrive.experiments import CollectSpec, collect_corpus
    t0 = time.time()
    logs = collect_corpus(CollectSpec())
    return {"logs": logs, "seconds": time.time() - t0}


@pytest.fixture(scope="session")
def trained_nets(corpus):
    """Both skill models trained to their published tolerances."""
    from hapticdrive.experiments import train_from_corpus
    from hapticdrive.skillnet import (ACCEL_TOLERANCE, STEER_TOLERANCE,
                                      TrainConfig, assemble_corpus)
    logs = corpus["logs"]
    x, _, _ = assemble_corpus(logs, "steer", stride=24)
    out = {"window_count": len(x)}
    t0 = time.time()
    out["net_s"] = train_from_corpus(
        logs, "steer", TrainConfig(tolerance=STEER_TOLERANCE, seed=0,
                                   strict=False), stride=24)
    out["seconds_steer"] = time.time() - t0
    t0 = time.time()
    out["net_a"] = train_from_corpus(
        logs, "accel", TrainConfig(tolerance=ACCEL_TOLERANCE, seed=0,
                                   strict=False), stride=24)
    out["seconds_accel"] = time.time() - t0
    return out
