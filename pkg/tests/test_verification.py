import numpy as np
import pytest

from rspcast import gates, verification

KNOWN_QUTRIT_FAILURES = {f"correction_qutrit[u{m}]" for m in (3, 4, 5)} | {
    f"deterministic_success[qutrit,u{m}]" for m in (3, 4, 5)}


@pytest.fixture(scope="module")
def full_report():
    return verification.run_suite("all")


def test_every_suite_is_populated(full_report):
    assert {r.suite for r in full_report} == set(verification.SUITES)
    assert all(r.error is None for r in full_report)


def test_only_the_qutrit_outcomes_fail(full_report):
    failing = {r.name for r in full_report if not r.ok}
    assert failing == KNOWN_QUTRIT_FAILURES


def test_qutrit_outcomes_are_reported_individually(full_report):
    names = [r.name for r in full_report if r.suite == "protocols" and "qutrit" in r.name]
    assert names == [f"deterministic_success[qutrit,u{m}]" for m in range(6)]


def test_sampling_check_is_within_three_standard_errors(full_report):
    (r,) = [r for r in full_report if r.name == "sample_enumerate_consistency"]
    assert r.ok and r.worst <= 3.0


def test_corrupted_correction_table_is_localized(monkeypatch):
    original = gates.correction_qutrit

    def corrupted(m):
        op = original(m)
        if m != 1:
            return op
        return gates.diagonal(np.angle(np.diag(op.matrix)) + [0, 0.1, 0], name=op.name)

    monkeypatch.setattr(gates, "correction_qutrit", corrupted)
    results = verification.run_suite("gates") + verification.run_suite("protocols", select="qutrit")
    failing = {r.name for r in results if not r.ok}
    assert failing - KNOWN_QUTRIT_FAILURES == {"correction_qutrit[u1]", "deterministic_success[qutrit,u1]"}


def test_unknown_suite():
    with pytest.raises(ValueError):
        verification.run_suite("nonsense")


def test_exceptions_are_reported_not_raised(monkeypatch):
    def boom():
        raise RuntimeError("broken")
        yield

    monkeypatch.setattr(verification, "REGISTRY", [verification.Invariant("boom", "hilbert", boom)])
    (r,) = verification.run_suite("hilbert")
    assert not r.ok and "broken" in r.error
