import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspcast import protocols as P
from rspcast.hilbert import trace_distance
from rspcast.protocols.applications import EAVESDROPPER_TOL, controlled_target, eavesdropper_average
from rspcast.verification import locality_violations

angle = st.floats(0, math.pi, allow_nan=False)


@settings(max_examples=10, deadline=None)
@given(angle, angle)
def test_encrypted_transfer(theta, phi):
    t = P.run_encrypted_transfer(theta, phi, grid_points=32)
    assert t.verified
    fired = [o for o in t.outcomes if o.success]
    assert sum(o.probability for o in fired) == pytest.approx(0.5, abs=1e-10)
    for o in fired:
        assert o.final_states[0].fidelity == pytest.approx(1, abs=1e-10)
    assert all(o.label.endswith("P=0") for o in t.outcomes if not o.success)


def test_eavesdropper_sees_maximally_mixed_state():
    for phi in (0.0, 0.4, 2.0):
        rho = eavesdropper_average(phi, 256)
        assert trace_distance(rho, np.eye(2) / 2) < EAVESDROPPER_TOL
    with pytest.raises(ValueError):
        eavesdropper_average(0.1, 1)


def test_encrypted_transcript_replays_locally():
    assert locality_violations(P.run_encrypted_transfer(0.3, 0.9, 16)) == 0


def test_voting_decodes_votes():
    t = P.run_voting([1, 0, 1, 1], theta=0.4, seed=5)
    assert t.verified
    assert t.extras["decoded"] == [1, 0, 1, 1]
    assert t.extras["flagged"] == []
    assert P.transcript_to_dict(t) == P.transcript_to_dict(P.run_voting([1, 0, 1, 1], theta=0.4, seed=5))


def test_voting_flags_tampered_decoy():
    t = P.run_voting([0, 1], theta=0.0, seed=2, tamper=[(1, 0)])
    assert t.verified  # detection is the expected behaviour
    assert t.extras["flagged"] == [[1, 0]]


def test_voting_validation():
    with pytest.raises(ValueError):
        P.run_voting([2], 0.1)


def test_voting_has_no_resource_accounting():
    with pytest.raises(P.IncompleteTranscript):
        P.resource_report(P.run_voting([1], 0.1))


def test_bell_sharing():
    t = P.run_bell_sharing()
    assert t.verified
    assert [o.probability for o in t.outcomes] == pytest.approx([0.25, 0.25, 0.5], abs=1e-10)
    for o in t.outcomes:
        assert o.final_states[0].fidelity == pytest.approx(1, abs=1e-10)
    assert P.resource_report(t).classical_bits == pytest.approx(1.5)


@settings(max_examples=10, deadline=None)
@given(angle, angle)
def test_controlled_entanglement(t0, t1):
    t = P.run_controlled_entanglement(t0, t1)
    assert t.verified
    assert t.extras["corrections"] == {"0": "U_b[0]", "1": "U_b[1]", "2": "U_b[2]"}
    assert sum(o.probability for o in t.outcomes) == pytest.approx(1, abs=1e-10)
    for o in t.outcomes:
        assert o.final_states[0].fidelity == pytest.approx(1, abs=1e-10)


def test_controlled_target_is_the_superposed_product():
    tgt = controlled_target(0.0, math.pi / 2)
    assert tgt.dims == (2, 2, 2)
    assert abs(np.linalg.norm(tgt.amplitudes) - 1) < 1e-12
    # equal angles make the control qubit separable
    same = controlled_target(0.3, 0.3)
    half = np.linalg.norm(same.amplitudes[:4])
    assert half == pytest.approx(1 / math.sqrt(2))
