import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakwalk.channels import apply
from weakwalk.matcore import X, Y, Z, random_density
from weakwalk.pauli import (
    EncodingConfig,
    PauliChannelSpec,
    PauliTestConfig,
    build_encoding_channel,
    deviation_to_eps_star,
    encode_probability,
    encoded_sample_state,
    pauli_label,
    pauli_operator,
    povm_coefficients,
    run_estimation_demo,
    single_deviation_spec,
    weak_signal_stress,
)
from weakwalk.protocol import Verdict


def test_pauli_indexing():
    assert pauli_label(13, 2) == "ZX"
    np.testing.assert_allclose(pauli_operator(13, 2), np.kron(Z, X))
    np.testing.assert_allclose(pauli_operator(2, 1), Y)


def test_spec_validation():
    with pytest.raises(ValueError):
        PauliChannelSpec(1, [1.0, 0.5])
    with pytest.raises(ValueError):
        PauliChannelSpec(1, [0.9, 0.5, 0.5, 0.5])
    with pytest.raises(ValueError):  # not CP: lambda_X = lambda_Y = 1 forces lambda_Z = 1
        PauliChannelSpec(1, [1.0, 1.0, 1.0, 0.0])
    s = PauliChannelSpec.from_json(json.loads(json.dumps(PauliChannelSpec.identity(2).to_json())))
    assert s.n == 2


def test_spec_apply_scales_paulis(rng):
    spec = PauliChannelSpec(1, [1.0, 0.2, -0.3, 0.5])
    out = spec.apply(np.eye(2) / 2 + 0.3 * Z)
    np.testing.assert_allclose(out, np.eye(2) / 2 + 0.15 * Z, atol=1e-15)


def test_povm_coefficients():
    assert povm_coefficients(0.5) == (pytest.approx(2 / 3), 0.0)
    assert povm_coefficients(-0.5) == (0.0, pytest.approx(2 / 3))


def test_eps_star_mapping():
    assert deviation_to_eps_star(0.4, 0.0) == pytest.approx(0.2)
    assert deviation_to_eps_star(-0.2, 0.5) == pytest.approx(-0.7 / 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.floats(-1, 1), st.floats(-1, 1))
def test_encoding_matches_closed_form_n1(t, lam, lam_hat):
    lam_vec = np.ones(4)
    lam_vec[t] = lam
    others = [k for k in (1, 2, 3) if k != t]
    lam_vec[others] = 0.0  # keeps any |lam| <= 1 completely positive
    spec = PauliChannelSpec(1, lam_vec)
    rho = encoded_sample_state(spec, t, lam_hat)
    assert rho[0, 0].real == pytest.approx(encode_probability(lam, lam_hat), abs=1e-10)


@pytest.mark.parametrize("lam_hat", [-0.7, 0.0, 0.4])
def test_encoding_channel_complete_and_calibrated(lam_hat, rng):
    ch = build_encoding_channel(EncodingConfig(6, lam_hat), 2)
    assert ch.completeness_error() < 1e-12
    assert encode_probability(lam_hat, lam_hat) == 0.5
    out = apply(ch, np.kron(random_density(4, rng), np.diag([1, 0])))
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-14)


def test_single_deviation_demo():
    spec, hyp = single_deviation_spec(2, 5, 0.4)
    res = run_estimation_demo(spec, hyp, PauliTestConfig(0.4))
    assert res.verdict is Verdict.SOME_DEVIATES
    assert res.m3_overwrite >= 0.9
    assert res.encoding_max_error < 1e-12
    exact = run_estimation_demo(spec, spec.eigenvalues, PauliTestConfig(0.4))
    assert exact.verdict is Verdict.ALL_WITHIN
    assert exact.m3_overwrite <= 1e-10


def test_demo_rejects_wrong_table():
    spec, _ = single_deviation_spec(2, 5, 0.4)
    with pytest.raises(ValueError):
        run_estimation_demo(spec, [1.0, 0.4, 0.4, 0.4], PauliTestConfig(0.4))


def test_weak_signal_stress_trend():
    rows = weak_signal_stress([4, 9, 16], 0.4)
    log_s1 = [r.log_s1 for r in rows]
    assert max(log_s1) - min(log_s1) < 0.01  # bounded away from 0 and -inf
    assert all(a.s2 > b.s2 for a, b in zip(rows, rows[1:]))
    assert all(a.m3_overwrite > b.m3_overwrite for a, b in zip(rows, rows[1:]))


def test_spec_does_not_freeze_caller_array():
    table = np.array([1.0, 0.2, 0.0, 0.0])
    PauliChannelSpec(1, table)
    table[1] = 0.3


def test_calibration_identity(rng):
    for lh in rng.uniform(-1, 1, 1000):
        c1, c2 = povm_coefficients(lh)
        assert c1 * (1 + lh) + c2 * (1 - lh) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_encoding_triangle_and_range(lam, lam_hat):
    e = deviation_to_eps_star(lam, lam_hat)
    assert encode_probability(lam, lam_hat) == pytest.approx(0.5 + e, abs=1e-15)
    assert abs(e) <= abs(lam - lam_hat) / 2 + 1e-16


def test_branch_rule_maximises_sensitivity():
    lh = 0.5
    c1, c2 = povm_coefficients(lh)
    best = abs(c1 - c2)
    # feasible POVM elements 0 <= E <= I calibrated at lam_hat: c1 (1 + lh) + c2 (1 - lh) = 1
    for g1 in np.linspace(0, 1, 100):
        g2 = (1 - g1 * (1 + lh)) / (1 - lh)
        if 0 <= g2 <= 1:
            assert abs(g1 - g2) <= best + 1e-15
