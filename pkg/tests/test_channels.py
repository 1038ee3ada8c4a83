import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakwalk.channels import (
    CompletenessError,
    KrausChannel,
    apply,
    build_controlled_overwrite,
    build_replace,
    build_reset,
    build_reverse_overwrite,
    complete_unitary,
    dilate,
    survival_of,
)
from weakwalk.matcore import PROJ0, PROJ1, diagonal_state, is_unitary, random_density, tensor


def test_controlled_overwrite_truth_table():
    ch = build_controlled_overwrite()
    assert survival_of(apply(ch, tensor(PROJ0, PROJ0))) == pytest.approx(1.0)
    assert survival_of(apply(ch, tensor(PROJ1, PROJ0))) == pytest.approx(0.0)
    assert survival_of(apply(ch, tensor(PROJ1, PROJ1))) == pytest.approx(0.0)
    assert survival_of(apply(ch, tensor(PROJ0, PROJ1))) == pytest.approx(0.0)


def test_controlled_overwrite_decoheres_pointer():
    plus = np.full((2, 2), 0.5, dtype=complex)
    out = apply(build_controlled_overwrite(), tensor(plus, PROJ0))
    red = out.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    assert abs(red[0, 1]) < 1e-15
    assert survival_of(out) == pytest.approx(0.5)


def test_reverse_overwrite_inverts_control():
    ch = build_reverse_overwrite()
    assert survival_of(apply(ch, tensor(PROJ0, PROJ0))) == pytest.approx(0.0)
    assert survival_of(apply(ch, tensor(PROJ1, PROJ0))) == pytest.approx(1.0)
    s = survival_of(apply(ch, tensor(diagonal_state(0.3), PROJ0)))
    assert s == pytest.approx(0.7)


def test_reset_and_replace(rng):
    rho = random_density(4, rng)
    np.testing.assert_allclose(apply(build_reset(4), rho), np.diag([1, 0, 0, 0]), atol=1e-15)
    target = diagonal_state(0.8)
    np.testing.assert_allclose(apply(build_replace(target), random_density(2, rng)), target, atol=1e-14)


def test_incomplete_channel_rejected():
    with pytest.raises(CompletenessError):
        KrausChannel((0.9 * np.eye(2),), "lossy").check_complete()


@pytest.mark.parametrize("builder", [build_controlled_overwrite, build_reverse_overwrite, lambda: build_reset(2)])
def test_dilation_reproduces_kraus(builder, rng):
    ch = builder()
    d = dilate(ch)
    assert is_unitary(d.unitary)
    np.testing.assert_allclose(d.unitary[:, :: d.anc_dim][:, : ch.input_dim], d.isometry, atol=0)
    for _ in range(5):
        rho = random_density(ch.input_dim, rng)
        np.testing.assert_allclose(d.apply(rho), apply(ch, rho), atol=1e-12)


def test_dilation_is_deterministic():
    a = dilate(build_controlled_overwrite()).unitary
    b = dilate(build_controlled_overwrite()).unitary
    assert np.array_equal(a, b)


def test_complete_unitary_from_random_isometry(rng):
    q = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))[0]
    iso = q[:, :2]
    u = complete_unitary(iso, 4)
    assert is_unitary(u, 1e-12)
    np.testing.assert_allclose(u[:, [0, 4]], iso, atol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_write_then_survival_is_pointer_zero_population(seed):
    rng = np.random.default_rng(seed)
    rho_p = random_density(2, rng)
    out = apply(build_controlled_overwrite(), tensor(rho_p, PROJ0))
    assert survival_of(out) == pytest.approx(rho_p[0, 0].real, abs=1e-14)
