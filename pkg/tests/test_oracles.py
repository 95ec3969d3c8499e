import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from qsync.dynamics import steady_state
from qsync.fock import FockSpace
from qsync.models import build_reactive_sl
from qsync.observables import pearson_sigma
from qsync.oracles import (
    NegativePopulationError, reactive_sigma, reactive_three_level_state, sigma_denominator_check,
    two_level_ad_threshold, two_level_ad_threshold_printed, two_level_eta_star, two_level_is_ad,
    two_level_liouvillian, two_level_sigma, two_level_steady_state, two_level_wigner,
)

detuning = st.floats(-5, 5, allow_nan=False)
coupling = st.floats(0, 20, allow_nan=False)


def test_normalization_example():
    # eta = 0, delta = 0: nu = 81
    s = two_level_steady_state(0.0, 0.0)
    assert s.nu == 81
    assert s.rho11 == pytest.approx(36 / 81)


@given(detuning, coupling)
def test_populations_sum_to_one(delta, eta):
    s = two_level_steady_state(delta, eta)
    assert s.rho11 + s.rho22 + s.rho33 + s.rho44 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("delta, eta", [(0, 0), (0.5, 1.0), (-1.3, 2.5), (2.0, 0.2)])
def test_closed_form_is_null_vector(delta, eta):
    L = two_level_liouvillian(delta, eta).static.toarray()
    ns = sla.null_space(L, rcond=1e-10)
    assert ns.shape[1] == 1
    rho = ns[:, 0].reshape(4, 4)
    rho /= np.trace(rho)
    assert np.allclose(rho, two_level_steady_state(delta, eta).matrix(), atol=1e-12)


def test_sigma_examples():
    assert two_level_sigma(0.0, 0.0) == 0.0
    assert two_level_sigma(0.0, 1.0) == pytest.approx(2 / 31)
    assert 0.2495 <= two_level_sigma(0.0, 1e4) <= 0.25


def test_sigma_identity_on_grid():
    for delta in np.linspace(-3, 3, 20):
        for eta in np.linspace(0, 10, 20):
            s = two_level_steady_state(delta, eta)
            ref = pearson_sigma(s.density_matrix())
            assert two_level_sigma(delta, eta) == pytest.approx(ref, abs=1e-12)
            assert sigma_denominator_check(delta, eta)["linear_matches"]


def test_ad_on_resonance():
    assert two_level_is_ad(0.0, 1.2)
    assert not two_level_is_ad(0.0, 1.1)
    assert 1.15 <= two_level_eta_star() <= 1.20


@given(st.floats(1.01, 10), st.floats(0, 3))
def test_threshold_matches_population_criterion(eta, delta):
    thr = two_level_ad_threshold(eta)
    if abs(delta**2 - thr) > 1e-6:
        assert two_level_is_ad(delta, eta) == (delta**2 >= thr)


@given(st.floats(0, 0.99), st.floats(0, 50))
def test_weak_coupling_never_dead(eta, delta):
    assert math.isinf(two_level_ad_threshold(eta))
    assert not two_level_is_ad(delta, eta)


def test_alternative_threshold_agrees_only_at_strong_coupling():
    for eta in (2.5, 3.0, 5.0):
        assert two_level_ad_threshold_printed(eta) < 0
        assert all(two_level_is_ad(d, eta) for d in (0.0, 1.0, 10.0))
    # below eta = 1 it predicts death at large detuning; the state never gets there
    eta = 0.5
    d = math.sqrt(two_level_ad_threshold_printed(eta)) + 1
    assert not two_level_is_ad(d, eta)
    assert two_level_steady_state(1e4, eta).ground_population_1 == pytest.approx(
        (eta + 2) / (eta + 3), rel=1e-6)


@given(detuning, coupling)
def test_wigner_flip_agrees_with_population_criterion(delta, eta):
    s = two_level_steady_state(delta, eta)
    p0 = s.ground_population_1
    if abs(p0 - 0.75) < 1e-6:
        return
    r = np.linspace(0, 3, 601)
    W = two_level_wigner(s, r)
    assert (np.argmax(W) == 0) == two_level_is_ad(delta, eta)


def test_two_level_wigner_normalized():
    s = two_level_steady_state(0.3, 1.0)
    r = np.linspace(0, 4, 4001)
    assert 2 * np.pi * np.trapezoid(two_level_wigner(s, r) * r, r) == pytest.approx(1, abs=1e-6)


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        two_level_steady_state(0.0, -1.0)


@pytest.mark.parametrize("g", [0.0, 0.4, 1.0])
def test_three_level_state_is_physical(g):
    rho = reactive_three_level_state(g, 50.0)
    assert rho.trace.real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho.data, rho.data.conj().T)
    assert rho.min_eigenvalue() > -1e-12
    assert abs(pearson_sigma(rho)) < 1e-12
    assert reactive_sigma() == 0.0


def test_three_level_uncoupled_state_is_diagonal():
    rho = reactive_three_level_state(0.0, 20.0)
    assert np.allclose(rho.data, np.diag(np.diag(rho.data)))


def test_three_level_matches_numerical_steady_state():
    errs = []
    for gamma in (10.0, 100.0):
        num = steady_state(build_reactive_sl(0.5, gamma, 3, kappa=1.0)).data
        errs.append(np.abs(num - reactive_three_level_state(0.5, gamma).data).max())
    assert errs[0] < 2e-2
    assert errs[1] < 1e-3
    # first-order expansion: the residual error is second order
    assert errs[0] / errs[1] > 30


def test_three_level_rejects_small_gamma():
    with pytest.raises(NegativePopulationError, match="rho"):
        reactive_three_level_state(1.0, 0.5)
    with pytest.raises(ValueError):
        reactive_three_level_state(1.0, 0.0)


def test_three_level_basis_dimension():
    assert reactive_three_level_state(0.3, 30.0).space == FockSpace(3, 3)
