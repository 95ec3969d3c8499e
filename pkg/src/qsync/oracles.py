"""Closed-form steady states of few-level truncations of coupled SL oscillators.

Two-level (0/1 photon) truncation of a dissipatively coupled pair after
eliminating the doubly excited levels, and the three-level state of a
reactively coupled pair to first order in ``1/gamma``. Basis ordering is
``|n1 n2>`` with oscillator 1 leftmost, so the two-level basis is
``|00>, |01>, |10>, |11>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .fock import DensityMatrix, FockSpace, destroy
from .models import Liouvillian, dissipator, hamiltonian_superop

__all__ = [
    "TwoLevelSteadyState",
    "two_level_steady_state",
    "two_level_sigma",
    "two_level_liouvillian",
    "two_level_ad_threshold",
    "two_level_ad_threshold_printed",
    "two_level_is_ad",
    "two_level_eta_star",
    "two_level_wigner",
    "sigma_denominator_check",
    "reactive_three_level_state",
    "reactive_sigma",
    "NegativePopulationError",
]


@dataclass(frozen=True)
class TwoLevelSteadyState:
    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho23: complex
    nu: float

    def matrix(self) -> np.ndarray:
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0], m[1, 1], m[2, 2], m[3, 3] = self.rho11, self.rho22, self.rho33, self.rho44
        m[1, 2] = self.rho23
        m[2, 1] = np.conj(self.rho23)
        return m

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(FockSpace(2, 2), self.matrix())

    @property
    def ground_population_1(self) -> float:
        """Probability that oscillator 1 holds no photon."""
        return self.rho11 + self.rho22


def two_level_steady_state(delta_bar: float, eta_bar: float) -> TwoLevelSteadyState:
    """Exact null vector of the effective two-level Liouvillian.

    The singly excited populations carry ``(eta + 2) delta^2``; this is the
    coefficient that makes the four populations sum to ``nu``.
    """
    if eta_bar < 0:
        raise ValueError("eta_bar must be >= 0")
    e, d2 = float(eta_bar), float(delta_bar) ** 2
    nu = 8 * e**3 + (e + 3) ** 2 * d2 + 51 * e**2 + 108 * e + 81
    r11 = 6 * e**3 + (e + 2) ** 2 * d2 + 34 * e**2 + 60 * e + 36
    r22 = (e + 2) * (d2 + (e + 3) ** 2)
    r44 = e**2 + d2 + 6 * e + 9
    r23 = e * (e + 1) * (e + 3) + 1j * e * (e + 1) * float(delta_bar)
    return TwoLevelSteadyState(r11 / nu, r22 / nu, r22 / nu, r44 / nu, r23 / nu, nu)


def two_level_sigma(delta_bar: float, eta_bar: float) -> float:
    """Position correlation of the two-level steady state."""
    e, d2 = float(eta_bar), float(delta_bar) ** 2
    return 2 * e * (e + 1) / (8 * e**2 + 27 * e + (e + 3) * d2 + 27)


def sigma_denominator_check(delta_bar: float, eta_bar: float) -> dict:
    """Compare the two candidate denominators against the ratio definition.

    ``2 Re rho23`` from the state is the reference; the candidates differ in
    the power of ``(eta + 3)`` multiplying ``delta^2``.
    """
    e, d2 = float(eta_bar), float(delta_bar) ** 2
    ref = 2 * two_level_steady_state(delta_bar, eta_bar).rho23.real
    lin = 2 * e * (e + 1) / (8 * e**2 + 27 * e + (e + 3) * d2 + 27)
    sq = 2 * e * (e + 1) * (e + 3) / (8 * e**3 + (e + 3) ** 2 * d2 + 51 * e**2 + 108 * e + 81)
    return {"ratio": ref, "linear": lin, "squared_over_nu": sq,
            "linear_matches": math.isclose(lin, ref, rel_tol=1e-12, abs_tol=1e-15)}


def two_level_liouvillian(delta_bar: float, eta_bar: float) -> Liouvillian:
    """Effective 4x4-state Liouvillian (units of the gain rate, detuning on oscillator 1)."""
    space = FockSpace(2, 2)
    s1, s2 = destroy(space, 0), destroy(space, 1)
    L = hamiltonian_superop(delta_bar * (s1.dag() @ s1))
    L = L + dissipator(s1.dag()) + dissipator(s2.dag())
    L = L + 2 * dissipator(s1) + 2 * dissipator(s2)
    L = L + eta_bar * dissipator(s1 - s2)
    return Liouvillian(space, L, label="two_level")


def two_level_ad_threshold(eta_bar: float) -> float:
    """``delta^2`` above which the two-level pair is amplitude dead.

    From ``rho11 + rho22 >= 3/4``: ``delta^2 (eta + 3)(eta - 1) >= 27 - 15 eta^2 - 4 eta^3``.
    Returns ``inf`` for ``eta <= 1`` (never dead) and a non-positive number
    once every detuning is dead.
    """
    e = float(eta_bar)
    if e <= 1:
        return math.inf
    return (27 - 15 * e**2 - 4 * e**3) / ((e + 3) * (e - 1))


def two_level_ad_threshold_printed(eta_bar: float) -> float:
    """Threshold with the alternative denominator ``(eta - 1)(eta - 2)``.

    Kept for cross-checking only. It agrees with the population criterion
    where both denominators are positive and the numerator is negative
    (``eta > 2``: every detuning is dead); for ``eta < 1`` it wrongly predicts
    death at large detuning.
    """
    e = float(eta_bar)
    den = (e - 1) * (e - 2)
    if den == 0:
        return math.nan
    return (27 - 15 * e**2 - 4 * e**3) / den


def two_level_is_ad(delta_bar: float, eta_bar: float) -> bool:
    """Population criterion ``rho11 + rho22 >= 3/4`` (flat or peaked origin)."""
    s = two_level_steady_state(delta_bar, eta_bar)
    # compare numerators to avoid rounding at the boundary
    return 4 * s.ground_population_1 * s.nu - 3 * s.nu >= -1e-12 * s.nu


def two_level_eta_star(delta_bar: float = 0.0, hi: float = 50.0, xtol: float = 1e-12) -> float:
    """Coupling at which ``rho11 + rho22`` crosses 3/4, by bisection."""
    f = lambda e: two_level_steady_state(delta_bar, e).ground_population_1 - 0.75
    if f(hi) < 0:
        raise ValueError(f"no amplitude-death crossing below eta_bar={hi}")
    lo = 0.0
    if f(lo) >= 0:
        return 0.0
    return float(bisect(f, lo, hi, xtol=xtol))


def two_level_wigner(state: TwoLevelSteadyState, radii: np.ndarray) -> np.ndarray:
    """Radial Wigner function of oscillator 1, normalized over the plane."""
    p0 = state.rho11 + state.rho22
    p1 = state.rho33 + state.rho44
    u = 4 * np.asarray(radii, float) ** 2
    return (2 / np.pi) * np.exp(-u / 2) * (p0 - p1 * (1 - u))


class NegativePopulationError(ValueError):
    pass


def reactive_three_level_state(g: float, gamma: float) -> DensityMatrix:
    """First-order-in-``1/gamma`` steady state of the reactively coupled SL pair.

    Gain rate 1, no detuning, three levels per oscillator. Raises when
    ``gamma`` is too small for the expansion to give non-negative populations.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    g2 = g * g
    pops = {
        (0, 0): 4 / 9 + 4 * (7 * g2 - 6) / (81 * gamma),
        (0, 1): 2 / 9 - 4 * (g2 + 3) / (81 * gamma),
        (1, 0): 2 / 9 - 4 * (g2 + 3) / (81 * gamma),
        (0, 2): 2 / (9 * gamma),
        (2, 0): 2 / (9 * gamma),
        (1, 1): 1 / 9 - 2 * (10 * g2 + 3) / (81 * gamma),
        (1, 2): 1 / (9 * gamma),
        (2, 1): 1 / (9 * gamma),
    }
    bad = {k: v for k, v in pops.items() if v < 0}
    if bad:
        listing = ", ".join(f"rho[{k[0]}{k[1]},{k[0]}{k[1]}]={v:.3g}" for k, v in bad.items())
        raise NegativePopulationError(f"expansion invalid at gamma={gamma}: {listing}")
    idx = lambda n1, n2: 3 * n1 + n2
    m = np.zeros((9, 9), dtype=complex)
    for (n1, n2), v in pops.items():
        m[idx(n1, n2), idx(n1, n2)] = v
    c = 1j * math.sqrt(2) * g / (9 * gamma)
    for other in ((2, 0), (0, 2)):
        m[idx(1, 1), idx(*other)] = c
        m[idx(*other), idx(1, 1)] = -c
    return DensityMatrix(FockSpace(3, 3), m)


def reactive_sigma() -> float:
    """Position correlation of the reactively coupled SL pair: identically zero."""
    return 0.0
