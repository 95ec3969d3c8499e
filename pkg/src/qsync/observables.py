"""Wigner functions, amplitude death, position correlations and frequency locking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import eval_genlaguerre, eval_laguerre, gammaln

from .dynamics import (
    driven_observed_frequency,
    stationary_spectrum,
    steady_state,
)
from .fock import DensityMatrix, destroy, partial_trace
from .models import DvdpParams, Liouvillian, build_approx_dvdp

__all__ = [
    "WignerRadial",
    "wigner_radial",
    "wigner_2d",
    "is_amplitude_death",
    "DegenerateVarianceError",
    "pearson_sigma",
    "SyncClassification",
    "locking_tolerance",
    "coupled_frequency_locking",
    "BandwidthScan",
    "quantum_bandwidth_scan",
]

DEFAULT_POINTS = 121


@dataclass(frozen=True)
class WignerRadial:
    """Phase-averaged Wigner function ``W(|alpha|)``, normalized over the plane."""

    radii: np.ndarray
    values: np.ndarray
    warning: str | None = None

    @property
    def step(self) -> float:
        return float(self.radii[1] - self.radii[0])

    def normalization(self) -> float:
        return float(2 * np.pi * np.trapezoid(self.values * self.radii, self.radii))


def _radial_grid(rho: DensityMatrix) -> np.ndarray:
    n = max(rho.expect(destroy(rho.space).dag() @ destroy(rho.space)).real, 0.0)
    return np.linspace(0.0, 2 * math.sqrt(n) + 4, DEFAULT_POINTS)


def wigner_radial(rho: DensityMatrix, r_grid: Sequence[float] | None = None) -> WignerRadial:
    """``W(r) = (2/pi) exp(-2 r^2) sum_n p_n (-1)^n L_n(4 r^2)``.

    Only Fock populations survive the phase average. The default grid has
    121 points on ``[0, 2 r + 4]`` with ``r = sqrt(<n>)`` the ring radius; a
    grid ending before ``2 (r + 2)`` is returned with a warning attached.
    """
    if rho.space.nmodes != 1:
        raise ValueError("wigner_radial needs a single-oscillator state")
    nbar = max(float(np.real(np.sum(np.arange(rho.space.dim) * rho.populations()))), 0.0)
    radii = _radial_grid(rho) if r_grid is None else np.asarray(r_grid, dtype=float)
    warning = None
    if radii[-1] < 2 * (math.sqrt(nbar) + 2) - 1e-12:
        warning = f"radial grid ends at {radii[-1]:.3g} < 2(r+2) = {2 * (math.sqrt(nbar) + 2):.3g}"
    p = rho.populations()
    x = 4 * radii**2
    vals = np.zeros_like(radii)
    for n, pn in enumerate(p):
        if pn != 0:
            vals += pn * (-1) ** n * eval_laguerre(n, x)
    vals *= (2 / np.pi) * np.exp(-2 * radii**2)
    return WignerRadial(radii, vals, warning)


def wigner_2d(rho: DensityMatrix, xvec: np.ndarray, yvec: np.ndarray) -> np.ndarray:
    """Full Wigner function on the grid ``alpha = x + i y``; shape (len(yvec), len(xvec))."""
    if rho.space.nmodes != 1:
        raise ValueError("wigner_2d needs a single-oscillator state")
    X, Y = np.meshgrid(np.asarray(xvec, float), np.asarray(yvec, float))
    alpha = X + 1j * Y
    A2 = 4 * np.abs(alpha) ** 2
    data = rho.data
    N = rho.space.dim
    W = np.zeros(alpha.shape)
    for m in range(N):
        if data[m, m] != 0:
            W += np.real(data[m, m]) * (-1) ** m * eval_laguerre(m, A2)
        for n in range(m + 1, N):
            c = data[m, n]
            if c == 0:
                continue
            k = n - m
            coef = (-1) ** m * np.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
            W += 2 * np.real(c * coef * (2 * alpha) ** k * eval_genlaguerre(m, k, A2))
    return (2 / np.pi) * np.exp(-A2 / 2) * W


def is_amplitude_death(W: WignerRadial) -> tuple[bool, float]:
    """Origin-peaked test: global maximum within one grid step of ``r = 0``.

    Returns ``(flag, margin)`` with ``margin = W(0) - max_{r > step} W(r)``.
    """
    k = int(np.argmax(W.values))
    rest = W.values[W.radii > W.step * (1 + 1e-9)]
    margin = float(W.values[0] - rest.max()) if rest.size else float("inf")
    return k <= 1, margin


class DegenerateVarianceError(ValueError):
    pass


def pearson_sigma(rho: DensityMatrix, var_tol: float = 1e-12) -> float:
    """Pearson coefficient of the position quadratures ``x_k = a_k + a_k^+``."""
    if rho.space.nmodes != 2:
        raise ValueError("pearson_sigma needs a two-oscillator state")
    a1, a2 = destroy(rho.space, 0), destroy(rho.space, 1)
    x1, x2 = a1 + a1.dag(), a2 + a2.dag()
    m1, m2 = rho.expect(x1).real, rho.expect(x2).real
    v1 = rho.expect(x1 @ x1).real - m1**2
    v2 = rho.expect(x2 @ x2).real - m2**2
    if v1 < var_tol or v2 < var_tol:
        raise DegenerateVarianceError(f"degenerate position variance ({v1:.3g}, {v2:.3g})")
    cov = rho.expect(x1 @ x2).real - m1 * m2
    return float(cov / math.sqrt(v1 * v2))


def locking_tolerance(d_omega: float, floor: float = 1e-3) -> float:
    """Default frequency-locking threshold ``max(2 d_omega, floor)``."""
    return max(2 * d_omega, floor)


@dataclass
class SyncClassification:
    label: str
    omega1: float
    omega2: float
    tol: float
    ad_margins: tuple[float, float]
    ad_flags: tuple[bool, bool]
    sigma: float
    d_omega: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in ("frequency_locked", "amplitude_death", "unclassified"):
            raise ValueError(f"bad label {self.label!r}")


def coupled_frequency_locking(L: Liouvillian, tol: float | None = None, dt: float = 0.1,
                              rho: DensityMatrix | None = None) -> SyncClassification:
    """Classify the steady state of a coupled, undriven pair.

    Amplitude death (both reduced Wigner functions origin-peaked) takes
    precedence; otherwise the pair is frequency locked when the two
    spectral peaks agree within ``tol`` (default ``max(2 d_omega, 1e-3)``).
    """
    if rho is None:
        rho = steady_state(L)
    s1 = stationary_spectrum(L, rho, which=0, dt=dt)
    s2 = stationary_spectrum(L, rho, which=1, dt=dt)
    w1, w2 = s1.peak_frequency(), s2.peak_frequency()
    d_omega = max(s1.d_omega, s2.d_omega)
    if tol is None:
        tol = locking_tolerance(d_omega)
    flags, margins = [], []
    for k in (0, 1):
        f, m = is_amplitude_death(wigner_radial(partial_trace(rho, k)))
        flags.append(f)
        margins.append(m)
    try:
        sigma = pearson_sigma(rho)
    except DegenerateVarianceError:
        sigma = float("nan")
    if all(flags):
        label = "amplitude_death"
    elif abs(w1 - w2) <= tol:
        label = "frequency_locked"
    else:
        label = "unclassified"
    return SyncClassification(label, w1, w2, tol, tuple(margins), tuple(flags), sigma, d_omega)


@dataclass
class BandwidthScan:
    bandwidth: float
    lower: float | None
    upper: float | None
    probes: list[tuple[float, float, bool]]
    diagnostic: str = ""


def quantum_bandwidth_scan(p: DvdpParams, omega_grid: Sequence[float], N: int,
                           tol: float | None = None, refine: float = 1e-3,
                           resolution: float = 5e-4, settle: float | None = None,
                           builder: Callable[..., Liouvillian] = build_approx_dvdp,
                           **kwargs) -> BandwidthScan:
    """Width of the contiguous drive-frequency interval where the oscillator locks.

    ``omega_grid`` is probed first; the locked run containing the locked
    probe closest to the grid centre is kept and both edges are refined by
    bisection to ``refine``. A probe is locked when the observed frequency
    lies within ``tol`` of ``omega_d`` (default ``max(2 d_omega, 1e-3)`` on
    the zero-padded grid of spacing ``resolution``).
    """
    from dataclasses import replace

    if settle is None:
        settle = 20.0 / p.lam_bar if p.lam_bar > 0 else 200.0
    probes: list[tuple[float, float, bool]] = []

    def locked(wd: float) -> bool:
        L = builder(replace(p, omega_d=float(wd)), N)
        res = driven_observed_frequency(L, settle=settle, resolution=resolution, **kwargs)
        t = locking_tolerance(res.spectrum.d_omega) if tol is None else tol
        ok = abs(res.frequency - wd) <= t
        probes.append((float(wd), res.frequency, bool(ok)))
        return ok

    grid = np.sort(np.asarray(omega_grid, dtype=float))
    if p.F == 0:
        return BandwidthScan(0.0, None, None, probes, "no drive")
    flags = [locked(w) for w in grid]
    hits = np.flatnonzero(flags)
    if hits.size == 0:
        return BandwidthScan(0.0, None, None, probes, "no locked probe on the grid")
    centre = 0.5 * (grid[0] + grid[-1])
    k = int(hits[np.argmin(np.abs(grid[hits] - centre))])
    lo = k
    while lo > 0 and flags[lo - 1]:
        lo -= 1
    hi = k
    while hi < len(grid) - 1 and flags[hi + 1]:
        hi += 1
    diag = []

    def bisect(inside: float, outside: float) -> float:
        while abs(outside - inside) > refine:
            mid = 0.5 * (inside + outside)
            if locked(mid):
                inside = mid
            else:
                outside = mid
        return 0.5 * (inside + outside)

    if lo == 0:
        lower = grid[0]
        diag.append("locked run reaches the lower grid edge")
    else:
        lower = bisect(grid[lo], grid[lo - 1])
    if hi == len(grid) - 1:
        upper = grid[-1]
        diag.append("locked run reaches the upper grid edge")
    else:
        upper = bisect(grid[hi], grid[hi + 1])
    return BandwidthScan(float(upper - lower), float(lower), float(upper), probes, "; ".join(diag))
