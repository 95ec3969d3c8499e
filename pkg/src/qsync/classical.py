"""Classical Duffing-van der Pol oscillators: ODE integration and closed-form results.

Coordinates follow the dimensionless model ``x'' + lam (x^2 - r^2) x' + x +
beta x^3 = F cos(omega_d t)`` with ``y = x'`` and complex amplitude
``alpha = (x + i y) / 2``. Vector fields accept a trailing batch axis so that
many parameter values can be integrated as one ODE system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .models import CoupledParams, DvdpParams

__all__ = [
    "Trajectory",
    "BlowUpError",
    "ClassicalState",
    "dvdp_rhs",
    "integrate_dvdp",
    "integrate_dvdp_batch",
    "coupled_rhs",
    "integrate_coupled",
    "averaged_rhs",
    "coupled_averaged_rhs",
    "integrate_averaged",
    "PolarState",
    "coupled_polar_rhs",
    "pl_frequency",
    "pl_solution",
    "hb_bandwidth",
    "enhancement_factor",
    "enhancement_threshold",
    "NO_ENHANCEMENT",
    "coupled_sync_boundary",
    "locked_solution",
    "amplitude_death_condition",
    "stability_matrix",
    "stability_eigenvalues",
    "sync_bandwidth",
    "total_bandwidth",
    "trajectory_pearson",
    "classical_observed_frequency",
    "mean_phase_frequency",
    "BandwidthResult",
    "free_running_frequency",
    "classical_bandwidth_scan",
    "classify_coupled_averaged",
    "annulus_initial_conditions",
]

BLOWUP = 1e6
NO_ENHANCEMENT = math.inf


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClassicalState:
    """Phase-space point ``(x, y)``; ``alpha = (x + i y) / 2``."""

    x: float
    y: float

    @property
    def alpha(self) -> complex:
        return complex(self.x, self.y) / 2

    @classmethod
    def from_alpha(cls, alpha: complex) -> ClassicalState:
        return cls(2 * alpha.real, 2 * alpha.imag)


@dataclass
class Trajectory:
    """Uniformly sampled solution; ``states`` has shape (len(times), dim[, batch])."""

    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)
    cut: int = 0

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def coord(self, k: int) -> np.ndarray:
        return self.states[self.cut:, k]

    @property
    def x(self) -> np.ndarray:
        return self.coord(0)

    def alpha(self, osc: int = 0) -> np.ndarray:
        return (self.coord(2 * osc) + 1j * self.coord(2 * osc + 1)) / 2

    def after(self, t_cut: float) -> Trajectory:
        k = int(np.searchsorted(self.times, self.times[0] + t_cut))
        return replace(self, cut=k)


# --------------------------------------------------------------------------
# integration helpers


def _solve(fun, y0: np.ndarray, t_span, dt: float, rtol: float, atol: float,
           method: str = "DOP853") -> tuple[np.ndarray, np.ndarray]:
    shape = y0.shape
    t0, t1 = float(t_span[0]), float(t_span[1])
    n = int(math.floor((t1 - t0) / dt + 1e-9)) + 1
    grid = t0 + dt * np.arange(n)

    def flat(t, y):
        return fun(t, y.reshape(shape)).reshape(-1)

    def blow(t, y):
        return BLOWUP - np.max(np.abs(y))

    blow.terminal = True
    sol = solve_ivp(flat, (t0, grid[-1]), y0.reshape(-1).astype(float), method=method,
                    t_eval=grid, rtol=rtol, atol=atol, events=blow)
    if sol.status == 1:
        raise BlowUpError(f"|state| exceeded {BLOWUP:g} at t={sol.t_events[0][0]:.4g}")
    if not sol.success:
        raise RuntimeError(sol.message)
    return grid, sol.y.T.reshape((n,) + shape)


def dvdp_rhs(t, s, lam, beta, r, F, omega_d):
    """Vector field of the driven DvdP oscillator; ``s = (x, y)`` (optionally batched)."""
    x, y = s[0], s[1]
    dy = F * np.cos(omega_d * t) - x - lam * (x * x - r * r) * y - beta * x**3
    return np.stack([y, dy])


def integrate_dvdp(p: DvdpParams, t_span, state0=(2.0, 0.0), dt: float = 0.05,
                   rtol: float = 1e-9, atol: float = 1e-11) -> Trajectory:
    s0 = np.asarray(state0, dtype=float)
    fun = lambda t, s: dvdp_rhs(t, s, p.lam, p.beta, p.r, p.F, p.omega_d)
    times, states = _solve(fun, s0, t_span, dt, rtol, atol)
    return Trajectory(times, states, {"rtol": rtol, "atol": atol, "params": p})


def integrate_dvdp_batch(p: DvdpParams, omega_d: Sequence[float], t_span, state0=(2.0, 0.0),
                         dt: float = 0.05, rtol: float = 1e-9, atol: float = 1e-11) -> Trajectory:
    """Integrate one oscillator per drive frequency as a single ODE system."""
    w = np.asarray(omega_d, dtype=float)
    s0 = np.repeat(np.asarray(state0, dtype=float)[:, None], len(w), axis=1)
    fun = lambda t, s: dvdp_rhs(t, s, p.lam, p.beta, p.r, p.F, w)
    times, states = _solve(fun, s0, t_span, dt, rtol, atol)
    return Trajectory(times, states, {"rtol": rtol, "atol": atol, "params": p, "omega_d": w})


def coupled_rhs(t, s, lam, r, delta, eta, g, beta=0.0, convention="averaged"):
    """Full second-order vector field of a coupled DvdP pair; ``s = (x1, y1, x2, y2)``.

    ``convention="averaged"`` scales coupling and detuning so that first-order
    averaging gives exactly ``coupled_averaged_rhs`` (dissipative term
    ``eta (y_j - y_k)``, oscillator 2 at frequency ``1 + delta``);
    ``"as_written"`` uses ``eta / 2 (y_j - y_k)`` and ``(1 + delta) x2``.
    The reactive term is ``2 g (x_j - x_k)`` in both.
    """
    x1, y1, x2, y2 = s
    if convention == "averaged":
        w2sq = (1 + delta) ** 2
        c = eta
    elif convention == "as_written":
        w2sq = 1 + delta
        c = eta / 2
    else:
        raise ValueError(f"unknown convention {convention!r}")
    r2 = r * r
    d1 = -x1 - lam * (x1 * x1 - r2) * y1 - beta * x1**3 + c * (y2 - y1) + 2 * g * (x2 - x1)
    d2 = -w2sq * x2 - lam * (x2 * x2 - r2) * y2 - beta * x2**3 + c * (y1 - y2) + 2 * g * (x1 - x2)
    return np.stack([y1, d1, y2, d2])


def integrate_coupled(p: CoupledParams, kind: str, t_span, state0=(2.0, 0.0, 0.0, 2.0),
                      dt: float = 0.05, rtol: float = 1e-9, atol: float = 1e-11,
                      convention: str = "averaged") -> Trajectory:
    if kind == "dissipative":
        eta, g = p.eta, 0.0
    elif kind == "reactive":
        eta, g = 0.0, p.g
    else:
        raise ValueError(f"kind must be dissipative or reactive, got {kind!r}")
    s0 = np.asarray(state0, dtype=float)
    fun = lambda t, s: coupled_rhs(t, s, p.lam, p.r, p.delta, eta, g, p.beta, convention)
    times, states = _solve(fun, s0, t_span, dt, rtol, atol)
    return Trajectory(times, states, {"rtol": rtol, "atol": atol, "params": p, "kind": kind,
                                      "convention": convention})


# --------------------------------------------------------------------------
# averaged equations


def averaged_rhs(alpha, p: DvdpParams, order: int = 2, t: float = 0.0, omega: float = 1.0):
    """Averaged amplitude equation; order 1 keeps the Stuart-Landau and Duffing terms."""
    A = np.abs(alpha) ** 2
    lam, r2 = p.lam, p.r**2
    out = -1j * omega * alpha + 0.5 * lam * (r2 - A) * alpha - 1.5j * p.beta * A * alpha
    if order == 2:
        out = out + 1j * lam**2 / 8 * (r2**2 - 6 * r2 * A + 5.5 * A * A) * alpha
    elif order != 1:
        raise ValueError("order must be 1 or 2")
    if p.F:
        out = out + 0.5j * p.F * np.cos(p.omega_d * t)
    return out


def coupled_averaged_rhs(a1, a2, p: CoupledParams, order: int = 1, frame: float = 0.0,
                         kind: str = "dissipative"):
    """Averaged coupled amplitude equations in a frame rotating at ``frame``."""
    single = DvdpParams(lam=p.lam, beta=p.beta, r=p.r)
    d1 = averaged_rhs(a1, single, order, omega=1.0 - frame)
    d2 = averaged_rhs(a2, single, order, omega=1.0 + p.delta - frame)
    if kind == "dissipative":
        d1 = d1 + 0.5 * p.eta * (a2 - a1)
        d2 = d2 + 0.5 * p.eta * (a1 - a2)
    elif kind == "reactive":
        d1 = d1 + 1j * p.g * (a2 - a1)
        d2 = d2 + 1j * p.g * (a1 - a2)
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    return d1, d2


def integrate_averaged(alpha0, p, order: int = 1, t_span=(0.0, 100.0), dt: float = 0.05,
                       frame: float = 0.0, kind: str = "dissipative", rtol: float = 1e-9,
                       atol: float = 1e-12) -> Trajectory:
    """Integrate averaged equations for one oscillator (``DvdpParams``) or a pair.

    States are stored as ``(Re a1, Im a1[, Re a2, Im a2])`` (optionally batched);
    ``alpha(k)`` on the result gives ``a_k`` directly, not ``(x + i y)/2``.
    """
    a0 = np.asarray(alpha0, dtype=complex)
    if isinstance(p, CoupledParams):
        if a0.shape[0] != 2:
            raise ValueError("coupled averaged integration needs two initial amplitudes")
        y0 = np.stack([a0[0].real, a0[0].imag, a0[1].real, a0[1].imag])

        def fun(t, s):
            d1, d2 = coupled_averaged_rhs(s[0] + 1j * s[1], s[2] + 1j * s[3], p, order, frame, kind)
            return np.stack([d1.real, d1.imag, d2.real, d2.imag])
    else:
        y0 = np.stack([a0.real, a0.imag])

        def fun(t, s):
            d = averaged_rhs(s[0] + 1j * s[1], p, order, t, omega=1.0 - frame)
            return np.stack([d.real, d.imag])
    times, states = _solve(fun, y0, t_span, dt, rtol, atol)
    # store amplitudes so that Trajectory.alpha returns them: (x, y) = 2 (Re a, Im a)
    return Trajectory(times, 2 * states, {"order": order, "frame": frame, "averaged": True})


@dataclass(frozen=True)
class PolarState:
    """Radii and phase difference ``phi = phi_2 - phi_1`` of a coupled pair."""

    R1: float
    R2: float
    phi: float

    def __post_init__(self):
        if self.R1 < 0 or self.R2 < 0:
            raise ValueError("radii must be non-negative")

    @classmethod
    def from_alphas(cls, a1: complex, a2: complex) -> PolarState:
        # alpha_k = R_k exp(-i phi_k)
        phi = -np.angle(a2) + np.angle(a1)
        return cls(float(abs(a1)), float(abs(a2)), float(np.angle(np.exp(1j * phi))))


def coupled_polar_rhs(R1, R2, phi, p: CoupledParams, order: int = 2):
    """Polar form ``(R1', R2', phi')`` of the dissipatively coupled averaged equations.

    ``alpha_k = R_k exp(-i phi_k)``, ``phi = phi_2 - phi_1``. At ``R1 = R2`` the
    Duffing and ``lam^2`` contributions to ``phi'`` cancel identically.
    """
    lam, r2, eta, beta = p.lam, p.r**2, p.eta, p.beta
    dR1 = 0.5 * lam * (r2 - R1**2) * R1 + 0.5 * eta * (R2 * np.cos(phi) - R1)
    dR2 = 0.5 * lam * (r2 - R2**2) * R2 + 0.5 * eta * (R1 * np.cos(phi) - R2)
    A1, A2 = R1**2, R2**2
    dphi = p.delta + 1.5 * beta * (A2 - A1) - 0.5 * eta * (R1 / R2 + R2 / R1) * np.sin(phi)
    if order == 2:
        # phi_k' = omega_k + 3 beta/2 R_k^2 - lam^2/8 (r^4 - 6 r^2 R_k^2 + 11/2 R_k^4) + ...
        f = lambda A: -lam**2 / 8 * (r2**2 - 6 * r2 * A + 5.5 * A * A)
        dphi = dphi + f(A2) - f(A1)
    return dR1, dR2, dphi


# --------------------------------------------------------------------------
# closed forms


def pl_frequency(lam: float) -> float:
    """Lindstedt frequency ``1 - lam^2 / 16`` (reliable up to ``lam ~ 1``)."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    return 1.0 - lam**2 / 16


def pl_solution(lam: float, t):
    w = pl_frequency(lam)
    t = np.asarray(t, dtype=float)
    return 2 * np.cos(w * t) + lam * np.sin(w * t) ** 3


def hb_bandwidth(lambda_bar: float, beta_bar: float, F_bar: float) -> float:
    """Harmonic-balance locking range (full width in drive frequency)."""
    if lambda_bar <= 0:
        raise ValueError("harmonic-balance bandwidth is singular at lambda_bar = 0")
    q = 1 + 3 * beta_bar
    return F_bar / (2 * lambda_bar * q) * math.sqrt(lambda_bar**2 * q + 9 * beta_bar**2)


def enhancement_factor(lambda_bar: float, beta_bar: float) -> float:
    """Ratio of the harmonic-balance bandwidth to its Duffing-free value ``F/2``."""
    return hb_bandwidth(lambda_bar, beta_bar, 2.0)


def enhancement_threshold(lambda_bar: float) -> float:
    """Smallest ``beta_bar`` enlarging the bandwidth; ``NO_ENHANCEMENT`` for ``lambda_bar >= 1``."""
    if lambda_bar <= 0:
        raise ValueError("lambda_bar must be positive")
    if lambda_bar >= 1:
        return NO_ENHANCEMENT
    return lambda_bar**2 / (3 * (1 - lambda_bar**2))


def coupled_sync_boundary(lam: float, eta: float) -> float:
    """Largest locked ``|delta|`` of the averaged dissipative pair."""
    if lam <= 0 or eta < 0:
        raise ValueError("need lam > 0 and eta >= 0")
    return eta if eta <= lam else math.sqrt(lam * (2 * eta - lam))


def locked_solution(lam: float, eta: float, delta: float) -> tuple[float, float]:
    """``(R_star, phi_star)`` of the symmetric locked state."""
    if abs(delta) > eta:
        raise ValueError(f"no locked solution for |delta|={abs(delta)} > eta={eta}")
    if eta == 0:
        return 1.0, 0.0
    c = math.sqrt(1 - (delta / eta) ** 2)
    R2 = 1 + (eta / lam) * (c - 1)
    if R2 < 0:
        raise ValueError("locked amplitude is imaginary (amplitude-death side)")
    return math.sqrt(R2), math.asin(delta / eta)


def amplitude_death_condition(lam: float, eta: float, delta: float) -> bool:
    return eta > lam and abs(delta) > math.sqrt(lam * (2 * eta - lam))


def stability_matrix(lam: float, eta: float, omega1: float, omega2: float) -> np.ndarray:
    """Linearization of the averaged pair about the origin in ``(Re, Im)`` coordinates."""
    a = (lam - eta) / 2
    c = eta / 2
    return np.array([
        [a, omega1, c, 0],
        [-omega1, a, 0, c],
        [c, 0, a, omega2],
        [0, c, -omega2, a],
    ])


def stability_eigenvalues(lam: float, eta: float, omega1: float, omega2: float) -> np.ndarray:
    """Closed-form eigenvalues ``(lam - eta +- sqrt(eta^2 - delta^2))/2 +- i (w1 + w2)/2``."""
    delta = omega2 - omega1
    root = np.sqrt(complex(eta**2 - delta**2))
    base = (lam - eta) / 2
    im = 1j * (omega1 + omega2) / 2
    return np.array([base + root / 2 + im, base + root / 2 - im,
                     base - root / 2 + im, base - root / 2 - im])


def sync_bandwidth(lam: float, eta: float) -> float:
    """Full locked detuning range ``2 delta_max``."""
    return 2 * coupled_sync_boundary(lam, eta)


def total_bandwidth(lam: float, eta_max: float) -> float:
    """``int_0^eta_max delta_max(eta) d eta`` in closed form (``eta_max > lam``)."""
    if eta_max <= lam:
        raise ValueError("closed form needs eta_max > lam")
    return lam**2 / 6 + math.sqrt(lam) * (2 * eta_max - lam) ** 1.5 / 3


def total_bandwidth_quad(lam: float, eta_max: float) -> float:
    """Quadrature of the piecewise boundary, for cross-checking."""
    a = quad(lambda e: coupled_sync_boundary(lam, e), 0, lam)[0]
    b = quad(lambda e: coupled_sync_boundary(lam, e), lam, eta_max, epsabs=1e-13, epsrel=1e-13)[0]
    return a + b


# --------------------------------------------------------------------------
# trajectory statistics


def trajectory_pearson(traj: Trajectory, transient_cut: float | None = None, M: int = 10_000,
                       stride: int | None = None) -> float:
    """Sample Pearson coefficient of ``(x1, x2)`` pairs after a transient.

    Default cut is ``50 / lam``; default stride makes the sample spacing about
    a seventh of the oscillation period.
    """
    p = traj.meta.get("params")
    if transient_cut is None:
        lam = getattr(p, "lam", 1.0) or 1.0
        transient_cut = 50.0 / lam
    if stride is None:
        stride = max(1, int(round((2 * np.pi / 7) / traj.dt)))
    k0 = int(np.searchsorted(traj.times, traj.times[0] + transient_cut))
    x1 = traj.states[k0::stride, 0]
    x2 = traj.states[k0::stride, 2]
    if len(x1) < M:
        raise ValueError(f"only {len(x1)} samples after the cut, need M={M}")
    x1, x2 = x1[:M], x2[:M]
    d1, d2 = x1 - x1.mean(axis=0), x2 - x2.mean(axis=0)
    v1, v2 = np.sum(d1 * d1, axis=0), np.sum(d2 * d2, axis=0)
    if np.any(v1 == 0) or np.any(v2 == 0):
        raise ValueError("zero variance in trajectory_pearson")
    return np.sum(d1 * d2, axis=0) / np.sqrt(v1 * v2)


def classical_observed_frequency(traj: Trajectory, coord: int = 0, pad: int = 4):
    """Peak of the Hann-windowed FFT of ``x(t)`` with parabolic refinement.

    Works column-wise on batched trajectories. Uses samples from ``traj.cut``.
    """
    x = traj.states[traj.cut:, coord]
    x = x - x.mean(axis=0)
    n = x.shape[0]
    win = np.hanning(n)
    if x.ndim > 1:
        win = win[:, None]
    spec = np.abs(np.fft.rfft(x * win, n=pad * n, axis=0))
    freqs = 2 * np.pi * np.fft.rfftfreq(pad * n, d=traj.dt)
    spec = spec.reshape(spec.shape[0], -1)
    out = np.empty(spec.shape[1])
    for j in range(spec.shape[1]):
        s = np.log(spec[:, j] + 1e-300)
        k = int(np.argmax(spec[1:, j])) + 1
        if 0 < k < len(s) - 1:
            den = s[k - 1] - 2 * s[k] + s[k + 1]
            off = 0.5 * (s[k - 1] - s[k + 1]) / den if den != 0 else 0.0
        else:
            off = 0.0
        out[j] = freqs[k] + off * (freqs[1] - freqs[0])
    return out if x.ndim > 1 else float(out[0])


def mean_phase_frequency(traj: Trajectory, coord: int = 0):
    """Mean angular velocity of the phase ``-arg(x + i y)`` over the kept window."""
    x = traj.states[traj.cut:, coord]
    y = traj.states[traj.cut:, coord + 1]
    ph = np.unwrap(-np.arctan2(y, x), axis=0)
    T = (len(x) - 1) * traj.dt
    return (ph[-1] - ph[0]) / T


@dataclass
class BandwidthResult:
    bandwidth: float
    lower: float
    upper: float
    omega_d: np.ndarray
    observed: np.ndarray
    locked: np.ndarray
    diagnostic: str = ""


def _locked_run(flags: np.ndarray, start: int) -> tuple[int, int]:
    lo = hi = start
    while lo > 0 and flags[lo - 1]:
        lo -= 1
    while hi < len(flags) - 1 and flags[hi + 1]:
        hi += 1
    return lo, hi


def free_running_frequency(p: DvdpParams, t_settle: float | None = None,
                           t_sample: float = 300.0, dt: float = 0.05) -> float:
    """Mean phase velocity of the undriven oscillator on its limit cycle."""
    if t_settle is None:
        t_settle = 50.0 / max(p.lam, 1e-3) + 200.0
    q = DvdpParams(lam=p.lam, beta=p.beta, F=0.0, omega_d=p.omega_d, r=p.r)
    return float(mean_phase_frequency(integrate_dvdp(q, (0.0, t_settle + t_sample), (2 * p.r, 0.0),
                                                     dt=dt).after(t_settle)))


def classical_bandwidth_scan(p: DvdpParams, halfwidth: float | None = None, points: int = 25,
                             tol: float = 1e-3, t_settle: float | None = None,
                             t_sample: float = 3000.0, dt: float = 0.1, refine_to: float = 2e-4,
                             method: str = "phase", rtol: float = 1e-9) -> BandwidthResult:
    """Width of the contiguous locked drive-frequency interval of the full DvdP model.

    A batch of drive frequencies around the free-running frequency is
    integrated together; probes whose observed frequency is within ``tol`` of
    the drive are locked. Both edges are then refined together with finer
    batches until each bracketing interval is below ``refine_to``.
    ``method`` selects the observed frequency: ``"phase"`` (mean phase
    velocity) or ``"fft"`` (spectral peak of x).
    """
    if method not in ("phase", "fft"):
        raise ValueError(f"unknown method {method!r}")
    if t_settle is None:
        t_settle = 50.0 / max(p.lam, 1e-3) + 200.0
    centre = free_running_frequency(p, t_settle)
    if halfwidth is None:
        halfwidth = 1.5 * hb_bandwidth(max(p.lam_bar, 1e-9), p.beta_bar, p.F_bar) * p.r + 0.01
    freq = classical_observed_frequency if method == "fft" else mean_phase_frequency

    def probe(ws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        traj = integrate_dvdp_batch(p, ws, (0.0, t_settle + t_sample), (2 * p.r, 0.0), dt=dt,
                                    rtol=rtol).after(t_settle)
        obs = np.atleast_1d(freq(traj))
        return obs, np.abs(obs - ws) <= tol

    ws = centre + np.linspace(-halfwidth, halfwidth, points)
    obs, flags = probe(ws)
    all_w, all_o, all_f = list(ws), list(obs), list(flags)
    hits = np.flatnonzero(flags)
    if hits.size == 0:
        return BandwidthResult(0.0, centre, centre, ws, obs, flags, "no locked probe")
    start = int(hits[np.argmin(np.abs(ws[hits] - centre))])
    lo, hi = _locked_run(flags, start)
    diag = []
    # brackets as (inside, outside); None once an edge cannot be refined
    brackets = []
    for inside, outside in ((lo, lo - 1), (hi, hi + 1)):
        if outside < 0 or outside >= len(ws):
            diag.append("locked run reaches the scan edge")
            brackets.append((ws[inside], None))
        else:
            brackets.append((ws[inside], ws[outside]))
    sub_n = 9
    while any(b is not None and abs(b - a) > refine_to for a, b in brackets):
        active = [i for i, (a, b) in enumerate(brackets) if b is not None and abs(b - a) > refine_to]
        subs = [np.linspace(*brackets[i], sub_n + 2)[1:-1] for i in active]
        o, f = probe(np.concatenate(subs))
        all_w += list(np.concatenate(subs)); all_o += list(o); all_f += list(f)
        for j, i in enumerate(active):
            fj = f[j * sub_n:(j + 1) * sub_n]
            k = 0
            while k < sub_n and fj[k]:
                k += 1
            a, b = brackets[i]
            brackets[i] = (subs[j][k - 1] if k > 0 else a, subs[j][k] if k < sub_n else b)
    edges = [a if b is None else 0.5 * (a + b) for a, b in brackets]
    order = np.argsort(all_w)
    lower, upper = min(edges), max(edges)
    return BandwidthResult(float(upper - lower), float(lower), float(upper),
                           np.asarray(all_w)[order], np.asarray(all_o)[order],
                           np.asarray(all_f)[order], "; ".join(diag))


# --------------------------------------------------------------------------
# coupled averaged classification


def annulus_initial_conditions(n: int, seed: int = 0, rmin: float = 0.5, rmax: float = 1.5):
    """``n`` complex amplitudes drawn uniformly from the annulus ``rmin <= |a| <= rmax``."""
    rng = np.random.default_rng(seed)
    rad = np.sqrt(rng.uniform(rmin**2, rmax**2, n))
    ang = rng.uniform(0, 2 * np.pi, n)
    return rad * np.exp(1j * ang)


def classify_coupled_averaged(lam: float, eta: np.ndarray, delta: np.ndarray, beta: float = 0.0,
                              order: int = 1, seed: int = 0, t_min: float = 400.0,
                              t_cap: float = 2.0e4, amp_tol: float = 1e-3,
                              drift_tol: float = 1e-3, dt: float = 0.5):
    """Label cells of the averaged dissipative pair as locked, dead or drifting.

    ``eta`` and ``delta`` are broadcast together and integrated as one batch in
    the frame of oscillator 1. The run length adapts to the slowest linear
    rate at the origin (capped at ``t_cap``). Returns a dict of arrays:
    ``label`` (0 drifting, 1 locked, 2 amplitude death), final amplitudes and
    the phase-difference drift rate.
    """
    eta, delta = np.broadcast_arrays(np.asarray(eta, float), np.asarray(delta, float))
    shape = eta.shape
    e, d = eta.ravel(), delta.ravel()
    n = e.size
    a1 = annulus_initial_conditions(n, seed)
    a2 = annulus_initial_conditions(n, seed + 1)
    rates = np.array([np.max(stability_eigenvalues(lam, ei, 1.0, 1.0 + di).real) for ei, di in zip(e, d)])
    slow = np.min(np.abs(rates[rates != 0])) if np.any(rates != 0) else 1.0
    T = float(np.clip(30.0 / max(slow, 1e-12), t_min, t_cap))

    def fun(t, s):
        A1 = s[0] + 1j * s[1]
        A2 = s[2] + 1j * s[3]
        r1 = 0.5 * lam * (1 - np.abs(A1) ** 2) * A1 - 1.5j * beta * np.abs(A1) ** 2 * A1
        r2 = -1j * d * A2 + 0.5 * lam * (1 - np.abs(A2) ** 2) * A2 - 1.5j * beta * np.abs(A2) ** 2 * A2
        if order == 2:
            f = lambda A: 1j * lam**2 / 8 * (1 - 6 * np.abs(A) ** 2 + 5.5 * np.abs(A) ** 4) * A
            r1, r2 = r1 + f(A1), r2 + f(A2)
        r1 = r1 + 0.5 * e * (A2 - A1)
        r2 = r2 + 0.5 * e * (A1 - A2)
        return np.stack([r1.real, r1.imag, r2.real, r2.imag])

    y0 = np.stack([a1.real, a1.imag, a2.real, a2.imag])
    times, states = _solve(fun, y0, (0.0, T), dt, rtol=1e-9, atol=1e-12)
    A1 = states[:, 0] + 1j * states[:, 1]
    A2 = states[:, 2] + 1j * states[:, 3]
    half = len(times) // 2
    amp = np.maximum(np.abs(A1[-1]), np.abs(A2[-1]))
    # phase difference phi_2 - phi_1 with alpha_k = R_k exp(-i phi_k)
    ph = np.unwrap(-np.angle(A2[half:]) + np.angle(A1[half:]), axis=0)
    drift = np.abs(ph[-1] - ph[0]) / (times[-1] - times[half])
    label = np.where(amp < amp_tol, 2, np.where(drift < drift_tol, 1, 0))
    return {"label": label.reshape(shape), "amplitude": amp.reshape(shape),
            "drift": drift.reshape(shape), "t_end": T, "rates": rates.reshape(shape)}
