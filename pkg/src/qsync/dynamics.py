"""Steady states, time evolution, two-time correlations and power spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import connected_components

from .fock import DensityMatrix, FockOperator, FockSpace, destroy
from .models import Liouvillian

__all__ = [
    "SteadyStateError",
    "DegenerateSteadyStateError",
    "PropagationError",
    "InsufficientDecayError",
    "NotSettledError",
    "TruncationError",
    "EvolutionResult",
    "Correlation",
    "Spectrum",
    "steady_state",
    "propagate",
    "two_time_correlation",
    "stationary_correlation",
    "spectrum",
    "stationary_spectrum",
    "parabolic_peak",
    "driven_correlation",
    "driven_observed_frequency",
    "DrivenResult",
    "converge_truncation",
    "TruncationReport",
    "invariant_subspace",
]

log = logging.getLogger(__name__)

DIRECT_MAX_DIM = 40_000


class SteadyStateError(RuntimeError):
    def __init__(self, msg: str, residual: float | None = None):
        super().__init__(msg)
        self.residual = residual


class DegenerateSteadyStateError(SteadyStateError):
    pass


class PropagationError(RuntimeError):
    pass


class InsufficientDecayError(ValueError):
    def __init__(self, ratio: float):
        super().__init__(f"correlation has not decayed: |C(T)|/|C(0)| = {ratio:.3g}")
        self.ratio = ratio


class NotSettledError(RuntimeError):
    def __init__(self, distance: float, periods: int):
        super().__init__(
            f"driven state not periodic after {periods} periods "
            f"(period-to-period trace distance {distance:.3g})"
        )
        self.distance = distance
        self.periods = periods


class TruncationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Liouville-space bookkeeping


def invariant_subspace(L: Liouvillian, support: np.ndarray) -> np.ndarray:
    """Smallest union of decoupled blocks of ``L`` containing ``support``.

    Blocks are the connected components of the sparsity graph of the static
    and drive parts together, so the returned index set is closed under
    ``L(t)`` for every ``t``. Symmetric models (phase or parity symmetry)
    split into many small blocks, which is what makes the coupled models
    cheap to solve.
    """
    pattern = abs(L.static)
    if L.drive is not None:
        pattern = pattern + abs(L.drive)
    pattern = pattern + pattern.T
    ncomp, labels = connected_components(pattern, directed=False)
    if ncomp == 1:
        return np.arange(L.static.shape[0])
    wanted = np.unique(labels[np.asarray(support)])
    return np.flatnonzero(np.isin(labels, wanted))


def _diag_indices(d: int) -> np.ndarray:
    return np.arange(d) * (d + 1)


def _restrict(mat: sp.csr_matrix | None, idx: np.ndarray):
    if mat is None:
        return None
    return mat[idx][:, idx].tocsc()


# --------------------------------------------------------------------------
# steady state


def steady_state(L: Liouvillian, method: str = "auto", tol: float = 1e-9,
                 shift: float | None = None, maxiter: int = 50) -> DensityMatrix:
    """Unique steady state of a time-independent Liouvillian.

    ``method="direct"`` replaces one equation of ``L rho = 0`` by the trace
    condition and solves with a sparse LU; ``"inverse"`` runs shifted inverse
    iteration; ``"auto"`` picks direct below ``DIRECT_MAX_DIM`` unknowns.
    """
    if L.is_time_dependent:
        raise ValueError("steady_state needs a time-independent Liouvillian")
    d = L.space.dim
    diag = _diag_indices(d)
    idx = invariant_subspace(L, diag)
    A = _restrict(L.static, idx)
    n = len(idx)
    pos = {k: i for i, k in enumerate(idx)}
    trace_row = np.zeros(n, dtype=complex)
    trace_row[[pos[k] for k in diag]] = 1.0

    if method == "auto":
        method = "direct" if n <= DIRECT_MAX_DIM else "inverse"
    if method == "direct":
        x = _solve_direct(A, trace_row, diag, pos)
    elif method == "inverse":
        x = _solve_inverse(A, trace_row, shift, maxiter)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")

    x = x / (trace_row @ x)
    lnorm = spla.norm(A, 1) or 1.0
    residual = float(np.linalg.norm(A @ x))
    if residual > tol * lnorm:
        raise SteadyStateError(
            f"steady-state residual {residual:.3g} exceeds {tol:g} * ||L|| = {tol * lnorm:.3g}",
            residual,
        )
    full = np.zeros(d * d, dtype=complex)
    full[idx] = x
    rho = full.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(L.space, rho / np.trace(rho).real)


def _solve_direct(A, trace_row, diag, pos) -> np.ndarray:
    n = A.shape[0]
    # replace the equation of the vacuum population by the trace condition
    k = pos[diag[0]]
    B = A.tolil()
    B[k, :] = trace_row
    B = B.tocsc()
    rhs = np.zeros(n, dtype=complex)
    rhs[k] = 1.0
    try:
        lu = spla.splu(B, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(
            f"steady state not unique (singular constrained system: {exc})"
        ) from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("steady state not unique (non-finite solution)")
    # a second null vector shows up as a huge condition number
    if np.linalg.norm(x) > 1e12 * max(1.0, abs(rhs).sum()):
        raise DegenerateSteadyStateError("steady state not unique (ill-conditioned constraint)")
    return x


def _solve_inverse(A, trace_row, shift, maxiter) -> np.ndarray:
    n = A.shape[0]
    if shift is None:
        shift = 1e-8 * (spla.norm(A, 1) or 1.0)
    M = (A - shift * sp.identity(n, format="csc", dtype=complex)).tocsc()
    lu = spla.splu(M, permc_spec="MMD_AT_PLUS_A")
    x = trace_row.conj() / n
    for _ in range(maxiter):
        y = lu.solve(x)
        y = y / np.linalg.norm(y)
        if np.linalg.norm(y - x * (np.vdot(x, y) / abs(np.vdot(x, y)))) < 1e-13:
            x = y
            break
        x = y
    tr = trace_row @ x
    if abs(tr) < 1e-14:
        raise SteadyStateError("inverse iteration converged to a traceless vector")
    return x


# --------------------------------------------------------------------------
# time evolution


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: list[DensityMatrix]
    expectations: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def trace_drift(self) -> float:
        return float(max(abs(s.trace - 1) for s in self.states))


def _rhs_factory(static, drive, omega_d):
    if drive is None:
        return lambda t, y: static @ y
    return lambda t, y: static @ y + np.cos(omega_d * t) * (drive @ y)


def _evolve(L: Liouvillian, x0: np.ndarray, t_grid: np.ndarray, rtol: float, atol: float,
            method: str = "DOP853", idx: np.ndarray | None = None) -> np.ndarray:
    """Integrate ``x' = L(t) x`` and return the samples, shape (len(t_grid), len(x0))."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if idx is None:
        idx = invariant_subspace(L, np.flatnonzero(x0))
    static = _restrict(L.static, idx).tocsr()
    drive = _restrict(L.drive, idx)
    drive = drive.tocsr() if drive is not None else None
    fun = _rhs_factory(static, drive, L.omega_d)
    out = np.zeros((len(t_grid), len(x0)), dtype=complex)
    if len(t_grid) == 1 or idx.size == 0:
        out[0] = x0
        return out
    sol = solve_ivp(fun, (t_grid[0], t_grid[-1]), x0[idx].astype(complex), method=method,
                    t_eval=t_grid, rtol=rtol, atol=atol)
    if not sol.success:
        raise PropagationError(sol.message)
    out[:, idx] = sol.y.T
    return out


def propagate(L: Liouvillian, rho0: DensityMatrix, t_grid: Sequence[float],
              e_ops: dict[str, FockOperator] | None = None, rtol: float = 1e-8,
              atol: float = 1e-10, method: str = "DOP853") -> EvolutionResult:
    """Adaptive Runge-Kutta integration of ``rho' = L(t) rho``; no renormalization."""
    d = L.space.dim
    t_grid = np.asarray(t_grid, dtype=float)
    xs = _evolve(L, rho0.vec(), t_grid, rtol, atol, method)
    states = []
    for x in xs:
        m = x.reshape(d, d)
        states.append(DensityMatrix(L.space, 0.5 * (m + m.conj().T), check=False))
    expectations = {}
    for name, op in (e_ops or {}).items():
        w = op.sparse.T.toarray().reshape(-1)
        expectations[name] = xs @ w
    return EvolutionResult(t_grid, states, expectations)


# --------------------------------------------------------------------------
# correlations and spectra


@dataclass
class Correlation:
    times: np.ndarray
    values: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def decay_ratio(self) -> float:
        c0 = abs(self.values[0]) or 1.0
        tail = max(1, len(self.values) // 50)
        return float(np.max(np.abs(self.values[-tail:])) / c0)


def _trace_weights(op: FockOperator) -> np.ndarray:
    # Tr[op X] = sum_ij op_ji X_ij = w . vec(X)
    return op.sparse.T.toarray().reshape(-1)


def _lowering(L: Liouvillian, which: int) -> FockOperator:
    return destroy(L.space, which)


def two_time_correlation(L: Liouvillian, rho_ss: DensityMatrix, which: int, t_grid,
                         method: str = "ode", rtol: float = 1e-10, atol: float = 1e-12) -> Correlation:
    """``<a^+(t) a(0)>`` in the steady state via the quantum regression theorem.

    Propagates ``a rho_ss`` under ``L`` and traces with ``a^+``. ``method``
    is ``"ode"`` (adaptive RK) or ``"expm"`` (Krylov/Taylor action of the
    exact propagator on a uniform grid).
    """
    if L.is_time_dependent:
        raise ValueError("two_time_correlation needs a time-independent Liouvillian")
    a = _lowering(L, which)
    x0 = (a.sparse @ rho_ss.data).reshape(-1)
    w = _trace_weights(a.dag())
    t_grid = np.asarray(t_grid, dtype=float)
    if method == "ode":
        xs = _evolve(L, x0, t_grid, rtol, atol)
        return Correlation(t_grid, xs @ w)
    if method == "expm":
        return Correlation(t_grid, _expm_grid(L, x0, w, t_grid))
    raise ValueError(f"unknown method {method!r}")


def _expm_grid(L: Liouvillian, x0: np.ndarray, w: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    dts = np.diff(t_grid)
    if len(dts) and not np.allclose(dts, dts[0], rtol=1e-9, atol=0):
        raise ValueError("expm method needs a uniform time grid")
    idx = invariant_subspace(L, np.flatnonzero(x0))
    A = _restrict(L.static, idx)
    y0 = x0[idx]
    wr = w[idx]
    if len(t_grid) == 1:
        return np.array([wr @ y0])
    ys = spla.expm_multiply(A, y0, start=t_grid[0], stop=t_grid[-1], num=len(t_grid), endpoint=True)
    return ys @ wr


def _eig_correlation(A, y, wr, dt, decay, t_chunk, t_cap, cond_max=1e8):
    """Sum of exponentials from a dense eigendecomposition; None if ill conditioned.

    Chunks and the stopping rule mirror the propagating path exactly.
    """
    lam, V = sla.eig(A.toarray())
    if np.linalg.cond(V) > cond_max:
        return None
    coef = (wr @ V) * np.linalg.solve(V, y)
    if np.any(lam.real > 1e-9):
        return None
    c0 = abs(wr @ y)
    values = [np.array([wr @ y])]
    t = 0.0
    nstep = max(2, int(round(t_chunk / dt)))
    while True:
        tt = t + np.arange(nstep + 1) * dt
        chunk = np.concatenate([np.exp(np.outer(tt[k:k + 2048], lam)) @ coef
                                for k in range(0, len(tt), 2048)])
        values.append(chunk[1:])
        t += nstep * dt
        if np.max(np.abs(chunk)) < decay * c0 or t >= t_cap:
            break
        nstep = int(nstep * 1.5)
    vals = np.concatenate(values)
    return Correlation(np.arange(len(vals)) * dt, vals)


def stationary_correlation(L: Liouvillian, rho_ss: DensityMatrix, which: int = 0,
                           dt: float = 0.1, decay: float = 1e-4, t_chunk: float = 200.0,
                           t_cap: float = 2.0e4, method: str = "auto",
                           dense_max: int = 1200) -> Correlation:
    """Correlation on a uniform grid extended until ``|C| < decay * |C(0)|``.

    ``method="auto"`` uses an eigendecomposition of the restricted generator
    when the invariant subspace has at most ``dense_max`` elements and the
    eigenbasis is well conditioned, and ``expm_multiply`` otherwise.
    """
    a = _lowering(L, which)
    x = (a.sparse @ rho_ss.data).reshape(-1)
    w = _trace_weights(a.dag())
    idx = invariant_subspace(L, np.flatnonzero(x))
    A = _restrict(L.static, idx)
    y = x[idx]
    wr = w[idx]
    c0 = abs(wr @ y)
    if c0 == 0:
        raise InsufficientDecayError(float("nan"))
    if method == "auto":
        corr = _eig_correlation(A, y, wr, dt, decay, t_chunk, t_cap) if idx.size <= dense_max else None
        if corr is not None:
            return corr
        method = "expm"
    values = [np.array([wr @ y])]
    t = 0.0
    nstep = max(2, int(round(t_chunk / dt)))
    while True:
        if method == "expm":
            ys = spla.expm_multiply(A, y, start=0.0, stop=nstep * dt, num=nstep + 1, endpoint=True)
        else:
            fun = _rhs_factory(A.tocsr(), None, 0.0)
            grid = np.arange(nstep + 1) * dt
            sol = solve_ivp(fun, (0.0, grid[-1]), y, method="DOP853", t_eval=grid, rtol=1e-8, atol=1e-10)
            if not sol.success:
                raise PropagationError(sol.message)
            ys = sol.y.T
        chunk = ys @ wr
        values.append(chunk[1:])
        y = ys[-1]
        t += nstep * dt
        if np.max(np.abs(chunk)) < decay * c0:
            break
        if t >= t_cap:
            break
        # extend geometrically so slow decays need few restarts
        nstep = int(nstep * 1.5)
    vals = np.concatenate(values)
    times = np.arange(len(vals)) * dt
    return Correlation(times, vals)


@dataclass
class Spectrum:
    freqs: np.ndarray
    values: np.ndarray
    d_omega: float
    t_max: float

    @property
    def span(self) -> tuple[float, float]:
        return float(self.freqs[0]), float(self.freqs[-1])

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.values))

    def peak_frequency(self) -> float:
        return parabolic_peak(self.freqs, self.values)[0]

    def peak_height(self) -> float:
        return parabolic_peak(self.freqs, self.values)[1]

    def fwhm(self) -> float:
        """Full width at half maximum of the main peak (linear interpolation)."""
        k = self.peak_index
        half = self.values[k] / 2
        v, f = self.values, self.freqs
        lo = k
        while lo > 0 and v[lo] > half:
            lo -= 1
        hi = k
        while hi < len(v) - 1 and v[hi] > half:
            hi += 1
        f_lo = f[lo] + (half - v[lo]) * (f[lo + 1] - f[lo]) / (v[lo + 1] - v[lo])
        f_hi = f[hi - 1] + (half - v[hi - 1]) * (f[hi] - f[hi - 1]) / (v[hi] - v[hi - 1])
        return float(f_hi - f_lo)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.d_omega / (2 * np.pi))


def parabolic_peak(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Vertex of the parabola through the maximum sample and its neighbours."""
    k = int(np.argmax(y))
    if k == 0 or k == len(y) - 1:
        return float(x[k]), float(y[k])
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return float(x[k]), float(y1)
    off = 0.5 * (y0 - y2) / denom
    h = x[k + 1] - x[k]
    return float(x[k] + off * h), float(y1 - 0.25 * (y0 - y2) * off)


def spectrum(corr: Correlation, decay: float = 1e-4, check_decay: bool = True,
             pad: int = 1) -> Spectrum:
    """``S(w) = 2 Re int_0^T exp(-i w t) C(t) dt`` by FFT with trapezoid end correction."""
    c = np.asarray(corr.values, dtype=complex)
    if check_decay and corr.decay_ratio >= decay:
        raise InsufficientDecayError(corr.decay_ratio)
    dt = corr.dt
    M = len(c)
    Mp = M * int(pad)
    F = np.fft.fft(c, n=Mp)
    omega = 2 * np.pi * np.fft.fftfreq(Mp, d=dt)
    tail = c[-1] * np.exp(-1j * omega * (M - 1) * dt)
    integral = dt * (F - 0.5 * c[0] - 0.5 * tail)
    S = 2 * integral.real
    order = np.argsort(omega)
    return Spectrum(omega[order], S[order], float(2 * np.pi / (Mp * dt)), float((M - 1) * dt))


def stationary_spectrum(L: Liouvillian, rho_ss: DensityMatrix | None = None, which: int = 0,
                        dt: float = 0.1, decay: float = 1e-4, pad: int = 1,
                        method: str = "auto") -> Spectrum:
    if rho_ss is None:
        rho_ss = steady_state(L)
    corr = stationary_correlation(L, rho_ss, which, dt=dt, decay=decay, method=method)
    return spectrum(corr, decay=decay, pad=pad)


# --------------------------------------------------------------------------
# periodically driven oscillator


@dataclass
class DrivenResult:
    frequency: float
    spectrum: Spectrum
    periods_settled: int
    settle_distance: float
    coherent_fraction: float


def _trace_distance_vec(x: np.ndarray, y: np.ndarray, d: int) -> float:
    diff = (x - y).reshape(d, d)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def driven_correlation(L: Liouvillian, which: int = 0, slices: int = 16, anchors: int = 8,
                       settle: float | None = None, settle_tol: float = 1e-5,
                       max_periods: int = 5000, decay: float = 1e-4, t_cap: float = 1.0e4,
                       rho0: DensityMatrix | None = None, rtol: float = 1e-9,
                       atol: float = 1e-11):
    """Phase-averaged ``<a^+(t + tau) a(t)>`` in the periodic regime.

    The state is propagated period by period until successive periods agree
    to ``settle_tol`` in trace distance (and at least ``settle`` time units
    have elapsed). ``a rho(t_j)`` for ``anchors`` phases ``t_j`` spread over
    one period are then propagated together. Returns ``(corr, info)``; the
    window length follows the decay of the connected part and always spans a
    whole number of drive periods, so the coherent response falls on the
    frequency grid.
    """
    if not L.is_time_dependent:
        raise ValueError("driven_correlation needs a drive")
    if slices % anchors:
        raise ValueError("anchors must divide slices")
    d = L.space.dim
    T = L.period
    w = L.omega_d
    static, drive = L.static, L.drive
    dt = T / slices

    if rho0 is None:
        try:
            rho0 = steady_state(L.undriven())
        except SteadyStateError:
            rho0 = DensityMatrix(L.space, np.diag(np.ones(d) / d).astype(complex))
    x = rho0.vec().astype(complex)

    def fun1(t, y):
        return static @ y + np.cos(w * t) * (drive @ y)

    # settle, a block of periods at a time
    min_periods = int(np.ceil((settle or 0.0) / T))
    block = 10
    k = 0
    dist = np.inf
    t0 = 0.0
    period_states = None
    while True:
        grid = t0 + np.arange(block * slices + 1) * dt
        sol = solve_ivp(fun1, (grid[0], grid[-1]), x, method="DOP853", t_eval=grid,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise PropagationError(sol.message)
        k += block
        x = sol.y[:, -1]
        t0 = grid[-1]
        dist = _trace_distance_vec(sol.y[:, -1], sol.y[:, -1 - slices], d)
        if k >= min_periods and dist < settle_tol:
            period_states = sol.y[:, -1 - slices:-1].T  # phases 0 .. slices-1
            break
        if k >= max_periods:
            raise NotSettledError(dist, k)

    a = destroy(L.space, which)
    A = a.sparse
    w_ad = _trace_weights(a.dag())
    w_a = _trace_weights(a)
    mean_a = period_states @ w_a  # <a>(t_s) over one period
    mean_ad = mean_a.conj()

    starts = np.arange(0, slices, slices // anchors)
    phases = w * starts * dt
    Y = np.stack([(A @ period_states[s].reshape(d, d)).reshape(-1) for s in starts], axis=1)
    nA = len(starts)
    idx = invariant_subspace(L, np.flatnonzero(np.any(Y != 0, axis=1)))
    S0 = static[idx][:, idx].tocsr()
    D0 = drive[idx][:, idx].tocsr()
    Y = Y[idx]
    wr = w_ad[idx]

    def funA(t, y):
        Yt = y.reshape(-1, nA)
        return (S0 @ Yt + (D0 @ Yt) * np.cos(w * t + phases)).reshape(-1)

    chunk = slices * max(4, int(np.ceil(50.0 / T)))
    tot_parts, conn_parts = [], []
    nsamp = 0
    c0 = None
    tau = 0.0
    while True:
        grid = tau + np.arange(chunk + 1) * dt
        sol = solve_ivp(funA, (grid[0], grid[-1]), Y.reshape(-1), method="DOP853", t_eval=grid,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise PropagationError(sol.message)
        vals = np.einsum("i,itj->tj", wr, sol.y.reshape(len(idx), nA, -1).transpose(0, 2, 1)[:, :, :])
        vals = vals[:-1]  # last sample starts the next chunk
        kk = nsamp + np.arange(chunk)
        conn = vals - mean_ad[(starts[None, :] + kk[:, None]) % slices] * mean_a[starts][None, :]
        tot_parts.append(vals.mean(axis=1))
        conn_parts.append(conn.mean(axis=1))
        if c0 is None:
            c0 = abs(conn_parts[0][0]) or 1.0
        nsamp += chunk
        tau = grid[-1]
        Y = sol.y[:, -1]
        if np.max(np.abs(conn_parts[-1])) < decay * c0 or tau >= t_cap:
            break
        chunk = int(chunk * 1.5) // slices * slices
    total = np.concatenate(tot_parts)
    conn = np.concatenate(conn_parts)
    times = np.arange(nsamp) * dt
    info = {
        "periods_settled": k,
        "settle_distance": dist,
        "coherent_fraction": float(np.mean(np.abs(mean_a) ** 2) / max(abs(total[0]), 1e-300)),
        "connected": Correlation(times, conn),
    }
    return Correlation(times, total), info


def driven_observed_frequency(L: Liouvillian, settle: float | None = None, period_count: int | None = None,
                              which: int = 0, slices: int = 16, anchors: int = 8, pad: int = 1,
                              resolution: float | None = None, **kwargs) -> DrivenResult:
    """Observed frequency of a periodically driven oscillator.

    Settles into the periodic regime (at least ``settle`` time units, by
    default ``20 / lam_bar`` supplied by the caller, and until successive
    periods agree to 1e-5 in trace distance), averages the regression
    correlation over ``anchors`` phases of one period, and returns the
    parabolic-interpolated peak of the averaged spectrum. ``resolution``
    zero-pads the window until the frequency grid is at least that fine.
    """
    if not L.is_time_dependent:
        # no drive: the stationary pipeline is the period average
        rho = steady_state(L)
        corr = stationary_correlation(L, rho, which, decay=kwargs.get("decay", 1e-4))
        if resolution is not None:
            pad = max(pad, int(np.ceil(2 * np.pi / (len(corr.values) * corr.dt) / resolution)))
        spec = spectrum(corr, decay=kwargs.get("decay", 1e-4), pad=pad)
        return DrivenResult(spec.peak_frequency(), spec, 0, 0.0, 0.0)
    if period_count is not None:
        settle = max(settle or 0.0, period_count * L.period)
    corr, info = driven_correlation(L, which=which, slices=slices, anchors=anchors,
                                    settle=settle, **kwargs)
    if resolution is not None:
        raw = 2 * np.pi / (len(corr.values) * corr.dt)
        pad = max(pad, int(np.ceil(raw / resolution)))
    spec = spectrum(corr, check_decay=False, pad=pad)
    return DrivenResult(spec.peak_frequency(), spec, info["periods_settled"],
                        info["settle_distance"], info["coherent_fraction"])


# --------------------------------------------------------------------------
# truncation convergence


@dataclass
class TruncationReport:
    N: int
    history: list[dict]


def _tail_population(rho: DensityMatrix) -> float:
    space = rho.space
    p = rho.populations().reshape(space.factors)
    worst = 0.0
    for k, n in enumerate(space.factors):
        marg = p.sum(axis=tuple(i for i in range(space.nmodes) if i != k))
        worst = max(worst, float(marg[n - 2] + marg[n - 1]))
    return worst


def converge_truncation(builder: Callable[..., Liouvillian], params, N_start: int = 6,
                        growth: float = 1.4, N_cap: int = 60, tail_tol: float = 1e-6,
                        height_tol: float = 0.01, which: int = 0, dt: float = 0.1,
                        report: bool = False):
    """Smallest truncation whose steady-state spectrum is converged.

    N grows geometrically; N is accepted when its spectral peak agrees with
    the next larger N (location within one frequency step, height within 1%)
    and its tail population (last two levels) is below ``tail_tol``.
    """
    history = []
    prev = None
    N = int(N_start)
    while True:
        if N > N_cap:
            raise TruncationError(f"truncation not converged below cap N={N_cap}")
        L = builder(params, N)
        try:
            rho = steady_state(L)
            spec = stationary_spectrum(L, rho, which=which, dt=dt)
            entry = {"N": N, "tail": _tail_population(rho), "peak": spec.peak_frequency(),
                     "height": spec.peak_height(), "d_omega": spec.d_omega}
        except (SteadyStateError, InsufficientDecayError) as exc:
            entry = {"N": N, "tail": 1.0, "peak": np.nan, "height": np.nan, "d_omega": np.nan,
                     "error": str(exc)}
        history.append(entry)
        log.debug("truncation probe %s", entry)
        if prev is not None and "error" not in entry and "error" not in prev:
            dw = max(prev["d_omega"], entry["d_omega"])
            ok_peak = abs(entry["peak"] - prev["peak"]) < dw
            ok_height = abs(entry["height"] - prev["height"]) < height_tol * abs(entry["height"])
            if ok_peak and ok_height and prev["tail"] < tail_tol:
                result = prev["N"]
                return TruncationReport(result, history) if report else result
        prev = entry
        if N == N_cap:
            raise TruncationError(f"truncation not converged below cap N={N_cap}")
        N = min(N_cap, max(N + 1, int(np.ceil(N * growth))))
