"""Model parameters and Liouvillian builders for (coupled) quantum DvdP oscillators.

All parameters are dimensionless: frequencies in units of the bare
oscillator frequency, ``lam`` the van der Pol and ``beta`` the Duffing
nonlinearity, ``r`` the limit-cycle scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import (
    DensityMatrix,
    FockOperator,
    FockSpace,
    destroy,
    identity,
    spost,
    spre,
    sprepost,
)

__all__ = [
    "DvdpParams",
    "DimensionalParams",
    "CoupledParams",
    "DeepQuantumParams",
    "Liouvillian",
    "dissipator",
    "hamiltonian_superop",
    "approx_hamiltonian",
    "exact_hamiltonian",
    "build_approx_dvdp",
    "build_exact_dvdp",
    "build_rwa_dvdp",
    "build_coupled_dissipative",
    "build_coupled_reactive",
    "build_reactive_sl",
    "build_deep_quantum_sl",
    "mean_field_rhs_approx",
    "mean_field_rhs_exact",
]


@dataclass(frozen=True)
class DvdpParams:
    lam: float
    beta: float = 0.0
    r: float = 1.0
    F: float = 0.0
    omega_d: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.r <= 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if self.F < 0:
            raise ValueError(f"F must be >= 0, got {self.F}")
        if self.omega_d <= 0:
            raise ValueError(f"omega_d must be > 0, got {self.omega_d}")

    @property
    def lam_bar(self) -> float:
        return self.lam * self.r**2

    @property
    def beta_bar(self) -> float:
        return self.beta * self.r**2

    @property
    def F_bar(self) -> float:
        return self.F / self.r

    @classmethod
    def from_scaled(cls, lam_bar: float, beta_bar: float = 0.0, F_bar: float = 0.0,
                    r: float = 1.0, omega_d: float = 1.0) -> DvdpParams:
        return cls(lam=lam_bar / r**2, beta=beta_bar / r**2, r=r, F=F_bar * r, omega_d=omega_d)


@dataclass(frozen=True)
class DimensionalParams:
    """Physical parameters of ``x'' = f cos(W t) - w0^2 x - mu (x^2 - q^2) x' - zeta x^3``."""

    mu: float
    zeta: float
    omega0: float
    q: float
    f: float = 0.0
    Omega_d: float = 1.0

    def to_dimensionless(self, r: float = 1.0) -> DvdpParams:
        return DvdpParams(
            lam=self.mu * self.q**2 / (self.omega0 * r**2),
            beta=self.zeta * self.q**2 / (self.omega0**2 * r**2),
            r=r,
            F=self.f * r / (self.omega0**2 * self.q),
            omega_d=self.Omega_d / self.omega0,
        )

    @classmethod
    def from_dimensionless(cls, p: DvdpParams, omega0: float, q: float) -> DimensionalParams:
        r = p.r
        return cls(
            mu=p.lam * omega0 * r**2 / q**2,
            zeta=p.beta * omega0**2 * r**2 / q**2,
            omega0=omega0,
            q=q,
            f=p.F * omega0**2 * q / r,
            Omega_d=p.omega_d * omega0,
        )


@dataclass(frozen=True)
class CoupledParams:
    """Two identical oscillators, detuning ``delta`` on oscillator 2.

    ``beta`` is only used by the dissipative builder (Duffing term on both
    oscillators); the reactive builder uses the exact vdP model with
    ``beta = 0``.
    """

    lam: float
    r: float = 1.0
    delta: float = 0.0
    eta: float = 0.0
    g: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.lam < 0 or self.r <= 0:
            raise ValueError("need lam >= 0 and r > 0")
        if self.eta < 0 or self.g < 0:
            raise ValueError("couplings must be non-negative")
        if self.eta > 0 and self.g > 0:
            raise ValueError("set either the dissipative (eta) or reactive (g) coupling, not both")


@dataclass(frozen=True)
class DeepQuantumParams:
    kappa: float
    gamma: float
    delta: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0 or self.gamma <= 0:
            raise ValueError("kappa and gamma must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")

    @property
    def delta_bar(self) -> float:
        return self.delta / self.kappa

    @property
    def eta_bar(self) -> float:
        return self.eta / self.kappa

    @classmethod
    def from_reduced(cls, delta_bar: float, eta_bar: float, gamma_over_kappa: float,
                     kappa: float = 1.0) -> DeepQuantumParams:
        return cls(kappa=kappa, gamma=gamma_over_kappa * kappa,
                   delta=delta_bar * kappa, eta=eta_bar * kappa)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """``L(t) = static + cos(omega_d t) * drive`` on row-major vectorized states."""

    space: FockSpace
    static: sp.csr_matrix = field(repr=False)
    drive: sp.csr_matrix | None = field(default=None, repr=False)
    omega_d: float = 0.0
    label: str = ""

    def __post_init__(self):
        d2 = self.space.dim**2
        static = sp.csr_matrix(self.static, dtype=complex)
        if static.shape != (d2, d2):
            raise ValueError(f"superoperator shape {static.shape} != ({d2}, {d2})")
        object.__setattr__(self, "static", static)
        if self.drive is not None:
            drive = sp.csr_matrix(self.drive, dtype=complex)
            if drive.nnz == 0:
                drive = None
            object.__setattr__(self, "drive", drive)

    @property
    def is_time_dependent(self) -> bool:
        return self.drive is not None

    @property
    def period(self) -> float:
        if not self.is_time_dependent:
            raise ValueError("time-independent Liouvillian has no drive period")
        return 2 * np.pi / self.omega_d

    def at(self, t: float) -> sp.csr_matrix:
        if self.drive is None:
            return self.static
        return self.static + np.cos(self.omega_d * t) * self.drive

    def apply(self, rho, t: float = 0.0) -> np.ndarray:
        mat = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
        d = self.space.dim
        return (self.at(t) @ mat.reshape(-1)).reshape(d, d)

    def undriven(self) -> Liouvillian:
        return Liouvillian(self.space, self.static, None, 0.0, self.label)

    def norm(self) -> float:
        return float(sp.linalg.norm(self.static, 1))

    def __add__(self, other: Liouvillian) -> Liouvillian:
        if other.space != self.space:
            raise ValueError("space mismatch")
        if self.drive is not None and other.drive is not None and self.omega_d != other.omega_d:
            raise ValueError("cannot add drives with different frequencies")
        drives = [m for m in (self.drive, other.drive) if m is not None]
        drive = sum(drives[1:], drives[0]) if drives else None
        return Liouvillian(self.space, self.static + other.static, drive,
                           self.omega_d or other.omega_d, self.label or other.label)


def dissipator(c: FockOperator) -> sp.csr_matrix:
    """Superoperator of ``D[c] rho = c rho c^+ - (c^+ c rho + rho c^+ c) / 2``."""
    if c.shape[0] != c.shape[1]:
        raise ValueError("jump operator must be square")
    cd = c.dag()
    cdc = cd @ c
    return sprepost(c, cd) - 0.5 * spre(cdc) - 0.5 * spost(cdc)


def hamiltonian_superop(H: FockOperator) -> sp.csr_matrix:
    """Superoperator of ``-i [H, rho]``."""
    return -1j * (spre(H) - spost(H))


def _check_truncation(space: FockSpace, floor: int, what: str) -> None:
    low = min(space.factors)
    if low < floor:
        raise ValueError(f"{what} needs truncation N >= {floor}, got {space.factors}")


def approx_hamiltonian(space: FockSpace, which: int, lam: float, beta: float, r: float,
                       sl_only: bool = False) -> FockOperator:
    """Static part of the approximate (second-order averaged) DvdP Hamiltonian."""
    a = destroy(space, which)
    ad = a.dag()
    n = ad @ a
    n2 = ad @ ad @ a @ a
    H = n + (0.75 * beta) * n2
    if not sl_only:
        n3 = ad @ ad @ ad @ a @ a @ a
        H = H - (lam**2 * r**4 / 8) * n + (3 * lam**2 * r**2 / 8) * n2 - (11 * lam**2 / 48) * n3
    return H


def exact_hamiltonian(space: FockSpace, which: int, lam: float, beta: float, r: float) -> FockOperator:
    """Static part of the exact DvdP Hamiltonian (r-scaled)."""
    a = destroy(space, which)
    ad = a.dag()
    a2, ad2 = a @ a, ad @ ad
    ad_a3 = ad @ a @ a @ a
    ad3_a = ad @ ad @ ad @ a
    a4, ad4 = a2 @ a2, ad2 @ ad2
    H = ad @ a + (0.75 * beta) * (ad2 @ a2)
    H = H + (beta / 2) * (ad_a3 + ad3_a) + (beta / 8) * (a4 + ad4)
    # linear squeezing-like term fixed by the mean-field alpha* coefficient -lam r^2 / 2
    H = H + (1j * lam * r**2 / 4) * (a2 - ad2)
    H = H - (1j * lam / 4) * (ad_a3 - ad3_a) - (1j * lam / 8) * (a4 - ad4)
    return H


def _approx_single(space: FockSpace, which: int, lam: float, beta: float, r: float,
                   sl_only: bool) -> sp.csr_matrix:
    a = destroy(space, which)
    H = approx_hamiltonian(space, which, lam, beta, r, sl_only)
    return hamiltonian_superop(H) + lam * r**2 * dissipator(a.dag()) + (lam / 2) * dissipator(a @ a)


def _exact_single(space: FockSpace, which: int, lam: float, beta: float, r: float) -> sp.csr_matrix:
    a = destroy(space, which)
    ad = a.dag()
    H = exact_hamiltonian(space, which, lam, beta, r)
    L = hamiltonian_superop(H)
    L = L + lam * dissipator(ad @ a - 0.5 * (ad @ ad))
    L = L + lam * r**2 * dissipator(ad) + (0.75 * lam) * dissipator(a @ a)
    return L


def _drive(space: FockSpace, F: float) -> sp.csr_matrix | None:
    if F == 0:
        return None
    a = destroy(space, 0)
    return hamiltonian_superop((-F / 2) * (a + a.dag()))


def _space(N: int | FockSpace) -> FockSpace:
    return N if isinstance(N, FockSpace) else FockSpace(int(N))


def build_approx_dvdp(p: DvdpParams, N: int, sl_only: bool = False) -> Liouvillian:
    """Approximate quantum DvdP Liouvillian with an exact ``cos(omega_d t)`` drive.

    ``sl_only`` drops the ``lam**2`` Hamiltonian terms, leaving the quantum
    Stuart-Landau model (plus Kerr term if ``beta != 0``).
    """
    space = _space(N)
    _check_truncation(space, 3, "approximate DvdP model")
    if p.lam != 0 and not sl_only:
        _check_truncation(space, 4, "approximate DvdP model with lam != 0 (a^+3 a^3 term)")
    static = _approx_single(space, 0, p.lam, p.beta, p.r, sl_only)
    return Liouvillian(space, static, _drive(space, p.F), p.omega_d if p.F else 0.0,
                       "approx_dvdp" if not sl_only else "sl")


def build_exact_dvdp(p: DvdpParams, N: int) -> Liouvillian:
    space = _space(N)
    _check_truncation(space, 5, "exact DvdP model (a^4 terms)")
    static = _exact_single(space, 0, p.lam, p.beta, p.r)
    return Liouvillian(space, static, _drive(space, p.F), p.omega_d if p.F else 0.0, "exact_dvdp")


def build_rwa_dvdp(p: DvdpParams, N: int) -> Liouvillian:
    """Approximate model in the frame rotating at ``omega_d`` with the drive RWA'd.

    Approximate by construction: only for exploration, never for results
    that must reproduce the time-dependent drive.
    """
    space = _space(N)
    _check_truncation(space, 4, "approximate DvdP model")
    a = destroy(space)
    H = approx_hamiltonian(space, 0, p.lam, p.beta, p.r) - p.omega_d * (a.dag() @ a)
    H = H - (p.F / 4) * (a + a.dag())
    static = hamiltonian_superop(H) + p.lam * p.r**2 * dissipator(a.dag()) + (p.lam / 2) * dissipator(a @ a)
    return Liouvillian(space, static, None, 0.0, "rwa_dvdp")


def _pair_space(N: int | tuple[int, int]) -> FockSpace:
    if isinstance(N, FockSpace):
        return N
    if np.isscalar(N):
        return FockSpace(int(N), int(N))
    return FockSpace(*N)


def build_coupled_dissipative(p: CoupledParams, N: int) -> Liouvillian:
    if p.g > 0:
        raise ValueError("dissipative build requires g = 0")
    space = _pair_space(N)
    _check_truncation(space, 4 if p.lam else 3, "coupled approximate model")
    a1, a2 = destroy(space, 0), destroy(space, 1)
    L = _approx_single(space, 0, p.lam, p.beta, p.r, False) + _approx_single(space, 1, p.lam, p.beta, p.r, False)
    L = L + hamiltonian_superop(p.delta * (a2.dag() @ a2))
    if p.eta:
        L = L + p.eta * dissipator(a1 - a2)
    return Liouvillian(space, L, label="coupled_dissipative")


def build_coupled_reactive(p: CoupledParams, N: int) -> Liouvillian:
    """Two exact vdP oscillators coupled by ``g (a1 a2^+ + a1^+ a2)``."""
    if p.eta > 0:
        raise ValueError("reactive build requires eta = 0")
    space = _pair_space(N)
    _check_truncation(space, 5, "coupled exact model")
    a1, a2 = destroy(space, 0), destroy(space, 1)
    L = _exact_single(space, 0, p.lam, 0.0, p.r) + _exact_single(space, 1, p.lam, 0.0, p.r)
    H = p.delta * (a2.dag() @ a2) + p.g * (a1 @ a2.dag() + a1.dag() @ a2)
    return Liouvillian(space, L + hamiltonian_superop(H), label="coupled_reactive")


def build_reactive_sl(g: float, gamma: float, N: int, kappa: float = 1.0,
                      delta: float = 0.0) -> Liouvillian:
    """Reactively coupled quantum Stuart-Landau pair (gain kappa, two-photon loss gamma)."""
    space = _pair_space(N)
    a1, a2 = destroy(space, 0), destroy(space, 1)
    H = delta * (a2.dag() @ a2) + g * (a1.dag() @ a2 + a2.dag() @ a1)
    L = hamiltonian_superop(H)
    L = L + kappa * (dissipator(a1.dag()) + dissipator(a2.dag()))
    L = L + gamma * (dissipator(a1 @ a1) + dissipator(a2 @ a2))
    return Liouvillian(space, L, label="reactive_sl")


def build_deep_quantum_sl(p: DeepQuantumParams, N: int) -> Liouvillian:
    """Dissipatively coupled SL pair; detuning on oscillator 1."""
    space = _pair_space(N)
    _check_truncation(space, 3, "deep-quantum model")
    a1, a2 = destroy(space, 0), destroy(space, 1)
    L = hamiltonian_superop(p.delta * (a1.dag() @ a1))
    L = L + p.kappa * (dissipator(a1.dag()) + dissipator(a2.dag()))
    L = L + p.gamma * (dissipator(a1 @ a1) + dissipator(a2 @ a2))
    if p.eta:
        L = L + p.eta * dissipator(a1 - a2)
    return Liouvillian(space, L, label="deep_quantum")


def mean_field_rhs_approx(alpha: complex, p: DvdpParams, t: float = 0.0) -> complex:
    """Second-order averaged complex-amplitude equation."""
    A = abs(alpha) ** 2
    lam, r = p.lam, p.r
    return (
        0.5j * p.F * np.cos(p.omega_d * t)
        - 1j * alpha
        - 1.5j * p.beta * A * alpha
        + 0.5 * lam * (r**2 - A) * alpha
        + 1j * lam**2 / 8 * (r**4 - 6 * r**2 * A + 5.5 * A**2) * alpha
    )


def mean_field_rhs_exact(alpha: complex, p: DvdpParams, t: float = 0.0) -> complex:
    """Unaveraged complex-amplitude form of the dimensionless DvdP equation."""
    ac = np.conj(alpha)
    A = abs(alpha) ** 2
    r2 = p.r**2
    return (
        0.5j * p.F * np.cos(p.omega_d * t)
        - 1j * alpha
        - 0.5j * p.beta * (alpha + ac) ** 3
        - 0.5 * p.lam * (alpha**3 + A * alpha - A * ac - ac**3 - r2 * alpha + r2 * ac)
    )
