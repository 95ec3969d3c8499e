"""Single Duffing-van der Pol oscillator, classical and quantum.

Run: python demos/01_single_oscillator.py
"""
import numpy as np

from qsync import classical as C
from qsync.dynamics import stationary_spectrum, steady_state
from qsync.models import DvdpParams, build_approx_dvdp
from qsync.observables import is_amplitude_death, wigner_radial

# classical limit cycle: frequency from the FFT peak vs the perturbative value
for lam in (0.25, 0.5, 0.75):
    tr = C.integrate_dvdp(DvdpParams(lam=lam), (0, 800)).after(300)
    print(f"lam={lam:4.2f}  observed {C.classical_observed_frequency(tr):.5f}  "
          f"1 - lam^2/16 = {C.pl_frequency(lam):.5f}")

# entrainment bandwidth: direct scan vs harmonic balance
for beta in (0.0, 1.0):
    p = DvdpParams(lam=0.5, beta=beta, F=0.2)
    scan = C.classical_bandwidth_scan(p, points=15)
    print(f"beta={beta}: scanned bandwidth {scan.bandwidth:.4f}, "
          f"harmonic balance {C.hb_bandwidth(0.5, beta, 0.2):.4f}")
print(f"critical beta for enhancement at lam=0.5: {C.enhancement_threshold(0.5):.4f}")

# quantum version at r = 1: steady state, ring-shaped Wigner function, spectrum
L = build_approx_dvdp(DvdpParams(lam=0.1), 20)
rho = steady_state(L)
W = wigner_radial(rho)
dead, margin = is_amplitude_death(W)
print(f"quantum steady state: <n> = {np.sum(np.arange(20) * rho.populations()):.3f}, "
      f"Wigner peak at r = {W.radii[np.argmax(W.values)]:.2f}, origin-peaked: {dead}")
S = stationary_spectrum(L, rho)
print(f"spectral peak {S.peak_frequency():.4f} (grid spacing {S.d_omega:.4f})")
