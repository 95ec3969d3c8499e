"""Amplitude death on resonance in the deep quantum regime.

Two dissipatively coupled Stuart-Landau oscillators with strong two-photon
loss reduce to two qubits. The closed-form steady state predicts death at
zero detuning once the coupling exceeds a critical value; the full bosonic
model agrees.
"""
import numpy as np
from scipy.optimize import brentq

from qsync.dynamics import steady_state
from qsync.fock import partial_trace
from qsync.models import DeepQuantumParams, build_deep_quantum_sl
from qsync.observables import is_amplitude_death, wigner_radial
from qsync.oracles import two_level_eta_star, two_level_sigma, two_level_steady_state

print(f"two-level critical coupling on resonance: eta* = {two_level_eta_star():.4f}")


def margin(eta, ratio=100.0):
    rho = steady_state(build_deep_quantum_sl(DeepQuantumParams.from_reduced(0.0, eta, ratio), 4))
    return is_amplitude_death(wigner_radial(partial_trace(rho, 0)))[1]


print(f"bosonic model (gamma/kappa = 100) flips at eta = {brentq(margin, 0.8, 1.6, xtol=1e-4):.4f}")

# the projected bosonic state converges to the oracle as kappa/gamma -> 0
N = 4
sel = [n1 * N + n2 for n1 in (0, 1) for n2 in (0, 1)]
for ratio in (20, 50, 100, 200):
    rho = steady_state(build_deep_quantum_sl(DeepQuantumParams.from_reduced(1.0, 2.0, ratio), N)).data
    P = rho[np.ix_(sel, sel)]
    P /= np.trace(P)
    err = np.abs(P - two_level_steady_state(1.0, 2.0).matrix()).max()
    print(f"gamma/kappa = {ratio:3d}: max element error {err:.2e}")

for eta in (1.0, 10.0, 1e4):
    print(f"Sigma(delta=0, eta={eta:g}) = {two_level_sigma(0.0, eta):.5f}")
