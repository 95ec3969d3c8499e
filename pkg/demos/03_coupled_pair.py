"""Dissipatively coupled pair: locking, amplitude death and the classical map.

The classical averaged equations give a sharp boundary; the quantum pair at
r = 1 is classified from its two spectra and reduced Wigner functions.
"""
import numpy as np

from qsync import classical as C
from qsync.models import CoupledParams, build_coupled_dissipative
from qsync.observables import coupled_frequency_locking

lam = 0.5
eta = np.linspace(0.1, 1.5, 8)
delta = np.linspace(0.05, 1.3, 8)
E, D = np.meshgrid(eta, delta, indexing="ij")
labels = C.classify_coupled_averaged(lam, E, D)["label"]
mark = {0: ".", 1: "L", 2: "D"}
print("classical averaged pair, lam = 0.5 (rows: delta, columns: eta)")
for j in reversed(range(len(delta))):
    print(f"  {delta[j]:4.2f} " + " ".join(mark[int(v)] for v in labels[:, j]))
print("boundary |delta| at eta = 1:", round(C.coupled_sync_boundary(lam, 1.0), 4))

print("\nquantum pair at r = 1, eta = 1.375, delta = 0.6")
for lam in (0.2, 0.5, 1.0):
    c = coupled_frequency_locking(build_coupled_dissipative(
        CoupledParams(lam=lam, r=1.0, delta=0.6, eta=1.375), 8))
    print(f"  lam={lam}: {c.label:17s} peaks {c.omega1:.3f} / {c.omega2:.3f}  Sigma {c.sigma:.3f}")
