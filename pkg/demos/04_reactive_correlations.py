"""Position correlations of reactively coupled vdP oscillators.

The exact quantum model develops correlations that peak at an intermediate
nonlinearity; Stuart-Landau oscillators (the weak-nonlinearity limit) share
none.
"""
from qsync.dynamics import steady_state
from qsync.models import CoupledParams, build_coupled_reactive, build_reactive_sl
from qsync.observables import pearson_sigma

print("reactive SL pair:", [round(pearson_sigma(steady_state(build_reactive_sl(g, 20.0, 4))), 12)
                            for g in (0.2, 0.5, 1.0)])
for lam in (0.01, 0.1, 0.3, 1.0, 4.0):
    rho = steady_state(build_coupled_reactive(CoupledParams(lam=lam, r=0.3, delta=0.05, g=0.4), 8))
    print(f"lam={lam:5.2f}  Sigma = {pearson_sigma(rho):+.4f}")
