"""Quantum and classical Duffing-van der Pol oscillators.

Lindblad builders for single and coupled oscillators, steady states and
spectra, phase-space and correlation observables, the classical averaged
and full ODE models, closed-form few-level references and a sweep CLI.
"""

__version__ = "0.1.0"
