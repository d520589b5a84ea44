"""
Finite-volume solver for nonlocal reaction-diffusion epidemic systems (SIR and SARS
with treatment), with equilibrium, stability and Turing analysis.
"""
