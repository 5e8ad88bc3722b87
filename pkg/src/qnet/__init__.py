"""Driven four-site quantum network: Floquet-engineered transport with dephasing.

Submodules
----------
qops          dense qubit operators, partial trace, entropies
network       network geometry, energy ladder, lab-frame Hamiltonian
floquet       Bessel series, effective couplings, rotating-frame map
lindblad      master equation and time propagation
metrics       integrated population and efficiency
correlations  entanglement of formation, discord, mutual information
scenarios     configs, initial states, sweeps and presets
"""

__version__ = "0.1.0"
