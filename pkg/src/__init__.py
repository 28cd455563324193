"""
Fock-Space Max-Entropy Toolkit

Grand canonical ensembles of pure states on truncated projective Fock space:
Fubini-Study sampling, chemical-potential solving, comparison with the
operator-exponential state, and coherent-state level-surface probes.
"""

__version__ = "0.1.0"
