"""Numerical laboratory for coherence and entanglement measures.

Subpackages: qmat (dense multipartite linear algebra), sdp (embedded
interior-point solver), measures (entropic and SDP-backed quantities),
discgame (subchannel discrimination), sampler (seeded random ensembles),
harness (inequality suites and reporting).
"""

__version__ = "0.1.0"
