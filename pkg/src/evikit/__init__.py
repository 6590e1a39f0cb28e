"""evikit: expected variational inequalities over polytopes.

Computes approximate solutions of expected variational inequalities with
affine-endomorphism deviation classes by the ellipsoid-against-hope method
and by linear-swap-regret minimization, verifies them with LP gap oracles,
and exposes the game-theoretic layer (coarse/linear/anonymous correlated
equilibrium gaps, marginal region scans) plus smoothness and collapse
certificates.
"""

__version__ = "0.1.0"
