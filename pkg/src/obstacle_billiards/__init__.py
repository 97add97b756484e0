"""Billiards on the torus and in the unit square with one small ball obstacle.

Computes transition graphs of admissible itineraries, periodic orbits by
length minimization, event-driven trajectories, and rotation-set estimates
(convex hulls, inscribed radii, analytic bounds, winding numbers).
"""

__version__ = "0.1.0"

from .lattice import BilliardConfig

__all__ = ["BilliardConfig", "__version__"]
