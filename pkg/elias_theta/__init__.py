"""
Elias-Theta

Certified upper bounds on the minimum Bhattacharyya distance of codes over discrete
memoryless channels, including channels with a zero-error capacity, computed from
degree-rho orthonormal representations of the channel state vectors.
"""

__version__ = "1.0.0"
