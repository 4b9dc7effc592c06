"""
Services Package

Business logic of the library, one module per concern:
- channel_model: state vectors, Gram matrix, distances, information quantities
- theta_optimizer: certified theta(rho), theta(rho, Q), theta(rho, P, V)
- binary_analytic: closed forms for binary channels and the Elias limit
- elias_bound: finite and asymptotic rate-distance bounds, V-search, envelopes
- oracle: brute-force and randomized verification
- channels: built-in channels and channel files
"""

from elias_theta.services.theta_optimizer import OptimizerOptions, ThetaOptimizer

__all__ = ["OptimizerOptions", "ThetaOptimizer"]
