"""
Test Package

This package contains all tests for the elias_theta library and CLI.

Test Structure:
- conftest.py: Pytest fixtures for channels, Gram matrices and optimizer options
- test_models.py: Unit tests for model validation and certificate serialization
- test_channel_model.py: Unit tests for state vectors, distances and information quantities
- test_objectives.py: Unit tests for the theta objective strategies
- test_theta_optimizer.py: Tests for certified theta optimization
- test_binary_analytic.py: Unit tests for binary closed forms and the Elias limit
- test_elias_bound.py: Tests for bound points, V-search and envelopes
- test_oracle.py: Tests for the brute-force and randomized oracles
- test_channels.py: Unit tests for built-in channels and channel files
- test_cli.py: End-to-end tests for the command-line interface
"""
