"""
Smooth Copula Bootstrap test suite
Estimators, simulation harness, CLI and API
"""
