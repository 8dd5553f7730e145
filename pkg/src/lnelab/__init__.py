"""Numerical Lipschitz-normal-embedding tests for semialgebraic germs."""
__version__ = "0.1.0"
