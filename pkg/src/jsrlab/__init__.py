"""Certified joint spectral radius enclosures and Berger-Wang checks."""
