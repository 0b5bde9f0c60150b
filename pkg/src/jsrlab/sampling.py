"""Seeded random instance generators shared by the verification suites."""
from __future__ import annotations

import numpy as np


def unit_disc(rng: np.random.Generator, size) -> np.ndarray:
    """Complex samples uniform in the closed unit disc."""
    r = np.sqrt(rng.uniform(size=size))
    t = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return r * np.exp(1j * t)


def annulus(rng: np.random.Generator, size, inner: float, outer: float) -> np.ndarray:
    """Complex samples uniform (by area) in ``inner <= |z| <= outer``."""
    r = np.sqrt(rng.uniform(inner ** 2, outer ** 2, size=size))
    t = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return r * np.exp(1j * t)


def random_matrices(rng: np.random.Generator, max_dim: int, max_members: int) -> list[np.ndarray]:
    d = int(rng.integers(1, max_dim + 1))
    m = int(rng.integers(1, max_members + 1))
    return [unit_disc(rng, (d, d)) for _ in range(m)]


def random_upper_triangular(rng: np.random.Generator, d: int, max_members: int) -> list[np.ndarray]:
    m = int(rng.integers(1, max_members + 1))
    return [np.triu(unit_disc(rng, (d, d))) for _ in range(m)]


def random_element(rng: np.random.Generator, dim: int) -> np.ndarray:
    return unit_disc(rng, dim)
