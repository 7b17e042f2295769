"""Probability-simplex enumeration and sampling helpers."""

from __future__ import annotations

from itertools import combinations
from typing import Iterator

import numpy as np

from .errors import ValidationError


def simplex_grid(dim: int, resolution: int) -> Iterator[tuple[float, ...]]:
    """Yield all points of the simplex over `dim` cells with masses k/resolution.

    Enumeration order is lexicographic in the mass vector, which callers rely
    on for deterministic tie-breaking.
    """
    if dim < 1:
        raise ValidationError(f"simplex dimension must be >= 1, got {dim}")
    if resolution < 1:
        raise ValidationError(f"grid resolution must be >= 1, got {resolution}")
    if dim == 1:
        yield (1.0,)
        return
    # stars and bars: split `resolution` units across `dim` cells
    for bars in combinations(range(resolution + dim - 1), dim - 1):
        counts = []
        prev = -1
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(resolution + dim - 2 - prev)
        yield tuple(c / resolution for c in counts)


def simplex_grid_size(dim: int, resolution: int) -> int:
    from math import comb

    return comb(resolution + dim - 1, dim - 1)


def sample_simplex(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Draw one point from the flat (symmetric Dirichlet) density on the simplex."""
    if dim == 1:
        return np.ones(1)
    return rng.dirichlet(np.ones(dim))
