"""Euclidean primitives: domain boxes, balls and Minkowski-difference volumes."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np

BOUNDED = "bounded"
PERIODIC = "periodic"


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower, upper]`` in ``R^d``, optionally a torus."""

    dimension: int = 3
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    topology: str = BOUNDED

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")
        d = int(self.dimension)
        lo = (0.0,) * d if self.lower is None else tuple(float(v) for v in self.lower)
        hi = (1.0,) * d if self.upper is None else tuple(float(v) for v in self.upper)
        if len(lo) != d or len(hi) != d:
            raise ValueError("corner vectors must have length equal to the dimension")
        if not all(h > l for l, h in zip(lo, hi)):
            raise ValueError("upper corner must exceed lower corner componentwise")
        if self.topology not in (BOUNDED, PERIODIC):
            raise ValueError(f"unknown topology {self.topology!r}")
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, side: float = 1.0, dimension: int = 3, topology: str = BOUNDED) -> "Domain":
        return cls(dimension, (0.0,) * dimension, (float(side),) * dimension, topology)

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def periodic(self) -> bool:
        return self.topology == PERIODIC

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p >= np.asarray(self.lower)) & (p <= np.asarray(self.upper)), axis=-1)

    def displacement(self, a, b) -> np.ndarray:
        """Vector ``b - a``; minimum-image convention on a torus."""
        delta = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.periodic:
            L = self.lengths
            delta = delta - L * np.round(delta / L)
        return delta

    def distance(self, a, b) -> np.ndarray:
        return np.linalg.norm(self.displacement(a, b), axis=-1)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "topology": self.topology,
        }


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float
    dimension: int = field(init=False)

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        if self.radius < 0:
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "dimension", len(c))

    def validate(self, dom: Domain) -> None:
        if self.dimension != dom.dimension:
            raise ValueError(
                f"dimension mismatch: ball in R^{self.dimension}, domain in R^{dom.dimension}"
            )
        if not dom.contains(self.center)[0]:
            raise ValueError(f"ball center {self.center} lies outside the domain")


def ball_volume(radius, dimension: int):
    """Lebesgue volume of a ``dimension``-ball; vectorized over ``radius``."""
    unit = pi ** (dimension / 2) / gamma(dimension / 2 + 1)
    return unit * np.asarray(radius, dtype=float) ** dimension


def ball_intersects(b1: Ball, b2: Ball, dom: Domain) -> bool:
    """Closed-ball intersection test: tangent balls count as intersecting."""
    b1.validate(dom)
    b2.validate(dom)
    # squared form, identical to pairs_intersect so both agree at tangency
    delta = dom.displacement(b1.center, b2.center)
    reach = b1.radius + b2.radius
    return bool(np.dot(delta, delta) <= reach * reach)


def minkowski_diff_volume(b1: Ball, b2: Ball) -> float:
    """Volume of ``{z1 - z2 : z1 in b1, z2 in b2}``, a ball of radius ``r1 + r2``."""
    if b1.dimension != b2.dimension:
        raise ValueError("balls live in different dimensions")
    return float(ball_volume(b1.radius + b2.radius, b1.dimension))


def pairs_intersect(positions, radii, i, j, dom: Domain) -> np.ndarray:
    """Vectorized closed-ball test for index arrays ``i``, ``j``."""
    positions = np.asarray(positions, dtype=float)
    radii = np.asarray(radii, dtype=float)
    i = np.asarray(i, dtype=np.intp)
    j = np.asarray(j, dtype=np.intp)
    if i.size == 0:
        return np.zeros(0, dtype=bool)
    delta = dom.displacement(positions[i], positions[j])
    dist2 = np.einsum("ij,ij->i", delta, delta)
    reach = radii[i] + radii[j]
    return dist2 <= reach * reach
