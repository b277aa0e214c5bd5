"""Scaling regimes, finite-lambda connection probability and the limiting kernel.

The canonical regime used throughout the package places ``Poisson(lam)``
devices i.i.d. from ``position_law x mark_law`` and connects a pair with
probability ``Psi/lam + O(1/lam**2)``.  The ``paper_scaling`` exponents keep the
``lam**3`` intensity / ``lam**-2`` mark-weight bookkeeping whose product is the
``1/lam`` factor in front of ``Psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .geometry import Ball, Domain, ball_volume

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


# --------------------------------------------------------------------------
# one-dimensional laws (marks, and per-axis position factors)
# --------------------------------------------------------------------------


class Law1D:
    """Probability law on a bounded interval, sampled by inversion."""

    lo: float
    hi: float

    @property
    def support(self) -> tuple[float, float]:
        return self.lo, self.hi

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.ppf(rng.random(size))

    def interval_mass(self, a: float, b: float, closed: bool = False) -> float:
        """Mass of ``[a, b)``, or of ``[a, b]`` when ``closed``."""
        return float(self.cdf(b) - self.cdf(a))

    def quadrature(self, a: float, b: float, n: int = 8):
        """Nodes in ``[a, b]`` with weights summing to the law's mass there."""
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a:
            return np.zeros(0), np.zeros(0)
        x, w = _gauss_legendre(n)
        nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
        weights = 0.5 * (b - a) * w * self.pdf(nodes)
        return nodes, weights

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformLaw(Law1D):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty support [{self.lo}, {self.hi}]")
        if self.lo < 0:
            raise ValueError("radii must be nonnegative")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def to_dict(self) -> dict:
        return {"law": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class PowerLaw(Law1D):
    """Density proportional to ``x**exponent`` on ``[lo, hi]``."""

    lo: float = 0.0
    hi: float = 1.0
    exponent: float = 3.0

    def __post_init__(self):
        if not self.hi > self.lo or self.lo < 0:
            raise ValueError(f"invalid support [{self.lo}, {self.hi}]")
        if self.exponent <= -1 and self.lo == 0:
            raise ValueError("exponent <= -1 is not integrable at 0")
        if self.exponent == -1:
            raise ValueError("exponent -1 not supported")

    def _prim(self, x):
        return np.asarray(x, dtype=float) ** (self.exponent + 1)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        lo, hi = self._prim(self.lo), self._prim(self.hi)
        return (self._prim(x) - lo) / (hi - lo)

    def ppf(self, u):
        lo, hi = self._prim(self.lo), self._prim(self.hi)
        return (lo + np.asarray(u, dtype=float) * (hi - lo)) ** (1.0 / (self.exponent + 1))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        k = self.exponent
        norm = (self.hi ** (k + 1) - self.lo ** (k + 1)) / (k + 1)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, np.abs(x) ** k / norm, 0.0)

    def to_dict(self) -> dict:
        return {"law": "power", "lo": self.lo, "hi": self.hi, "exponent": self.exponent}


@dataclass(frozen=True)
class PointMass(Law1D):
    """Degenerate law: every draw equals ``value``."""

    value: float = 0.1

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("radii must be nonnegative")

    @property
    def lo(self):
        return self.value

    @property
    def hi(self):
        return self.value

    def cdf(self, x):
        return (np.asarray(x, dtype=float) >= self.value).astype(float)

    def ppf(self, u):
        return np.full(np.shape(u), self.value, dtype=float)

    def pdf(self, x):
        raise TypeError("a point mass has no density")

    def interval_mass(self, a, b, closed=False):
        inside = a <= self.value < b or (closed and self.value == b)
        return 1.0 if inside else 0.0

    def quadrature(self, a, b, n=8):
        if a <= self.value <= b:
            return np.array([self.value]), np.array([1.0])
        return np.zeros(0), np.zeros(0)

    def to_dict(self) -> dict:
        return {"law": "point", "value": self.value}


def law_from_dict(spec: dict) -> Law1D:
    kind = spec.get("law", "uniform")
    if kind == "uniform":
        return UniformLaw(float(spec["lo"]), float(spec["hi"]))
    if kind == "power":
        return PowerLaw(float(spec["lo"]), float(spec["hi"]), float(spec.get("exponent", 3.0)))
    if kind == "point":
        return PointMass(float(spec["value"]))
    raise ValueError(f"unknown law {kind!r}")


@dataclass(frozen=True)
class ProductLaw:
    """Position law on a box: independent per-axis factors."""

    axes: tuple[Law1D, ...]

    @classmethod
    def uniform(cls, dom: Domain) -> "ProductLaw":
        return cls(tuple(UniformLaw(lo, hi) for lo, hi in zip(dom.lower, dom.upper)))

    @property
    def dimension(self) -> int:
        return len(self.axes)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random((n, self.dimension))
        return np.column_stack([ax.ppf(u[:, k]) for k, ax in enumerate(self.axes)]).reshape(
            n, self.dimension
        )

    def box_mass(self, lo, hi, closed=None) -> float:
        closed = closed or (False,) * self.dimension
        return float(
            np.prod([ax.interval_mass(a, b, c) for ax, a, b, c in zip(self.axes, lo, hi, closed)])
        )


# --------------------------------------------------------------------------
# connection kernels
# --------------------------------------------------------------------------


class Kernel:
    """Symmetric nonnegative ``Psi(x1, r1, x2, r2)``, vectorized."""

    position_dependent = True

    def evaluate(self, x1, r1, x2, r2) -> np.ndarray:
        raise NotImplementedError

    def cell_matrix(self, partition, regime: "ScalingRegime", dom: Domain | None = None,
                    method: str = "midpoint", order: int = 4) -> np.ndarray:
        """Cell-pair averages of the kernel on ``partition``.

        ``midpoint`` evaluates at cell centres.  ``quadrature`` averages over
        each cell with weights from the regime's laws (Gauss-Legendre per
        axis), falling back to the midpoint for cells of zero reference mass.
        """
        centers, radii = partition.cell_midpoints()
        n = partition.n_cells
        ia, ib = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        mid = self.evaluate(centers[ia.ravel()], radii[ia.ravel()],
                            centers[ib.ravel()], radii[ib.ravel()]).reshape(n, n)
        if method == "midpoint":
            return mid
        if method != "quadrature":
            raise ValueError(f"unknown cell-average method {method!r}")
        nodes = [partition.cell_nodes(c, regime, dom, order, self.position_dependent)
                 for c in range(n)]
        out = mid.copy()
        for a in range(n):
            xa, ra, wa = nodes[a]
            if wa.sum() <= 0:
                continue
            for b in range(a, n):
                xb, rb, wb = nodes[b]
                if wb.sum() <= 0:
                    continue
                i, j = np.meshgrid(np.arange(len(wa)), np.arange(len(wb)), indexing="ij")
                vals = self.evaluate(xa[i.ravel()], ra[i.ravel()], xb[j.ravel()], rb[j.ravel()])
                avg = np.sum(vals * wa[i.ravel()] * wb[j.ravel()]) / (wa.sum() * wb.sum())
                out[a, b] = out[b, a] = avg
        return out

    def supremum(self, regime: "ScalingRegime") -> float | None:
        """Upper bound of the kernel over the regime's support, if known."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class CorollaryKernel(Kernel):
    """``(16/9) pi^2 r1^3 r2^3 Vol(b1 - b2) / Vol(D)^2`` in three dimensions."""

    vol_D: float = 1.0
    position_dependent = False

    def __post_init__(self):
        if self.vol_D <= 0:
            raise ValueError("vol_D must be positive")

    def evaluate(self, x1, r1, x2, r2):
        for x in (x1, x2):
            if x is not None and np.shape(x)[-1] != 3:
                raise ValueError("the corollary kernel is defined in dimension 3 only")
        r1 = np.asarray(r1, dtype=float)
        r2 = np.asarray(r2, dtype=float)
        coef = 16.0 / 9.0 * math.pi**2 / self.vol_D**2
        # (r1 r2)^3 keeps the value bit-identical under swapping the arguments
        return coef * (r1 * r2) ** 3 * ball_volume(r1 + r2, 3)

    def supremum(self, regime):
        r = regime.mark_law.hi
        return float(self.evaluate(None, r, None, r))

    def to_dict(self):
        return {"kind": "corollary", "vol_D": self.vol_D}


@dataclass(frozen=True)
class ConstantKernel(Kernel):
    value: float = 1.0
    position_dependent = False

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("kernel must be nonnegative")

    def evaluate(self, x1, r1, x2, r2):
        shape = np.broadcast(np.asarray(r1), np.asarray(r2)).shape
        return np.full(shape, float(self.value))

    def cell_matrix(self, partition, regime, dom=None, method="midpoint", order=4):
        n = partition.n_cells
        return np.full((n, n), float(self.value))

    def supremum(self, regime):
        return float(self.value)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True, eq=False)
class TableKernel(Kernel):
    """Kernel constant on the cell pairs of a partition."""

    partition: object
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = self.partition.n_cells
        if v.shape != (n, n):
            raise ValueError(f"table shape {v.shape} does not match {n} cells")
        if np.any(v < 0) or not np.allclose(v, v.T, rtol=0, atol=0):
            raise ValueError("kernel table must be symmetric and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def evaluate(self, x1, r1, x2, r2):
        a = self.partition.locate(x1, r1)
        b = self.partition.locate(x2, r2)
        return self.values[a, b]

    def cell_matrix(self, partition, regime, dom=None, method="midpoint", order=4):
        if partition == self.partition:
            return self.values.copy()
        return super().cell_matrix(partition, regime, dom, method, order)

    def supremum(self, regime):
        return float(self.values.max())

    def to_dict(self):
        return {"kind": "table", "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class FunctionKernel(Kernel):
    """User-supplied vectorized ``fn(x1, r1, x2, r2)``."""

    fn: Callable
    position_dependent: bool = True

    def evaluate(self, x1, r1, x2, r2):
        vals = np.asarray(self.fn(x1, r1, x2, r2), dtype=float)
        if np.any(vals < 0) or np.any(~np.isfinite(vals)):
            raise ValueError("kernel function returned negative or non-finite values")
        return vals

    def to_dict(self):
        return {"kind": "function", "name": getattr(self.fn, "__name__", repr(self.fn))}


# --------------------------------------------------------------------------
# regime
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRegime:
    """System scale, sampling laws and connection kernel.

    ``position_law=None`` means uniform on whatever domain the regime is used
    with.  ``paper_scaling`` holds the exponents of the intensity and of the
    mark weight; the pair exponent is ``lam**(e_int + 2*e_mark) * Psi``.
    """

    lam: float
    mark_law: Law1D
    kernel: Kernel
    position_law: ProductLaw | None = None
    paper_scaling: tuple[float, float] = (3.0, -2.0)

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be a nonnegative real, got {self.lam}")
        if self.mark_law.lo < 0:
            raise ValueError("radii must be nonnegative")

    def with_lambda(self, lam: float) -> "ScalingRegime":
        return replace(self, lam=float(lam))

    def position_law_on(self, dom: Domain) -> ProductLaw:
        if self.position_law is None:
            return ProductLaw.uniform(dom)
        if self.position_law.dimension != dom.dimension:
            raise ValueError("position law and domain dimensions differ")
        return self.position_law

    @property
    def pair_exponent_power(self) -> float:
        e_int, e_mark = self.paper_scaling
        return e_int + 2 * e_mark

    def psi(self, x1, r1, x2, r2) -> np.ndarray:
        return self.kernel.evaluate(x1, r1, x2, r2)


def prob_from_exponent(exponent):
    """``1 - exp(-E)``, accurate for small ``E``."""
    e = np.asarray(exponent, dtype=float)
    if np.any(e < 0):
        raise ValueError("negative connection exponent signals an invalid regime")
    out = -np.expm1(-e)
    return float(out) if out.ndim == 0 else out


def _ball_args(b1: Ball, b2: Ball):
    if b1.dimension != b2.dimension:
        raise ValueError("balls live in different dimensions")
    return (np.asarray(b1.center)[None, :], np.array([b1.radius]),
            np.asarray(b2.center)[None, :], np.array([b2.radius]))


def kernel_limit(b1: Ball, b2: Ball, regime: ScalingRegime) -> float:
    """Limiting value of ``lam * p_lam`` for the two balls."""
    return float(regime.psi(*_ball_args(b1, b2))[0])


def connection_exponent(b1: Ball, b2: Ball, regime: ScalingRegime) -> float:
    if regime.lam <= 0:
        raise ValueError("lambda must be positive")
    return regime.lam ** regime.pair_exponent_power * kernel_limit(b1, b2, regime)


def connection_probability(b1: Ball, b2: Ball, regime: ScalingRegime) -> float:
    """Finite-lambda probability ``1 - exp(-mu_lam(b1 - b2) Q_lam(b1) Q_lam(b2))``."""
    return prob_from_exponent(connection_exponent(b1, b2, regime))


def edge_probability_at_lambda(psi, lam: float):
    """Soft-mode pair probability ``min(1, psi / lam)``."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    psi = np.asarray(psi, dtype=float)
    if np.any(psi < 0):
        raise ValueError("kernel values must be nonnegative")
    out = np.minimum(1.0, psi / lam)
    return float(out) if out.ndim == 0 else out


def kernel_from_dict(spec: dict, partition=None) -> Kernel:
    kind = spec.get("kind", "corollary")
    if kind == "corollary":
        return CorollaryKernel(float(spec.get("vol_D", 1.0)))
    if kind == "constant":
        return ConstantKernel(float(spec["value"]))
    if kind == "table":
        if partition is None:
            raise ValueError("a table kernel needs a partition")
        return TableKernel(partition, np.asarray(spec["values"], dtype=float))
    raise ValueError(f"unknown kernel kind {kind!r}")
