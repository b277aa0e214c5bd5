"""Partitions of position x radius space and the binned empirical measures."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from .geometry import Domain
from .model import ProductLaw, ScalingRegime, UniformLaw

_EDGE_TOL = 1e-12


class PartitionError(ValueError):
    pass


def _as_edges(edges) -> np.ndarray:
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
        raise PartitionError(f"bin edges must be strictly increasing, got {edges!r}")
    e.setflags(write=False)
    return e


class Partition:
    """Grid of cells ``A_1..A_n`` over ``D x [r_min, r_max]``.

    Bins are half-open ``[lo, hi)`` except the last bin on each axis, which is
    closed, so each point of the support lands in exactly one cell.  Cells
    are numbered in C order over ``(axis_0, ..., axis_{d-1}, radius)``.
    """

    def __init__(self, position_edges, radius_edges):
        self.position_edges = tuple(_as_edges(e) for e in position_edges)
        self.radius_edges = _as_edges(radius_edges)
        if not self.position_edges:
            raise PartitionError("need at least one position axis")
        self.shape = tuple(len(e) - 1 for e in self.position_edges) + (len(self.radius_edges) - 1,)
        self.n_cells = int(np.prod(self.shape))

    @classmethod
    def regular(cls, dom: Domain, bins_per_axis=1, radius_edges=(0.0, 1.0)) -> "Partition":
        bins = np.broadcast_to(np.asarray(bins_per_axis, dtype=int), (dom.dimension,))
        edges = [np.linspace(lo, hi, int(k) + 1) for lo, hi, k in zip(dom.lower, dom.upper, bins)]
        return cls(edges, radius_edges)

    @classmethod
    def single(cls, dom: Domain, r_min: float, r_max: float) -> "Partition":
        return cls.regular(dom, 1, (r_min, r_max))

    @property
    def dimension(self) -> int:
        return len(self.position_edges)

    def __eq__(self, other):
        if not isinstance(other, Partition) or other.shape != self.shape:
            return False
        pairs = zip(self.position_edges + (self.radius_edges,),
                    other.position_edges + (other.radius_edges,))
        return all(np.array_equal(a, b) for a, b in pairs)

    def __hash__(self):
        return hash((self.shape, tuple(e.tobytes() for e in self.position_edges),
                     self.radius_edges.tobytes()))

    def __repr__(self):
        return f"Partition(shape={self.shape})"

    @staticmethod
    def _bin(edges: np.ndarray, values: np.ndarray, what: str) -> np.ndarray:
        idx = np.searchsorted(edges, values, side="right") - 1
        idx = np.where(values == edges[-1], len(edges) - 2, idx)
        bad = (idx < 0) | (idx > len(edges) - 2) | ~np.isfinite(values)
        if np.any(bad):
            v = values[bad][0]
            raise PartitionError(f"{what} {v} lies outside [{edges[0]}, {edges[-1]}]")
        return idx

    def locate(self, positions, radii) -> np.ndarray:
        """Cell index of each (position, radius)."""
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        pos = np.asarray(positions, dtype=float).reshape(len(radii), self.dimension)
        idx = [self._bin(e, pos[:, k], "position") for k, e in enumerate(self.position_edges)]
        idx.append(self._bin(self.radius_edges, radii, "radius"))
        return np.ravel_multi_index(tuple(idx), self.shape)

    def cell_bounds(self, cell: int):
        """``(lo, hi, closed)`` per axis, radius last."""
        multi = np.unravel_index(cell, self.shape)
        lo, hi, closed = [], [], []
        for k, e in enumerate(self.position_edges + (self.radius_edges,)):
            i = multi[k]
            lo.append(e[i])
            hi.append(e[i + 1])
            closed.append(i == len(e) - 2)
        return np.array(lo), np.array(hi), tuple(closed)

    def cell_midpoints(self):
        mids = [0.5 * (e[1:] + e[:-1]) for e in self.position_edges + (self.radius_edges,)]
        grid = np.meshgrid(*mids, indexing="ij")
        flat = np.column_stack([g.ravel() for g in grid])
        return flat[:, :-1], flat[:, -1]

    def uniform_position_law(self) -> ProductLaw:
        return ProductLaw(tuple(UniformLaw(e[0], e[-1]) for e in self.position_edges))

    def cell_nodes(self, cell, regime: ScalingRegime, dom=None, order=4, position_dependent=True):
        """Quadrature nodes ``(positions, radii, weights)`` of the reference law on a cell."""
        lo, hi, _ = self.cell_bounds(cell)
        pos_law = regime.position_law or self.uniform_position_law()
        if position_dependent:
            axes = [ax.quadrature(a, b, order) for ax, a, b in zip(pos_law.axes, lo[:-1], hi[:-1])]
            pts = np.array(list(product(*[a[0] for a in axes]))).reshape(-1, self.dimension)
            pw = np.array([np.prod(w) for w in product(*[a[1] for a in axes])])
        else:
            pts = (0.5 * (lo[:-1] + hi[:-1]))[None, :]
            pw = np.array([pos_law.box_mass(lo[:-1], hi[:-1])])
        rn, rw = regime.mark_law.quadrature(lo[-1], hi[-1], order)
        if len(pw) == 0 or len(rw) == 0:
            return np.zeros((0, self.dimension)), np.zeros(0), np.zeros(0)
        i, j = np.meshgrid(np.arange(len(pw)), np.arange(len(rw)), indexing="ij")
        return pts[i.ravel()], rn[j.ravel()], pw[i.ravel()] * rw[j.ravel()]

    def to_dict(self) -> dict:
        return {
            "position_edges": [e.tolist() for e in self.position_edges],
            "radius_edges": self.radius_edges.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Partition":
        return cls(d["position_edges"], d["radius_edges"])


def _axis_map(fine: np.ndarray, coarse: np.ndarray) -> np.ndarray:
    if abs(fine[0] - coarse[0]) > _EDGE_TOL or abs(fine[-1] - coarse[-1]) > _EDGE_TOL:
        raise PartitionError("partitions cover different ranges")
    pos = np.searchsorted(fine, coarse)
    pos = np.clip(pos, 0, len(fine) - 1)
    if not np.all(np.abs(fine[pos] - coarse) <= _EDGE_TOL):
        raise PartitionError("coarse edges are not a subset of the fine edges")
    mids = 0.5 * (fine[1:] + fine[:-1])
    return np.searchsorted(coarse, mids, side="right") - 1


def coarsening_map(fine: Partition, coarse: Partition) -> np.ndarray:
    """Index of the coarse cell containing each fine cell."""
    if fine.dimension != coarse.dimension:
        raise PartitionError("partitions have different dimensions")
    maps = [_axis_map(f, c) for f, c in zip(fine.position_edges + (fine.radius_edges,),
                                             coarse.position_edges + (coarse.radius_edges,))]
    grids = np.meshgrid(*maps, indexing="ij")
    return np.ravel_multi_index(tuple(g.ravel() for g in grids), coarse.shape)


# --------------------------------------------------------------------------
# measures
# --------------------------------------------------------------------------


def _check_masses(m: np.ndarray):
    if np.any(np.isnan(m)) or np.any(m < 0):
        raise ValueError("measure masses must be nonnegative")


@dataclass(eq=False)
class BinnedMeasure:
    partition: Partition
    masses: np.ndarray

    def __post_init__(self):
        self.masses = np.array(self.masses, dtype=float).reshape(self.partition.n_cells)
        _check_masses(self.masses)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def to_json(self, **extra) -> str:
        doc = {"partition": self.partition.to_dict(),
               "masses": {str(i): float(m) for i, m in enumerate(self.masses)}}
        doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BinnedMeasure":
        doc = json.loads(text)
        part = Partition.from_dict(doc["partition"])
        masses = np.zeros(part.n_cells)
        for k, v in doc["masses"].items():
            masses[int(k)] = float(v)
        return cls(part, masses)


@dataclass(eq=False)
class BinnedPairMeasure:
    partition: Partition
    masses: np.ndarray

    def __post_init__(self):
        n = self.partition.n_cells
        self.masses = np.array(self.masses, dtype=float).reshape(n, n)
        _check_masses(self.masses)
        if not np.allclose(self.masses, self.masses.T, rtol=1e-12, atol=1e-300):
            raise ValueError("pair measure must be symmetric")
        self.masses = 0.5 * (self.masses + self.masses.T)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell_a", "cell_b", "mass"])
        for a, b in zip(*np.nonzero(self.masses)):
            w.writerow([int(a), int(b), repr(float(self.masses[a, b]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, partition: Partition) -> "BinnedPairMeasure":
        n = partition.n_cells
        m = np.zeros((n, n))
        rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
        for row in rows:
            m[int(row["cell_a"]), int(row["cell_b"])] = float(row["mass"])
        return cls(partition, m)


def _network_parts(net):
    config = getattr(net, "config", net)
    edges = getattr(net, "edges", np.zeros((0, 2), dtype=np.intp))
    return config, edges


def empirical_mark_measure(net, part: Partition) -> BinnedMeasure:
    """``L1(A) = #{i : (X_i, R_i) in A} / lam``; accepts a network or a configuration."""
    config, _ = _network_parts(net)
    masses = np.zeros(part.n_cells)
    if config.n_points:
        cells = part.locate(config.positions, config.radii)
        masses = np.bincount(cells, minlength=part.n_cells) / config.lam
    return BinnedMeasure(part, masses)


def empirical_connectivity_measure(net, part: Partition) -> BinnedPairMeasure:
    """Each edge adds ``1/lam`` at (cell_i, cell_j) and at (cell_j, cell_i)."""
    config, edges = _network_parts(net)
    n = part.n_cells
    counts = np.zeros((n, n))
    if len(edges):
        cells = part.locate(config.positions, config.radii)
        a, b = cells[edges[:, 0]], cells[edges[:, 1]]
        np.add.at(counts, (a, b), 1.0)
        np.add.at(counts, (b, a), 1.0)
        counts = counts / config.lam
    return BinnedPairMeasure(part, counts)


def coarsen(m, coarse: Partition):
    """Push a binned (pair) measure onto a coarser partition by summing cells."""
    cmap = coarsening_map(m.partition, coarse)
    n = coarse.n_cells
    if isinstance(m, BinnedPairMeasure):
        out = np.zeros((n, n))
        ia, ib = np.meshgrid(cmap, cmap, indexing="ij")
        np.add.at(out, (ia.ravel(), ib.ravel()), m.masses.ravel())
        return BinnedPairMeasure(coarse, out)
    return BinnedMeasure(coarse, np.bincount(cmap, weights=m.masses, minlength=n))


def reference_measure(regime: ScalingRegime, part: Partition) -> BinnedMeasure:
    """Cell masses of ``position_law x mark_law`` (a probability measure)."""
    pos_law = regime.position_law or part.uniform_position_law()
    masses = np.empty(part.n_cells)
    for c in range(part.n_cells):
        lo, hi, closed = part.cell_bounds(c)
        pm = pos_law.box_mass(lo[:-1], hi[:-1], closed[:-1])
        rm = regime.mark_law.interval_mass(lo[-1], hi[-1], closed[-1])
        masses[c] = pm * rm
    if not np.all(np.isfinite(masses)):
        raise ValueError("cell integration failed")
    return BinnedMeasure(part, masses)
