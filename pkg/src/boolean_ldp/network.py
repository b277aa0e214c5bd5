"""Boolean connectivity graphs with uniform-grid broad phase."""

from __future__ import annotations

import io
from dataclasses import dataclass
from itertools import product

import numpy as np

from .geometry import Domain, pairs_intersect
from .model import ScalingRegime, edge_probability_at_lambda
from .sampler import MarkedConfiguration, replica_rng

HARD = "hard"
SOFT = "soft"
_MAX_CELLS_PER_AXIS = 1 << 16


@dataclass(eq=False)
class BooleanNetwork:
    config: MarkedConfiguration
    edges: np.ndarray  # (m, 2), rows i < j, lexicographically sorted
    mode: str

    def __post_init__(self):
        self.edges = canonical_edges(self.edges)
        if len(self.edges) and self.edges.max() >= self.config.n_points:
            raise ValueError("edge index out of range")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.config.n_points)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        buf.write("i,j\n")
        for i, j in self.edges:
            buf.write(f"{i},{j}\n")
        return buf.getvalue()


def edges_from_csv(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    data = [tuple(int(v) for v in r.split(",")) for r in rows[1:]]
    return canonical_edges(np.array(data, dtype=np.int64).reshape(-1, 2))


def canonical_edges(edges) -> np.ndarray:
    """Sorted, deduplicated ``(i, j)`` rows with ``i < j``."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if np.any(e[:, 0] == e[:, 1]):
        raise ValueError("self-loops are not allowed")
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def _all_pairs(n: int) -> np.ndarray:
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j]).astype(np.int64)


def candidate_pairs(config: MarkedConfiguration, dom: Domain, cell_size: float | None = None) -> np.ndarray:
    """Superset of all intersecting pairs from a uniform spatial hash grid.

    Each pair appears at most once, as a row ``(i, j)`` with ``i < j``.
    ``cell_size`` must be at least twice the largest radius.
    """
    n = config.n_points
    if n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    if dom.volume <= 0:
        raise ValueError("degenerate domain")
    reach = 2.0 * float(config.radii.max())
    if cell_size is None:
        cell_size = reach
    elif cell_size < reach:
        raise ValueError(f"cell size {cell_size} below 2*r_max = {reach}")
    L = dom.lengths
    if cell_size > 0:
        per_axis = np.clip(np.floor(L / cell_size), 1, _MAX_CELLS_PER_AXIS).astype(np.int64)
    else:
        per_axis = np.full(dom.dimension, _MAX_CELLS_PER_AXIS, dtype=np.int64)
    width = L / per_axis
    coords = np.floor((config.positions - np.asarray(dom.lower)) / width).astype(np.int64)
    coords = np.clip(coords, 0, per_axis - 1)
    keys = np.ravel_multi_index(tuple(coords.T), tuple(per_axis))

    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    uniq, starts = np.unique(sorted_keys, return_index=True)
    bounds = np.append(starts, n)
    members = {int(k): np.sort(order[bounds[t]:bounds[t + 1]]) for t, k in enumerate(uniq)}

    offsets = np.array(list(product((-1, 0, 1), repeat=dom.dimension)), dtype=np.int64)
    chunks = []
    for key, idx in members.items():
        cell = np.array(np.unravel_index(key, tuple(per_axis)))
        nb = cell + offsets
        if dom.periodic:
            nb = np.mod(nb, per_axis)
        else:
            nb = nb[np.all((nb >= 0) & (nb < per_axis), axis=1)]
        for other in set(np.ravel_multi_index(tuple(nb.T), tuple(per_axis)).tolist()):
            if other == key:
                if len(idx) > 1:
                    a, b = np.triu_indices(len(idx), k=1)
                    chunks.append(np.column_stack([idx[a], idx[b]]))
            elif other > key and other in members:
                jdx = members[other]
                a, b = np.meshgrid(idx, jdx, indexing="ij")
                chunks.append(np.column_stack([a.ravel(), b.ravel()]))
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.vstack(chunks).astype(np.int64)
    return np.sort(pairs, axis=1)


def build_hard(config: MarkedConfiguration, dom: Domain, use_grid: bool = True) -> BooleanNetwork:
    """Edge between ``i`` and ``j`` iff their closed balls intersect."""
    if config.n_points and config.dimension != dom.dimension:
        raise ValueError("configuration and domain dimensions differ")
    pairs = candidate_pairs(config, dom) if use_grid else _all_pairs(config.n_points)
    hit = pairs_intersect(config.positions, config.radii, pairs[:, 0], pairs[:, 1], dom)
    return BooleanNetwork(config, pairs[hit], HARD)


def pair_kernel_values(config: MarkedConfiguration, regime: ScalingRegime, pairs: np.ndarray) -> np.ndarray:
    i, j = pairs[:, 0], pairs[:, 1]
    return regime.psi(config.positions[i], config.radii[i], config.positions[j], config.radii[j])


def build_soft(config: MarkedConfiguration, regime: ScalingRegime, seed, index: int = 0) -> BooleanNetwork:
    """Each pair kept independently with probability ``min(1, Psi/lam)``."""
    pairs = _all_pairs(config.n_points)
    if len(pairs) == 0:
        return BooleanNetwork(config, pairs, SOFT)
    rng = seed if isinstance(seed, np.random.Generator) else replica_rng(seed, index, 1)
    p = edge_probability_at_lambda(pair_kernel_values(config, regime, pairs), regime.lam)
    keep = rng.random(len(pairs)) < p
    return BooleanNetwork(config, pairs[keep], SOFT)
