"""Reproducible sampling of marked Poisson point processes."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .geometry import Domain
from .model import ScalingRegime

SEED_MASK = (1 << 64) - 1


def replica_rng(master_seed: int, index: int, *extra: int) -> np.random.Generator:
    """Generator for replica ``index`` of a run seeded with ``master_seed``.

    The stream depends only on ``(master_seed, index, *extra)`` so parallel
    sweeps reproduce regardless of how replicas are scheduled.
    """
    ss = np.random.SeedSequence(int(master_seed) & SEED_MASK, spawn_key=(int(index), *extra))
    return np.random.default_rng(ss)


@dataclass(eq=False)
class MarkedConfiguration:
    positions: np.ndarray  # (n, d)
    radii: np.ndarray  # (n,)
    lam: float
    seed: int | None = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2:
            # reshape(0, -1) is ambiguous, so empty inputs must already be 2-D
            pos = pos.reshape(len(self.radii), -1)
        if pos.shape[0] != len(self.radii):
            raise ValueError("positions and radii differ in length")
        self.positions = pos

    @property
    def n_points(self) -> int:
        return len(self.radii)

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, MarkedConfiguration)
            and self.lam == other.lam
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.radii, other.radii)
        )

    def to_text(self, header: str | None = None) -> str:
        """One point per line: ``d`` coordinates, then the radius."""
        buf = io.StringIO()
        buf.write(f"# lam={self.lam!r} seed={self.seed} dimension={self.dimension}\n")
        if header:
            buf.write(f"# {header}\n")
        for x, r in zip(self.positions, self.radii):
            buf.write(" ".join(repr(float(v)) for v in x) + f" {float(r)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, lam: float | None = None, dimension: int | None = None):
        meta = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
            elif line:
                rows.append([float(v) for v in line.split()])
        lam = float(meta["lam"]) if lam is None else lam
        d = int(meta.get("dimension", 0)) if dimension is None else dimension
        seed = meta.get("seed")
        seed = None if seed in (None, "None") else int(seed)
        arr = np.array(rows, dtype=float).reshape(len(rows), d + 1)
        return cls(arr[:, :-1], arr[:, -1], lam, seed)

    def to_json(self) -> str:
        return json.dumps({
            "lam": self.lam,
            "seed": self.seed,
            "dimension": self.dimension,
            "positions": self.positions.tolist(),
            "radii": self.radii.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "MarkedConfiguration":
        doc = json.loads(text)
        pos = np.array(doc["positions"], dtype=float).reshape(len(doc["radii"]), doc["dimension"])
        return cls(pos, doc["radii"], doc["lam"], doc.get("seed"))


def sample_points(regime: ScalingRegime, dom: Domain, rng: np.random.Generator, n: int):
    """``n`` i.i.d. marked points from ``position_law x mark_law``."""
    pos = regime.position_law_on(dom).sample(rng, n)
    radii = regime.mark_law.sample(rng, n)
    return pos, radii


def sample_marked_ppp(regime: ScalingRegime, dom: Domain, seed, index: int = 0) -> MarkedConfiguration:
    """Poisson(lam) count, then that many i.i.d. marked points.

    ``seed`` may be an integer master seed (combined with ``index``) or an
    already-constructed ``numpy.random.Generator``.
    """
    lo, hi = regime.mark_law.support
    if hi < lo:
        raise ValueError("empty mark support")
    if isinstance(seed, np.random.Generator):
        rng, token = seed, None
    else:
        rng, token = replica_rng(seed, index), int(seed)
    n = int(rng.poisson(regime.lam)) if regime.lam > 0 else 0
    pos, radii = sample_points(regime, dom, rng, n)
    return MarkedConfiguration(pos, radii, regime.lam, token)


def sample_fixed_counts(regime: ScalingRegime, partition, counts, seed, index: int = 0,
                        dom: Domain | None = None) -> MarkedConfiguration:
    """Configuration with exactly ``counts[c]`` points in each cell.

    This is the law of the process conditioned on ``L1 = counts / lam``:
    points in a cell are i.i.d. from the reference law restricted to it.
    """
    rng = seed if isinstance(seed, np.random.Generator) else replica_rng(seed, index)
    pos_law = regime.position_law or partition.uniform_position_law()
    all_pos, all_r = [], []
    for cell, k in enumerate(np.asarray(counts, dtype=int)):
        if k == 0:
            continue
        lo, hi, _ = partition.cell_bounds(cell)
        cols = []
        for ax, a, b in zip(pos_law.axes, lo[:-1], hi[:-1]):
            cols.append(ax.ppf(rng.uniform(ax.cdf(a), ax.cdf(b), k)))
        m = regime.mark_law
        if m.lo == m.hi:
            r = np.full(k, m.lo)
        else:
            r = m.ppf(rng.uniform(m.cdf(lo[-1]), m.cdf(hi[-1]), k))
        all_pos.append(np.column_stack(cols))
        all_r.append(r)
    d = partition.dimension
    pos = np.vstack(all_pos) if all_pos else np.zeros((0, d))
    radii = np.concatenate(all_r) if all_r else np.zeros(0)
    return MarkedConfiguration(pos, radii, regime.lam, None if isinstance(seed, np.random.Generator) else int(seed))
