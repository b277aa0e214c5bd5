"""Relative entropies and the rate functions of the empirical measures.

All logarithms are natural.  Closed forms are the production path; the
Legendre (convex-conjugate) route is kept as an independent check.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import kl_div, rel_entr

from .measures import BinnedMeasure, BinnedPairMeasure
from .model import ScalingRegime, edge_probability_at_lambda

MASS_TOL = 1e-9
MAX_ABS_G = 700.0


class InfeasibleConstraint(ValueError):
    pass


@dataclass
class RateValue:
    value: float
    decomposition: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_record(self, inputs=None) -> dict:
        """JSON-ready record ``{inputs_digest, value, decomposition}``."""
        def enc(v):
            return "inf" if isinstance(v, float) and math.isinf(v) else v

        blob = json.dumps(inputs, sort_keys=True, default=_json_default).encode()
        return {
            "inputs_digest": hashlib.sha256(blob).hexdigest(),
            "value": enc(float(self.value)),
            "decomposition": {k: enc(float(v)) for k, v in self.decomposition.items()},
        }


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return repr(obj)


def _masses(m):
    if isinstance(m, (BinnedMeasure, BinnedPairMeasure)):
        return m.masses
    return np.asarray(m, dtype=float)


def _same_partition(*ms):
    # ndarray has a .partition method, so test the type rather than the attribute
    parts = [m.partition for m in ms if isinstance(m, (BinnedMeasure, BinnedPairMeasure))]
    if any(p != parts[0] for p in parts[1:]):
        raise ValueError("measures live on different partitions")


def relative_entropy(p, q) -> float:
    """``sum p log(p/q)`` with ``0 log(0/q) = 0``; ``+inf`` if ``p > 0 = q`` somewhere."""
    _same_partition(p, q)
    pm, qm = _masses(p), _masses(q)
    if pm.shape != qm.shape:
        raise ValueError("measures have different shapes")
    if np.any(pm < 0) or np.any(qm < 0):
        raise ValueError("negative masses")
    mass_gap = float(pm.sum() - qm.sum())
    if abs(mass_gap) <= 1e-12 * max(1.0, float(qm.sum())):
        # equal masses: the termwise nonnegative form avoids -1e-16 round-off
        return float(np.sum(kl_div(pm, qm)))
    return float(np.sum(rel_entr(pm, qm)))


def poisson_divergence(p, q) -> float:
    """``sum p log(p/q) - p + q``: the rate of independent Poisson cell counts."""
    pm, qm = _masses(p), _masses(q)
    if np.any(pm < 0) or np.any(qm < 0):
        raise ValueError("negative masses")
    return float(np.sum(kl_div(pm, qm)))


def mark_rate(omega: BinnedMeasure, ref: BinnedMeasure, tol: float = MASS_TOL) -> RateValue:
    """``H(omega | ref)`` if ``omega`` has unit mass, else ``+inf``."""
    if abs(omega.total - 1.0) > tol:
        return RateValue(math.inf, {"entropy": math.nan, "mass_gate": math.inf})
    h = relative_entropy(omega, ref)
    return RateValue(h, {"entropy": h})


def kernel_matrix(partition, regime: ScalingRegime, method: str = "midpoint") -> np.ndarray:
    return regime.kernel.cell_matrix(partition, regime, method=method)


def pair_reference(omega: BinnedMeasure, regime: ScalingRegime, method: str = "midpoint") -> BinnedPairMeasure:
    """``Psi_bar(a, b) * omega(a) * omega(b)`` on the cell pairs."""
    psi = kernel_matrix(omega.partition, regime, method)
    w = omega.masses
    return BinnedPairMeasure(omega.partition, psi * np.outer(w, w))


def conditional_rate(pi: BinnedPairMeasure, omega: BinnedMeasure, regime: ScalingRegime,
                     method: str = "midpoint") -> RateValue:
    """``1/2 [H(pi | K) + |K| - |pi|]`` with ``K = Psi omega x omega``."""
    _same_partition(pi, omega)
    if not isinstance(pi, BinnedPairMeasure):
        pi = BinnedPairMeasure(omega.partition, pi)
    K = pair_reference(omega, regime, method)
    if not np.isfinite(pi.total):
        return RateValue(math.inf, {"entropy": math.inf, "reference_mass": K.total, "mass": math.inf})
    h = relative_entropy(pi, K)
    value = 0.5 * (h + K.total - pi.total) if math.isfinite(h) else math.inf
    return RateValue(value, {"entropy": h, "reference_mass": K.total, "mass": pi.total})


def joint_rate(omega: BinnedMeasure, pi: BinnedPairMeasure, ref: BinnedMeasure,
               regime: ScalingRegime, method: str = "midpoint") -> RateValue:
    """Mark rate plus conditional connectivity rate."""
    i1 = mark_rate(omega, ref)
    iw = conditional_rate(pi, omega, regime, method)
    return RateValue(i1.value + iw.value, {"mark": i1.value, "conditional": iw.value})


def _check_g(g, n):
    g = np.asarray(g, dtype=float)
    if g.ndim == 0:
        g = np.full((n, n), float(g))
    if g.shape != (n, n):
        raise ValueError(f"test function must have shape {(n, n)}")
    if np.any(np.abs(g) > MAX_ABS_G):
        raise OverflowError("|g| > 700 would overflow exp(g)")
    if not np.allclose(g, g.T):
        raise ValueError("test function must be symmetric")
    return g


def log_mgf_limit(g, omega: BinnedMeasure, regime: ScalingRegime, method: str = "midpoint") -> float:
    """``-1/2 sum (1 - e^g) Psi_bar omega x omega`` over ordered cell pairs."""
    K = pair_reference(omega, regime, method).masses
    g = _check_g(g, len(omega.masses))
    return float(-0.5 * np.sum(-np.expm1(g) * K))


def finite_lambda_log_mgf(g, omega: BinnedMeasure, regime: ScalingRegime, lam: float,
                          method: str = "midpoint") -> float:
    """``(lam^2/2) sum omega(a) omega(b) log(1 - p (1 - e^g))``, ``p = min(1, Psi_bar/lam)``."""
    g = _check_g(g, len(omega.masses))
    psi = kernel_matrix(omega.partition, regime, method)
    p = edge_probability_at_lambda(psi, lam)
    arg = 1.0 + p * np.expm1(g)
    if np.any(arg <= 0):
        raise ValueError("log of a nonpositive argument")
    w = omega.masses
    return float(0.5 * lam**2 * np.sum(np.outer(w, w) * np.log1p(p * np.expm1(g))))


def legendre_objective(g, pi: BinnedPairMeasure, omega: BinnedMeasure, regime: ScalingRegime,
                       method: str = "midpoint") -> float:
    """``<g, pi>/2 - Phi(g)``.

    ``pi`` counts every undirected edge at both ordered pairs, so the pairing
    is taken against ``pi/2``; with that normalization the supremum over
    ``g`` equals the closed form of :func:`conditional_rate`.
    """
    g = _check_g(g, len(omega.masses))
    return float(0.5 * np.sum(g * _masses(pi)) - log_mgf_limit(g, omega, regime, method))


def _conjugate_ascent(pi: np.ndarray, K: np.ndarray, tol: float = 1e-15, max_iter: int = 5000):
    """Entrywise ``sup_g 1/2 [g pi + (1 - e^g) K]`` by Newton ascent in ``u = e^g``.

    Returns the supremum per entry and the maximizing ``g`` (``-inf`` where the
    supremum is a limit).
    """
    pi = np.asarray(pi, dtype=float).ravel()
    K = np.asarray(K, dtype=float).ravel()
    val = np.zeros_like(pi)
    g = np.zeros_like(pi)
    val[(K == 0) & (pi > 0)] = math.inf
    g[(K == 0) & (pi > 0)] = math.inf
    edge = (K > 0) & (pi == 0)
    val[edge] = 0.5 * K[edge]
    g[edge] = -math.inf
    act = (K > 0) & (pi > 0)
    p, k = pi[act], K[act]
    u = np.ones_like(p)
    # bracket from the left: derivative pi/u - K must be positive
    for _ in range(2200):
        left = p / u - k > 0
        if left.all():
            break
        u = np.where(left, u, 0.5 * u)
    converged = False
    for _ in range(max_iter):
        step = u - k * u * u / p  # Newton on pi/u - K, monotone from the left
        u = u + step
        if np.all(np.abs(step) <= tol * u):
            converged = True
            break
    if not converged and len(u):
        raise RuntimeError("Legendre ascent did not converge")
    val[act] = 0.5 * (p * np.log(u) + (1.0 - u) * k)
    g[act] = np.log(u)
    return val, g


def legendre_conditional_rate(pi: BinnedPairMeasure, omega: BinnedMeasure, regime: ScalingRegime,
                              method: str = "midpoint") -> RateValue:
    """``sup_g { <g, pi>/2 - Phi(g) }`` evaluated numerically."""
    _same_partition(pi, omega)
    pm = _masses(pi)
    if not np.allclose(pm, pm.T):
        raise ValueError("pair measure must be symmetric")
    K = pair_reference(omega, regime, method).masses
    vals, g = _conjugate_ascent(pm, K)
    total = float(vals.sum())
    return RateValue(total, {"maximizer_max_abs": float(np.max(np.abs(g[np.isfinite(g)]), initial=0.0))})


# --------------------------------------------------------------------------
# constrained infimum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkConstraint:
    """``{omega : omega(cells) >= threshold}``."""

    cells: tuple[int, ...]
    threshold: float


@dataclass(frozen=True)
class PairConstraint:
    """``{pi : pi(pairs) >= threshold}``; ``pairs=None`` means all cell pairs."""

    pairs: tuple[tuple[int, int], ...] | None
    threshold: float


def _pair_mask(pairs, n):
    mask = np.zeros((n, n), dtype=bool)
    if pairs is None:
        mask[:] = True
        return mask
    for a, b in pairs:
        mask[a, b] = True
    if not np.array_equal(mask, mask.T):
        raise InfeasibleConstraint("pair constraint must be symmetric in its cell pairs")
    return mask


def _min_divergence(ref: np.ndarray, mask: np.ndarray, c: float, simplex: bool) -> float:
    """``min sum kl_div(x, ref)`` s.t. ``sum x[mask] >= c`` (and ``sum x = 1`` on the simplex)."""
    ref = np.asarray(ref, dtype=float).ravel()
    mask = np.asarray(mask, dtype=bool).ravel()
    if not mask.any():
        raise InfeasibleConstraint("constraint selects no cells")
    if simplex and c > 1 + MASS_TOL:
        raise InfeasibleConstraint("threshold exceeds total mass 1")
    if ref[mask].sum() >= c:
        return 0.0
    if ref[mask].sum() == 0:
        return math.inf
    if simplex and c >= 1 - MASS_TOL:
        # all mass forced into the selected cells, proportionally to ref
        return -math.log(ref[mask].sum())
    free = ref > 0
    r, m = ref[free], mask[free]
    scale = r.sum()
    r = r / scale
    cc = c / scale
    x0 = r.copy()
    if simplex:
        x0[m] *= cc / r[m].sum()
        x0[~m] *= (1 - cc) / max(r[~m].sum(), 1e-300)
    else:
        x0[m] *= cc / r[m].sum()

    def f(x):
        return float(np.sum(kl_div(x, r)))

    def grad(x):
        return np.log(np.maximum(x, 1e-300) / r)

    cons = [{"type": "ineq", "fun": lambda x: np.sum(x[m]) - cc, "jac": lambda x: m.astype(float)}]
    if simplex:
        cons.append({"type": "eq", "fun": lambda x: np.sum(x) - 1.0 / scale,
                     "jac": lambda x: np.ones_like(x)})
    res = minimize(f, x0, jac=grad, method="SLSQP", bounds=[(1e-300, None)] * len(r),
                   constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
    if not res.success:
        raise RuntimeError(f"rate minimization failed: {res.message}")
    x = res.x
    if simplex:
        return float(np.sum(rel_entr(x * scale, ref[free])))
    return float(f(x) * scale)


def infimize_rate(constraint, ref: BinnedMeasure, regime: ScalingRegime | None = None,
                  simplex: bool = False, method: str = "midpoint") -> RateValue:
    """Infimum of the relevant rate over a half-space event.

    For :class:`MarkConstraint`, ``ref`` is the reference measure and the
    rate is that of independent Poisson cell counts (``simplex=True``
    restricts to unit-mass ``omega`` instead).  For :class:`PairConstraint`,
    ``ref`` is the conditioning mark measure ``omega`` and the rate is the
    conditional connectivity rate.
    """
    if isinstance(constraint, MarkConstraint):
        mask = np.zeros(ref.partition.n_cells, dtype=bool)
        mask[list(constraint.cells)] = True
        v = _min_divergence(ref.masses, mask, constraint.threshold, simplex)
        return RateValue(v, {"threshold": constraint.threshold,
                             "reference_mass": float(ref.masses[mask].sum())})
    if isinstance(constraint, PairConstraint):
        if regime is None:
            raise ValueError("a pair constraint needs the regime's kernel")
        K = pair_reference(ref, regime, method).masses
        mask = _pair_mask(constraint.pairs, len(ref.masses))
        v = 0.5 * _min_divergence(K, mask, constraint.threshold, simplex=False)
        return RateValue(v, {"threshold": constraint.threshold,
                             "reference_mass": float(K[mask].sum())})
    raise TypeError(f"unsupported constraint {constraint!r}")
