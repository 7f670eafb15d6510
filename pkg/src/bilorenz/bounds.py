"""Closed-form Lorenz curves and marginal recursions at the Frechet-Hoeffding bounds.

At the comonotonic bound the bivariate Lorenz curve collapses to
min(L1+(x1), L2+(x2)) with both marginal sections equal to the normalized
cumulative of F1^{-1}(u) F2^{-1}(u); at the countermonotonic bound it is
max(L1-(x1) + L2-(x2) - 1, 0) built from F1^{-1}(u) F2^{-1}(1-u). Iterating
the curve map keeps the state at the corresponding bound, which reduces the
whole dynamics to one-dimensional marginal recursions:

    upper:  L+(x)  <-  cum [ (L+^{-1})^2 ]            (normalized)
    lower:  L-(x)  <-  cum [ L-^{-1} (1 - L-^{-1}) ]   (normalized)

The upper recursion drives any seed to x^2 (the square law is its fixed
point); the lower recursion preserves the reflection identity
L1-(x) + L2-(1-x) = 1 and its fixed points are exactly the curves
satisfying that identity.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError, MomentError
from .grids import DEFAULT_GRID_N, GridCdf, cumtrapz_uniform, trapz_uniform, unit_grid
from .marginals import MarginalSpec, quantile_grid

#: Adaptive refinement floor/ceiling for the quantile-product integrals.
_REFINE_START = 4097
_REFINE_MAX = 2**21 + 1

_cum_cache: dict = {}


def _quantile_product_cumulative(f1: MarginalSpec, f2: MarginalSpec,
                                 reflect: bool, rtol: float = 1e-10):
    """Cumulative of F1^{-1}(u)*F2^{-1}(u) (or of F1^{-1}(u)*F2^{-1}(1-u)).

    Adaptive-refinement trapezoid on the quantile product.

    The grid doubles until the total integral is stable to `rtol` or the
    node cap is hit (clamped unbounded quantiles cannot converge past the
    clamp, which only matters below every tolerance that uses them).
    """
    key = (f1, f2, reflect)
    if key in _cum_cache:
        return _cum_cache[key]
    n = _REFINE_START
    prev = None
    while True:
        u = np.linspace(0.0, 1.0, n)
        y = quantile_grid(f1, u) * quantile_grid(f2, 1.0 - u if reflect else u)
        total = trapz_uniform(y)
        if not np.isfinite(total) or total <= 0.0:
            raise MomentError(
                f"quantile product integral for ({f1}, {f2}) is not a finite "
                "positive number"
            )
        if prev is not None and abs(total - prev) <= rtol * abs(total) + 1e-300:
            break
        if 2 * (n - 1) + 1 > _REFINE_MAX:
            break
        prev = total
        n = 2 * (n - 1) + 1
    cum = cumtrapz_uniform(y)
    _cum_cache[key] = (u, cum)
    return u, cum


def lorenz_upper_closed(f1: MarginalSpec, f2: MarginalSpec, x1, x2):
    """Bivariate Lorenz curve of the comonotonic coupling of (F1, F2).

    Equals cum(x1 ^ x2) / cum(1) where cum integrates F1^{-1}(u)F2^{-1}(u);
    accepts scalars or (broadcastable) arrays.
    """
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    if np.any((x1 < 0) | (x1 > 1)) or np.any((x2 < 0) | (x2 > 1)):
        raise DomainError("arguments must lie in [0,1]")
    u, cum = _quantile_product_cumulative(f1, f2, reflect=False)
    out = np.interp(np.minimum(x1, x2), u, cum) / cum[-1]
    return float(out) if out.ndim == 0 else out


def lorenz_lower_closed(f1: MarginalSpec, f2: MarginalSpec, x1, x2):
    """Bivariate Lorenz curve of the countermonotonic coupling of (F1, F2).

    Integrates F1^{-1}(u)F2^{-1}(1-u) over [1-x2, x1]; zero when the range
    is empty (x1 <= 1-x2).
    """
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    if np.any((x1 < 0) | (x1 > 1)) or np.any((x2 < 0) | (x2 > 1)):
        raise DomainError("arguments must lie in [0,1]")
    u, cum = _quantile_product_cumulative(f1, f2, reflect=True)
    hi = np.interp(x1, u, cum)
    lo = np.interp(1.0 - x2, u, cum)
    out = np.clip((hi - lo) / cum[-1], 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def upper_seed(f1: MarginalSpec, f2: MarginalSpec, grid_n: int = DEFAULT_GRID_N) -> GridCdf:
    """Shared upper-bound marginal section (identical for both coordinates)."""
    u, cum = _quantile_product_cumulative(f1, f2, reflect=False)
    return GridCdf(np.interp(unit_grid(grid_n), u, cum) / cum[-1])


def lower_seeds(f1: MarginalSpec, f2: MarginalSpec, grid_n: int = DEFAULT_GRID_N):
    """Lower-bound marginal sections (L1-, L2-); reflections of each other."""
    u, cum = _quantile_product_cumulative(f1, f2, reflect=True)
    x = unit_grid(grid_n)
    m1 = np.interp(x, u, cum) / cum[-1]
    m2 = 1.0 - np.interp(1.0 - x, u, cum) / cum[-1]
    m2[0], m2[-1] = 0.0, 1.0
    return GridCdf(m1), GridCdf(m2)


def step_upper_marginal(g: GridCdf) -> GridCdf:
    """One upper-bound iteration: normalized cumulative of the squared inverse.

    Maps power laws x^a to x^{(a+2)/a}; x^2 is the fixed point.
    """
    q = g.inverse(g.nodes)
    y = q * q
    total = trapz_uniform(y)
    if not np.isfinite(total) or total <= 0.0:
        raise GridError("degenerate input: squared inverse has no mass")
    return GridCdf(cumtrapz_uniform(y) / total)


def step_lower_marginal(g: GridCdf) -> GridCdf:
    """One lower-bound iteration: normalized cumulative of q(1-q), q the inverse."""
    q = g.inverse(g.nodes)
    y = q * (1.0 - q)
    total = trapz_uniform(y)
    if not np.isfinite(total) or total <= 0.0:
        raise GridError("degenerate input: q(1-q) has no mass")
    return GridCdf(cumtrapz_uniform(y) / total)


def check_reflection(g1: GridCdf, g2: GridCdf) -> float:
    """Sup over the grid of |g1(x) + g2(1-x) - 1|."""
    if g1.n != g2.n:
        raise GridError("reflection check needs grids of equal size")
    return float(np.abs(g1.values + g2.values[::-1] - 1.0).max())


@dataclass(frozen=True)
class BoundMarginalSeq:
    """Iterates of the marginal recursion at one Frechet-Hoeffding bound."""

    side: str  # "upper" | "lower"
    marginal1: tuple
    marginal2: tuple
    seeded_by: tuple

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise DomainError(f"side must be 'upper' or 'lower', got {self.side!r}")


def frechet_envelope(f1: MarginalSpec, f2: MarginalSpec, n: int,
                     grid_n: int = DEFAULT_GRID_N):
    """Build n iterations of both bound recursions seeded by (F1, F2).

    Returns (upper, lower) marginal sequences with n+1 entries each. The
    upper-side marginals coincide for both coordinates (shared cumulative
    of the quantile product), so both tuples alias the same iterates.
    """
    if n < 0:
        raise DomainError("iteration count must be >= 0")
    up = [upper_seed(f1, f2, grid_n)]
    for _ in range(n):
        up.append(step_upper_marginal(up[-1]))
    lo1, lo2 = lower_seeds(f1, f2, grid_n)
    lows1, lows2 = [lo1], [lo2]
    for _ in range(n):
        lows1.append(step_lower_marginal(lows1[-1]))
        lows2.append(step_lower_marginal(lows2[-1]))
    seeds = (f1, f2)
    upper = BoundMarginalSeq("upper", tuple(up), tuple(up), seeds)
    lower = BoundMarginalSeq("lower", tuple(lows1), tuple(lows2), seeds)
    return upper, lower
