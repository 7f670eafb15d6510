"""The bivariate Lorenz-curve iteration.

A state holds the two marginal CDFs (L1, L2), the copula density grid c of
the current bivariate law, the marginal densities (l1, l2) and the product
mean D = E[X1 X2]. One step of the map reads, with q_i the current marginal
inverses,

    joint'(x1, x2) = q1(x1) q2(x2) c(x1, x2) / D,

from which the new marginal densities, CDFs and the new copula density
follow by marginalization, cumulative integration and the quantile
transform. For an independence start the copula stays identically 1 and
both marginals follow the univariate Lorenz map, whose exponent recursion
a -> (a+1)/a converges to the golden section.
"""

from dataclasses import dataclass

import numpy as np

from . import diagnostics
from .copulas import CopulaSpec, density_grid
from .errors import (MomentError, NumericalCollapseError, ParameterError,
                     SingularCopulaError)
from .grids import (DEFAULT_GRID_N, GridCdf, bilinear_points, bilinear_product,
                    cumtrapz2d, cumtrapz_uniform, trapezoid_weights, unit_grid)
from .marginals import MarginalSpec, quantile_grid


@dataclass(frozen=True)
class ScenarioSpec:
    """Marginals, copula and run controls for one iteration run."""

    f1: MarginalSpec
    f2: MarginalSpec
    copula: CopulaSpec
    grid_n: int = DEFAULT_GRID_N
    n_max: int = 20
    density_floor: float = 1e-12
    collapse_fraction: float = 0.10

    def __post_init__(self):
        if self.grid_n < 51:
            raise ParameterError(f"grid_n must be >= 51, got {self.grid_n}")
        if self.n_max < 0:
            raise ParameterError(f"n_max must be >= 0, got {self.n_max}")


@dataclass(frozen=True)
class LorenzState:
    """Full state after n applications of the curve map (n = 0 is the first)."""

    n: int
    L1: GridCdf
    L2: GridCdf
    c: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    D: float


def _correct_copula_marginals(c: np.ndarray, w: np.ndarray, passes: int = 3) -> np.ndarray:
    """Row/column renormalization passes toward uniform copula marginals.

    Each pass rescales rows then columns by their trapezoid means; a few
    passes leave both marginal families uniform to second order, which the
    quantile-transform ratio cannot guarantee near compressed corners.
    """
    for _ in range(passes):
        row = c @ w
        c = c / np.where(row > 1e-15, row, 1.0)[:, None]
        col = w @ c
        c = c / np.where(col > 1e-15, col, 1.0)[None, :]
    return c


#: Refinement factor for the 1-D cumulative integrals building the marginal
#: CDFs. Quantile functions can carry sub-grid structure near 0 (heavy
#: left-flat laws); integrating them on a finer grid keeps the first cells
#: honest at negligible cost.
_CUM_REFINE = 8


def _marginal_cdf(q_fn, m: np.ndarray, u: np.ndarray) -> GridCdf:
    """Cumulative of q(x)*m(x) on a refined grid, downsampled to the run grid.

    q_fn evaluates the (possibly steep) current inverse exactly; the smooth
    moment factor m is linearly interpolated between run-grid nodes.
    """
    n = len(u)
    uf = np.linspace(0.0, 1.0, _CUM_REFINE * (n - 1) + 1)
    yf = np.asarray(q_fn(uf), float) * np.interp(uf, u, m)
    return GridCdf(cumtrapz_uniform(yf)[:: _CUM_REFINE])


def _consistent_density(l: np.ndarray, cdf: GridCdf) -> np.ndarray:
    """Normalize a marginal density table and pin its end cells to the CDF.

    Node-sampled densities of clamped unbounded quantiles misstate the mass
    of the first/last grid cell; resetting the endpoint values so the cell
    trapezoids reproduce the CDF increments keeps the tabulated pair
    (density, CDF) consistent for any downstream reconstruction.
    """
    n = len(l)
    w = trapezoid_weights(n)
    l = l / float(w @ l)
    h = 1.0 / (n - 1)
    l[0] = max(0.0, 2.0 * (cdf.values[1] - cdf.values[0]) / h - l[1])
    l[-1] = max(0.0, 2.0 * (cdf.values[-1] - cdf.values[-2]) / h - l[-2])
    return l


def _advance(n_next: int, q1_fn, q2_fn, c: np.ndarray,
             spec: ScenarioSpec) -> LorenzState:
    """Shared core of init_state and step.

    q1_fn, q2_fn evaluate the current marginal inverses (the raw quantile
    functions at initialization); c is the current copula density grid.
    """
    n = spec.grid_n
    u = unit_grid(n)
    w = trapezoid_weights(n)
    q1 = np.asarray(q1_fn(u), float)
    q2 = np.asarray(q2_fn(u), float)
    wq1 = w * q1
    wq2 = w * q2
    D = float(wq1 @ c @ wq2)
    if not np.isfinite(D) or D <= 0.0:
        raise MomentError(f"product mean is {D!r}; the cross-moment must be finite and positive")
    m2 = c @ wq2  # int q2(v) c(x, v) dv, one entry per row node
    m1 = wq1 @ c
    floor = spec.density_floor
    frac_rows = float(np.mean(m2 < floor))
    frac_cols = float(np.mean(m1 < floor))
    frac = frac_rows + frac_cols - frac_rows * frac_cols
    if frac > spec.collapse_fraction:
        raise NumericalCollapseError(
            f"density floor breached on {frac:.0%} of the grid", n_next)

    L1 = _marginal_cdf(q1_fn, m2, u)
    L2 = _marginal_cdf(q2_fn, m1, u)
    l1 = _consistent_density(q1 * m2 / D, L1)
    l2 = _consistent_density(q2 * m1 / D, L2)

    # copula density of the new law at (w1, w2): the joint/product ratio
    # q_i/l_i reduces to D/m_i, which stays finite at the corners
    a1 = D / np.maximum(m2, floor)
    a2 = D / np.maximum(m1, floor)
    x1q = L1.inverse(u)
    x2q = L2.inverse(u)
    c_new = (np.interp(x1q, u, a1)[:, None]
             * np.interp(x2q, u, a2)[None, :]
             * bilinear_product(c, x1q, x2q)) / D
    c_new = _correct_copula_marginals(c_new, w)
    D_new = float((w * x1q) @ c_new @ (w * x2q))
    for arr in (c_new, l1, l2):
        arr.setflags(write=False)
    return LorenzState(n=n_next, L1=L1, L2=L2, c=c_new, l1=l1, l2=l2, D=D_new)


def init_state(spec: ScenarioSpec) -> LorenzState:
    """Apply the curve map once to the seed law (F1, F2, copula) -> state n=0.

    Singular copulas are rejected: their iteration never leaves the
    corresponding Frechet-Hoeffding bound and is handled in closed form by
    bilorenz.bounds.
    """
    if spec.copula.singular:
        raise SingularCopulaError(
            f"{spec.copula} admits no density; use bilorenz.bounds for "
            "extremal starts"
        )
    c = density_grid(spec.copula, spec.grid_n)
    return _advance(0,
                    lambda u: quantile_grid(spec.f1, u),
                    lambda u: quantile_grid(spec.f2, u),
                    c, spec)


def step(s: LorenzState, spec: ScenarioSpec) -> LorenzState:
    """Advance one iteration: state n -> state n+1."""
    return _advance(s.n + 1, s.L1.inverse, s.L2.inverse, s.c, spec)


def iterate_states(spec: ScenarioSpec):
    """Yield states 0..n_max one at a time (memory-lean variant of iterate)."""
    s = init_state(spec)
    yield s
    for _ in range(spec.n_max):
        s = step(s, spec)
        yield s


def iterate(spec: ScenarioSpec):
    """Run the full iteration; returns (states, diagnostics trace).

    Deterministic for a fixed spec. Note each state keeps its full copula
    grid; for long runs on fine grids prefer iterate_states and extract
    what you need per state.
    """
    states = []
    builder = diagnostics.TraceBuilder()
    for s in iterate_states(spec):
        states.append(s)
        builder.add(s)
    return states, builder.finish()


def lorenz_cdf_grid(s: LorenzState) -> np.ndarray:
    """The bivariate CDF of the state tabulated on its own grid.

    Composes the copula CDF (cumulative of the copula density grid) with
    the marginal CDFs, which is exact for the state's grid representation.
    """
    cop = cumtrapz2d(s.c)
    cop /= cop[-1, -1]
    return bilinear_product(cop, s.L1.values, s.L2.values)


def eval_lorenz(s: LorenzState, x1, x2):
    """Evaluate the state's bivariate CDF at (x1, x2) in [0,1]^2."""
    cop = cumtrapz2d(s.c)
    cop /= cop[-1, -1]
    return bilinear_points(cop, s.L1(np.clip(x1, 0.0, 1.0)), s.L2(np.clip(x2, 0.0, 1.0)))


def step_cdf_grid(s: LorenzState, refine: int = 8) -> np.ndarray:
    """The next iterate's CDF read straight off the density recursion.

    Integrates the one-step density q1(x1) q2(x2) c(x1, x2) / D cumulatively
    in the current quantile coordinates; no marginalization, ratio transform
    or renormalization is involved. This is the recursion-side counterpart
    of brute_force_step. Memory grows as (refine*n)^2.
    """
    n = s.L1.n
    uf = np.linspace(0.0, 1.0, refine * (n - 1) + 1)
    h = cumtrapz2d(np.outer(s.L1.inverse(uf), s.L2.inverse(uf))
                   * bilinear_product(s.c, uf, uf))
    h /= h[-1, -1]
    return h[::refine, ::refine]


def _cdf_slopes(g: GridCdf, yf: np.ndarray) -> np.ndarray:
    """Piecewise-constant derivative of a tabulated CDF at refined points."""
    n = g.n
    idx = np.minimum((yf * (n - 1)).astype(int), n - 2)
    return np.diff(g.values)[idx] * (n - 1)


def brute_force_step(s: LorenzState, refine: int = 8) -> np.ndarray:
    """One iteration by direct quadrature, bypassing the copula shortcut.

    Reconstructs the current joint density in the original coordinates,
    integrates u1*u2 against it cumulatively, normalizes, and reads the new
    CDF off at the quantile positions. Serves as the independent
    cross-check of step(), which never forms this 2-D cumulative.

    The joint uses the exact piecewise-constant slopes of the tabulated
    marginal CDFs (node-sampled density values would misplace the mass of
    cells that compress steep quantile regions) and is evaluated on a
    `refine`-times finer grid. Memory grows as (refine*n)^2.
    """
    n = s.L1.n
    u = unit_grid(n)
    yf = np.linspace(0.0, 1.0, refine * (n - 1) + 1)
    joint = (bilinear_product(s.c, s.L1(yf), s.L2(yf))
             * np.outer(_cdf_slopes(s.L1, yf), _cdf_slopes(s.L2, yf)))
    g = cumtrapz2d(np.outer(yf, yf) * joint)
    g /= g[-1, -1]
    return bilinear_product(g, s.L1.inverse(u), s.L2.inverse(u))
