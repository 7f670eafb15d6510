"""Per-iteration measurements: rank correlations, golden-section distance,
diagonal crossings, compound inverses, and the lower-bound normalizing
integrals."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MultipleCrossingsError
from .grids import (GridCdf, cumtrapz2d, trapezoid_weights, trapz_uniform,
                    unit_grid, validate_density_grid)

#: Golden-section exponent, the limit power law of the iterated marginals.
GOLDEN_EXPONENT = (1.0 + np.sqrt(5.0)) / 2.0

#: Default probe abscissae for the compound-inverse samples.
PHI_PROBES = (0.1, 0.25, 0.5, 0.75, 0.9)

#: Interior clip for measurements that only make sense on compact subsets
#: of the open interval/square.
INTERIOR_CLIP = 0.05


def kendall_tau(c: np.ndarray) -> float:
    """Kendall's tau of a copula density grid: 4 * int C dC - 1."""
    validate_density_grid(c)
    w = trapezoid_weights(c.shape[0])
    cdf = cumtrapz2d(c)
    return float(4.0 * (w @ (cdf * c) @ w) - 1.0)


def spearman_rho(c: np.ndarray) -> float:
    """Spearman's rho of a copula density grid: 12 * int C du dv - 3."""
    validate_density_grid(c)
    w = trapezoid_weights(c.shape[0])
    return float(12.0 * (w @ cumtrapz2d(c) @ w) - 3.0)


def sup_power_law_error(g: GridCdf, a: float) -> float:
    """Sup over the grid of |g(x) - x^a|."""
    if not a > 0:
        raise DomainError("power-law exponent must be > 0")
    return float(np.abs(g.values - g.nodes**a).max())


def power_law_exponent_fit(g: GridCdf, lo: float = 0.1, hi: float = 0.9) -> float:
    """Least-squares slope of log g(x) against log x over nodes in [lo, hi]."""
    x = g.nodes
    keep = (x >= lo) & (x <= hi) & (g.values > 0)
    lx = np.log(x[keep])
    ly = np.log(g.values[keep])
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)


def compound_inverse(states, i: int, x):
    """Compose the marginal grid inverses of states 0..n, right to left.

    The n-th compound applies state n's inverse first and state 0's last;
    0 and 1 are exact fixed points of every composition.
    """
    if i not in (1, 2):
        raise DomainError("margin index must be 1 or 2")
    y = np.asarray(x, float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    for s in reversed(list(states)):
        g = s.L1 if i == 1 else s.L2
        y = g.inverse(y)
    return float(y[0]) if scalar else y


def crossing_point(g: GridCdf, zero_tol: float = 1e-9):
    """Unique interior solution of g(x) = x, if any.

    Returns None when the curve is strictly sub- or super-diagonal on all
    interior nodes, and None as well when it coincides with the diagonal
    (degenerate case: every point is a fixed point). More than one sign
    change raises MultipleCrossingsError.
    """
    x = g.nodes
    d = g.values - x
    signs = np.zeros(len(d), dtype=int)
    signs[d > zero_tol] = 1
    signs[d < -zero_tol] = -1
    inner = signs[1:-1]
    nz = inner[inner != 0]
    if len(nz) == 0:
        return None  # degenerate: diagonal within tolerance everywhere
    flips = np.nonzero(nz[1:] != nz[:-1])[0]
    if len(flips) == 0:
        return None  # strictly one-sided
    if len(flips) > 1:
        raise MultipleCrossingsError(
            f"{len(flips)} diagonal crossings found; expected at most one"
        )
    # locate the single sign change on the full node set and interpolate
    lo = None
    prev_sign, prev_idx = 0, None
    for k in range(1, len(d) - 1):
        if signs[k] == 0:
            continue
        if prev_sign != 0 and signs[k] != prev_sign:
            lo = prev_idx
            hi = k
            break
        prev_sign, prev_idx = signs[k], k
    if lo is None:
        return None
    # piecewise-linear root of d between nodes lo..hi (zeros in between count
    # as the crossing itself)
    if hi - lo > 1:
        return float(x[(lo + hi) // 2])
    x0, x1 = x[lo], x[hi]
    d0, d1 = d[lo], d[hi]
    return float(x0 + (x1 - x0) * d0 / (d0 - d1))


def denominator_sequence(seq) -> list:
    """Normalizing integrals I_n = int q(1-q) du along a lower-bound sequence.

    Even- and odd-index subsequences are each nondecreasing; every value
    lies in (0, 1/4] because w(q) = q(1-q) <= 1/4.
    """
    if seq.side != "lower":
        raise DomainError("denominator sequence is defined for the lower side")
    out = []
    for g in seq.marginal1:
        q = g.inverse(g.nodes)
        out.append(float(trapz_uniform(q * (1.0 - q))))
    return out


def independence_gap(c: np.ndarray, clip: float = INTERIOR_CLIP) -> float:
    """Sup of |c(u,v) - 1| over the clipped interior [clip, 1-clip]^2."""
    validate_density_grid(c)
    n = c.shape[0]
    lo = int(np.ceil(clip * (n - 1) - 1e-12))
    hi = n - lo
    return float(np.abs(c[lo:hi, lo:hi] - 1.0).max())


@dataclass(frozen=True)
class IterationRecord:
    n: int
    tau: float
    rho: float
    sup_err_phi1: float
    sup_err_phi2: float
    crossing1: float | None
    crossing2: float | None
    independence_gap: float
    phi1: dict = field(default_factory=dict)
    phi2: dict = field(default_factory=dict)
    i_n: float | None = None


@dataclass(frozen=True)
class DiagnosticsTrace:
    records: tuple

    def __post_init__(self):
        for r in self.records:
            for v in (r.tau, r.rho, r.sup_err_phi1, r.sup_err_phi2, r.independence_gap):
                if not np.isfinite(v):
                    raise DomainError(f"non-finite diagnostic at iteration {r.n}")

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


class TraceBuilder:
    """Incrementally assemble a DiagnosticsTrace from a state stream.

    Keeps only the (small) marginal CDFs of past states, so the caller may
    discard the heavy copula grids as it goes.
    """

    def __init__(self, probes=PHI_PROBES):
        self.probes = tuple(probes)
        self._marginals = []
        self._records = []

    def _phi(self, i, holder):
        y = np.asarray(self.probes, float)
        for g1, g2 in reversed(self._marginals):
            y = (g1 if i == 1 else g2).inverse(y)
        holder.update(zip(self.probes, (float(v) for v in y)))

    def add(self, state):
        self._marginals.append((state.L1, state.L2))
        phi1: dict = {}
        phi2: dict = {}
        self._phi(1, phi1)
        self._phi(2, phi2)

        def _safe_crossing(g):
            try:
                return crossing_point(g)
            except MultipleCrossingsError:
                return None

        self._records.append(IterationRecord(
            n=state.n,
            tau=kendall_tau(state.c),
            rho=spearman_rho(state.c),
            sup_err_phi1=sup_power_law_error(state.L1, GOLDEN_EXPONENT),
            sup_err_phi2=sup_power_law_error(state.L2, GOLDEN_EXPONENT),
            crossing1=_safe_crossing(state.L1),
            crossing2=_safe_crossing(state.L2),
            independence_gap=independence_gap(state.c),
            phi1=phi1,
            phi2=phi2,
        ))

    def finish(self) -> DiagnosticsTrace:
        return DiagnosticsTrace(tuple(self._records))


def build_trace(states, probes=PHI_PROBES) -> DiagnosticsTrace:
    """Diagnostics for an already materialized list of states."""
    builder = TraceBuilder(probes)
    for s in states:
        builder.add(s)
    return builder.finish()
