"""Uniform-grid representations and quadrature.

Everything in the package lives on the uniform vertex grid x_j = j/(N-1)
over [0,1] (or its tensor square). Quadrature is the trapezoid rule
throughout: positivity-safe and exact for the piecewise-linear data we
tabulate.
"""

import numpy as np

from .errors import DomainError, GridError

DEFAULT_GRID_N = 1001

#: Slope added between tied CDF values so the generalized inverse stays
#: well defined; small enough to sit below every tolerance in the package.
TIE_BREAK_SLOPE = 1e-14


def unit_grid(n: int) -> np.ndarray:
    """Vertex nodes j/(n-1) on [0,1]."""
    if n < 3:
        raise DomainError(f"grid needs at least 3 nodes, got {n}")
    return np.linspace(0.0, 1.0, n)


def trapezoid_weights(n: int) -> np.ndarray:
    h = 1.0 / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def trapz_uniform(y: np.ndarray) -> float:
    """Trapezoid integral of samples on the unit grid (last axis)."""
    n = y.shape[-1]
    return float(np.dot(y, trapezoid_weights(n))) if y.ndim == 1 else y @ trapezoid_weights(n)


def cumtrapz_uniform(y: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral along a 1-D sample vector; starts at 0."""
    h = 1.0 / (len(y) - 1)
    out = np.empty_like(y, dtype=float)
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) * (0.5 * h), out=out[1:])
    return out


def trapz2d(z: np.ndarray) -> float:
    """Tensor-product trapezoid integral over the unit square."""
    w0 = trapezoid_weights(z.shape[0])
    w1 = trapezoid_weights(z.shape[1])
    return float(w0 @ z @ w1)


def cumtrapz2d(z: np.ndarray) -> np.ndarray:
    """Cumulative tensor-product trapezoid integral C[i,j] = int over [0,x_i]x[0,y_j]."""
    h0 = 1.0 / (z.shape[0] - 1)
    h1 = 1.0 / (z.shape[1] - 1)
    cell = (z[:-1, :-1] + z[1:, :-1] + z[:-1, 1:] + z[1:, 1:]) * (0.25 * h0 * h1)
    out = np.zeros_like(z, dtype=float)
    out[1:, 1:] = cell.cumsum(axis=0).cumsum(axis=1)
    return out


def _cell_indices(q: np.ndarray, n: int):
    t = np.clip(q, 0.0, 1.0) * (n - 1)
    i = np.minimum(t.astype(int), n - 2)
    return i, t - i


def bilinear_product(values: np.ndarray, xq: np.ndarray, yq: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a square grid at the product set xq x yq."""
    n = values.shape[0]
    i, a = _cell_indices(np.asarray(xq, float), n)
    j, b = _cell_indices(np.asarray(yq, float), n)
    rows = values[i, :] * (1.0 - a)[:, None] + values[i + 1, :] * a[:, None]
    return rows[:, j] * (1.0 - b)[None, :] + rows[:, j + 1] * b[None, :]


def bilinear_points(values: np.ndarray, x, y):
    """Bilinear interpolation at broadcast point pairs (x, y)."""
    n = values.shape[0]
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    scalar = x.ndim == 0 and y.ndim == 0
    x, y = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(y))
    i, a = _cell_indices(x, n)
    j, b = _cell_indices(y, n)
    out = (
        values[i, j] * (1 - a) * (1 - b)
        + values[i + 1, j] * a * (1 - b)
        + values[i, j + 1] * (1 - a) * b
        + values[i + 1, j + 1] * a * b
    )
    return float(out[0]) if scalar else out


class GridCdf:
    """A tabulated monotone distribution function on the unit vertex grid.

    Construction enforces the invariants needed for inversion: a running-max
    pass removes tiny non-monotone dips, values are rescaled so the last node
    is exactly 1, and tied consecutive values receive a tie-break slope so
    the piecewise-linear inverse is single valued. Instances are immutable.
    """

    __slots__ = ("values", "_nodes")

    def __init__(self, values, max_decrease: float = 1e-9):
        v = np.array(values, dtype=float)
        if v.ndim != 1 or len(v) < 3:
            raise GridError("GridCdf needs a 1-D vector of at least 3 values")
        if not np.all(np.isfinite(v)):
            raise GridError("GridCdf values must be finite")
        if abs(v[0]) > 1e-9:
            raise GridError(f"GridCdf must start at 0, got {v[0]!r}")
        d = np.diff(v)
        if d.min(initial=0.0) < -max_decrease:
            raise GridError(
                f"GridCdf values decrease by {-d.min():.3e} (> {max_decrease:.0e})"
            )
        v[0] = 0.0
        np.maximum.accumulate(v, out=v)
        if v[-1] <= 0.0:
            raise GridError("GridCdf is identically zero")
        v /= v[-1]
        if np.any(np.diff(v) == 0.0):
            v += TIE_BREAK_SLOPE * np.arange(len(v))
            v /= v[-1]
            v[0] = 0.0
        v[-1] = 1.0
        v.setflags(write=False)
        self.values = v
        self._nodes = None

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def nodes(self) -> np.ndarray:
        if self._nodes is None:
            nodes = unit_grid(self.n)
            nodes.setflags(write=False)
            self._nodes = nodes
        return self._nodes

    def __call__(self, x):
        return np.interp(np.clip(x, 0.0, 1.0), self.nodes, self.values)

    def inverse(self, p):
        """Piecewise-linear generalized inverse; exact at tabulated values."""
        p = np.asarray(p, float)
        if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
            raise DomainError("inverse argument must lie in [0,1]")
        out = np.interp(np.clip(p, 0.0, 1.0), self.values, self.nodes)
        return float(out) if p.ndim == 0 else out

    def __repr__(self):
        return f"GridCdf(n={self.n})"


def validate_density_grid(z: np.ndarray, tol: float = 1e-9) -> None:
    """Reject non-square, non-finite or (beyond tol) negative density grids."""
    z = np.asarray(z)
    if z.ndim != 2 or z.shape[0] != z.shape[1] or z.shape[0] < 3:
        raise GridError("density grid must be square with at least 3 nodes per axis")
    if not np.all(np.isfinite(z)):
        raise GridError("density grid has non-finite entries")
    if z.min() < -tol:
        raise GridError(f"density grid has negative entries (min {z.min():.3e})")


def cdf_grid_report(c: np.ndarray, tol: float = 1e-9) -> dict:
    """Check distribution-function axioms of a CDF grid on the unit square.

    Returns the worst defects of: zero boundary, monotonicity along each
    axis, and the discretized rectangle inequality (2-increasingness).
    """
    c = np.asarray(c, float)
    rect = c[1:, 1:] - c[1:, :-1] - c[:-1, 1:] + c[:-1, :-1]
    report = {
        "boundary_defect": float(max(np.abs(c[0, :]).max(), np.abs(c[:, 0]).max(),
                                     abs(c[-1, -1] - 1.0))),
        "monotone_defect": float(max(-min(np.diff(c, axis=0).min(), 0.0),
                                     -min(np.diff(c, axis=1).min(), 0.0))),
        "rectangle_defect": float(-min(rect.min(), 0.0)),
    }
    report["ok"] = all(v <= tol for k, v in report.items() if k != "ok")
    return report
