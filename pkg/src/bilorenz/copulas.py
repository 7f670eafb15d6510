"""Parametric copulas, extremal copulas, and TP2/RR2/log-concavity checks."""

from dataclasses import dataclass

import numpy as np
from scipy import special as sp
from scipy import stats

from .errors import DegenerateDensityError, ParameterError, SingularCopulaError
from .grids import validate_density_grid

DENSITY_FAMILIES = ("independence", "gaussian", "clayton", "frank", "amh")
SINGULAR_FAMILIES = ("comonotonic_m", "countermonotonic_w")

#: Pointwise clamp keeping copula arguments inside the open square.
UNIT_EPS = 1e-9


@dataclass(frozen=True)
class CopulaSpec:
    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in DENSITY_FAMILIES + SINGULAR_FAMILIES:
            raise ParameterError(f"unknown copula family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        npar = 0 if self.family in ("independence",) + SINGULAR_FAMILIES else 1
        if len(self.params) != npar:
            raise ParameterError(
                f"{self.family} takes {npar} parameter(s), got {len(self.params)}"
            )
        if self.family == "gaussian" and not -1 < self.params[0] < 1:
            raise ParameterError("gaussian rho must lie in (-1,1)")
        if self.family == "clayton" and not self.params[0] > 0:
            raise ParameterError("clayton theta must be > 0")
        if self.family == "frank" and self.params[0] == 0:
            raise ParameterError("frank theta must be non-zero")
        if self.family == "amh" and not -1 <= self.params[0] < 1:
            raise ParameterError("amh theta must lie in [-1,1)")

    @property
    def singular(self) -> bool:
        return self.family in SINGULAR_FAMILIES

    def __str__(self):
        args = ",".join(f"{p:g}" for p in self.params)
        return f"{self.family}({args})" if args else self.family


def independence() -> CopulaSpec:
    return CopulaSpec("independence")


def gaussian(rho: float) -> CopulaSpec:
    return CopulaSpec("gaussian", (rho,))


def clayton(theta: float) -> CopulaSpec:
    return CopulaSpec("clayton", (theta,))


def frank(theta: float) -> CopulaSpec:
    return CopulaSpec("frank", (theta,))


def amh(theta: float) -> CopulaSpec:
    return CopulaSpec("amh", (theta,))


def comonotonic() -> CopulaSpec:
    return CopulaSpec("comonotonic_m")


def countermonotonic() -> CopulaSpec:
    return CopulaSpec("countermonotonic_w")


def _density(spec: CopulaSpec, u, v):
    fam = spec.family
    if fam == "independence":
        return np.ones(np.broadcast(u, v).shape)
    if fam == "gaussian":
        rho = spec.params[0]
        x = sp.ndtri(u)
        y = sp.ndtri(v)
        s = 1.0 - rho * rho
        return np.exp(-(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * s)) / np.sqrt(s)
    if fam == "clayton":
        th = spec.params[0]
        g = u ** (-th) + v ** (-th) - 1.0
        return (1.0 + th) * (u * v) ** (-1.0 - th) * g ** (-2.0 - 1.0 / th)
    if fam == "frank":
        th = spec.params[0]
        em1 = -np.expm1(-th)  # 1 - e^{-theta}
        den = em1 - (-np.expm1(-th * u)) * (-np.expm1(-th * v))
        return th * em1 * np.exp(-th * (u + v)) / (den * den)
    # amh
    th = spec.params[0]
    a = 1.0 - u
    b = 1.0 - v
    d = 1.0 - th * a * b
    num = 1.0 + th * (a * b - 2.0 * a - 2.0 * b + 1.0) + th * th * a * b
    return num / d**3


def copula_density(spec: CopulaSpec, u, v):
    """Copula density c(u,v); arguments clamped into the open square."""
    if spec.singular:
        raise SingularCopulaError(
            f"{spec} carries no density; its Lorenz-iteration dynamics are "
            "closed form, see bilorenz.bounds"
        )
    uc = np.clip(np.asarray(u, float), UNIT_EPS, 1.0 - UNIT_EPS)
    vc = np.clip(np.asarray(v, float), UNIT_EPS, 1.0 - UNIT_EPS)
    out = _density(spec, uc, vc)
    return float(out) if np.ndim(u) == 0 and np.ndim(v) == 0 else out


def copula_cdf(spec: CopulaSpec, u, v):
    """Copula CDF C(u,v); respects the Frechet-Hoeffding envelope."""
    uv_scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.atleast_1d(np.asarray(u, float))
    v = np.atleast_1d(np.asarray(v, float))
    u, v = np.broadcast_arrays(np.clip(u, 0.0, 1.0), np.clip(v, 0.0, 1.0))
    fam = spec.family
    if fam == "independence":
        out = u * v
    elif fam == "comonotonic_m":
        out = np.minimum(u, v)
    elif fam == "countermonotonic_w":
        out = np.maximum(u + v - 1.0, 0.0)
    elif fam == "gaussian":
        rho = spec.params[0]
        uc = np.clip(u, UNIT_EPS, 1.0 - UNIT_EPS)
        vc = np.clip(v, UNIT_EPS, 1.0 - UNIT_EPS)
        pts = np.stack([sp.ndtri(uc), sp.ndtri(vc)], axis=-1)
        mvn = stats.multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, rho], [rho, 1.0]])
        out = np.asarray(mvn.cdf(pts), float).reshape(u.shape)
    elif fam == "clayton":
        th = spec.params[0]
        with np.errstate(divide="ignore"):
            g = np.where((u > 0) & (v > 0), u ** (-th) + v ** (-th) - 1.0, np.inf)
        out = g ** (-1.0 / th)
    elif fam == "frank":
        th = spec.params[0]
        out = -np.log1p(np.expm1(-th * u) * np.expm1(-th * v) / np.expm1(-th)) / th
    else:  # amh
        th = spec.params[0]
        out = u * v / (1.0 - th * (1.0 - u) * (1.0 - v))
    # exact boundary values, independent of numerical inner formulas
    out = np.where(u <= 0.0, 0.0, np.where(u >= 1.0, v, out))
    out = np.where(v <= 0.0, 0.0, np.where(v >= 1.0, np.where(u >= 1.0, 1.0, u), out))
    out = np.clip(out, 0.0, 1.0)
    return float(out.reshape(-1)[0]) if uv_scalar else out


def density_grid(spec: CopulaSpec, n: int) -> np.ndarray:
    """Copula density tabulated on the n x n unit vertex grid.

    Boundary nodes are evaluated half a cell inward (clamp max(UNIT_EPS, h/2)):
    families with corner singularities would otherwise put non-integrable
    spikes on measure-h^2 corner cells and wreck trapezoid quadrature.
    """
    if spec.singular:
        raise SingularCopulaError(f"{spec} carries no density")
    u = np.linspace(0.0, 1.0, n)
    eps = max(UNIT_EPS, 0.5 / (n - 1))
    ug = np.clip(u, eps, 1.0 - eps)
    return _density(spec, ug[:, None], ug[None, :])


def cdf_grid(spec: CopulaSpec, n: int) -> np.ndarray:
    """Copula CDF tabulated on the n x n unit vertex grid."""
    u = np.linspace(0.0, 1.0, n)
    return copula_cdf(spec, u[:, None], u[None, :])


@dataclass(frozen=True)
class TP2RR2Report:
    tp2: bool
    rr2: bool
    worst_violation: float
    location: tuple
    checked: int


@dataclass(frozen=True)
class LogConcavityReport:
    joint: bool
    coordinatewise: bool


def _clipped_view(z: np.ndarray, clip):
    n = z.shape[0]
    if clip is None:
        lo, hi = 1, n - 1  # drop the outermost ring
    else:
        lo = int(np.ceil(clip * (n - 1) - 1e-12))
        hi = n - lo
    if hi - lo < 3:
        raise DegenerateDensityError("clipped region too small to classify")
    return z[lo:hi, lo:hi], lo


def classify_tp2_rr2(density: np.ndarray, tol: float = 1e-9,
                     floor: float = 1e-12, clip=None) -> TP2RR2Report:
    """Classify a density grid as TP2 / RR2 via adjacent 2x2 log-minors.

    A grid is TP2 when every minor log h(i,j) + log h(i+1,j+1)
    - log h(i,j+1) - log h(i+1,j) is >= -tol, RR2 when every minor is
    <= tol; independence satisfies both. Entries at or below `floor` are
    excluded; the outermost ring (or a wider `clip` fraction) is never
    inspected because the defining inequalities concern the open square.
    """
    validate_density_grid(density)
    z, off = _clipped_view(np.asarray(density, float), clip)
    valid = z > floor
    clipped_frac = 1.0 - valid.mean()
    if clipped_frac > 0.5:
        raise DegenerateDensityError(
            f"{clipped_frac:.0%} of the grid sits at the density floor"
        )
    logz = np.where(valid, np.log(np.maximum(z, floor)), np.nan)
    minors = logz[:-1, :-1] + logz[1:, 1:] - logz[:-1, 1:] - logz[1:, :-1]
    ok = np.isfinite(minors)
    if not ok.any():
        raise DegenerateDensityError("no classifiable 2x2 minors above the floor")
    m = np.where(ok, minors, 0.0)
    worst_idx = np.unravel_index(np.abs(m).argmax(), m.shape)
    return TP2RR2Report(
        tp2=bool(m.min() >= -tol),
        rr2=bool(m.max() <= tol),
        worst_violation=float(m[worst_idx]),
        location=(int(worst_idx[0] + off), int(worst_idx[1] + off)),
        checked=int(ok.sum()),
    )


def classify_log_concavity(density: np.ndarray, tol: float = 1e-9,
                           clip: float = 0.05) -> LogConcavityReport:
    """Second-difference log-concavity test on the clipped interior.

    `joint` requires the discrete log-density Hessian to be negative
    semidefinite at every interior node of [clip, 1-clip]^2; `coordinatewise`
    only checks each axis separately. The clip matters: several standard
    copula densities are log-concave on compact inner squares but not on
    the full open square.
    """
    validate_density_grid(density)
    z, _ = _clipped_view(np.asarray(density, float), clip)
    if z.min() <= 0.0:
        raise DegenerateDensityError("density must be strictly positive on the interior")
    lg = np.log(z)
    dxx = lg[:-2, 1:-1] - 2.0 * lg[1:-1, 1:-1] + lg[2:, 1:-1]
    dyy = lg[1:-1, :-2] - 2.0 * lg[1:-1, 1:-1] + lg[1:-1, 2:]
    dxy = 0.25 * (lg[2:, 2:] - lg[2:, :-2] - lg[:-2, 2:] + lg[:-2, :-2])
    coordinatewise = bool((dxx <= tol).all() and (dyy <= tol).all())
    det = dxx * dyy - dxy * dxy
    joint = bool(coordinatewise and (det >= -tol * tol).all())
    return LogConcavityReport(joint=joint, coordinatewise=coordinatewise)
