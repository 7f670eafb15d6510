"""Parametric univariate marginals and tabulated CDFs.

Six families are supported: uniform01, power(a), lognormal(mu, sigma),
beta(alpha, beta), gamma(shape, scale) and sinewave(freq, amp). Each has a
strictly positive finite mean, so all of them are admissible seeds for the
Lorenz-curve iteration.

The sinewave family is our own reading of an oscillatory test density: it is
defined here as f(x) = 1 + amp*sin(2*pi*freq*x) on [0,1], which is strictly
positive whenever amp < 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import DomainError, GridError, ParameterError
from .grids import GridCdf, unit_grid

FAMILIES = ("uniform01", "power", "lognormal", "beta", "gamma", "sinewave")

_PARAM_COUNT = {
    "uniform01": 0,
    "power": 1,
    "lognormal": 2,
    "beta": 2,
    "gamma": 2,
    "sinewave": 2,
}


@dataclass(frozen=True)
class MarginalSpec:
    """A univariate law identified by family name and parameter tuple."""

    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown marginal family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != _PARAM_COUNT[self.family]:
            raise ParameterError(
                f"{self.family} takes {_PARAM_COUNT[self.family]} parameter(s), "
                f"got {len(self.params)}"
            )
        p = self.params
        if self.family == "power" and not p[0] > 0:
            raise ParameterError("power exponent must be > 0")
        if self.family == "lognormal" and not p[1] > 0:
            raise ParameterError("lognormal sigma must be > 0")
        if self.family == "beta" and not (p[0] > 0 and p[1] > 0):
            raise ParameterError("beta parameters must be > 0")
        if self.family == "gamma" and not (p[0] > 0 and p[1] > 0):
            raise ParameterError("gamma shape and scale must be > 0")
        if self.family == "sinewave":
            freq, amp = p
            if freq <= 0 or freq != round(freq):
                raise ParameterError("sinewave frequency must be a positive integer")
            if not 0 <= amp < 1:
                raise ParameterError("sinewave amplitude must lie in [0,1)")

    def __str__(self):
        args = ",".join(f"{p:g}" for p in self.params)
        return f"{self.family}({args})" if args else self.family


def uniform01() -> MarginalSpec:
    return MarginalSpec("uniform01")


def power(a: float) -> MarginalSpec:
    return MarginalSpec("power", (a,))


def lognormal(mu: float, sigma: float) -> MarginalSpec:
    return MarginalSpec("lognormal", (mu, sigma))


def beta(alpha: float, beta: float) -> MarginalSpec:
    return MarginalSpec("beta", (alpha, beta))


def gamma(shape: float, scale: float) -> MarginalSpec:
    return MarginalSpec("gamma", (shape, scale))


def sinewave(freq: int, amp: float) -> MarginalSpec:
    return MarginalSpec("sinewave", (freq, amp))


def support(spec: MarginalSpec) -> tuple:
    if spec.family in ("lognormal", "gamma"):
        return (0.0, np.inf)
    return (0.0, 1.0)


def bounded_unit(spec: MarginalSpec) -> bool:
    """True when the support is contained in [0,1]."""
    return support(spec)[1] == 1.0


def _dispatch(x, scalar_result):
    return float(scalar_result) if np.ndim(x) == 0 else scalar_result


def eval_cdf(spec: MarginalSpec, x):
    """Distribution function F(x); clamped outside the support."""
    xv = np.asarray(x, float)
    fam, p = spec.family, spec.params
    if fam == "uniform01":
        out = np.clip(xv, 0.0, 1.0)
    elif fam == "power":
        out = np.clip(xv, 0.0, 1.0) ** p[0]
    elif fam == "lognormal":
        mu, sg = p
        out = np.where(xv > 0, sp.ndtr((np.log(np.maximum(xv, 1e-300)) - mu) / sg), 0.0)
    elif fam == "beta":
        out = sp.betainc(p[0], p[1], np.clip(xv, 0.0, 1.0))
    elif fam == "gamma":
        out = sp.gammainc(p[0], np.maximum(xv, 0.0) / p[1])
    else:  # sinewave
        freq, amp = p
        xc = np.clip(xv, 0.0, 1.0)
        tp = 2.0 * np.pi * freq
        out = xc + amp * (1.0 - np.cos(tp * xc)) / tp
    return _dispatch(x, np.clip(out, 0.0, 1.0))


def eval_density(spec: MarginalSpec, x):
    """Density f(x); zero outside the support."""
    xv = np.asarray(x, float)
    fam, p = spec.family, spec.params
    inside = (xv >= 0) & (xv <= support(spec)[1])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if fam == "uniform01":
            out = np.ones_like(xv)
        elif fam == "power":
            a = p[0]
            out = a * np.maximum(xv, 0.0) ** (a - 1.0)
        elif fam == "lognormal":
            mu, sg = p
            xs = np.maximum(xv, 1e-300)
            out = np.exp(-0.5 * ((np.log(xs) - mu) / sg) ** 2) / (xs * sg * np.sqrt(2 * np.pi))
            out = np.where(xv > 0, out, 0.0)
        elif fam == "beta":
            a, b = p
            xs = np.clip(xv, 0.0, 1.0)
            lognorm = sp.gammaln(a + b) - sp.gammaln(a) - sp.gammaln(b)
            out = np.exp(lognorm) * xs ** (a - 1.0) * (1.0 - xs) ** (b - 1.0)
        elif fam == "gamma":
            k, th = p
            xs = np.maximum(xv, 0.0)
            out = xs ** (k - 1.0) * np.exp(-xs / th) / (sp.gamma(k) * th**k)
        else:  # sinewave
            freq, amp = p
            out = 1.0 + amp * np.sin(2.0 * np.pi * freq * np.clip(xv, 0.0, 1.0))
    out = np.where(inside, out, 0.0)
    return _dispatch(x, out)


def _sinewave_quantile(p_arr: np.ndarray, freq: float, amp: float) -> np.ndarray:
    # Bisection on the strictly increasing CDF; 60 halvings beat 1e-12 easily.
    lo = np.zeros_like(p_arr)
    hi = np.ones_like(p_arr)
    tp = 2.0 * np.pi * freq
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fmid = mid + amp * (1.0 - np.cos(tp * mid)) / tp
        take = fmid < p_arr
        lo = np.where(take, mid, lo)
        hi = np.where(take, hi, mid)
    q = 0.5 * (lo + hi)
    q[p_arr <= 0.0] = 0.0
    q[p_arr >= 1.0] = 1.0
    return q


def eval_quantile(spec: MarginalSpec, p):
    """Generalized inverse F^{-1}(p) = inf{y : F(y) >= p}.

    For the unbounded families the value at p = 1 is +inf.
    """
    pv = np.asarray(p, float)
    if np.any(pv < 0.0) or np.any(pv > 1.0):
        raise DomainError("quantile argument must lie in [0,1]")
    fam, pr = spec.family, spec.params
    with np.errstate(divide="ignore"):
        if fam == "uniform01":
            out = pv.copy()
        elif fam == "power":
            out = pv ** (1.0 / pr[0])
        elif fam == "lognormal":
            mu, sg = pr
            out = np.where(pv <= 0.0, 0.0,
                           np.where(pv >= 1.0, np.inf, np.exp(mu + sg * sp.ndtri(np.clip(pv, 1e-320, 1.0)))))
        elif fam == "beta":
            out = sp.betaincinv(pr[0], pr[1], pv)
        elif fam == "gamma":
            out = pr[1] * sp.gammaincinv(pr[0], pv)
        else:  # sinewave
            out = _sinewave_quantile(np.atleast_1d(pv).astype(float), *pr)
            out = out.reshape(pv.shape) if pv.ndim else out[0]
    return _dispatch(p, out)


def quantile_grid(spec: MarginalSpec, u: np.ndarray, tail_eps: float = 1e-9) -> np.ndarray:
    """Quantiles on a probability grid, clamping the top tail of unbounded laws.

    Unbounded quantiles diverge at u = 1; clamping at 1 - tail_eps keeps
    every tabulated value finite at a negligible cost in integral mass.
    """
    u = np.asarray(u, float)
    if not bounded_unit(spec):
        u = np.minimum(u, 1.0 - tail_eps)
    return np.asarray(eval_quantile(spec, u), float)


def tabulate(spec_or_callable, n: int) -> GridCdf:
    """Tabulate a CDF on the unit vertex grid and enforce grid invariants."""
    if n < 3:
        raise DomainError(f"tabulate needs n >= 3, got {n}")
    x = unit_grid(n)
    if isinstance(spec_or_callable, MarginalSpec):
        if not bounded_unit(spec_or_callable):
            raise GridError(
                f"{spec_or_callable} has unbounded support; only laws on [0,1] "
                "can be tabulated on the unit grid"
            )
        values = eval_cdf(spec_or_callable, x)
    else:
        values = np.asarray(spec_or_callable(x), float)
    return GridCdf(values)


def invert_grid(g: GridCdf, p):
    """Piecewise-linear generalized inverse of a tabulated CDF."""
    return g.inverse(p)
