"""psi, Hellinger affinities and distances, mixture affinities, KL divergence."""
import math

import numpy as np

from .constants import INV_SQRT2
from .densities import (CoordinateDensity, DiscreteDensity, LocationScale,
                        ProductDensity, RandomDesignDensity, SequenceDensity)
from .errors import UsageError
from .quadrature import integrate

DEFAULT_TOL = 1e-9


def psi(u):
    """psi(u) = (u - 1)/sqrt(1 + u^2), with psi(+inf) = 1."""
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("psi is defined on [0, +inf]")
    with np.errstate(over="ignore", invalid="ignore"):
        big = arr > 1.0
        v = np.where(big, 1.0 / np.where(big, arr, 1.0), arr)
        out = np.where(big, (1.0 - v) / np.sqrt(1.0 + v * v), (arr - 1.0) / np.sqrt(1.0 + arr * arr))
    if np.ndim(u) == 0:
        return float(out)
    return out


def psi_from_logratio(d):
    """psi(exp(d/2)) for d = log t'(x) - log t(x); -inf - (-inf) (0/0) gives 0.

    Only |d| enters the magnitude, so psi(-d) = -psi(d) holds exactly in
    floating point.  The absolute error is below 2e-16.
    """
    scalar = np.ndim(d) == 0
    d = np.atleast_1d(np.asarray(d, dtype=float))
    v = np.abs(d)
    v *= -0.5
    np.exp(v, out=v)
    t = v * v
    t += 1.0
    np.sqrt(t, out=t)
    np.subtract(1.0, v, out=v)
    v /= t
    np.copysign(v, d, out=v)
    np.nan_to_num(v, copy=False, nan=0.0)
    return float(v[0]) if scalar else v


def likelihood_ratio_sqrt(t, t_prime, x):
    """sqrt(t'(x)/t(x)) with 0/0 = 1 and positive/0 = +inf (computed from log densities)."""
    la = np.asarray(t.logpdf(x), dtype=float)
    lb = np.asarray(t_prime.logpdf(x), dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        r = np.exp(0.5 * (lb - la))
    r = np.where(np.isneginf(la), np.where(np.isneginf(lb), 1.0, np.inf), r)
    return float(r) if r.ndim == 0 else r


# --------------------------------------------------------------------------
# integration helpers
# --------------------------------------------------------------------------

def _region(*dens):
    lo = max(d.support()[0] for d in dens)
    hi = min(d.support()[1] for d in dens)
    return lo, hi


def _points(*dens):
    pts = set()
    for d in dens:
        pts.update(float(p) for p in d.breakpoints())
        pts.update(float(p) for p in d.support() if np.isfinite(p))
    return pts


def _check_pair(t, u):
    if t.kind != u.kind:
        return False
    return True


def _integrate_continuous(fn, region_dens, point_dens, tol):
    lo, hi = _region(*region_dens)
    if not lo < hi:
        return 0.0
    return integrate(fn, lo, hi, tol=tol, points=_points(*point_dens)).value


def _atoms(t):
    if isinstance(t, DiscreteDensity):
        return list(t.table)
    if isinstance(t, SequenceDensity):
        return t.support_words()
    raise UsageError(f"no atom list for {type(t).__name__}")


def expectation(s, fn, tol=DEFAULT_TOL, extra=()):
    """E_s[fn(X)] for one coordinate density s (quadrature or exact sum)."""
    if s.kind in ("discrete", "sequence"):
        atoms = _atoms(s)
        vals = np.asarray(fn(_obj(atoms)), dtype=float)
        return float(np.dot(np.asarray(s.pdf(_obj(atoms))), vals))
    if s.kind == "pair":
        raise UsageError("expectations over random designs need an explicit design law")
    return _integrate_continuous(lambda x: fn(x) * s.pdf(x), [s], [s, *extra], tol)


def _obj(words):
    if words and isinstance(words[0], tuple):
        out = np.empty(len(words), dtype=object)
        out[:] = words
        return out
    return np.asarray(words)


# --------------------------------------------------------------------------
# affinities and distances
# --------------------------------------------------------------------------

def hellinger_affinity(t, u, tol=DEFAULT_TOL, method="auto"):
    """rho(t, u) = int sqrt(t u); closed form when available unless method='quadrature'."""
    if t is u:
        return 1.0
    if method == "auto":
        v = t.closed_form_affinity(u)
        if v is None:
            v = u.closed_form_affinity(t)
        if v is not None:
            return float(min(max(v, 0.0), 1.0))
    if not _check_pair(t, u):
        return 0.0
    if t.kind in ("discrete", "sequence"):
        atoms = _obj(_atoms(t))
        return float(np.sum(np.sqrt(t.pdf(atoms) * u.pdf(atoms))))
    if t.kind == "pair":
        return _random_design_integral(t, u, lambda a, b: hellinger_affinity(a, b, tol), tol)
    v = _integrate_continuous(lambda x: np.sqrt(t.pdf(x) * u.pdf(x)), [t, u], [t, u], tol)
    return float(min(max(v, 0.0), 1.0))


def hellinger_sq(t, u, tol=DEFAULT_TOL, method="auto"):
    return max(0.0, 1.0 - hellinger_affinity(t, u, tol, method))


def product_hellinger_sq(t, u, tol=DEFAULT_TOL):
    """Sum of coordinate squared Hellinger distances."""
    if t.n != u.n:
        raise UsageError("products of different lengths")
    if t.is_iid and u.is_iid:
        return t.n * hellinger_sq(t.density, u.density, tol)
    return float(sum(hellinger_sq(t.coord(i), u.coord(i), tol) for i in range(t.n)))


def mixture_affinity(t, t_prime, tol=DEFAULT_TOL, method="auto"):
    """rho(t, r) with r = (t + t')/2, using t/r = 0 where both vanish."""
    if t is t_prime:
        return 1.0
    if method == "auto":
        v = t.closed_form_mixture(t_prime)
        if v is not None:
            return float(v)
    if t.kind in ("discrete", "sequence"):
        atoms = _obj(_atoms(t))
        a = np.asarray(t.pdf(atoms))
        b = np.asarray(t_prime.pdf(atoms))
        return float(np.sum(np.sqrt(a * (a + b) / 2.0)))
    if t.kind == "pair":
        return _random_design_integral(t, t_prime, lambda a, b: mixture_affinity(a, b, tol), tol)
    if t_prime.kind != t.kind:
        return INV_SQRT2
    return _integrate_continuous(
        lambda x: np.sqrt(t.pdf(x) * 0.5 * (t.pdf(x) + t_prime.pdf(x))), [t], [t, t_prime], tol)


def mixture_gap(t, t_prime, tol=DEFAULT_TOL):
    """rho(t', r) - rho(t, r); zero for shifts of a symmetric density and for words."""
    if t is t_prime or t.same_translation_family(t_prime):
        return 0.0
    return mixture_affinity(t_prime, t, tol) - mixture_affinity(t, t_prime, tol)


def ratio_affinity(s, t, t_prime, tol=DEFAULT_TOL):
    """int sqrt(t/r) s with r = (t + t')/2 and t/r = 0 where t = t' = 0."""
    def frac(x):
        # t/r = 2/(1 + t'/t), from log densities so that joint underflow in the tails is harmless
        la = np.asarray(t.logpdf(x), dtype=float)
        lb = np.asarray(t_prime.logpdf(x), dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            q = 2.0 / (1.0 + np.exp(lb - la))
        return np.sqrt(np.where(np.isneginf(la), 0.0, q))

    if s.kind in ("discrete", "sequence"):
        return expectation(s, frac, tol)
    return _integrate_continuous(lambda x: frac(x) * s.pdf(x), [s, t], [s, t, t_prime], tol)


def kl_divergence(t, u, tol=DEFAULT_TOL):
    """K(t, u) = int t log(t/u), +inf unless u > 0 wherever t > 0."""
    if t is u:
        return 0.0
    if t.kind in ("discrete", "sequence"):
        atoms = _obj(_atoms(t))
        a = np.asarray(t.pdf(atoms))
        b = np.asarray(u.pdf(atoms))
        pos = a > 0
        if np.any(b[pos] == 0):
            return math.inf
        return float(np.sum(a[pos] * (np.log(a[pos]) - np.log(b[pos]))))
    (tl, th), (ul, uh) = t.support(), u.support()
    if tl < ul or th > uh:
        return math.inf
    violation = []

    def fn(x):
        lt = np.asarray(t.logpdf(x), dtype=float)
        lu = np.asarray(u.logpdf(x), dtype=float)
        pos = np.isfinite(lt)
        if np.any(pos & ~np.isfinite(lu)):
            violation.append(True)
        out = np.zeros_like(lt)
        ok = pos & np.isfinite(lu)
        out[ok] = np.exp(lt[ok]) * (lt[ok] - lu[ok])
        return out

    v = _integrate_continuous(fn, [t], [t, u], tol)
    if violation:
        return math.inf
    return max(0.0, float(v))


def _random_design_integral(t, u, inner, tol):
    if not isinstance(u, RandomDesignDensity):
        return 0.0
    nu = t.nu or u.nu
    if nu is None:
        raise UsageError("distances between random-design densities need the design law nu")

    def fn(w):
        w = np.atleast_1d(w)
        return np.array([inner(t.conditional(x), u.conditional(x)) for x in w]) * nu.pdf(w)

    return _integrate_continuous(fn, [nu], [nu], max(tol, 1e-7))


__all__ = [
    "psi", "psi_from_logratio", "likelihood_ratio_sqrt", "hellinger_affinity", "hellinger_sq",
    "product_hellinger_sq", "mixture_affinity", "mixture_gap", "ratio_affinity",
    "kl_divergence", "expectation", "CoordinateDensity", "ProductDensity", "LocationScale",
]
