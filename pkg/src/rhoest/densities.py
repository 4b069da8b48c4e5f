"""Coordinate densities, product densities and the standard shapes of the zoo."""
import math
from collections.abc import Sequence

import numpy as np
from scipy.special import gammaln

from .constants import INV_SQRT2
from .errors import DepthCapError, UsageError

_LOG2PI = math.log(2.0 * math.pi)


def _round_key(x, digits=12):
    return float(np.round(float(x), digits))


# --------------------------------------------------------------------------
# standard shapes (location 0, scale 1)
# --------------------------------------------------------------------------

class Shape:
    """A standard density q on the real line, used through p_{f,lam}(x) = q((x-f)/lam)/lam."""

    name = "shape"
    lo, hi = -np.inf, np.inf
    symmetric = False
    bounded = True
    kinks = ()
    # (alpha, a_q, A_q) when the Hellinger modulus of the translation family is declared
    order = None

    def logpdf(self, z):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(z))

    def pdf(self, z):
        return np.exp(self.logpdf(z))

    def sample(self, rng, size):
        raise NotImplementedError

    def key(self):
        return (self.name,)

    def __repr__(self):
        return f"{type(self).__name__}()"


class GaussianShape(Shape):
    name = "gaussian"
    symmetric = True
    # h^2 = 1 - exp(-d^2/8); sandwich constants for order 1
    order = (1.0, 1.0 - math.exp(-1.0 / 8.0), 1.0)

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        return -0.5 * z * z - 0.5 * _LOG2PI

    def sample(self, rng, size):
        return rng.standard_normal(size)


class LaplaceShape(Shape):
    name = "laplace"
    symmetric = True
    kinks = (0.0,)

    def logpdf(self, z):
        return -math.log(2.0) - np.abs(np.asarray(z, dtype=float))

    def sample(self, rng, size):
        return rng.laplace(0.0, 1.0, size)


class CauchyShape(Shape):
    name = "cauchy"
    symmetric = True

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        return -math.log(math.pi) - np.log1p(z * z)

    def sample(self, rng, size):
        return rng.standard_cauchy(size)


class UniformShape(Shape):
    """Indicator of [-1/2, 1/2]."""

    name = "uniform"
    lo, hi = -0.5, 0.5
    symmetric = True
    kinks = (-0.5, 0.5)
    order = (0.0, 1.0, 1.0)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return ((z >= -0.5) & (z <= 0.5)).astype(float)

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where((z >= -0.5) & (z <= 0.5), 0.0, -np.inf)

    def sample(self, rng, size):
        return rng.uniform(-0.5, 0.5, size)


class PBetaShape(Shape):
    """p^beta(x) = Lambda(beta) exp(-|x|^(1/beta)); beta = 0 is uniform on [-1, 1]."""

    name = "pbeta"
    symmetric = True

    def __init__(self, beta):
        beta = float(beta)
        if beta < 0 or not np.isfinite(beta):
            raise UsageError("beta must be a finite non-negative number")
        self.beta = beta
        if beta == 0.0:
            self.lo, self.hi = -1.0, 1.0
            self.kinks = (-1.0, 1.0)
            self.log_norm = -math.log(2.0)
        else:
            self.kinks = (0.0,)
            # Lambda^{-1} = 2 beta Gamma(beta) = 2 Gamma(beta + 1)
            self.log_norm = -math.log(2.0) - float(gammaln(beta + 1.0))

    @property
    def norm(self):
        return math.exp(self.log_norm)

    def logpdf(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        if self.beta == 0.0:
            return np.where(z <= 1.0, self.log_norm, -np.inf)
        with np.errstate(over="ignore"):
            return self.log_norm - z ** (1.0 / self.beta)

    def sample(self, rng, size):
        sign = rng.choice([-1.0, 1.0], size=size)
        if self.beta == 0.0:
            return rng.uniform(-1.0, 1.0, size)
        # |X|^(1/beta) is Gamma(beta)
        return sign * rng.gamma(self.beta, 1.0, size) ** self.beta

    def key(self):
        return (self.name, _round_key(self.beta))

    def __repr__(self):
        return f"PBetaShape({self.beta:g})"


def pbeta_scale_hellinger_sq(beta, lam):
    """h^2(p^beta, p^beta(./lam)/lam) in closed form; symmetric under lam -> 1/lam."""
    beta, lam = float(beta), float(lam)
    if not lam > 0:
        raise UsageError("lambda must be positive")
    if lam < 1.0:
        lam = 1.0 / lam
    if beta == 0.0:
        # overlap of [-1, 1] and [-lam, lam] with heights 1/2 and 1/(2 lam)
        return 1.0 - 1.0 / math.sqrt(lam)
    rho = math.exp(beta * math.log(2.0) - 0.5 * math.log(lam)
                   - beta * math.log1p(lam ** (-1.0 / beta)))
    return 1.0 - rho


class SpikeShape(Shape):
    """(1/4)|x|^(-1/2) on [-1, 1]: a density with unbounded likelihood."""

    name = "spike"
    lo, hi = -1.0, 1.0
    symmetric = True
    bounded = False
    kinks = (-1.0, 0.0, 1.0)

    def pdf(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        with np.errstate(divide="ignore"):
            return np.where(z <= 1.0, 0.25 / np.sqrt(z), 0.0)

    def sample(self, rng, size):
        sign = rng.choice([-1.0, 1.0], size=size)
        return sign * rng.uniform(0.0, 1.0, size) ** 2


class CustomShape(Shape):
    """User supplied standard density; normalization is checked by quadrature."""

    def __init__(self, pdf, lo=-np.inf, hi=np.inf, symmetric=False, kinks=(),
                 sampler=None, name="custom", check=True):
        self._pdf = pdf
        self.lo, self.hi = float(lo), float(hi)
        self.symmetric = symmetric
        self.kinks = tuple(kinks)
        self._sampler = sampler
        self.name = name
        if check:
            from .quadrature import integrate
            mass = integrate(lambda z: self.pdf(z), self.lo, self.hi, tol=1e-9,
                             points=self.kinks).value
            if abs(mass - 1.0) > 1e-6:
                raise UsageError(f"density integrates to {mass:.8g}, not 1")

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        inside = (z >= self.lo) & (z <= self.hi)
        out = np.zeros(z.shape)
        out[inside] = self._pdf(z[inside])
        return out

    def sample(self, rng, size):
        if self._sampler is None:
            raise NotImplementedError("no sampler supplied")
        return self._sampler(rng, size)

    def key(self):
        return (self.name, id(self))


SHAPES = {
    "gaussian": GaussianShape,
    "normal": GaussianShape,
    "laplace": LaplaceShape,
    "cauchy": CauchyShape,
    "uniform": UniformShape,
    "spike": SpikeShape,
}


def get_shape(name, **kw):
    if isinstance(name, Shape):
        return name
    if name == "pbeta":
        return PBetaShape(kw.get("beta", 1.0))
    try:
        return SHAPES[name]()
    except KeyError:
        raise UsageError(f"unknown shape {name!r}") from None


# --------------------------------------------------------------------------
# coordinate densities
# --------------------------------------------------------------------------

class CoordinateDensity:
    """One probability density on one coordinate space."""

    kind = "continuous"

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def support(self):
        return (-np.inf, np.inf)

    def breakpoints(self):
        return ()

    def closed_form_affinity(self, other):
        return None

    def closed_form_mixture(self, other):
        """rho(self, (self + other)/2) when known analytically."""
        return None

    def same_translation_family(self, other):
        """True when both are shifts of one symmetric density at a common scale."""
        return False

    def sample(self, rng, size):
        raise NotImplementedError

    def key(self):
        return (type(self).__name__, id(self))


class LocationScale(CoordinateDensity):
    """p_{f,lam}(x) = q((x - f)/lam)/lam for a standard shape q."""

    def __init__(self, shape, loc=0.0, scale=1.0):
        if not scale > 0:
            raise UsageError("scale must be positive")
        self.shape = get_shape(shape) if isinstance(shape, str) else shape
        self.loc = float(loc)
        self.scale = float(scale)
        self._logscale = math.log(self.scale)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.shape.logpdf((x - self.loc) / self.scale) - self._logscale

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.shape.pdf((x - self.loc) / self.scale) / self.scale

    def support(self):
        return (self.loc + self.scale * self.shape.lo, self.loc + self.scale * self.shape.hi)

    def breakpoints(self):
        pts = [self.loc + self.scale * k for k in self.shape.kinks]
        return tuple(pts) + (self.loc,)

    @property
    def bounded(self):
        return self.shape.bounded

    def sample(self, rng, size):
        return self.loc + self.scale * self.shape.sample(rng, size)

    def key(self):
        return ("ls",) + self.shape.key() + (_round_key(self.loc), _round_key(self.scale))

    def same_translation_family(self, other):
        return (isinstance(other, LocationScale) and self.shape.symmetric
                and self.shape.key() == other.shape.key()
                and self.scale == other.scale)

    def closed_form_affinity(self, other):
        if not isinstance(other, LocationScale) or self.shape.key() != other.shape.key():
            return None
        name = self.shape.name
        d = abs(other.loc - self.loc)
        s1, s2 = self.scale, other.scale
        if name == "gaussian":
            v = s1 * s1 + s2 * s2
            return math.sqrt(2.0 * s1 * s2 / v) * math.exp(-d * d / (4.0 * v))
        if name == "uniform" or (name == "pbeta" and self.shape.beta == 0.0):
            return _interval_overlap(self.support(), other.support()) / math.sqrt(
                (self.support()[1] - self.support()[0]) * (other.support()[1] - other.support()[0]))
        if name == "laplace" and s1 == s2:
            z = d / s1
            return math.exp(-z / 2.0) * (1.0 + z / 2.0)
        if name == "pbeta" and d == 0.0:
            return 1.0 - pbeta_scale_hellinger_sq(self.shape.beta, s2 / s1)
        return None

    def closed_form_mixture(self, other):
        if not isinstance(other, LocationScale) or self.shape.key() != other.shape.key():
            return None
        if self.shape.name == "uniform" or (self.shape.name == "pbeta" and self.shape.beta == 0.0):
            a, b = self.support()
            w1 = b - a
            w2 = other.support()[1] - other.support()[0]
            overlap = _interval_overlap(self.support(), other.support())
            h1, h2 = 1.0 / w1, 1.0 / w2
            return overlap * math.sqrt(h1 * (h1 + h2) / 2.0) + (w1 - overlap) * h1 * INV_SQRT2
        return None

    def __repr__(self):
        return f"LocationScale({self.shape!r}, loc={self.loc:g}, scale={self.scale:g})"


def _interval_overlap(a, b):
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def gaussian(loc=0.0, scale=1.0):
    return LocationScale(GaussianShape(), loc, scale)


def laplace(loc=0.0, scale=1.0):
    return LocationScale(LaplaceShape(), loc, scale)


def cauchy(loc=0.0, scale=1.0):
    return LocationScale(CauchyShape(), loc, scale)


def uniform(a=-0.5, b=0.5):
    return LocationScale(UniformShape(), 0.5 * (a + b), b - a)


class HistogramDensity(CoordinateDensity):
    """Piecewise constant density on the cells [e_k, e_{k+1}) of an interval.

    `heights` are density values t_I / mu(I).
    """

    def __init__(self, edges, heights):
        self.edges = np.asarray(edges, dtype=float)
        self.heights = np.asarray(heights, dtype=float)
        if self.edges.ndim != 1 or self.edges.size != self.heights.size + 1:
            raise UsageError("need len(edges) == len(heights) + 1")
        if np.any(np.diff(self.edges) <= 0):
            raise UsageError("edges must increase")
        if np.any(self.heights < 0):
            raise UsageError("negative density value")
        mass = float(np.dot(np.diff(self.edges), self.heights))
        if abs(mass - 1.0) > 1e-9:
            raise UsageError(f"histogram mass {mass:.12g} is not 1")

    @classmethod
    def from_masses(cls, edges, masses):
        edges = np.asarray(edges, dtype=float)
        return cls(edges, np.asarray(masses, dtype=float) / np.diff(edges))

    @property
    def masses(self):
        return self.heights * np.diff(self.edges)

    def cell_index(self, x):
        return cell_index(self.edges, x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.cell_index(x)
        out = np.zeros(x.shape)
        ok = idx >= 0
        out[ok] = self.heights[idx[ok]]
        return out

    def support(self):
        return (float(self.edges[0]), float(self.edges[-1]))

    def breakpoints(self):
        return tuple(self.edges)

    def sample(self, rng, size):
        cells = rng.choice(self.heights.size, size=size, p=self.masses / self.masses.sum())
        return rng.uniform(self.edges[cells], self.edges[cells + 1])

    def key(self):
        # canonical form: merge neighbouring cells with equal heights
        e, h = [self.edges[0]], []
        for k, v in enumerate(self.heights):
            if h and abs(h[-1] - v) <= 1e-12:
                e[-1] = self.edges[k + 1]
            else:
                h.append(v)
                e.append(self.edges[k + 1])
        return ("hist", tuple(_round_key(x) for x in e), tuple(_round_key(x) for x in h))

    def _common(self, other):
        edges = np.union1d(self.edges, other.edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        return np.diff(edges), self.pdf(mids), other.pdf(mids)

    def closed_form_affinity(self, other):
        if not isinstance(other, HistogramDensity):
            return None
        w, a, b = self._common(other)
        return float(np.sum(w * np.sqrt(a * b)))

    def closed_form_mixture(self, other):
        if not isinstance(other, HistogramDensity):
            return None
        w, a, b = self._common(other)
        return float(np.sum(w * np.sqrt(a * (a + b) / 2.0)))

    def __repr__(self):
        return f"HistogramDensity(edges={self.edges.tolist()}, heights={self.heights.tolist()})"


def cell_index(edges, x):
    """Index of the cell [e_k, e_{k+1}) containing x (last cell closed); -1 outside."""
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(edges, x, side="right") - 1
    idx = np.where(x == edges[-1], edges.size - 2, idx)
    bad = (x < edges[0]) | (x > edges[-1]) | ~np.isfinite(x)
    return np.where(bad, -1, idx)


class DiscreteDensity(CoordinateDensity):
    """Density with respect to counting measure, stored as an (atom, mass) table."""

    kind = "discrete"

    def __init__(self, atoms, masses):
        atoms = list(atoms)
        masses = np.asarray(masses, dtype=float)
        if len(atoms) != masses.size:
            raise UsageError("atoms and masses differ in length")
        if np.any(masses < 0):
            raise UsageError("negative mass")
        if abs(masses.sum() - 1.0) > 1e-9:
            raise UsageError("masses must sum to 1")
        self.table = {}
        for a, m in zip(atoms, masses):
            a = a.item() if isinstance(a, np.generic) else a
            self.table[a] = self.table.get(a, 0.0) + float(m)

    def pdf(self, x):
        if np.ndim(x) == 0 and not isinstance(x, (list, tuple)):
            return float(self.table.get(x.item() if isinstance(x, np.generic) else x, 0.0))
        return np.array([self.table.get(v.item() if isinstance(v, np.generic) else v, 0.0)
                         for v in x], dtype=float)

    def sample(self, rng, size):
        atoms = list(self.table)
        p = np.array([self.table[a] for a in atoms])
        idx = rng.choice(len(atoms), size=size, p=p / p.sum())
        return np.array([atoms[i] for i in idx])

    def key(self):
        return ("discrete", tuple(sorted((repr(a), _round_key(m)) for a, m in self.table.items())))

    def closed_form_affinity(self, other):
        if not isinstance(other, DiscreteDensity):
            return None
        return float(sum(math.sqrt(m * other.table.get(a, 0.0)) for a, m in self.table.items()))

    def closed_form_mixture(self, other):
        if not isinstance(other, DiscreteDensity):
            return None
        return float(sum(math.sqrt(m * (m + other.table.get(a, 0.0)) / 2.0)
                         for a, m in self.table.items()))


class SequenceDensity(CoordinateDensity):
    """s_theta on finite words: mass 2^-j on the prefix of length j of theta.

    theta is stored as a finite prefix followed by an infinite repetition of
    `fill`, which is how words are extended into infinite sequences.
    """

    kind = "sequence"

    def __init__(self, prefix, fill, depth_cap=60):
        self.prefix = tuple(prefix)
        self.fill = fill
        self.depth_cap = int(depth_cap)

    def symbol(self, k):
        return self.prefix[k] if k < len(self.prefix) else self.fill

    def word(self, j):
        return tuple(self.symbol(k) for k in range(j))

    def agreement(self, other):
        """J(theta, theta'): length of the common leading block, inf when equal."""
        m = max(len(self.prefix), len(other.prefix))
        for k in range(m):
            if self.symbol(k) != other.symbol(k):
                return k
        return math.inf if self.fill == other.fill else m

    def _mass(self, w):
        w = tuple(w)
        if len(w) == 0:
            return 0.0
        return 2.0 ** (-len(w)) if w == self.word(len(w)) else 0.0

    def pdf(self, x):
        if isinstance(x, tuple):
            return self._mass(x)
        return np.array([self._mass(w) for w in x], dtype=float)

    def logpdf(self, x):
        if isinstance(x, tuple):
            m = self._mass(x)
            return math.log(m) if m > 0 else -math.inf
        out = np.full(len(x), -np.inf)
        for i, w in enumerate(x):
            w = tuple(w)
            if len(w) and w == self.word(len(w)):
                out[i] = -len(w) * math.log(2.0)
        return out

    def sample(self, rng, size):
        lengths = rng.geometric(0.5, size=size)
        if np.any(lengths > self.depth_cap):
            raise DepthCapError(f"sampled word longer than depth cap {self.depth_cap}")
        out = np.empty(size, dtype=object)
        for i, j in enumerate(lengths):
            out[i] = self.word(int(j))
        return out

    def key(self):
        # drop trailing fill symbols so that equal sequences share a key
        p = list(self.prefix)
        while p and p[-1] == self.fill:
            p.pop()
        return ("seq", tuple(p), self.fill)

    def support_words(self, depth=None):
        depth = self.depth_cap if depth is None else depth
        return [self.word(j) for j in range(1, depth + 1)]

    def same_translation_family(self, other):
        return isinstance(other, SequenceDensity)

    def closed_form_affinity(self, other):
        if not isinstance(other, SequenceDensity):
            return None
        J = self.agreement(other)
        return 1.0 if J == math.inf else 1.0 - 2.0 ** (-J)

    def closed_form_mixture(self, other):
        if not isinstance(other, SequenceDensity):
            return None
        J = self.agreement(other)
        return 1.0 if J == math.inf else 1.0 - (1.0 - INV_SQRT2) * 2.0 ** (-J)

    def __repr__(self):
        return f"SequenceDensity({self.prefix!r}, fill={self.fill!r})"


class RandomDesignDensity(CoordinateDensity):
    """(w, y) -> q((y - g(w))/lam)/lam with respect to nu x Lebesgue.

    nu is only needed to sample the design or to compute distances, never by
    the statistic itself.
    """

    kind = "pair"

    def __init__(self, shape, g, scale=1.0, nu=None, g_key=None):
        self.shape = get_shape(shape) if isinstance(shape, str) else shape
        self.g = g
        self.scale = float(scale)
        self.nu = nu
        self.g_key = g_key

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        w, y = x[..., 0], x[..., 1]
        return self.shape.logpdf((y - self.g(w)) / self.scale) - math.log(self.scale)

    def sample(self, rng, size):
        if self.nu is None:
            raise UsageError("sampling a random design needs nu")
        w = self.nu.sample(rng, size)
        y = self.g(w) + self.scale * self.shape.sample(rng, size)
        return np.stack([w, y], axis=-1)

    def same_translation_family(self, other):
        return (isinstance(other, RandomDesignDensity) and self.shape.symmetric
                and self.shape.key() == other.shape.key() and self.scale == other.scale)

    def conditional(self, w):
        return LocationScale(self.shape, float(self.g(np.array([w]))[0]), self.scale)

    def key(self):
        if self.g_key is None:
            return ("rd", id(self))
        return ("rd",) + self.shape.key() + (self.g_key, _round_key(self.scale))


# --------------------------------------------------------------------------
# products
# --------------------------------------------------------------------------

class ProductDensity:
    """t = (t_1, ..., t_n): one density per observation."""

    def __init__(self, coordinates):
        coordinates = list(coordinates)
        if not coordinates:
            raise UsageError("a product density needs at least one coordinate")
        self._coords = coordinates
        self.n = len(coordinates)
        self._iid = None

    @classmethod
    def iid(cls, density, n):
        obj = cls.__new__(cls)
        obj._coords = None
        obj._iid = density
        obj.n = int(n)
        if obj.n < 1:
            raise UsageError("n must be positive")
        return obj

    @property
    def is_iid(self):
        return self._iid is not None

    @property
    def density(self):
        """The common coordinate density of an i.i.d. product."""
        return self._iid

    def coord(self, i):
        return self._iid if self._iid is not None else self._coords[i]

    @property
    def coordinates(self):
        return [self.coord(i) for i in range(self.n)]

    def logpdf(self, X):
        """Per-coordinate log densities, log t_i(X_i)."""
        if len(X) != self.n:
            raise UsageError(f"sample of length {len(X)} scored against n={self.n}")
        if self._iid is not None:
            return np.asarray(self._iid.logpdf(X), dtype=float)
        return np.array([float(np.asarray(c.logpdf(X[i:i + 1])).ravel()[0])
                         for i, c in enumerate(self._coords)])

    def sample(self, rng):
        if self._iid is not None:
            return self._iid.sample(rng, self.n)
        parts = [c.sample(rng, 1)[0] for c in self._coords]
        if all(isinstance(p, tuple) for p in parts):
            out = np.empty(self.n, dtype=object)
            out[:] = parts
            return out
        return np.array(parts)

    def key(self):
        if self._iid is not None:
            return ("iid", self.n, self._iid.key())
        return tuple(c.key() for c in self._coords)

    def __repr__(self):
        if self._iid is not None:
            return f"ProductDensity.iid({self._iid!r}, n={self.n})"
        return f"ProductDensity(n={self.n})"


def as_sample(X):
    """Coerce observations to an array; words stay as object arrays of tuples."""
    if isinstance(X, np.ndarray):
        return X
    if isinstance(X, Sequence) and len(X) and isinstance(X[0], tuple):
        out = np.empty(len(X), dtype=object)
        out[:] = list(X)
        return out
    return np.asarray(X, dtype=float)
