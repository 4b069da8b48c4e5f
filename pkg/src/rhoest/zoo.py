"""Model families and the finite nets built on them."""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .affinity import DEFAULT_TOL, mixture_affinity
from .constants import c0
from .criterion import ModelNet, _finish, _unique
from .densities import (HistogramDensity, LocationScale, PBetaShape, ProductDensity,
                        RandomDesignDensity, SequenceDensity, Shape, UniformShape,
                        as_sample, cell_index, get_shape, pbeta_scale_hellinger_sq)
from .errors import SizeGuardError, UsageError

__all__ = [
    "LocationScaleNet", "HistogramNet", "SequenceNet", "RandomDesignNet", "SequenceModel",
    "BetaGrid", "make_translation_net", "make_uniform_shift_net", "make_histogram_net",
    "make_pbeta", "pbeta_scale_hellinger_sq", "make_beta_grid", "make_sequence_model",
    "make_regression_net", "linear_design", "make_linear_regression_net", "d_loss",
    "simplex_lattice", "histogram_dimension_proxy",
]


def _shape(q):
    if isinstance(q, Shape):
        return q
    if isinstance(q, LocationScale):
        if q.loc != 0.0 or q.scale != 1.0:
            raise UsageError("pass the standard shape, not a shifted density")
        return q.shape
    return get_shape(q)


# --------------------------------------------------------------------------
# location-scale nets (translation models and fixed-design regression)
# --------------------------------------------------------------------------

class LocationScaleNet(ModelNet):
    """Points p_{f,lam} built from standard shapes.

    loc has shape (m,) for i.i.d. products (translation models) or (m, n)
    for fixed-design regression where coordinate i is centred at loc[j, i].
    """

    def __init__(self, shapes, loc, scale=None, shape_index=None, params=None, n=None,
                 eta=None, dimension_proxy=0.0, label="location-scale"):
        self.shapes = [_shape(q) for q in shapes]
        self.loc = np.asarray(loc, dtype=float)
        m = self.loc.shape[0]
        if m == 0:
            raise UsageError("empty grid")
        if not np.all(np.isfinite(self.loc)):
            raise UsageError("non-finite grid")
        self.iid = self.loc.ndim == 1
        if n is None:
            if self.iid:
                raise UsageError("n is required for translation nets")
            n = self.loc.shape[1]
        self._m = m
        self.scale = np.ones(m) if scale is None else np.broadcast_to(
            np.asarray(scale, dtype=float), (m,)).copy()
        if np.any(self.scale <= 0):
            raise UsageError("scales must be positive")
        self.shape_index = (np.zeros(m, dtype=np.intp) if shape_index is None
                            else np.asarray(shape_index, dtype=np.intp))
        super().__init__(None, params if params is not None else (
            self.loc[:, None] if self.iid else np.arange(m)[:, None]),
            eta=eta, dimension_proxy=dimension_proxy, label=label, n=n)
        one_shape = len(set(self.shape_index.tolist())) == 1
        sym = self.shapes[int(self.shape_index[0])].symmetric
        self._zero_mixture = one_shape and sym and np.all(self.scale == self.scale[0])
        self._aff_cache = {}

    def __len__(self):
        return self._m

    def coordinate(self, j, i=0):
        loc = self.loc[j] if self.iid else self.loc[j, i]
        return LocationScale(self.shapes[self.shape_index[j]], loc, self.scale[j])

    def point(self, j):
        if self.iid:
            return ProductDensity.iid(self.coordinate(j), self.n)
        return ProductDensity([self.coordinate(j, i) for i in range(self.n)])

    def key(self, j):
        loc = (round(float(self.loc[j]), 12),) if self.iid else tuple(
            np.round(self.loc[j], 12).tolist())
        return ("ls",) + self.shapes[self.shape_index[j]].key() + (
            round(float(self.scale[j]), 12),) + loc

    @property
    def has_mixture_term(self):
        return not self._zero_mixture

    def _logpdf(self, z, rows):
        out = np.empty(z.shape)
        for s in np.unique(self.shape_index[rows]):
            sel = self.shape_index[rows] == s
            out[sel] = self.shapes[s].logpdf(z[sel])
        return out - np.log(self.scale[rows])[:, None]

    def log_density_matrix(self, X):
        X = np.asarray(as_sample(X), dtype=float)
        rows = np.arange(self._m)
        loc = self.loc[:, None] if self.iid else self.loc
        return self._logpdf((X[None, :] - loc) / self.scale[:, None], rows)

    def compress(self, X):
        X = np.asarray(as_sample(X), dtype=float)
        if X.shape != (self.n,):
            raise UsageError(f"sample of shape {X.shape} for a net with n={self.n}")
        rows = np.arange(self._m)
        if self.iid:
            keys, _, counts = _unique(X)
            z = (keys[None, :] - self.loc[:, None]) / self.scale[:, None]
            return _finish(self._logpdf(z, rows), counts)
        z = (X[None, :] - self.loc) / self.scale[:, None]
        return np.ascontiguousarray(self._logpdf(z, rows)), None

    def mixture_block(self, rows, cols):
        if self._zero_mixture:
            return None
        return super().mixture_block(rows, cols)

    def _affinity(self, a, b, ratio, delta):
        """rho(q_a, (q_a + q_b(. - delta)/ratio ... )/2) with q_a standard."""
        key = (a, b, round(ratio, 12), round(delta, 12))
        v = self._aff_cache.get(key)
        if v is None:
            t = LocationScale(self.shapes[a], 0.0, 1.0)
            u = LocationScale(self.shapes[b], delta, ratio)
            v = mixture_affinity(t, u, DEFAULT_TOL)
            self._aff_cache[key] = v
        return v

    def _coord_gap(self, j, k, lj, lk):
        a, b = int(self.shape_index[j]), int(self.shape_index[k])
        sj, sk = float(self.scale[j]), float(self.scale[k])
        if a == b and sj == sk and self.shapes[a].symmetric:
            return 0.0
        rho_k = self._affinity(b, a, sj / sk, (lj - lk) / sk)
        rho_j = self._affinity(a, b, sk / sj, (lk - lj) / sj)
        return rho_k - rho_j

    def _pair_gap(self, j, k):
        if j == k:
            return 0.0
        lo, hi = (j, k) if j < k else (k, j)
        v = self._gap_cache.get((lo, hi))
        if v is None:
            if self.iid:
                v = 0.5 * self.n * self._coord_gap(lo, hi, float(self.loc[lo]), float(self.loc[hi]))
            else:
                v = 0.5 * sum(self._coord_gap(lo, hi, float(self.loc[lo, i]), float(self.loc[hi, i]))
                              for i in range(self.n))
            self._gap_cache[(lo, hi)] = v
        return v if j == lo else -v


def _grid(lo, hi, step):
    if not step > 0:
        raise UsageError("step must be positive")
    if hi < lo:
        raise UsageError("empty grid")
    k = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(k)


def _eta(shape, step, scale, n):
    if shape.order is None:
        return None
    alpha, _, A = shape.order
    return math.sqrt(n * A) * (step / scale) ** ((1.0 + alpha) / 2.0)


def make_translation_net(q, theta_min, theta_max, step, n, scale=1.0, label=None):
    """i.i.d. products of p(. - theta)/... on the grid theta_min + k*step."""
    shape = _shape(q)
    grid = _grid(float(theta_min), float(theta_max), float(step))
    return LocationScaleNet([shape], grid, scale=scale, n=n, params=grid[:, None],
                            eta=_eta(shape, step, scale, n), dimension_proxy=0.0,
                            label=label or f"translation-{shape.name}")


def make_uniform_shift_net(theta_min, theta_max, step, n):
    """Translates of the indicator of [theta - 1/2, theta + 1/2]."""
    return make_translation_net(UniformShape(), theta_min, theta_max, step, n,
                                label="uniform-shift")


# --------------------------------------------------------------------------
# histograms
# --------------------------------------------------------------------------

def simplex_lattice(k, N):
    """All vectors of k non-negative integers summing to N, divided by N."""
    if k < 1 or N < 1:
        raise UsageError("need k >= 1 and N >= 1")
    rows = []
    for bars in itertools.combinations(range(N + k - 1), k - 1):
        b = (-1,) + bars + (N + k - 1,)
        rows.append([b[i + 1] - b[i] - 1 for i in range(k)])
    return np.array(rows, dtype=float) / N


def histogram_dimension_proxy(cells):
    return 6.0 * c0 ** -2 * cells


class HistogramNet(ModelNet):
    """Histograms on a fixed partition, stored as a matrix of cell masses."""

    def __init__(self, edges, probs, n, eta=None, dimension_proxy=None, label="histogram",
                 params=None):
        self.edges = np.asarray(edges, dtype=float)
        self.widths = np.diff(self.edges)
        if np.any(self.widths <= 0):
            raise UsageError("edges must increase")
        self.probs = np.ascontiguousarray(probs, dtype=float)
        if self.probs.ndim != 2 or self.probs.shape[1] != self.widths.size:
            raise UsageError("probs must be (points, cells)")
        if self.probs.shape[0] == 0:
            raise UsageError("empty net")
        if np.any(np.abs(self.probs.sum(axis=1) - 1.0) > 1e-9) or np.any(self.probs < 0):
            raise UsageError("each point must be a probability vector")
        with np.errstate(divide="ignore"):
            self._logh = np.log(self.probs) - np.log(self.widths)[None, :]
        self._root = np.sqrt(self.probs)
        if dimension_proxy is None:
            dimension_proxy = histogram_dimension_proxy(self.widths.size)
        super().__init__(None, self.probs if params is None else params, eta=eta,
                         dimension_proxy=dimension_proxy, label=label, n=n)

    def __len__(self):
        return self.probs.shape[0]

    def density(self, j):
        return HistogramDensity(self.edges, self.probs[j] / self.widths)

    def point(self, j):
        return ProductDensity.iid(self.density(j), self.n)

    def key(self, j):
        return ("hist", tuple(np.round(self.edges, 12).tolist()),
                tuple(np.round(self.probs[j], 12).tolist()))

    def counts(self, X):
        X = np.asarray(as_sample(X), dtype=float)
        idx = cell_index(self.edges, X)
        return np.bincount(idx[idx >= 0], minlength=self.widths.size)

    def log_density_matrix(self, X):
        idx = cell_index(self.edges, np.asarray(as_sample(X), dtype=float))
        out = np.full((len(self), idx.size), -np.inf)
        ok = idx >= 0
        out[:, ok] = self._logh[:, idx[ok]]
        return out

    def compress(self, X):
        X = np.asarray(as_sample(X), dtype=float)
        if X.shape != (self.n,):
            raise UsageError(f"sample of shape {X.shape} for a net with n={self.n}")
        N = self.counts(X)
        cells = np.flatnonzero(N)
        # observations outside the partition give 0/0 terms, which vanish
        return _finish(self._logh[:, cells], N[cells])

    def mixture_block(self, rows, cols):
        P = self.probs[rows][:, None, :]
        Q = self.probs[cols][None, :, :]
        S = P + Q
        rho_row = np.sqrt(P * S * 0.5).sum(axis=-1)
        rho_col = np.sqrt(Q * S * 0.5).sum(axis=-1)
        return (0.5 * self.n) * (rho_col - rho_row)

    def refine(self, edges):
        """Same points expressed on a finer partition."""
        edges = np.asarray(edges, dtype=float)
        if not np.all(np.isin(self.edges, edges)):
            raise UsageError("new edges must contain the old ones")
        widths = np.diff(edges)
        parent = cell_index(self.edges, 0.5 * (edges[:-1] + edges[1:]))
        P = self.probs[:, parent] * (widths / self.widths[parent])[None, :]
        return HistogramNet(edges, P, self.n, eta=self.eta,
                            dimension_proxy=self.dimension_proxy, label=self.label)


def _resolution_denominator(resolution):
    if isinstance(resolution, (int, np.integer)) and resolution >= 1:
        return int(resolution)
    r = float(resolution)
    N = int(round(1.0 / r))
    if N < 1 or abs(N * r - 1.0) > 1e-9:
        raise UsageError("grid resolution must divide 1")
    return N


def make_histogram_net(partition, grid_resolution, n, max_points=250_000, label=None):
    """All histograms on `partition` (cell edges) with masses on the lattice of step 1/N.

    grid_resolution is either the step 1/N or the integer N.
    """
    edges = np.asarray(partition, dtype=float)
    k = edges.size - 1
    if k < 2:
        raise UsageError("a partition needs at least two cells")
    N = _resolution_denominator(grid_resolution)
    size = math.comb(N + k - 1, k - 1)
    if size > max_points:
        raise SizeGuardError(f"histogram net would have {size} points (cap {max_points})")
    return HistogramNet(edges, simplex_lattice(k, N), n,
                        dimension_proxy=histogram_dimension_proxy(k),
                        label=label or f"histogram-{k}")


# --------------------------------------------------------------------------
# p^beta family
# --------------------------------------------------------------------------

def make_pbeta(beta, loc=0.0, scale=1.0):
    """The density Lambda(beta) exp(-|x|^(1/beta)) (uniform on [-1, 1] at beta = 0)."""
    return LocationScale(PBetaShape(beta), loc, scale)


@dataclass
class BetaGrid:
    values: np.ndarray
    gamma: np.ndarray
    c: float
    dropped_mass: float

    def __len__(self):
        return self.values.size


def _tail_sum(n, start):
    """Bound on sum_{j >= start} 1.69 alpha_j^2 / j^2 (start >= 3)."""
    J = max(int(start), 3)
    a = math.log(2.0 * J)
    return 1.69 * (a * a + 2.0 * a + 2.0) / J


def make_beta_grid(n, beta_max=20.0):
    """Grid of shape parameters b with h^2(p^beta, p^b) <= 1/n for the nearest b <= beta.

    Returns the values and the weights gamma (summing to at most 1 over the
    infinite grid, so the truncated weights sum to less than 1).
    """
    if n < 3:
        raise UsageError("need n >= 3")
    rn = math.sqrt(n)
    ratio = 1.0 + math.sqrt(6.0 / (13.0 * n))
    vals = [0.0]
    b = 2.0 / n
    while b < 1.0:
        vals.append(b)
        b *= ratio
    vals.append(1.0)
    step = 2.0 / math.sqrt(7.0 * n)
    b = 1.0 + step
    while b < 3.0:
        vals.append(b)
        b += step
    head = len(vals) + 1  # points of B1, B2 and b = 3
    B3 = [3.0]
    j = 1
    while True:
        alpha = math.log(3.0 + j / (1.3 * rn))
        b = 3.0 + j / (1.3 * rn * alpha)
        if b > beta_max:
            break
        B3.append(b)
        j += 1
    J_kept = j - 1
    # weights of B3 points j >= 1 are 1.69 alpha_j^2 / j^2
    big = 200_000
    jj = np.arange(1, big + 1, dtype=float)
    alphas = np.log(3.0 + jj / (1.3 * rn))
    tail_terms = 1.69 * alphas ** 2 / jj ** 2
    total_tail = float(tail_terms.sum()) + _tail_sum(n, big + 1)
    head_w = 1.0 / (rn * math.log(n))
    c = 1.0 / (head * head_w + total_tail)
    values = np.array(vals + B3)
    gamma = np.concatenate([np.full(head, c * head_w), c * tail_terms[:J_kept]])
    dropped = c * (total_tail - float(tail_terms[:J_kept].sum()))
    return BetaGrid(values, gamma, c, dropped)


# --------------------------------------------------------------------------
# words
# --------------------------------------------------------------------------

class SequenceNet(ModelNet):
    """Points s_theta for eventually constant theta (word followed by the fill symbol)."""

    def __init__(self, prefixes, fill, n, depth_cap=60, label="sequence"):
        seen = {}
        for p in prefixes:
            d = SequenceDensity(p, fill, depth_cap)
            seen.setdefault(d.key(), d)
        self.densities = list(seen.values())
        if not self.densities:
            raise UsageError("empty net")
        self.fill = fill
        super().__init__(None, np.arange(len(self.densities))[:, None], eta=None,
                         dimension_proxy=0.0, label=label, n=n)

    def __len__(self):
        return len(self.densities)

    def point(self, j):
        return ProductDensity.iid(self.densities[j], self.n)

    def key(self, j):
        return self.densities[j].key()

    @property
    def has_mixture_term(self):
        return False

    def mixture_block(self, rows, cols):
        return None

    def compress(self, X):
        X = as_sample(X)
        if len(X) != self.n:
            raise UsageError("sample length does not match n")
        words, _, counts = _unique(X)
        L = np.vstack([d.logpdf(words) for d in self.densities])
        return _finish(L, counts)


class SequenceModel:
    """Words over a finite alphabet with s_theta giving mass 2^-j to the length-j prefix."""

    def __init__(self, alphabet, theta, depth_cap=60):
        self.alphabet = list(alphabet)
        if len(self.alphabet) < 2:
            raise UsageError("alphabet needs at least two symbols")
        self.fill = self.alphabet[0]
        self.depth_cap = int(depth_cap)
        theta = tuple(theta)
        if len(theta) > self.depth_cap:
            raise UsageError("theta longer than the depth cap")
        self.truth = SequenceDensity(theta, self.fill, depth_cap)

    def sample(self, rng, n):
        return self.truth.sample(rng, n)

    def enumeration(self, depth):
        words = []
        for j in range(1, depth + 1):
            words.extend(itertools.product(self.alphabet, repeat=j))
        return words

    def net_for(self, X=None, n=None, enum_depth=2):
        """Fixed enumeration up to enum_depth plus every prefix of the observed words."""
        words = self.enumeration(enum_depth)
        if X is not None:
            for x in X:
                x = tuple(x)
                if len(x) > self.depth_cap:
                    raise UsageError("observed word longer than the depth cap")
                words.extend(x[:j] for j in range(1, len(x) + 1))
            n = len(X)
        if n is None:
            raise UsageError("need a sample or n")
        return SequenceNet(words, self.fill, n, self.depth_cap)


def make_sequence_model(alphabet, theta, depth_cap=60, sample=None, n=None, enum_depth=2):
    """Model plus a net covering the enumeration and the prefixes of `sample`."""
    model = SequenceModel(alphabet, theta, depth_cap)
    if sample is None and n is None:
        return model, None
    return model, model.net_for(sample, n, enum_depth)


# --------------------------------------------------------------------------
# regression
# --------------------------------------------------------------------------

_TRANSFORMS = {
    None: lambda z: z,
    "identity": lambda z: z,
    "exp": np.exp,
    "logistic": lambda z: 1.0 / (1.0 + np.exp(-z)),
    "atan": np.arctan,
}


def _transform(t):
    if callable(t):
        return t
    try:
        return _TRANSFORMS[t]
    except KeyError:
        raise UsageError(f"unknown transform {t!r}") from None


def linear_design(n):
    """x_i = (2i - n - 1)/n, i = 1..n."""
    i = np.arange(1, n + 1)
    return (2.0 * i - n - 1.0) / n


class RandomDesignNet(ModelNet):
    """Densities (w, y) -> q(y - g(w)) for a symmetric q; the deterministic term is zero."""

    def __init__(self, shape, basis, coeffs, transform=None, scale=1.0, n=None, nu=None,
                 label="random-design"):
        self.shape = _shape(shape)
        if not self.shape.symmetric:
            raise UsageError("random-design models need a symmetric error density")
        self.basis = list(basis)
        self.coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if not np.all(np.isfinite(self.coeffs)):
            raise UsageError("non-finite grid")
        self.transform = _transform(transform)
        self.scale = float(scale)
        self.nu = nu
        super().__init__(None, self.coeffs, label=label, n=n,
                         dimension_proxy=0.0)

    def __len__(self):
        return self.coeffs.shape[0]

    def _g(self, j):
        beta = self.coeffs[j]
        basis, tr = self.basis, self.transform
        return lambda w: tr(sum(b * f(np.asarray(w, dtype=float)) for b, f in zip(beta, basis)))

    def point(self, j):
        d = RandomDesignDensity(self.shape, self._g(j), self.scale, self.nu,
                                g_key=tuple(np.round(self.coeffs[j], 12).tolist()))
        return ProductDensity.iid(d, self.n)

    def key(self, j):
        return ("rd",) + self.shape.key() + tuple(np.round(self.coeffs[j], 12).tolist())

    @property
    def has_mixture_term(self):
        return False

    def mixture_block(self, rows, cols):
        return None

    def fitted(self, W):
        B = np.stack([f(np.asarray(W, dtype=float)) for f in self.basis], axis=1)
        return self.transform(self.coeffs @ B.T)

    def log_density_matrix(self, X):
        X = np.asarray(X, dtype=float)
        G = self.fitted(X[:, 0])
        return self.shape.logpdf((X[None, :, 1] - G) / self.scale) - math.log(self.scale)

    def compress(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, 2):
            raise UsageError("random-design samples are (n, 2) arrays of (w, y)")
        return np.ascontiguousarray(self.log_density_matrix(X)), None


def make_regression_net(q, design, basis, coeff_grid, transform=None, n=None, scale=1.0,
                        nu=None, label=None, dimension_proxy=0.0):
    """Regression model y_i = Psi(sum_j beta_j zeta_j(w_i)) + error with error density q.

    design: array of fixed design points, or "random" (observations are (w, y)).
    basis: callables of w, or arrays of length n (fixed design only).
    coeff_grid: (points, len(basis)) array of coefficient vectors.
    """
    shape = _shape(q)
    coeffs = np.atleast_2d(np.asarray(coeff_grid, dtype=float))
    if coeffs.shape[1] != len(basis):
        raise UsageError("coefficient vectors must match the basis")
    if not np.all(np.isfinite(coeffs)):
        raise UsageError("non-finite grid")
    if isinstance(design, str):
        if design != "random":
            raise UsageError("design must be an array or 'random'")
        if n is None:
            raise UsageError("n is required for random designs")
        return RandomDesignNet(shape, basis, coeffs, transform, scale, n, nu,
                               label=label or "random-design")
    x = np.asarray(design, dtype=float)
    n = x.size if n is None else n
    if x.size != n:
        raise UsageError("design length differs from n")
    cols = []
    for f in basis:
        v = f(x) if callable(f) else np.asarray(f, dtype=float)
        v = np.broadcast_to(np.asarray(v, dtype=float), (n,))
        cols.append(v)
    B = np.stack(cols, axis=1)
    G = _transform(transform)(coeffs @ B.T)
    return LocationScaleNet([shape], G, scale=scale, params=coeffs, n=n,
                            dimension_proxy=dimension_proxy,
                            label=label or "regression")


def make_linear_regression_net(q, n, a_values, b_values, scale=1.0, design=None):
    """Net for y_i = a + b x_i + error over the product grid a_values x b_values."""
    x = linear_design(n) if design is None else np.asarray(design, dtype=float)
    A, B = np.meshgrid(np.asarray(a_values, float), np.asarray(b_values, float), indexing="ij")
    coeffs = np.stack([A.ravel(), B.ravel()], axis=1)
    return make_regression_net(q, x, [np.ones_like, lambda z: z], coeffs, n=n, scale=scale,
                               label="linear-regression")


def d_loss(f, g, alpha, A_q):
    """sum_i min(|f_i - g_i|^(1 + alpha), 1/A_q)."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise UsageError("length mismatch")
    if not -1.0 < alpha <= 1.0 or not A_q > 0:
        raise UsageError("need alpha in (-1, 1] and A_q > 0")
    return float(np.sum(np.minimum(np.abs(f - g) ** (1.0 + alpha), 1.0 / A_q)))
