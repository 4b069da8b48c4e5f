"""The statistic T, the criterion Upsilon, and estimators built on finite nets.

For a net with points t_1..t_m and observations X_1..X_n,

    T(X, t, t') = 1/2 sum_i [rho(t'_i, r_i) - rho(t_i, r_i)] + 2^{-1/2} sum_i psi(sqrt(t'_i/t_i)(X_i))

with r_i = (t_i + t'_i)/2, and Upsilon(t) = max_{t'} T(X, t, t').  The psi part
is computed from log densities so that T(X, t, t') = -T(X, t', t) holds
exactly in floating point.
"""
from dataclasses import dataclass, field

import numpy as np

from .affinity import (DEFAULT_TOL, expectation, hellinger_affinity, mixture_affinity,
                       mixture_gap, psi, psi_from_logratio, ratio_affinity,
                       likelihood_ratio_sqrt)
from .constants import INV_SQRT2, SLACK
from .densities import ProductDensity, as_sample
from .errors import UsageError

# upper bound on elements of the temporary (rows, cols, columns-of-L) array
BLOCK_ELEMENTS = 1 << 16
# nets whose full table costs less than this many psi evaluations get one by default
TABLE_AUTO_LIMIT = 4_000_000


# --------------------------------------------------------------------------
# nets
# --------------------------------------------------------------------------

class ModelNet:
    """A finite indexed set of product densities.

    Subclasses provide a vectorized log-density matrix and the deterministic
    part of T.  The generic version works from an explicit list of points.
    """

    def __init__(self, points=None, params=None, eta=None, dimension_proxy=0.0,
                 label="net", n=None):
        self._points = list(points) if points is not None else None
        if self._points is not None and not self._points:
            raise UsageError("empty net")
        if n is None:
            if self._points is None:
                raise UsageError("need n or points")
            n = self._points[0].n
        self.n = int(n)
        if self._points is not None and any(p.n != self.n for p in self._points):
            raise UsageError("points of a net must share n")
        if params is None:
            params = np.arange(len(self))[:, None].astype(float)
        self.params = np.atleast_2d(np.asarray(params, dtype=float))
        if self.params.shape[0] != len(self) and self.params.shape[1] == len(self):
            self.params = self.params.T
        self.eta = eta
        self.dimension_proxy = float(dimension_proxy)
        self.label = label
        self._gap_cache = {}

    def __len__(self):
        return len(self._points)

    def point(self, j):
        return self._points[j]

    @property
    def points(self):
        return [self.point(j) for j in range(len(self))]

    def key(self, j):
        return self.point(j).key()

    @property
    def has_mixture_term(self):
        return True

    def log_density_matrix(self, X):
        """(m, n) array of log t_{j,i}(X_i)."""
        X = as_sample(X)
        return np.vstack([self.point(j).logpdf(X) for j in range(len(self))])

    def compress(self, X):
        """Log densities on distinct observations and their multiplicities.

        Returns (L, w) with L of shape (m, u); w is None when every column has
        weight one.  The psi-sum of T only depends on (L, w).
        """
        X = as_sample(X)
        if len(X) != self.n:
            raise UsageError(f"sample of length {len(X)} for a net with n={self.n}")
        if all(p.is_iid for p in self._points):
            keys, inverse, counts = _unique(X)
            L = np.vstack([np.asarray(self.point(j).density.logpdf(keys), dtype=float)
                           for j in range(len(self))])
            return _finish(L, counts)
        return np.ascontiguousarray(self.log_density_matrix(X)), None

    def mixture_block(self, rows, cols):
        """1/2 sum_i [rho(t'_i, r_i) - rho(t_i, r_i)] for t = rows, t' = cols; None if 0."""
        out = np.zeros((len(rows), len(cols)))
        for a, j in enumerate(rows):
            for b, k in enumerate(cols):
                out[a, b] = self._pair_gap(int(j), int(k))
        return out

    def _pair_gap(self, j, k):
        if j == k:
            return 0.0
        lo, hi = (j, k) if j < k else (k, j)
        v = self._gap_cache.get((lo, hi))
        if v is None:
            v = 0.5 * _product_gap(self.point(lo), self.point(hi))
            self._gap_cache[(lo, hi)] = v
        return v if j == lo else -v


def _product_gap(t, u, tol=DEFAULT_TOL):
    if t.is_iid and u.is_iid:
        return t.n * mixture_gap(t.density, u.density, tol)
    return float(sum(mixture_gap(t.coord(i), u.coord(i), tol) for i in range(t.n)))


def _unique(X):
    if X.dtype == object:
        index = {}
        inverse = np.empty(len(X), dtype=np.int64)
        keys = []
        for i, x in enumerate(X):
            x = tuple(x)
            if x not in index:
                index[x] = len(keys)
                keys.append(x)
            inverse[i] = index[x]
        counts = np.bincount(inverse, minlength=len(keys))
        arr = np.empty(len(keys), dtype=object)
        arr[:] = keys
        return arr, inverse, counts
    if X.ndim > 1:
        keys, inverse, counts = np.unique(X, axis=0, return_inverse=True, return_counts=True)
        return keys, inverse.ravel(), counts
    keys, inverse, counts = np.unique(X, return_inverse=True, return_counts=True)
    return keys, inverse, counts


def _finish(L, counts):
    L = np.ascontiguousarray(L, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if np.all(counts == 1.0):
        return L, None
    return L, counts


# --------------------------------------------------------------------------
# the statistic for single pairs
# --------------------------------------------------------------------------

def t_statistic(X, t, t_prime, tol=DEFAULT_TOL):
    """T(X, t, t') for two product densities."""
    X = as_sample(X)
    if len(X) != t.n or t_prime.n != t.n:
        raise UsageError("sample and densities disagree on n")
    d = t_prime.logpdf(X) - t.logpdf(X)
    s = float(np.sum(psi_from_logratio(d)))
    return 0.5 * _product_gap(t, t_prime, tol) + s * INV_SQRT2


def varrho_empirical(X, t, t_prime, tol=DEFAULT_TOL):
    """1/2 sum_i [rho(t_i, r_i) + sqrt(t_i/r_i)(X_i)]; unbiased for varrho_population."""
    X = as_sample(X)
    total = 0.0
    for i in range(t.n):
        a, b = t.coord(i), t_prime.coord(i)
        x = X[i:i + 1]
        ta = np.asarray(a.pdf(x), dtype=float)
        tb = np.asarray(b.pdf(x), dtype=float)
        r = 0.5 * (ta + tb)
        frac = np.where(r > 0, ta / np.where(r > 0, r, 1.0), 0.0)
        total += 0.5 * (mixture_affinity(a, b, tol) + float(np.sqrt(frac).ravel()[0]))
    return total


def varrho_population(s, t, t_prime, tol=DEFAULT_TOL):
    """sum_i 1/2 [rho(t_i, r_i) + int sqrt(t_i/r_i) s_i]."""
    if s.is_iid and t.is_iid and t_prime.is_iid:
        return s.n * 0.5 * (mixture_affinity(t.density, t_prime.density, tol)
                            + ratio_affinity(s.density, t.density, t_prime.density, tol))
    return float(sum(0.5 * (mixture_affinity(t.coord(i), t_prime.coord(i), tol)
                            + ratio_affinity(s.coord(i), t.coord(i), t_prime.coord(i), tol))
                     for i in range(s.n)))


def t_population(s, t, t_prime, tol=DEFAULT_TOL):
    """E_s[T(X, t, t')] = varrho(s, t', t) - varrho(s, t, t')."""
    return varrho_population(s, t_prime, t, tol) - varrho_population(s, t, t_prime, tol)


def expected_psi(s, t, t_prime, tol=DEFAULT_TOL):
    """E_s[psi(sqrt(t'/t)(X))] for one coordinate."""
    return expectation(s, lambda x: psi(likelihood_ratio_sqrt(t, t_prime, x)), tol,
                       extra=(t, t_prime))


def z_statistic(X, s, t, t_prime, tol=DEFAULT_TOL, expectations=None):
    """Z(X, t, t') = sum_i [psi(sqrt(t'_i/t_i)(X_i)) - E_s psi(...)]."""
    X = as_sample(X)
    d = t_prime.logpdf(X) - t.logpdf(X)
    centre = expectations
    if centre is None:
        if s.is_iid and t.is_iid and t_prime.is_iid:
            centre = s.n * expected_psi(s.density, t.density, t_prime.density, tol)
        else:
            centre = sum(expected_psi(s.coord(i), t.coord(i), t_prime.coord(i), tol)
                         for i in range(s.n))
    return float(np.sum(psi_from_logratio(d))) - centre


# --------------------------------------------------------------------------
# blocks of T over a net
# --------------------------------------------------------------------------

@dataclass
class _Prepared:
    net: ModelNet
    L: np.ndarray
    w: np.ndarray | None
    pen: np.ndarray | None = None

    @property
    def m(self):
        return self.L.shape[0]

    def block(self, rows, cols):
        """Kernel values T(X, t_j, t_k) - (pen_k - pen_j) for j in rows, k in cols."""
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        u = self.L.shape[1]
        out = np.empty((rows.size, cols.size))
        step = max(1, BLOCK_ELEMENTS // max(1, cols.size * u))
        Lc = self.L[cols]
        for a in range(0, rows.size, step):
            r = rows[a:a + step]
            with np.errstate(invalid="ignore"):
                d = Lc[None, :, :] - self.L[r][:, None, :]
            p = psi_from_logratio(d)
            if self.w is not None:
                p *= self.w
            T = p.sum(axis=-1) * INV_SQRT2
            if self.net.has_mixture_term:
                mix = self.net.mixture_block(r, cols)
                if mix is not None:
                    T = mix + T
            if self.pen is not None:
                T = T - (self.pen[cols][None, :] - self.pen[r][:, None])
            out[a:a + step] = T
        return out

    def loglik_order(self):
        with np.errstate(invalid="ignore"):
            ll = self.L @ self.w if self.w is not None else self.L.sum(axis=1)
        ll = np.where(np.isnan(ll), -np.inf, ll)
        keys = [np.arange(self.m), -ll]
        if self.pen is not None:
            keys = [np.arange(self.m), self.pen, -ll]
        return np.lexsort(keys)


def _prepare(X, net, pen=None):
    if len(net) == 0:
        raise UsageError("empty net")
    L, w = net.compress(as_sample(X))
    if pen is not None:
        pen = np.asarray(pen, dtype=float)
        if pen.shape != (len(net),) or np.any(~np.isfinite(pen)):
            raise UsageError("penalty must be a finite value for every point of the net")
    return _Prepared(net, L, w, pen)


@dataclass
class CriterionTable:
    """Full matrix of T(X, t_i, t_j) over a net with row maxima and the slack set."""

    t_matrix: np.ndarray
    upsilon: np.ndarray
    slack: float = SLACK

    @property
    def minimum(self):
        return float(self.upsilon.min())

    @property
    def argmin(self):
        return int(np.argmin(self.upsilon))

    @property
    def slack_set(self):
        return np.flatnonzero(self.upsilon <= self.minimum + self.slack)


def _full_table(prep):
    m = prep.m
    T = np.zeros((m, m))
    rows_per = max(1, min(m, 256))
    for a in range(0, m, rows_per):
        rows = np.arange(a, min(m, a + rows_per))
        cols = np.arange(a, m)
        B = prep.block(rows, cols)
        T[a:a + rows.size, a:] = B
    # fill the lower triangle by antisymmetry
    iu = np.triu_indices(m, 1)
    T[(iu[1], iu[0])] = -T[iu]
    np.fill_diagonal(T, 0.0)
    return T


def criterion_table(X, net, pen=None):
    """T(X, t_i, t_j) for all pairs (minus penalty differences when pen is given)."""
    prep = _prepare(X, net, pen)
    T = _full_table(prep)
    return CriterionTable(T, T.max(axis=1))


def upsilon(X, net, t_index, pen=None):
    """Upsilon(S, t) = max over the net of T(X, t, .), penalized when pen is given."""
    prep = _prepare(X, net, pen)
    return _row_value(prep, int(t_index))


def penalized_upsilon(X, union_net, pen, t_index):
    """max_{t'} {T(X, t, t') - pen(t')} + pen(t)."""
    if pen is None:
        raise UsageError("penalty missing")
    return upsilon(X, union_net, t_index, pen=pen)


def _row_value(prep, j):
    best = 0.0
    cols = np.arange(prep.m)
    for a in range(0, prep.m, 4096):
        best = max(best, float(prep.block([j], cols[a:a + 4096]).max()))
    return best


def _chunks(order, first=64):
    a, size = 0, first
    while a < order.size:
        yield order[a:a + size]
        a += size
        size *= 2


def _search(prep, anchors=16, spread=16):
    """Exact minimizer of the row maxima (lowest index on ties) without the full table.

    Rows are screened with a few high-likelihood columns plus columns spread
    over the index range; a row is abandoned as soon as one of its entries
    shows it cannot beat the current best.
    """
    m = prep.m
    order = prep.loglik_order()
    anchor = np.union1d(order[:min(anchors, m)],
                        np.unique(np.linspace(0, m - 1, min(spread, m)).astype(np.intp)))
    lb = np.maximum(prep.block(np.arange(m), anchor).max(axis=1), 0.0)
    cand = np.lexsort((np.arange(m), lb))
    best, best_j = np.inf, -1
    # columns that recently disqualified a row are tried first on the next ones
    killers = []
    for j in cand:
        j = int(j)
        v = lb[j]
        if v > best:
            break
        if v == best and j > best_j:
            continue
        worse = False
        for chunk in _chunks_with(killers, cand):
            row = prep.block([j], chunk)[0]
            a = int(np.argmax(row))
            v = max(v, float(row[a]))
            if v > best or (v == best and j > best_j):
                worse = True
                k = int(chunk[a])
                if k in killers:
                    killers.remove(k)
                killers.insert(0, k)
                del killers[_KILLERS:]
                break
        if not worse:
            best, best_j = v, j
    return best_j, best


_KILLERS = 8


def _chunks_with(killers, order):
    if killers:
        yield np.array(killers, dtype=np.intp)
    yield from _chunks(order)


def _slack_members(prep, threshold):
    order = prep.loglik_order()
    members = []
    for j in range(prep.m):
        v = 0.0
        inside = True
        for chunk in _chunks(order):
            v = max(v, float(prep.block([j], chunk).max()))
            if v > threshold:
                inside = False
                break
        if inside:
            members.append(j)
    return np.array(members, dtype=np.intp)


@dataclass
class RhoResult:
    """Outcome of a rho-estimation: unpacks as (index, point, table)."""

    index: int
    upsilon: float
    net: ModelNet
    table: CriterionTable | None = None
    _prep: _Prepared | None = field(default=None, repr=False)
    _slack: np.ndarray | None = field(default=None, repr=False)

    @property
    def point(self):
        return self.net.point(self.index)

    @property
    def param(self):
        return self.net.params[self.index]

    def slack_set(self):
        """Indices t with Upsilon(t) <= min Upsilon + kappa/10."""
        if self.table is not None:
            return self.table.slack_set
        if self._slack is None:
            self._slack = _slack_members(self._prep, self.upsilon + SLACK)
        return self._slack

    def __iter__(self):
        yield self.index
        yield self.point
        yield self.table


def _estimate(prep, table):
    m = prep.m
    if table == "auto":
        table = m * m * prep.L.shape[1] <= TABLE_AUTO_LIMIT
    if table:
        T = _full_table(prep)
        ct = CriterionTable(T, T.max(axis=1))
        j = ct.argmin
        return j, float(ct.upsilon[j]), ct
    j, v = _search(prep)
    return j, v, None


def rho_estimate(X, net, table="auto"):
    """Exact minimizer of Upsilon over the net, lowest index on ties.

    With table=True (or 'auto' on small nets) the full criterion table is kept;
    otherwise the minimizer is found by a pruned search giving the same index.
    """
    prep = _prepare(X, net)
    j, v, ct = _estimate(prep, table)
    return RhoResult(j, v, net, ct, prep)


@dataclass
class SelectResult:
    label: str
    index: int
    upsilon: float
    family: object
    table: CriterionTable | None = None
    _prep: _Prepared | None = field(default=None, repr=False)

    @property
    def point(self):
        return self.family.union_net.point(self.index)

    @property
    def param(self):
        return self.family.union_net.params[self.index]

    @property
    def models(self):
        return self.family.membership[self.index]

    def slack_set(self):
        if self.table is not None:
            return self.table.slack_set
        return _slack_members(self._prep, self.upsilon + SLACK)

    def __iter__(self):
        yield self.label
        yield self.index
        yield self.point


def rho_select(X, family, table="auto"):
    """Minimizer of the penalized criterion over the union net of a family."""
    net = family.union_net
    pen = np.asarray(family.pen, dtype=float)
    prep = _prepare(X, net, pen)
    j, v, ct = _estimate(prep, table)
    label = family.best_model_label(j)
    return SelectResult(label, j, v, family, ct, prep)


__all__ = [
    "ModelNet", "CriterionTable", "RhoResult", "SelectResult", "t_statistic",
    "varrho_empirical", "varrho_population", "t_population", "z_statistic", "expected_psi",
    "criterion_table", "upsilon", "penalized_upsilon", "rho_estimate", "rho_select",
    "hellinger_affinity",
]
