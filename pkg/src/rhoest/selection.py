"""Penalized families: model weights, dimension proxies and the penalty pen1."""
import itertools
import math

import numpy as np

from .constants import kappa
from .criterion import ModelNet
from .errors import UsageError
from .zoo import (HistogramNet, LocationScaleNet, histogram_dimension_proxy,
                  make_histogram_net, make_regression_net, make_translation_net, _shape)

__all__ = [
    "vc_dimension_proxy", "PenalizedFamily", "pen1", "merge_nets", "make_histogram_family",
    "make_scale_family", "make_sparse_index_family", "scale_grid", "sparse_index_weight",
]

SUBPROB_TOL = 1e-12


def vc_dimension_proxy(V_bar, n, C=1.0):
    """C V (1 + log_+(n / V))."""
    if V_bar < 1 or not C > 0:
        raise UsageError("need V_bar >= 1 and C > 0")
    return C * V_bar * (1.0 + max(0.0, math.log(n / V_bar)))


# --------------------------------------------------------------------------
# union of nets
# --------------------------------------------------------------------------

def _merge_histograms(nets):
    edges = np.unique(np.concatenate([h.edges for h in nets]))
    refined = [h.refine(edges) for h in nets]
    return HistogramNet(edges, np.vstack([h.probs for h in refined]), nets[0].n,
                        dimension_proxy=0.0, label="union"), refined


def _merge_location_scale(nets):
    shapes, keys = [], {}
    idx, loc, scale = [], [], []
    for net in nets:
        for s in net.shapes:
            k = s.key()
            if k not in keys:
                keys[k] = len(shapes)
                shapes.append(s)
        remap = np.array([keys[s.key()] for s in net.shapes])
        idx.append(remap[net.shape_index])
        loc.append(net.loc)
        scale.append(net.scale)
    params = None
    if len({net.params.shape[1] for net in nets}) == 1:
        params = np.vstack([net.params for net in nets])
    merged = LocationScaleNet(shapes, np.concatenate(loc), np.concatenate(scale),
                              np.concatenate(idx), params=params, n=nets[0].n, label="union")
    return merged, nets


class _SubNet(ModelNet):
    """Rows `keep` of a vectorized net."""

    def __init__(self, base, keep):
        self.base = base
        self.keep = np.asarray(keep, dtype=np.intp)
        super().__init__(None, base.params[self.keep], eta=base.eta,
                         dimension_proxy=base.dimension_proxy, label=base.label, n=base.n)

    def __len__(self):
        return self.keep.size

    def point(self, j):
        return self.base.point(int(self.keep[j]))

    def key(self, j):
        return self.base.key(int(self.keep[j]))

    @property
    def has_mixture_term(self):
        return self.base.has_mixture_term

    def log_density_matrix(self, X):
        return self.base.log_density_matrix(X)[self.keep]

    def compress(self, X):
        L, w = self.base.compress(X)
        return np.ascontiguousarray(L[self.keep]), w

    def mixture_block(self, rows, cols):
        return self.base.mixture_block(self.keep[np.asarray(rows)], self.keep[np.asarray(cols)])


def merge_nets(nets):
    """Union of nets with duplicated densities removed.

    Returns (union_net, membership) where membership[j] lists the nets that
    contain union point j.
    """
    if not nets:
        raise UsageError("no models")
    n = nets[0].n
    if any(net.n != n for net in nets):
        raise UsageError("models of a family must share n")
    if all(isinstance(net, HistogramNet) for net in nets):
        stacked, parts = _merge_histograms(nets)
    elif all(type(net) is LocationScaleNet for net in nets) and len({net.iid for net in nets}) == 1:
        stacked, parts = _merge_location_scale(nets)
    else:
        stacked, parts = None, nets
    keys, keep, membership = {}, [], []
    offset = 0
    for mi, net in enumerate(parts):
        for j in range(len(net)):
            k = net.key(j)
            pos = keys.get(k)
            if pos is None:
                keys[k] = len(keep)
                keep.append((mi, j, offset + j))
                membership.append([mi])
            elif membership[pos][-1] != mi:
                membership[pos].append(mi)
        offset += len(net)
    if stacked is None:
        union = ModelNet([parts[mi].point(j) for mi, j, _ in keep], label="union", n=n)
    else:
        rows = [r for _, _, r in keep]
        union = stacked if len(rows) == len(stacked) else _SubNet(stacked, rows)
    return union, membership


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------

class PenalizedFamily:
    """Models with weights Delta (sum exp(-Delta) <= 1) and the pointwise penalty pen1."""

    def __init__(self, models, delta, proxies=None, labels=None, dimension_constant=1.0,
                 dropped_mass=0.0, check=True):
        self.models = list(models)
        if not self.models:
            raise UsageError("no models")
        self.delta = np.asarray(delta, dtype=float)
        if self.delta.shape != (len(self.models),) or np.any(np.isnan(self.delta)):
            raise UsageError("one weight per model")
        self.proxies = np.asarray([m.dimension_proxy for m in self.models] if proxies is None
                                  else proxies, dtype=float)
        if np.any(self.proxies < 0):
            raise UsageError("dimension proxies must be non-negative")
        self.labels = list(labels) if labels is not None else [m.label for m in self.models]
        self.dimension_constant = dimension_constant
        self.dropped_mass = float(dropped_mass)
        self.weight_sum = float(np.sum(np.exp(-self.delta)))
        if check and self.weight_sum > 1.0 + SUBPROB_TOL:
            raise UsageError(f"sum of exp(-Delta) is {self.weight_sum:.6g} > 1")
        self._union = None

    def __len__(self):
        return len(self.models)

    @property
    def model_penalty(self):
        return self.proxies / 8.0 + kappa * self.delta

    def _build(self):
        if self._union is None:
            self._union, self._membership = merge_nets(self.models)
            mp = self.model_penalty
            self._pen = np.array([min(mp[i] for i in ms) for ms in self._membership])
        return self._union

    @property
    def union_net(self):
        return self._build()

    @property
    def membership(self):
        self._build()
        return self._membership

    @property
    def pen(self):
        self._build()
        return self._pen

    def best_model(self, j):
        ms = self.membership[j]
        mp = self.model_penalty
        return min(ms, key=lambda i: (mp[i], i))

    def best_model_label(self, j):
        return self.labels[self.best_model(j)]


def pen1(family):
    """Penalty of every union point: min over containing models of proxy/8 + kappa Delta."""
    membership = family.membership
    if any(not ms for ms in membership):
        raise UsageError("a point belongs to no model")
    return np.asarray(family.pen, dtype=float)


def _uniform_delta(count):
    return np.full(count, math.log(count))


def make_histogram_family(partitions, grid_resolution, n, delta=None, mode="vc",
                          dimension_constant=1.0, max_points=250_000):
    """Histogram models on several partitions.

    mode 'vc' uses the VC proxy with V = |I| + 2; mode 'histo' uses 6 c0^-2 |I|.
    """
    models = [make_histogram_net(p, grid_resolution, n, max_points=max_points) for p in partitions]
    cells = [m.widths.size for m in models]
    if mode == "vc":
        proxies = [vc_dimension_proxy(k + 2, n, dimension_constant) for k in cells]
    elif mode == "histo":
        proxies = [histogram_dimension_proxy(k) for k in cells]
    else:
        raise UsageError(f"unknown penalty mode {mode!r}")
    delta = _uniform_delta(len(models)) if delta is None else delta
    return PenalizedFamily(models, delta, proxies, [f"histogram-{k}" for k in cells],
                           dimension_constant)


def scale_grid(i, j):
    """lambda_{i,j,k} = 2^j (1 + k 2^-i) for k = 0..2^i - 1."""
    k = np.arange(2 ** i)
    return 2.0 ** j * (1.0 + k * 2.0 ** -i)


def _scale_weight(i, j):
    return abs(j) + i + 2 + i * math.log(2.0)


def _scale_mass_full():
    # sum over j in Z of e^-|j|, times sum over i >= 0 of 2^i e^-(i + 2 + i log 2)
    sj = (math.e + 1.0) / (math.e - 1.0)
    si = math.exp(-2.0) / (1.0 - math.exp(-1.0))
    return sj * si


def _translation_builder(theta_min, theta_max, step):
    def build(q, lam, n):
        return make_translation_net(q, theta_min, theta_max, step, n, scale=lam)
    return build


def make_scale_family(q_list, F_list, j_range=(-8, 8), i_max=6, n=None,
                      dimension_constant=1.0):
    """Models S_{q,F} at scales lambda_{i,j,k} with weight Delta_gamma + Delta_pi + |j| + i + 2 + i log 2.

    q_list: (shape, gamma) pairs.  F_list: (label, builder, pi) triples where
    builder(q, lam, n) returns a ModelNet, or (label, (theta_min, theta_max, step), pi)
    for a translation grid.
    """
    if n is None:
        raise UsageError("n is required")
    gam = np.array([g for _, g in q_list], dtype=float)
    pis = np.array([f[2] for f in F_list], dtype=float)
    for name, w in (("gamma", gam), ("pi", pis)):
        if np.any(w <= 0) or w.sum() > 1.0 + SUBPROB_TOL:
            raise UsageError(f"{name} must be a positive sub-probability")
    j_lo, j_hi = j_range
    models, delta, proxies, labels = [], [], [], []
    for (q, g), (flabel, spec, p) in itertools.product(q_list, F_list):
        build = spec if callable(spec) else _translation_builder(*spec)
        shape = _shape(q)
        for i in range(i_max + 1):
            for j in range(j_lo, j_hi + 1):
                for k, lam in enumerate(scale_grid(i, j)):
                    net = build(shape, float(lam), n)
                    models.append(net)
                    delta.append(-math.log(g) - math.log(p) + _scale_weight(i, j))
                    proxies.append(net.dimension_proxy or vc_dimension_proxy(3, n, dimension_constant))
                    labels.append(f"{shape.name}/{flabel}/i={i},j={j},k={k}")
    delta = np.array(delta)
    kept = float(np.sum(np.exp(-delta)))
    full = float(gam.sum() * pis.sum() * _scale_mass_full())
    return PenalizedFamily(models, delta, proxies, labels, dimension_constant,
                           dropped_mass=max(0.0, full - kept))


def sparse_index_weight(K, M, size):
    """pi(F_{k,m}) = [K M (e M / |m|)^|m|]^-1."""
    return 1.0 / (K * M * (math.e * M / size) ** size)


def make_sparse_index_family(transforms, basis, coeff_values, n, q="gaussian", design=None,
                             sparsity_cap=None, scale=1.0, dimension_constant=1.0):
    """Models F_{k,m}: transform k applied to spans of basis subsets m (non-empty, |m| <= cap)."""
    K, M = len(transforms), len(basis)
    if K < 1 or M < 1:
        raise UsageError("need at least one transform and one basis function")
    cap = M if sparsity_cap is None else int(sparsity_cap)
    if cap < 1 or cap > M:
        raise UsageError(f"sparsity cap {cap} outside 1..{M}")
    x = np.linspace(0.0, 1.0, n) if design is None else design
    values = np.asarray(coeff_values, dtype=float)
    models, delta, proxies, labels = [], [], [], []
    for k, tr in enumerate(transforms):
        for size in range(1, cap + 1):
            for m in itertools.combinations(range(M), size):
                grid = np.array(list(itertools.product(values, repeat=size)))
                net = make_regression_net(q, x, [basis[i] for i in m], grid, transform=tr,
                                          n=n, scale=scale, nu=None)
                models.append(net)
                delta.append(-math.log(sparse_index_weight(K, M, size)))
                proxies.append(vc_dimension_proxy(size + 2, n, dimension_constant))
                labels.append(f"k={k},m={'+'.join(str(i + 1) for i in m)}")
    return PenalizedFamily(models, np.array(delta), proxies, labels, dimension_constant)
