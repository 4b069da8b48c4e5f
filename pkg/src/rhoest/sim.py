"""Baselines, Monte-Carlo risk runs, and the numerical inequality checks."""
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .affinity import (expectation, hellinger_sq, likelihood_ratio_sqrt, mixture_affinity,
                       product_hellinger_sq, psi, psi_from_logratio, ratio_affinity)
from .constants import INV_SQRT2, c0, c2
from .criterion import expected_psi, rho_estimate, t_population, t_statistic
from .densities import LocationScale, ProductDensity, as_sample, get_shape
from .errors import UsageError
from .zoo import (make_beta_grid, make_histogram_net, make_linear_regression_net,
                  make_pbeta, make_sequence_model, make_translation_net, linear_design,
                  pbeta_scale_hellinger_sq)

MLE_UNDEFINED = "MLE undefined"

__all__ = [
    "MLE_UNDEFINED", "baseline_estimate", "Scenario", "RiskReport", "run_scenario",
    "verify_inequalities", "InequalityReport", "estimate_wS", "replication_rng",
    "draw_sample", "validate_scenario",
]


# --------------------------------------------------------------------------
# baselines
# --------------------------------------------------------------------------

def _lower_median(x):
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    return float(x[n // 2 - 1] if n % 2 == 0 else x[(n - 1) // 2])


def baseline_estimate(kind, X, model=None):
    """Classical estimates.

    kind: mean, median (X_(n/2) or X_((n+1)/2) by parity), midrange, mle_grid
    (net needed), least_squares (design needed), histogram_mle (edges needed).
    mle_grid returns MLE_UNDEFINED when the likelihood is unbounded.
    """
    if kind == "mean":
        return float(np.mean(X))
    if kind == "median":
        return _lower_median(X)
    if kind == "midrange":
        return 0.5 * (float(np.min(X)) + float(np.max(X)))
    if kind == "mle_grid":
        net = model
        if net is None:
            raise UsageError("mle_grid needs a net")
        shapes = getattr(net, "shapes", [])
        if any(not s.bounded for s in shapes):
            return MLE_UNDEFINED
        L, w = net.compress(X)
        with np.errstate(invalid="ignore"):
            ll = L @ w if w is not None else L.sum(axis=1)
        ll = np.where(np.isnan(ll), -np.inf, ll)
        if np.any(ll == np.inf):
            return MLE_UNDEFINED
        return int(np.argmax(ll))
    if kind == "least_squares":
        x = np.asarray(linear_design(len(X)) if model is None else model, dtype=float)
        y = np.asarray(X, dtype=float)
        xc = x - x.mean()
        b = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
        return (float(y.mean() - b * x.mean()), b)
    if kind == "histogram_mle":
        edges = np.asarray(model, dtype=float)
        counts = np.histogram(np.asarray(X, dtype=float), bins=edges)[0]
        masses = counts / len(X)
        return masses / np.diff(edges)
    raise UsageError(f"unknown baseline {kind!r}")


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

@dataclass
class Scenario:
    """A Monte-Carlo experiment.

    kind is one of translation, linreg, histogram, sequence; `truth` and `model`
    hold kind-specific settings (see bundled scenario files).
    """

    name: str
    kind: str
    n_list: list
    replications: int
    seed: int = 0
    estimators: list = field(default_factory=lambda: ["rho"])
    losses: list = field(default_factory=lambda: ["sq"])
    truth: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def replication_rng(seed, n, rep):
    """Independent stream for replication `rep` at sample size n."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(n), int(rep))))


_RATE = {"uniform": 1.0}


def _cached(nets, n, build):
    if n not in nets:
        nets[n] = build()
    return nets[n]


def _translation_net(sc, n):
    tr, md = sc.truth, sc.model
    shape = md.get("shape", tr.get("shape", "gaussian"))
    rate = md.get("rate", _RATE.get(shape, 0.5))
    hw = md.get("half_width", 10.0) / n ** rate
    step = md.get("step", 0.05) / n ** rate
    centre = tr.get("theta", 0.0)
    if md.get("fixed", False):
        hw, step = md.get("half_width", 10.0), md.get("step", 0.05)
    return make_translation_net(shape, centre - hw, centre + hw, step, n,
                                scale=md.get("scale", tr.get("scale", 1.0)))


def draw_sample(kind, truth, n, rng):
    """One data set of size n for a scenario kind and its truth settings."""
    if kind == "translation":
        shape = get_shape(truth.get("shape", "gaussian"))
        X = truth.get("theta", 0.0) + truth.get("scale", 1.0) * shape.sample(rng, n)
        cont = truth.get("contamination")
        if cont:
            hit = rng.random(n) < cont["eps"]
            X[hit] = cont["at"]
        return X
    if kind == "linreg":
        shape = get_shape(truth.get("shape", "gaussian"))
        x = linear_design(n)
        return truth.get("a", 0.0) + truth.get("b", 0.0) * x + truth.get("scale", 1.0) * shape.sample(rng, n)
    if kind == "histogram":
        edges = np.asarray(truth.get("edges", [0.0, 1 / 3, 2 / 3, 1.0]), dtype=float)
        probs = np.asarray(truth["probs"], dtype=float)
        cells = rng.choice(probs.size, size=n, p=probs)
        return edges[cells] + rng.random(n) * np.diff(edges)[cells]
    if kind == "sequence":
        model, _ = make_sequence_model(truth.get("alphabet", "ab"), tuple(truth.get("theta", "ab")),
                                       truth.get("depth_cap", 60))
        return model.sample(rng, n)
    raise UsageError(f"unknown scenario kind {kind!r}")


_TRUTH_KEYS = {
    "translation": {"shape", "theta", "scale", "contamination"},
    "linreg": {"shape", "a", "b", "scale"},
    "histogram": {"edges", "probs"},
    "sequence": {"alphabet", "theta", "depth_cap"},
}
_MODEL_KEYS = {
    "translation": {"shape", "rate", "half_width", "step", "fixed", "scale"},
    "linreg": {"shape", "rate", "a_half_width", "b_half_width", "a_step", "b_step", "scale"},
    "histogram": {"resolution"},
    "sequence": {"depth_cap", "enum_depth"},
}
_ESTIMATORS = {
    "translation": {"rho", "mean", "median", "midrange", "mle_grid"},
    "linreg": {"rho", "least_squares"},
    "histogram": {"rho", "histogram_mle"},
    "sequence": {"rho"},
}
_LOSSES = {
    "translation": {"abs", "sq", "hellinger2"},
    "linreg": {"sq_a", "sq_b", "sq"},
    "histogram": {"hellinger2"},
    "sequence": {"hellinger2"},
}


def validate_scenario(sc):
    """Reject unknown kinds, keys, estimators and losses before any work is done."""
    if sc.kind not in _RUNNERS:
        raise UsageError(f"unknown scenario kind {sc.kind!r}")
    for what, given, allowed in (("truth", sc.truth, _TRUTH_KEYS), ("model", sc.model, _MODEL_KEYS)):
        extra = set(given) - allowed[sc.kind]
        if extra:
            raise UsageError(f"unknown {what} keys for {sc.kind}: {sorted(extra)}")
    for what, given, allowed in (("estimators", sc.estimators, _ESTIMATORS),
                                 ("losses", sc.losses, _LOSSES)):
        extra = set(given) - allowed[sc.kind]
        if extra or not given:
            raise UsageError(f"bad {what} for {sc.kind}: {sorted(extra) or 'none given'}")
    if sc.kind == "histogram" and "probs" not in sc.truth:
        raise UsageError("histogram scenarios need truth.probs")
    if sc.replications < 1 or not sc.n_list or any(int(n) < 1 for n in sc.n_list):
        raise UsageError("need replications >= 1 and positive sample sizes")


def _translation_losses(sc, value, losses):
    tr = sc.truth
    theta = tr.get("theta", 0.0)
    out = {}
    for name in losses:
        if value is None:
            out[name] = math.nan
        elif name == "abs":
            out[name] = abs(value - theta)
        elif name == "sq":
            out[name] = (value - theta) ** 2
        elif name == "hellinger2":
            shape = get_shape(tr.get("shape", "gaussian"))
            s = tr.get("scale", 1.0)
            out[name] = hellinger_sq(LocationScale(shape, theta, s), LocationScale(shape, value, s))
        else:
            raise UsageError(f"loss {name} not available for translation scenarios")
    return out


def _run_translation(sc, n, reps, nets):
    net = _cached(nets, n, lambda: _translation_net(sc, n))
    rows = []
    for rep in reps:
        rng = replication_rng(sc.seed, n, rep)
        X = draw_sample("translation", sc.truth, n, rng)
        res = {}
        for est in sc.estimators:
            if est == "rho":
                v = float(net.loc[rho_estimate(X, net, table=False).index])
            elif est == "mle_grid":
                j = baseline_estimate("mle_grid", X, net)
                v = None if j == MLE_UNDEFINED else float(net.loc[j])
            else:
                v = baseline_estimate(est, X)
            res[est] = _translation_losses(sc, v, sc.losses)
        rows.append(res)
    return rows


def _linreg_parts(sc, n):
    tr, md = sc.truth, sc.model
    shape = md.get("shape", tr.get("shape", "gaussian"))
    rate = md.get("rate", _RATE.get(shape, 0.5))
    a, b = tr.get("a", 0.0), tr.get("b", 0.0)
    ha = md.get("a_half_width", 6.0) / n ** rate
    hb = md.get("b_half_width", 10.0) / n ** rate
    sa = md.get("a_step", 0.2) / n ** rate
    sb = md.get("b_step", 0.4) / n ** rate
    av = a + np.arange(-round(ha / sa), round(ha / sa) + 1) * sa
    bv = b + np.arange(-round(hb / sb), round(hb / sb) + 1) * sb
    return make_linear_regression_net(shape, n, av, bv, scale=md.get("scale", 1.0))


def _run_linreg(sc, n, reps, nets):
    tr = sc.truth
    a, b = tr.get("a", 0.0), tr.get("b", 0.0)
    x = linear_design(n)
    net = None
    if "rho" in sc.estimators:
        net = _cached(nets, n, lambda: _linreg_parts(sc, n))
    rows = []
    for rep in reps:
        rng = replication_rng(sc.seed, n, rep)
        y = draw_sample("linreg", tr, n, rng)
        res = {}
        for est in sc.estimators:
            if est == "rho":
                ah, bh = net.params[rho_estimate(y, net, table=False).index]
            elif est == "least_squares":
                ah, bh = baseline_estimate("least_squares", y, x)
            else:
                raise UsageError(f"estimator {est} not available for regression")
            ea, eb = (ah - a) ** 2, (bh - b) ** 2
            loss = {"sq_a": ea, "sq_b": eb, "sq": ea + eb}
            res[est] = {k: loss[k] for k in sc.losses}
        rows.append(res)
    return rows


def _run_histogram(sc, n, reps, nets):
    tr, md = sc.truth, sc.model
    edges = np.asarray(tr.get("edges", [0.0, 1 / 3, 2 / 3, 1.0]), dtype=float)
    probs = np.asarray(tr["probs"], dtype=float)
    net = _cached(nets, n, lambda: make_histogram_net(edges, md.get("resolution", 60), n))
    rows = []
    for rep in reps:
        rng = replication_rng(sc.seed, n, rep)
        X = draw_sample("histogram", tr, n, rng)
        res = {}
        for est in sc.estimators:
            if est == "rho":
                q = net.probs[rho_estimate(X, net).index]
            elif est == "histogram_mle":
                q = baseline_estimate("histogram_mle", X, edges) * np.diff(edges)
            else:
                raise UsageError(f"estimator {est} not available for histograms")
            res[est] = {"hellinger2": max(0.0, 1.0 - float(np.sum(np.sqrt(probs * q))))}
        rows.append(res)
    return rows


def _run_sequence(sc, n, reps, nets):
    tr, md = sc.truth, sc.model
    model, _ = make_sequence_model(tr.get("alphabet", "ab"), tuple(tr.get("theta", "ab")),
                                   md.get("depth_cap", tr.get("depth_cap", 60)))
    rows = []
    for rep in reps:
        rng = replication_rng(sc.seed, n, rep)
        X = model.sample(rng, n)
        net = model.net_for(X, enum_depth=md.get("enum_depth", 2))
        d = net.densities[rho_estimate(X, net).index]
        res = {"rho": {"hellinger2": hellinger_sq(model.truth, d)}}
        rows.append(res)
    return rows


_RUNNERS = {
    "translation": _run_translation,
    "linreg": _run_linreg,
    "histogram": _run_histogram,
    "sequence": _run_sequence,
}


def _job(args):
    sc_dict, n, reps = args
    sc = Scenario(**sc_dict)
    return _RUNNERS[sc.kind](sc, n, reps, {})


@dataclass
class RiskReport:
    scenario: str
    rows: list
    slopes: dict
    config: dict
    undefined: dict = field(default_factory=dict)

    CSV_COLUMNS = ("scenario", "estimator", "n", "replications", "loss_name", "mean",
                   "std_err", "q05", "q50", "q95")

    def table(self, estimator, loss):
        return [r for r in self.rows if r["estimator"] == estimator and r["loss_name"] == loss]

    def risk(self, estimator, loss, n):
        for r in self.table(estimator, loss):
            if r["n"] == n:
                return r["mean"]
        raise KeyError((estimator, loss, n))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r[c] if not isinstance(r[c], float) else repr(r[c]) for c in self.CSV_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self):
        return {"scenario": self.scenario, "rows": self.rows, "slopes": self.slopes,
                "undefined": self.undefined, "config": self.config}

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _slope(ns, means):
    ok = [(n, m) for n, m in zip(ns, means) if m > 0 and np.isfinite(m)]
    if len(ok) < 2:
        return None
    x = np.log([n for n, _ in ok])
    y = np.log([m for _, m in ok])
    if len(ok) == 2:
        return {"slope": float((y[1] - y[0]) / (x[1] - x[0])), "std_err": math.nan}
    fit = stats.linregress(x, y)
    return {"slope": float(fit.slope), "std_err": float(fit.stderr)}


def run_scenario(sc, workers=1):
    """Run every replication and aggregate losses per (estimator, n, loss).

    Replication r at size n always uses the stream replication_rng(seed, n, r),
    so results do not depend on the number of workers.
    """
    if isinstance(sc, dict):
        sc = Scenario(**sc)
    validate_scenario(sc)
    per_n = {}
    if workers and workers > 1:
        jobs = []
        for n in sc.n_list:
            reps = list(range(sc.replications))
            size = max(1, math.ceil(len(reps) / workers))
            for a in range(0, len(reps), size):
                jobs.append((sc.to_dict(), n, reps[a:a + size]))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_job, jobs))
        for (_, n, _), out in zip(jobs, outs):
            per_n.setdefault(n, []).extend(out)
    else:
        nets = {}
        for n in sc.n_list:
            per_n[n] = _RUNNERS[sc.kind](sc, n, range(sc.replications), nets)
    rows, undefined = [], {}
    for est in sc.estimators:
        for loss in sc.losses:
            for n in sc.n_list:
                vals = np.array([r[est][loss] for r in per_n[n]], dtype=float)
                bad = int(np.isnan(vals).sum())
                if bad:
                    undefined[f"{est}/{n}"] = bad
                vals = vals[~np.isnan(vals)]
                if vals.size == 0:
                    continue
                se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
                q = np.quantile(vals, [0.05, 0.5, 0.95])
                rows.append({"scenario": sc.name, "estimator": est, "n": int(n),
                             "replications": int(vals.size), "loss_name": loss,
                             "mean": float(vals.mean()), "std_err": se, "q05": float(q[0]),
                             "q50": float(q[1]), "q95": float(q[2])})
    slopes = {}
    for est in sc.estimators:
        for loss in sc.losses:
            tab = [r for r in rows if r["estimator"] == est and r["loss_name"] == loss]
            s = _slope([r["n"] for r in tab], [r["mean"] for r in tab])
            if s is not None:
                slopes[f"{est}/{loss}"] = s
    return RiskReport(sc.name, rows, slopes, sc.to_dict(), undefined)


# --------------------------------------------------------------------------
# inequality checks
# --------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    cases: int
    worst_margin: float
    passed: bool
    detail: str = ""


@dataclass
class InequalityReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def lines(self):
        return [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.cases} cases, worst margin "
                f"{c.worst_margin:.3g}{' ' + c.detail if c.detail else ''}" for c in self.checks]


QUAD_SLACK = 1e-7


def psi_sq_expectation(s, t, u):
    """E_s[psi^2(sqrt(u/t)(X))] for one coordinate."""
    return expectation(s, lambda x: psi(likelihood_ratio_sqrt(t, u, x)) ** 2, extra=(t, u))


def _random_density(rng):
    kind = rng.choice(["gaussian", "laplace", "cauchy", "uniform", "pbeta"])
    loc = float(rng.uniform(-1.5, 1.5))
    scale = float(np.exp(rng.uniform(-0.7, 0.7)))
    if kind == "pbeta":
        return make_pbeta(float(rng.choice([0.0, 0.5, 1.0, 2.0])), loc, scale)
    return LocationScale(get_shape(kind), loc, scale)


def _record(results, name, margins, detail=""):
    margins = np.asarray(margins, dtype=float)
    worst = float(margins.min()) if margins.size else math.inf
    results.append(CheckResult(name, int(margins.size), worst, bool(worst >= -QUAD_SLACK), detail))


def _triples(rng, count):
    out = [tuple(LocationScale(get_shape("gaussian"), 0.3, 1.0) for _ in range(3))]
    out.append(tuple(LocationScale(get_shape("gaussian"), m, 1.0) for m in (0.0, 0.5, 1.0)))
    while len(out) < count:
        s, t, u = (_random_density(rng) for _ in range(3))
        out.append((s, t, u))
    return out


def verify_inequalities(seed=0, budget=1.0):
    """Check the affinity and distance inequalities on sampled densities.

    budget scales the number of sampled cases.
    """
    rng = np.random.default_rng(seed)
    results = []
    k = max(1, int(round(budget * 40)))
    triples = _triples(rng, k)

    approx, upper, lower, var_bound = [], [], [], []
    for s, t, u in triples:
        h_st, h_su = hellinger_sq(s, t), hellinger_sq(s, u)
        rho_st = 1.0 - h_st
        vr = 0.5 * (mixture_affinity(t, u) + ratio_affinity(s, t, u))
        approx.append(vr - rho_st)
        approx.append((h_st + h_su) * INV_SQRT2 - (vr - rho_st))
        vr_rev = 0.5 * (mixture_affinity(u, t) + ratio_affinity(s, u, t))
        T = vr_rev - vr
        upper.append(c2 * h_st - 8 * c0 * h_su - T)
        lower.append(T - (8 * c0 * h_st - c2 * h_su))
        var_bound.append(6.0 * (h_st + h_su) - psi_sq_expectation(s, u, t))
    _record(results, "varrho approximation of rho", approx)
    _record(results, "upper bound on T", upper)
    _record(results, "lower bound on T", lower)
    _record(results, "second moment of psi", var_bound)

    # Monte-Carlo: the sample statistic is unbiased and psi^2 moments respect the bound
    mc = []
    mc_var = []
    reps = max(200, int(2000 * budget))
    n = 5
    for s, t, u in triples[:max(2, k // 8)]:
        S, Tt, U = (ProductDensity.iid(d, n) for d in (s, t, u))
        vals = np.array([t_statistic(S.sample(rng), Tt, U) for _ in range(reps)])
        se = vals.std(ddof=1) / math.sqrt(reps)
        pop = t_population(S, Tt, U)
        mc.append(3.0 * se - abs(vals.mean() - pop) + QUAD_SLACK * (se == 0))
        X = s.sample(rng, reps)
        d = np.asarray(t.logpdf(X), dtype=float) - np.asarray(u.logpdf(X), dtype=float)
        p2 = psi_from_logratio(d) ** 2
        bound = 6.0 * (hellinger_sq(s, t) + hellinger_sq(s, u))
        mc_var.append(bound - p2.mean() + 3.0 * p2.std(ddof=1) / math.sqrt(reps))
    _record(results, "Monte-Carlo mean of T", mc, "(3 standard errors)")
    _record(results, "Monte-Carlo second moment of psi", mc_var, "(3 standard errors)")

    # shape-parameter approximations of p^beta
    regimes = {"beta <= 1": [], "1 < beta <= 3": [], "beta > 3": []}
    for _ in range(max(3, k // 2)):
        for name, (lo, hi) in (("beta <= 1", (0.02, 1.0)), ("1 < beta <= 3", (1.0, 3.0)),
                               ("beta > 3", (3.0, 20.0))):
            b1, b2 = np.sort(rng.uniform(lo, hi, 2))
            if b2 - b1 < 1e-3:
                continue
            h2 = hellinger_sq(make_pbeta(b2), make_pbeta(b1), method="quadrature")
            if name == "beta <= 1":
                bound = 13.0 / 6.0 * (b2 / b1 - 1.0) ** 2
            elif name == "1 < beta <= 3":
                bound = 1.75 * (b2 - b1) ** 2
            else:
                bound = (1.3 * (b2 - b1) * math.log(b2)) ** 2
            regimes[name].append(bound - h2)
    for name, margins in regimes.items():
        _record(results, f"shape approximation, {name}", margins)
    g7 = []
    for b in np.concatenate([[0.5, 0.6], rng.uniform(0.01, 1.0, max(3, k // 4))]):
        g7.append(b / 2.0 - hellinger_sq(make_pbeta(float(b)), make_pbeta(0.0),
                                         method="quadrature"))
    _record(results, "distance to the uniform shape", g7)
    scale = []
    for b in (0.0, 0.5, 1.0, 2.0, 5.0):
        for lam in np.linspace(1.0, 2.0, 11):
            scale.append(0.6 * (lam - 1.0) - pbeta_scale_hellinger_sq(b, float(lam)))
    _record(results, "scale modulus of p^beta", scale)

    # sub-probabilities of constructed families
    from .selection import make_histogram_family, make_scale_family, make_sparse_index_family
    sub = []
    grid = make_beta_grid(100)
    sub.append(1.0 - float(grid.gamma.sum()) - grid.dropped_mass)
    fam = make_histogram_family([[0, .5, 1], [0, .25, .5, .75, 1]], 4, 50)
    sub.append(1.0 - fam.weight_sum)
    sf = make_scale_family([("gaussian", 0.5), ("cauchy", 0.5)], [("loc", (-1.0, 1.0, 1.0), 1.0)],
                           j_range=(-3, 3), i_max=3, n=10)
    sub.append(1.0 - sf.weight_sum - sf.dropped_mass)
    sp = make_sparse_index_family([None, "exp"], [np.ones_like, lambda z: z, np.sin, np.cos,
                                                  lambda z: z * z], [0.0, 1.0], 10,
                                  sparsity_cap=3)
    sub.append(1.0 - sp.weight_sum)
    _record(results, "sub-probability of model weights", sub)
    return InequalityReport(results)


# --------------------------------------------------------------------------
# massiveness of a net
# --------------------------------------------------------------------------

def estimate_wS(s, s_bar, net, y, reps=200, seed=0):
    """Monte-Carlo estimate of E sup over the ball of |Z(X, s_bar, t)|; 0 for an empty ball."""
    h_bar = product_hellinger_sq(s, s_bar)
    ball = [j for j in range(len(net))
            if product_hellinger_sq(s, net.point(j)) + h_bar <= y * y]
    if not ball:
        return 0.0
    pts = [net.point(j) for j in ball]
    centre = []
    for t in pts:
        if s.is_iid and s_bar.is_iid and t.is_iid:
            centre.append(s.n * expected_psi(s.density, s_bar.density, t.density))
        else:
            centre.append(sum(expected_psi(s.coord(i), s_bar.coord(i), t.coord(i))
                              for i in range(s.n)))
    rng = np.random.default_rng(seed)
    sups = np.empty(reps)
    for r in range(reps):
        X = as_sample(s.sample(rng))
        lb = np.asarray(s_bar.logpdf(X), dtype=float)
        best = 0.0
        for t, c in zip(pts, centre):
            with np.errstate(invalid="ignore"):
                d = np.asarray(t.logpdf(X), dtype=float) - lb
            best = max(best, abs(float(np.sum(psi_from_logratio(d))) - c))
        sups[r] = best
    return float(sups.mean())
