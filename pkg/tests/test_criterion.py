import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhoest.affinity import hellinger_sq, mixture_affinity, psi
from rhoest.constants import SLACK
from rhoest.criterion import (ModelNet, criterion_table, penalized_upsilon, rho_estimate,
                              t_population, t_statistic, upsilon, varrho_empirical,
                              varrho_population, z_statistic)
from rhoest.densities import (DiscreteDensity, HistogramDensity, ProductDensity, cauchy,
                              gaussian, laplace, uniform)
from rhoest.errors import UsageError
from rhoest.zoo import (HistogramNet, make_histogram_net, make_translation_net,
                        make_uniform_shift_net)


def _t_by_definition(X, t, u):
    """T summed coordinate by coordinate from the product form."""
    total = 0.0
    for i, x in enumerate(X):
        a, b = t.coord(i), u.coord(i)
        ta, tb = float(a.pdf(np.array([x]))[0]), float(b.pdf(np.array([x]))[0])
        ratio = 1.0 if ta == tb == 0 else (math.inf if ta == 0 else math.sqrt(tb / ta))
        total += 0.5 * (mixture_affinity(b, a) - mixture_affinity(a, b)) + psi(ratio) / math.sqrt(2)
    return total


def test_t_zero_on_diagonal():
    t = ProductDensity.iid(gaussian(0.4), 7)
    X = np.random.default_rng(0).normal(size=7)
    assert t_statistic(X, t, t) == 0.0


@pytest.mark.parametrize("a, b", [
    (gaussian(0.0), gaussian(0.6, 1.3)),
    (laplace(0.0), laplace(0.5)),
    (cauchy(0.0), gaussian(0.2)),
    (uniform(0, 1), uniform(0.3, 1.3)),
])
def test_t_matches_definition_and_antisymmetry(a, b):
    rng = np.random.default_rng(1)
    X = rng.uniform(0.05, 0.95, size=6)
    t, u = ProductDensity.iid(a, 6), ProductDensity.iid(b, 6)
    got = t_statistic(X, t, u)
    assert got == pytest.approx(_t_by_definition(X, t, u), abs=1e-8)
    assert t_statistic(X, u, t) == -got


def test_t_non_iid_product():
    t = ProductDensity([gaussian(0.0), laplace(1.0), cauchy(-1.0)])
    u = ProductDensity([gaussian(0.5), laplace(0.0), cauchy(0.0, 2.0)])
    X = np.array([0.1, 0.7, -2.0])
    assert t_statistic(X, t, u) == pytest.approx(_t_by_definition(X, t, u), abs=1e-8)


def test_multinomial_closed_form_for_t():
    # T(X, t_hat, u) at the empirical frequencies, via G(x) = (sqrt(x)-1)(3+x)/sqrt(1+x)
    edges = [0.0, 1.0, 2.0, 3.0]
    counts = np.array([6, 4, 0])
    n = int(counts.sum())
    X = np.repeat([0.5, 1.5, 2.5], counts)
    t_hat = counts / n
    u = np.array([0.2, 0.5, 0.3])
    mask = t_hat > 0
    ratio = u[mask] / t_hat[mask]
    closed = (n / (2 * math.sqrt(2))) * (
        np.sum((3 * t_hat[mask] + u[mask]) * (np.sqrt(ratio) - 1) / np.sqrt(1 + ratio))
        + u[~mask].sum())
    # G identity
    G = (np.sqrt(ratio) - 1) * (3 + ratio) / np.sqrt(1 + ratio)
    assert closed == pytest.approx((n / (2 * math.sqrt(2))) * (np.sum(t_hat[mask] * G) + u[~mask].sum()),
                                   abs=1e-12)
    t = ProductDensity.iid(HistogramDensity.from_masses(edges, t_hat), n)
    v = ProductDensity.iid(HistogramDensity.from_masses(edges, u), n)
    generic = t_statistic(X, t, v)
    assert generic == pytest.approx(closed, abs=1e-9)
    # brute force over coordinates and finite sums
    assert _t_by_definition(X, t, v) == pytest.approx(closed, abs=1e-9)
    # vectorized net path
    net = HistogramNet(edges, np.vstack([t_hat, u]), n)
    assert criterion_table(X, net).t_matrix[0, 1] == pytest.approx(closed, abs=1e-9)
    # the frozen numeric value of this 3-cell instance
    assert closed == pytest.approx(-1.05457535406395, abs=1e-12)


def test_varrho_relation():
    s = ProductDensity.iid(gaussian(0.1), 4)
    t = ProductDensity.iid(gaussian(0.0), 4)
    u = ProductDensity.iid(laplace(0.5), 4)
    want = varrho_population(s, u, t) - varrho_population(s, t, u)
    assert t_population(s, t, u) == pytest.approx(want, abs=1e-14)
    # at s = t the expectation of T is at most 0 in the sense of the robustness bound
    assert t_population(t, t, u) <= 0.0


def test_varrho_empirical_is_unbiased():
    rng = np.random.default_rng(2)
    s = ProductDensity.iid(gaussian(0.2), 1)
    t = ProductDensity.iid(gaussian(0.0), 1)
    u = ProductDensity.iid(gaussian(1.0), 1)
    vals = np.array([varrho_empirical(rng.normal(0.2, 1.0, 1), t, u) for _ in range(3000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - varrho_population(s, t, u)) < 4 * se


def test_t_mean_matches_population():
    rng = np.random.default_rng(3)
    n = 20
    s = ProductDensity.iid(gaussian(0.2), n)
    t, u = ProductDensity.iid(gaussian(0.0), n), ProductDensity.iid(gaussian(0.7), n)
    vals = np.array([t_statistic(rng.normal(0.2, 1.0, n), t, u) for _ in range(4000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - t_population(s, t, u)) < 4 * se


def test_z_centered():
    rng = np.random.default_rng(4)
    n = 10
    s = ProductDensity.iid(laplace(0.1), n)
    t, u = ProductDensity.iid(laplace(0.0), n), ProductDensity.iid(laplace(0.5), n)
    vals = np.array([z_statistic(0.1 + rng.laplace(size=n), s, t, u) for _ in range(3000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean()) < 4 * se


# nets

def test_singleton_net():
    net = make_translation_net("gaussian", 0.0, 0.0, 1.0, 5)
    X = np.arange(5.0)
    res = rho_estimate(X, net)
    assert res.index == 0 and res.upsilon == 0.0
    assert upsilon(X, net, 0) == 0.0


def test_generic_net_matches_vectorized():
    n = 6
    thetas = np.linspace(-1, 1, 9)
    vec = make_translation_net("laplace", -1, 1, 0.25, n)
    gen = ModelNet([ProductDensity.iid(laplace(th), n) for th in thetas], params=thetas[:, None])
    X = np.random.default_rng(5).laplace(size=n) + 0.3
    A = criterion_table(X, vec).t_matrix
    B = criterion_table(X, gen).t_matrix
    np.testing.assert_allclose(A, B, atol=1e-9)
    np.testing.assert_array_equal(A, -A.T)


@pytest.mark.parametrize("shape", ["gaussian", "cauchy", "laplace"])
def test_table_row_max(shape):
    net = make_translation_net(shape, -2, 2, 0.1, 15)
    X = np.random.default_rng(6).standard_cauchy(15)
    ct = criterion_table(X, net)
    for j in (0, 7, 20, 40):
        assert upsilon(X, net, j) == pytest.approx(ct.upsilon[j], abs=1e-12)
    assert np.all(ct.upsilon >= 0)
    assert set(ct.slack_set) == set(np.flatnonzero(ct.upsilon <= ct.minimum + SLACK))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["gaussian", "laplace", "cauchy", "uniform"]),
       st.integers(3, 40))
def test_search_equals_table_argmin(seed, shape, n):
    rng = np.random.default_rng(seed)
    net = make_translation_net(shape, -1.5, 1.5, 0.03, n)
    X = rng.normal(0.2, 0.4, n)
    full = rho_estimate(X, net, table=True)
    fast = rho_estimate(X, net, table=False)
    assert fast.index == full.index
    assert fast.upsilon == pytest.approx(full.upsilon, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_penalized_search_equals_table(seed):
    from rhoest.criterion import _estimate, _prepare
    rng = np.random.default_rng(seed)
    net = make_translation_net("gaussian", -1, 1, 0.02, 12)
    pen = rng.uniform(0, 3, len(net))
    X = rng.normal(size=12)
    ct = criterion_table(X, net, pen=pen)
    j, v, _ = _estimate(_prepare(X, net, pen), table=False)
    assert j == ct.argmin
    assert v == pytest.approx(ct.minimum, abs=1e-9)
    assert penalized_upsilon(X, net, pen, j) == pytest.approx(ct.upsilon[j], abs=1e-12)
    # penalized table = T - (pen_k - pen_j)
    plain = criterion_table(X, net).t_matrix
    np.testing.assert_allclose(ct.t_matrix, plain - pen[None, :] + pen[:, None], atol=1e-12)


def test_ties_go_to_lowest_index():
    # uniform shift: every point covering the sample has Upsilon = 0
    net = make_uniform_shift_net(-1.0, 1.0, 0.01, 10)
    X = np.random.default_rng(7).uniform(-0.3, 0.3, 10)
    ct = criterion_table(X, net)
    zeros = np.flatnonzero(ct.upsilon == 0.0)
    assert zeros.size > 1
    assert rho_estimate(X, net, table=True).index == zeros[0]
    assert rho_estimate(X, net, table=False).index == zeros[0]


def test_uniform_shift_midrange():
    n = 50
    net = make_uniform_shift_net(-5.0, 5.0, 1e-3, n)
    X = np.random.default_rng(8).uniform(-0.25, 0.75, n)
    res = rho_estimate(X, net)
    th = float(res.param[0])
    lo, hi = X.max() - 0.5, X.min() + 0.5
    assert lo - 1e-3 <= th <= hi + 1e-3
    mid = 0.5 * (X.min() + X.max())
    grid = net.params[:, 0]
    j = int(np.argmin(np.abs(grid - mid)))
    if lo <= grid[j] <= hi:
        assert upsilon(X, net, j) == 0.0


def test_histogram_counts_example():
    net = make_histogram_net([0.0, 1.0, 2.0, 3.0], 1 / 20, 10)
    X = np.repeat([0.5, 1.5, 2.5], [5, 3, 2])
    res = rho_estimate(X, net)
    np.testing.assert_allclose(res.param, [0.5, 0.3, 0.2], atol=1 / 20)


def test_bernoulli_mean():
    rng = np.random.default_rng(9)
    n = 40
    X = (rng.uniform(size=n) < 0.35).astype(float)
    net = make_histogram_net([-0.5, 0.5, 1.5], 1 / 100, n)
    res = rho_estimate(X, net)
    assert abs(res.param[1] - X.mean()) <= 1 / 100 + 1e-12


def test_discrete_points():
    pts = [ProductDensity.iid(DiscreteDensity([0, 1], [1 - p, p]), 8) for p in (0.2, 0.5, 0.8)]
    net = ModelNet(pts)
    X = np.array([1, 1, 1, 1, 1, 1, 0, 1], dtype=float)
    assert rho_estimate(X, net).index == 2


def test_slack_set_without_table():
    net = make_translation_net("gaussian", -1, 1, 0.05, 20)
    X = np.random.default_rng(10).normal(size=20)
    a = rho_estimate(X, net, table=True)
    b = rho_estimate(X, net, table=False)
    np.testing.assert_array_equal(np.sort(a.slack_set()), np.sort(b.slack_set()))
    assert a.index in a.slack_set()


def test_result_unpacks():
    net = make_translation_net("gaussian", -1, 1, 0.5, 3)
    idx, point, table = rho_estimate(np.zeros(3), net, table=True)
    assert idx == 2 and table is not None
    assert hellinger_sq(point.density, gaussian(0.0)) == 0.0


def test_bad_inputs():
    net = make_translation_net("gaussian", -1, 1, 0.5, 3)
    with pytest.raises(UsageError):
        rho_estimate(np.zeros(4), net)
    with pytest.raises(UsageError):
        criterion_table(np.zeros(3), net, pen=np.zeros(2))
    with pytest.raises(UsageError):
        ModelNet([])
