import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import special, stats

from rhoest.affinity import hellinger_affinity, hellinger_sq, mixture_affinity
from rhoest.constants import c0
from rhoest.criterion import criterion_table, rho_estimate, upsilon
from rhoest.densities import (LocationScale, PBetaShape, ProductDensity, SequenceDensity,
                              cauchy, gaussian, get_shape, laplace, pbeta_scale_hellinger_sq,
                              uniform)
from rhoest.errors import SizeGuardError, UsageError
from rhoest.zoo import (HistogramNet, d_loss, histogram_dimension_proxy, linear_design,
                        make_beta_grid, make_histogram_net, make_linear_regression_net,
                        make_pbeta, make_regression_net, make_sequence_model,
                        make_translation_net, make_uniform_shift_net, simplex_lattice)


# translation nets

def test_translation_net_construction():
    net = make_translation_net("gaussian", -1, 1, 1.0, 5)
    assert len(net) == 3
    assert net.params[:, 0].tolist() == [-1.0, 0.0, 1.0]
    p = net.point(2)
    assert p.n == 5 and p.is_iid
    assert hellinger_sq(p.density, gaussian(1.0)) == 0.0
    # order 1, A = 1: eta = sqrt(n) * step
    assert net.eta == pytest.approx(math.sqrt(5.0))


def test_translation_net_empty_grid():
    with pytest.raises(UsageError):
        make_translation_net("gaussian", 1, 0, 0.1, 5)
    with pytest.raises(UsageError):
        make_translation_net("gaussian", 0, 1, 0.0, 5)


def test_uniform_shift_pairwise_h2():
    net = make_uniform_shift_net(-1.0, 1.0, 0.25, 1)
    th = net.params[:, 0]
    for j in range(len(net)):
        for k in range(len(net)):
            got = hellinger_sq(net.point(j).density, net.point(k).density)
            assert got == pytest.approx(min(abs(th[j] - th[k]), 1.0), abs=1e-15)


def test_cauchy_net_densities_normalized():
    net = make_translation_net("cauchy", -2, 2, 1.0, 3)
    for j in range(len(net)):
        d = net.point(j).density
        f = lambda x: float(d.pdf(np.array([x]))[0])
        total = sum(sp_integrate.quad(f, a, b, limit=200)[0]
                    for a, b in ((-np.inf, -10), (-10, 10), (10, np.inf)))
        assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("name", ["gaussian", "laplace", "cauchy"])
def test_translation_scale_invariance(name):
    q = get_shape(name)
    f, g, lam = 0.4, 1.7, 2.5
    a = hellinger_sq(LocationScale(q, f, lam), LocationScale(q, g, lam))
    b = hellinger_sq(LocationScale(q, 0.0, 1.0), LocationScale(q, (g - f) / lam, 1.0))
    c = hellinger_sq(LocationScale(q, f / lam, 1.0), LocationScale(q, g / lam, 1.0))
    assert a == pytest.approx(b, abs=1e-9)
    assert c == pytest.approx(b, abs=1e-9)


def test_order_sandwich_uniform_and_gaussian():
    deltas = np.linspace(0.0, 5.0, 51)
    for name in ("uniform", "gaussian"):
        q = get_shape(name)
        alpha, a, A = q.order
        for d in deltas:
            h2 = hellinger_sq(LocationScale(q, 0.0), LocationScale(q, d), method="quadrature") \
                if d > 0 else 0.0
            base = min(d ** (1 + alpha), 1.0 / A)
            assert a * base - 1e-9 <= h2 <= A * base + 1e-9


def test_gaussian_order_constants_frozen():
    # sweep of h^2 / min(d^2, 1): infimum at d = 1, supremum at d -> 0 is 1/8 <= A
    d = np.linspace(1e-3, 6, 6000)
    ratio = (1 - np.exp(-d * d / 8)) / np.minimum(d * d, 1.0)
    assert ratio.min() == pytest.approx(0.117503097415, abs=1e-9)
    assert get_shape("gaussian").order[1] == pytest.approx(0.117503097415, abs=1e-12)
    assert ratio.max() <= 1.0


# histograms

def test_simplex_lattice():
    pts = simplex_lattice(2, 2)
    assert sorted(map(tuple, pts.tolist())) == [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]
    assert len(simplex_lattice(3, 4)) == math.comb(6, 2) == 15
    assert len(simplex_lattice(3, 60)) == math.comb(62, 2)
    np.testing.assert_allclose(simplex_lattice(4, 7).sum(axis=1), 1.0)


def test_histogram_net_values():
    net = make_histogram_net([0.0, 0.5, 1.0], 1 / 4, 3)
    assert len(net) == 5
    for j in range(len(net)):
        t = net.probs[j]
        d = net.density(j)
        np.testing.assert_allclose(d.pdf(np.array([0.25, 0.75])), 2 * t)
    assert net.dimension_proxy == pytest.approx(6 * 2 / c0 ** 2)
    assert histogram_dimension_proxy(3) == pytest.approx(18 / c0 ** 2)


def test_histogram_size_guard():
    with pytest.raises(SizeGuardError):
        make_histogram_net(np.linspace(0, 1, 6), 1 / 100, 10, max_points=1000)
    with pytest.raises(UsageError):
        make_histogram_net([0.0, 1.0, 2.0], 0.3, 10)
    with pytest.raises(UsageError):
        make_histogram_net([0.0, 1.0], 1 / 4, 10)


def test_histogram_density_normalized():
    net = make_histogram_net([0.0, 0.3, 1.0, 2.5], 1 / 5, 4)
    for j in range(len(net)):
        d = net.density(j)
        assert sp_integrate.quad(lambda x: float(d.pdf(np.array([x]))[0]), 0, 2.5,
                                 points=[0.3, 1.0])[0] == pytest.approx(1.0, abs=1e-10)


def test_histogram_refine_preserves_table():
    net = make_histogram_net([0.0, 1.0, 2.0], 1 / 4, 6)
    fine = net.refine([0.0, 0.5, 1.0, 2.0])
    X = np.array([0.2, 0.7, 1.4, 1.9, 0.1, 1.1])
    np.testing.assert_allclose(criterion_table(X, net).t_matrix, criterion_table(X, fine).t_matrix,
                               atol=1e-12)


def test_histogram_mixture_block_matches_pairwise():
    net = make_histogram_net([0.0, 1.0, 2.0, 4.0], 1 / 3, 5)
    blk = net.mixture_block(np.arange(len(net)), np.arange(len(net)))
    for j in range(len(net)):
        for k in range(len(net)):
            a, b = net.density(j), net.density(k)
            want = 2.5 * (mixture_affinity(b, a) - mixture_affinity(a, b))
            assert blk[j, k] == pytest.approx(want, abs=1e-12)


# p^beta

@pytest.mark.parametrize("beta", [0.0, 0.3, 0.5, 1.0, 2.0, 5.0])
def test_pbeta_normalization(beta):
    shape = PBetaShape(beta)
    if beta > 0:
        assert shape.norm == pytest.approx(1.0 / (2 * beta * math.gamma(beta)), rel=1e-12)
    f = lambda x: float(shape.pdf(np.array([x]))[0])
    hi = 1.0 if beta == 0 else np.inf
    total = 2 * sp_integrate.quad(f, 0.0, hi, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


def test_pbeta_zero_is_uniform():
    d = make_pbeta(0.0)
    np.testing.assert_allclose(d.pdf(np.array([-0.9, 0.0, 0.99, 1.1])), [0.5, 0.5, 0.5, 0.0])


def test_pbeta_scale_closed_form():
    assert pbeta_scale_hellinger_sq(2.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert pbeta_scale_hellinger_sq(1.0, 2.0) == pytest.approx(1 - 2 / (math.sqrt(2) * 1.5), abs=1e-15)
    assert pbeta_scale_hellinger_sq(1.0, 2.0) == pytest.approx(0.057191, abs=1e-6)
    assert pbeta_scale_hellinger_sq(1.5, 0.6) == pbeta_scale_hellinger_sq(1.5, 1 / 0.6)
    for beta in (0.0, 0.5, 1.0, 2.0, 5.0):
        for lam in np.linspace(1.0, 2.0, 21):
            assert pbeta_scale_hellinger_sq(beta, lam) <= 0.6 * (lam - 1) + 1e-15


def test_beta_grid_n100():
    g = make_beta_grid(100)
    assert g.values[0] == 0.0
    assert g.values[1] == pytest.approx(0.02)
    assert g.values[2] == pytest.approx(0.02 * (1 + math.sqrt(6 / 1300)))
    assert np.all(np.diff(g.values) > 0)
    assert g.gamma.sum() <= 1.0
    assert g.gamma.sum() + g.dropped_mass == pytest.approx(1.0, abs=1e-6)
    assert g.values.max() <= 20.0
    with pytest.raises(UsageError):
        make_beta_grid(2)


def test_beta_grid_covers():
    n = 50
    g = make_beta_grid(n, beta_max=6.0)
    rng = np.random.default_rng(0)
    for beta in rng.uniform(0, 6.0, 12):
        b = g.values[g.values <= beta].max()
        h2 = hellinger_sq(make_pbeta(beta), make_pbeta(b), method="quadrature")
        assert h2 <= 1.0 / n


# sequences

def test_sequence_h2_closed_form():
    a = SequenceDensity("abca", "a")
    b = SequenceDensity("abba", "a")
    assert a.agreement(b) == 2
    assert hellinger_sq(a, b) == pytest.approx(0.25, abs=1e-15)
    c = SequenceDensity("abcb", "a")
    assert hellinger_sq(a, c) == pytest.approx(1 / 8, abs=1e-15)
    assert hellinger_sq(a, a) == 0.0


def test_sequence_affinity_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(10):
        w1 = "".join(rng.choice(list("xyz"), 6))
        w2 = "".join(rng.choice(list("xyz"), 6))
        a, b = SequenceDensity(w1, "x", 30), SequenceDensity(w2, "x", 30)
        atoms = set(a.support_words(30)) | set(b.support_words(30))
        brute = sum(math.sqrt(a.pdf(w) * b.pdf(w)) for w in atoms)
        assert hellinger_affinity(a, b) == pytest.approx(brute, abs=1e-8)


def test_sequence_sampler_lengths():
    model, _ = make_sequence_model("ab", "abba", depth_cap=40)
    rng = np.random.default_rng(2)
    X = model.sample(rng, 4000)
    lengths = np.array([len(x) for x in X])
    top = 8
    observed = np.array([(lengths == j).sum() for j in range(1, top)] + [(lengths >= top).sum()])
    expected = 4000 * np.array([2.0 ** -j for j in range(1, top)] + [2.0 ** -(top - 1)])
    assert stats.chisquare(observed, expected).pvalue > 1e-3
    for x in X[:50]:
        assert tuple(x) == tuple(("abba" + "a" * 40)[:len(x)])


def test_sequence_net_upsilon_zero():
    model, net = make_sequence_model("ab", "ab", sample=None, n=None)
    assert net is None
    rng = np.random.default_rng(3)
    X = model.sample(rng, 20)
    net = model.net_for(X)
    res = rho_estimate(X, net)
    assert res.upsilon == 0.0
    with pytest.raises(UsageError):
        make_sequence_model("a", "aa")


# regression

def test_linear_design_moments():
    for n in (5, 100, 101):
        x = linear_design(n)
        assert x.sum() == pytest.approx(0.0, abs=1e-12)
        assert (x * x).sum() == pytest.approx((n * n - 1) / (3 * n), rel=1e-12)


def test_regression_constant_basis_is_translation():
    n = 6
    grid = np.linspace(-1, 1, 9)
    reg = make_regression_net("laplace", np.zeros(n), [np.ones_like], grid[:, None], n=n)
    tr = make_translation_net("laplace", -1, 1, 0.25, n)
    X = np.random.default_rng(4).laplace(size=n)
    np.testing.assert_allclose(criterion_table(X, reg).t_matrix, criterion_table(X, tr).t_matrix,
                               atol=1e-9)


def test_regression_exp_transform_positive():
    n = 5
    x = np.linspace(0, 1, n)
    coeffs = np.array([[a, b] for a in (-1.0, 0.5) for b in (-2.0, 2.0)])
    net = make_regression_net("gaussian", x, [np.ones_like, lambda z: z], coeffs,
                              transform="exp", n=n)
    for j in range(len(net)):
        locs = np.array([net.point(j).coord(i).loc for i in range(n)])
        assert np.all(locs > 0)


def test_linear_regression_net_points():
    n = 7
    net = make_linear_regression_net("uniform", n, [0.0, 1.0], [-1.0, 0.5])
    x = linear_design(n)
    assert len(net) == 4
    p = net.point(3)
    np.testing.assert_allclose([p.coord(i).loc for i in range(n)], 1.0 + 0.5 * x)


def test_regression_non_finite_grid():
    with pytest.raises(UsageError):
        make_regression_net("gaussian", np.zeros(3), [np.ones_like], np.array([[np.nan]]), n=3)


def test_d_loss():
    f = np.array([1.0, 2.0, 3.0])
    assert d_loss(f, f, 0.5, 1.0) == 0.0
    assert d_loss([0.0, 0.0], [2.0, 0.1], 1.0, 1e-12) == pytest.approx(4.01)
    assert d_loss([0.0, 0.0], [2.0, 0.1], 0.0, 1.0) == pytest.approx(1.1)
    with pytest.raises(UsageError):
        d_loss([0.0], [0.0, 1.0], 1.0, 1.0)


def test_all_zoo_densities_normalized():
    from rhoest.quadrature import integrate
    dens = [gaussian(0.3, 0.5), laplace(), cauchy(0.0, 3.0), uniform(-2, 1), make_pbeta(0.7, 1.0, 2.0)]
    for d in dens:
        lo, hi = d.support()
        assert integrate(d.pdf, lo, hi, points=d.breakpoints()).value == pytest.approx(1.0, abs=1e-8)
    hist = make_histogram_net([0.0, 1.0, 3.0], 1 / 4, 2)
    for j in range(len(hist)):
        assert integrate(hist.density(j).pdf, 0, 3, points=(1.0,)).value == pytest.approx(1.0, abs=1e-8)
    seq = SequenceDensity("ab", "a", 40)
    assert sum(seq.pdf(w) for w in seq.support_words(40)) == pytest.approx(1.0, abs=1e-8)
