import math

import numpy as np
import pytest

from feketelab.equidist import (HeightBump, Quadratic, QuadratureRule, builtin, dirichlet_chart,
                                equidist_error, inferred_constants, integrate_mu_f, measure_average,
                                rotation_of, verify_bound)
from feketelab.errors import InvalidInput
from feketelab.projline import ProjPoint, mobius_apply, random_unitary, sphere_coords
from feketelab.pullback import PreimageTree

P = ProjPoint.from_affine
ONE = Quadratic(c=1.0, name="one")
BUILTINS = ["re", "im", "height", "chordal2@0.5", "chordal2@1+1i", "chordal2@inf"]


def test_rule_integrates_polynomials():
    rule = QuadratureRule.of_size(16)
    X = rule.points
    assert rule.integrate(np.ones(len(X))) == pytest.approx(1, abs=1e-13)
    assert rule.integrate(X[:, 2] ** 2) == pytest.approx(1 / 3, abs=1e-13)
    assert rule.integrate(X[:, 0] ** 2 * X[:, 1] ** 2) == pytest.approx(1 / 15, abs=1e-13)


@pytest.mark.parametrize("expr", ["z^2", "z^2+i", "(z^2+1)/(2*z)"])
def test_mu_f_is_probability(expr, green):
    I = integrate_mu_f(green(expr), ONE)
    assert I.value == pytest.approx(1, abs=1e-13)


def test_mu_z2_is_the_circle_measure(green):
    G = green("z^2")
    assert integrate_mu_f(G, builtin("re")).value == pytest.approx(0, abs=1e-12)
    assert integrate_mu_f(G, builtin("chordal2@0")).value == pytest.approx(0.5, abs=1e-12)
    # bump supported in 0.3 < X3 < 0.9 misses the equator
    assert integrate_mu_f(G, HeightBump(0.3, 0.9)).value == pytest.approx(0, abs=1e-8)
    # X1^2 has circle average 1/2; g_F has a kink on the circle, so quadrature converges slowly
    I = integrate_mu_f(G, Quadratic(A=np.diag([1.0, 0, 0])))
    assert I.value == pytest.approx(0.5, abs=1e-4)
    assert abs(I.value - 0.5) <= 10 * I.error


@pytest.mark.parametrize("k", range(2, 9))
def test_error_vanishes_for_roots_of_unity(k, green):
    G = green("z^2")
    nu = PreimageTree(G.lift, P(1), k)[k]
    err, _ = equidist_error(G, nu, builtin("re"))
    assert err < 1e-10
    err0, _ = equidist_error(G, PreimageTree(G.lift, P(0), k)[k], builtin("re"))
    assert err0 < 1e-12


def test_error_decreasing_z2_plus_i(green):
    G = green("z^2+i")
    tree = PreimageTree(G.lift, P(2), 8)
    phi = builtin("height")
    mu = integrate_mu_f(G, phi)
    errs = [equidist_error(G, tree[k], phi, mu=mu)[0] for k in range(2, 9)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    for k, e in zip(range(2, 9), errs):
        if k >= 4:
            assert math.log(e) / math.log(math.sqrt(k / 2 ** k)) >= 1


@pytest.mark.parametrize("name", BUILTINS)
def test_dirichlet_analytic_vs_quadrature_vs_charts(name):
    phi = builtin(name)
    rule = QuadratureRule.of_size(64)
    assert phi.dirichlet_quadrature(rule) == pytest.approx(phi.dirichlet, abs=1e-12)
    assert dirichlet_chart(phi, "z", rule) == pytest.approx(phi.dirichlet, abs=1e-8)
    assert dirichlet_chart(phi, "1/z", rule) == pytest.approx(phi.dirichlet, abs=1e-8)


def test_coordinate_norms():
    # <X_i, X_i> = 2 * (2/3); Lip of X_i in the chordal metric is 2
    assert builtin("height").dirichlet == pytest.approx(4 / 3)
    assert builtin("re").lip == 2


def test_bump_dirichlet_charts():
    phi = HeightBump(-0.4, 0.6)
    rule = QuadratureRule.of_size(128)
    assert dirichlet_chart(phi, "z", rule) == pytest.approx(phi.dirichlet, rel=1e-6)


def test_laplacian_matches_chart_laplacian(rng):
    # 2 Delta_S u = (1/2pi) chart Laplacian * (area of the sphere in the chart)
    phi = Quadratic(b=[0.3, -1, 0.2], A=[[1, 0.5, 0], [0.5, -2, 0.1], [0, 0.1, 0.7]])
    z = complex(*rng.normal(size=2))
    h = 1e-4
    f = lambda w: phi.value(sphere_coords(np.asarray(w), np.ones(1)))[0]
    lap = (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4 * f(z)) / h ** 2
    assert phi.chart_laplacian(np.array([z]))[0] == pytest.approx(lap, rel=1e-5)


def test_mobius_invariance_of_dirichlet():
    rng = np.random.default_rng(3)
    phi = builtin("chordal2@1+1i")
    for _ in range(5):
        h = random_unitary(rng)
        R = rotation_of(h)
        # phi o h equals phi o R on the sphere
        X = QuadratureRule.of_size(8).points
        from feketelab.projline import pairs_from_sphere
        z0, z1 = pairs_from_sphere(X)
        hz0, hz1 = h[0, 0] * z0 + h[0, 1] * z1, h[1, 0] * z0 + h[1, 1] * z1
        assert np.allclose(phi.at(hz0, hz1), phi.rotated(R).value(X), atol=1e-13)
        assert phi.rotated(R).dirichlet == pytest.approx(phi.dirichlet, abs=1e-12)
        assert phi.rotated(R).dirichlet_quadrature(QuadratureRule.of_size(32)) == pytest.approx(
            phi.dirichlet, abs=1e-12)


def test_constant_function_has_zero_error(green):
    G = green("z^2+i")
    nu = PreimageTree(G.lift, P(2), 5)[5]
    err, _ = equidist_error(G, nu, ONE)
    assert err < 1e-13
    # the norm vanishes, so the bound is 0 and only rounding remains in the error
    assert verify_bound(err, 0.1, 2, 5, 32, ONE.norm()).frl_bound == 0


@pytest.mark.parametrize("name", ["re", "im", "height"])
def test_frl_bound_with_unit_constant_z2(name, green):
    G = green("z^2")
    phi = builtin(name)
    mu = integrate_mu_f(G, phi)
    tree = PreimageTree(G.lift, P(1), 10)
    for k in range(2, 11):
        err, _ = equidist_error(G, tree[k], phi, mu=mu)
        E = k * 2.0 ** -k * math.log(2)
        chk = verify_bound(err, E, 2, k, 2 ** k, phi.norm())
        assert chk.frl_margin >= 0


def test_inferred_constant_stable(green):
    G = green("z^2+i")
    tree = PreimageTree(G.lift, P(2), 10)
    for name in ["height", "chordal2@0.5", "chordal2@1+1i"]:
        phi = builtin(name)
        mu = integrate_mu_f(G, phi)
        ratios = []
        for k in range(4, 11):
            err, _ = equidist_error(G, tree[k], phi, mu=mu)
            ratios.append(verify_bound(err, 0.0, 2, k, tree[k].eta_and_D()[1], phi.norm()).ratio)
        C = inferred_constants(ratios)
        assert all(np.isfinite(C)) and max(C) < 2 * min(C)
        assert C == sorted(C)


def test_inferred_constants_running_max():
    assert inferred_constants([0.2, 0.5, 0.1, 0.7]) == [0.2, 0.5, 0.5, 0.7]


def test_measure_average():
    G_nu = PreimageTree(__import__("feketelab").parse_map("z^2"), P(0), 2)[2]
    assert measure_average(G_nu, builtin("chordal2@inf")) == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["nope", "bump@0.5:0.2", "chordal2@", "bump@x:y"])
def test_bad_names(name):
    with pytest.raises(InvalidInput):
        builtin(name)
