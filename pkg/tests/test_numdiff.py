import math

import numpy as np
import pytest

from conftest import rng_for, sample_ball
from riemmean.frechet import Configuration, frechet_mean, objective
from riemmean.manifolds import Euclidean, Sphere
from riemmean.numdiff import fd_gradient, fd_hessian, fd_hessian_min_abs_eig


def test_fd_gradient_euclidean_quadratic():
    eu = Euclidean(2)
    p = eu.point([1.0, 0.0])
    grad = fd_gradient(eu, lambda x: float(x.coords @ x.coords), p)
    assert np.max(np.abs(grad.vec - [2.0, 0.0])) < 1e-8


def test_fd_gradient_constant_function():
    eu = Euclidean(3)
    grad = fd_gradient(eu, lambda x: 4.25, eu.point([0.3, -1.0, 2.0]))
    assert np.max(np.abs(grad.vec)) == 0.0


def test_fd_gradient_sphere_squared_distance():
    sph = Sphere(2)
    rng = rng_for(50)
    for _ in range(10):
        p = sph.random_point(rng)
        q = sph.random_point(rng)
        if sph.dist(p, q) > math.pi - 0.2:
            continue
        grad = fd_gradient(sph, lambda x: sph.dist(x, q) ** 2, p)
        expect = -2.0 * sph.log(p, q).vec
        assert np.max(np.abs(grad.vec - expect)) < 1e-6


def test_fd_gradient_second_order_convergence():
    eu = Euclidean(2)
    p = eu.point([0.7, -0.2])

    def f(x):
        a, b = x.coords
        return a**3 + 2.0 * a * b + b**2

    exact = np.array([3 * 0.7**2 + 2 * (-0.2), 2 * 0.7 + 2 * (-0.2)])
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        g = fd_gradient(eu, f, p, h=h)
        errs.append(np.max(np.abs(g.vec - exact)))
    # halving h cuts the truncation error ~4x on polynomials
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)


def test_fd_hessian_euclidean_quadratic():
    eu = Euclidean(2)
    p = eu.point([0.0, 0.0])
    val = fd_hessian_min_abs_eig(eu, lambda x: float(x.coords @ x.coords), p, h=1e-4)
    assert val == pytest.approx(2.0, abs=1e-4)


def test_fd_hessian_saddle():
    eu = Euclidean(2)
    p = eu.point([0.0, 0.0])
    # f = x*y has Hessian [[0,1],[1,0]], eigenvalues +-1: indefinite but
    # nondegenerate
    H = fd_hessian(eu, lambda x: float(x.coords[0] * x.coords[1]), p, h=1e-4)
    assert np.max(np.abs(H - np.array([[0.0, 1.0], [1.0, 0.0]]))) < 1e-6
    val = fd_hessian_min_abs_eig(
        eu, lambda x: float(x.coords[0] * x.coords[1]), p, h=1e-4
    )
    assert val == pytest.approx(1.0, abs=1e-4)


def test_fd_hessian_positive_at_certified_sphere_mean():
    sph = Sphere(2)
    rng = rng_for(51)
    north = sph.point([0.0, 0.0, 1.0])
    pts = tuple(sample_ball(sph, north, 0.4, rng) for _ in range(5))
    Q = Configuration(sph, pts)
    res = frechet_mean(Q)
    assert res.afsari_certified
    grad = fd_gradient(sph, lambda x: objective(Q, x), res.minimizer)
    assert sph.norm(res.minimizer, grad) < 1e-6
    val = fd_hessian_min_abs_eig(
        sph, lambda x: objective(Q, x), res.minimizer, h=1e-4
    )
    assert val > 0.1
