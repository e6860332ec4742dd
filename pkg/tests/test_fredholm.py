import math

import numpy as np
import pytest
from scipy import integrate

from xxzdrf.fredholm import NystromOperator, build_grid, evaluate_offgrid, solve_second_kind
from xxzdrf.kernels import kernel


def test_grid_symmetry_and_exactness():
    g = build_grid(1.0, 16)
    assert g.nodes.size == 16 and np.all(np.diff(g.nodes) > 0)
    np.testing.assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-15)
    assert g.integrate(np.ones(16)) == pytest.approx(2.0, abs=1e-13)
    assert build_grid(1.0, 32).integrate(build_grid(1.0, 32).nodes ** 2) == pytest.approx(2 / 3, abs=1e-14)
    g = build_grid(2.7, 40)
    assert g.weights.sum() == pytest.approx(5.4, abs=1e-12)
    with pytest.raises(ValueError):
        build_grid(1.0, 4)


def test_zero_kernel_returns_rhs():
    g = build_grid(1.5, 24)
    f = solve_second_kind(lambda x: 0.0 * x, np.cos, g)
    np.testing.assert_allclose(f.values, np.cos(g.nodes), atol=1e-15)
    assert evaluate_offgrid(f, lambda x: 0.0 * x, np.cos, 3.0) == pytest.approx(math.cos(3.0))


def test_charge_equation_residual():
    zeta, q = 1.1, 0.9
    kern = lambda x: kernel(x, zeta)
    g = build_grid(q, 64)
    f = solve_second_kind(kern, np.ones_like, g)
    lam = g.nodes
    res = f.values + (kern(lam[:, None] - lam[None, :]) * g.weights) @ f.values - 1.0
    assert np.abs(res).max() < 1e-12
    np.testing.assert_allclose(f.values, f.values[::-1], atol=1e-12)  # even in, even out


def test_extension_reproduces_nodes_and_continuum_integral():
    zeta, q = 1.1, 0.9
    kern = lambda x: kernel(x, zeta)
    rhs = lambda x: 2.0 - 4 * math.pi * math.sin(zeta) * kernel(x, 0.5 * zeta)
    g = build_grid(q, 96)
    f = solve_second_kind(kern, rhs, g)
    np.testing.assert_allclose(evaluate_offgrid(f, kern, rhs, g.nodes), f.values, atol=1e-12)
    # far point: the Nystrom sum against an adaptive integral of the extended solution
    x = 2 * q
    inner = integrate.quad(lambda mu: kern(x - mu) * evaluate_offgrid(f, kern, rhs, mu), -q, q,
                           epsabs=1e-14, epsrel=1e-13)[0]
    assert evaluate_offgrid(f, kern, rhs, x) == pytest.approx(rhs(np.array([x]))[0] - inner, abs=1e-9)


def test_spectral_self_convergence():
    zeta, q = 0.96 * math.pi / 2, 1.2
    kern = lambda x: kernel(x, zeta)
    rhs = lambda x: 1.0 - 4 * math.pi * math.sin(zeta) * kernel(x, 0.5 * zeta)
    sols = {}
    for n in (16, 32, 64, 128):
        g = build_grid(q, n)
        f = solve_second_kind(kern, rhs, g)
        sols[n] = lambda x, f=f: evaluate_offgrid(f, kern, rhs, x)
    probe = np.linspace(-q, q, 51)
    err = {n: np.abs(sols[n](probe) - sols[128](probe)).max() for n in (16, 32, 64)}
    assert err[64] < 1e-10
    assert err[16] / max(err[32], 1e-16) > 1e3 or err[32] < 1e-13


def test_operator_transposed_solve():
    g = build_grid(1.0, 20)
    op = NystromOperator(g, lambda x: kernel(x, 0.8))
    b = np.linspace(0, 1, 20)
    np.testing.assert_allclose(op.matrix.T @ op.solve_transposed(b), b, atol=1e-13)
