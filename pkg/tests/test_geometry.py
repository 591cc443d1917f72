import itertools
import math

import numpy as np
import pytest

from flowlab.errors import ConfigurationError, SingularMetricError
from flowlab.families import conformal_bump, diagonal_bump, smooth_symmetric_field
from flowlab.geometry import Metric, christoffel, covariant_derivative, curvature, geodesic_ball
from flowlab.grid import build_grid

from conftest import conformal


def test_flat_metric_has_no_geometry(flat32):
    cb = curvature(flat32)
    for arr in (christoffel(flat32), cb.riemann, cb.ricci, cb.scalar):
        assert np.max(np.abs(arr)) <= 1e-10


def _conformal_gamma(grid, u, du):
    n = grid.dim
    gam = np.zeros(grid.shape + (n, n, n))
    d = np.eye(n)
    for k, i, j in itertools.product(range(n), repeat=3):
        gam[..., k, i, j] = d[k, i] * du[j] + d[k, j] * du[i] - d[i, j] * du[k]
    return gam


def test_conformal_christoffel_oracle():
    errs = []
    for n in (16, 32):
        g = build_grid(2, [n, n], [2 * math.pi] * 2, order=4)
        x, y = g.coords()
        u = 0.1 * np.sin(x)
        gam = christoffel(conformal(g, u))
        exact = _conformal_gamma(g, u, [0.1 * np.cos(x), 0 * x])
        errs.append(np.max(np.abs(gam - exact)))
    assert errs[1] < 5e-5
    assert errs[0] / errs[1] > 12  # fourth order


def test_christoffel_scale_invariant(bump32):
    scaled = Metric(bump32.grid, 3.7 * bump32.g)
    assert np.max(np.abs(christoffel(scaled) - christoffel(bump32))) < 1e-12


def test_conformal_scalar_curvature_oracle():
    errs = []
    for n in (32, 64):
        grid = build_grid(2, [n, n], [2 * math.pi] * 2)
        x, y = grid.coords()
        u = 0.17 * np.sin(x) * np.sin(y)
        R = curvature(conformal(grid, u)).scalar
        exact = -2 * np.exp(-2 * u) * (-2 * u)  # Delta u = -2u
        errs.append(np.max(np.abs(R - exact)))
    assert errs[0] < 5e-6 and errs[1] < 1e-8
    assert errs[0] / errs[1] > 16


def test_riemann_symmetries_3d():
    # the leading pair is antisymmetric by construction; the others hold to truncation error
    defects = []
    for n in (12, 24):
        g = diagonal_bump(build_grid(3, [n] * 3, [2 * math.pi] * 3))
        T = g.curvature.riemann_lower
        scale = np.max(np.abs(T))
        assert np.max(np.abs(T + np.swapaxes(T, -4, -3))) < 1e-13 * scale
        bianchi = T + np.einsum("...bcad->...abcd", T) + np.einsum("...cabd->...abcd", T)
        assert np.max(np.abs(bianchi)) < 1e-13 * scale
        defects.append([np.max(np.abs(T + np.swapaxes(T, -2, -1))) / scale,
                        np.max(np.abs(T - np.einsum("...cdab->...abcd", T))) / scale])
    coarse, fine = np.array(defects)
    assert np.all(fine < 1e-4)
    assert np.all(coarse / fine > 16)


def test_warped_product_ricci_blocks():
    # g = dx^2 + dy^2 + e^{2f(x)} dz^2: Ric_xx = -(f'' + f'^2), Ric_zz = -e^{2f}(f'' + f'^2), rest 0
    grid = build_grid(3, [32, 8, 8], [2 * math.pi] * 3)
    x = grid.coords()[0]
    f = 0.2 * np.sin(x)
    g = np.zeros(grid.shape + (3, 3))
    g[..., 0, 0] = g[..., 1, 1] = 1
    g[..., 2, 2] = np.exp(2 * f)
    ric = curvature(Metric(grid, g)).ricci
    k = -(-0.2 * np.sin(x) + (0.2 * np.cos(x)) ** 2)
    assert np.max(np.abs(ric[..., 0, 0] - k)) < 5e-6
    assert np.max(np.abs(ric[..., 2, 2] - np.exp(2 * f) * k)) < 5e-6
    for i, j in [(0, 1), (0, 2), (1, 2), (1, 1)]:
        assert np.max(np.abs(ric[..., i, j])) < 1e-10


def test_covariant_derivative_flat_is_partial(flat32):
    h = smooth_symmetric_field(flat32.grid, np.random.default_rng(1))
    assert np.array_equal(covariant_derivative(h, flat32), flat32.grid.grad(h))


def test_metric_compatibility(bump32):
    assert np.max(np.abs(covariant_derivative(bump32.g, bump32))) < 1e-12


def test_covariant_derivative_index_oracle(bump32):
    h = smooth_symmetric_field(bump32.grid, np.random.default_rng(2))
    gam = bump32.christoffel
    dh = bump32.grid.grad(h)
    n = 2
    oracle = np.zeros_like(dh)
    for i, j, k in itertools.product(range(n), repeat=3):
        v = dh[..., i, j, k].copy()
        for m in range(n):
            v -= gam[..., m, k, i] * h[..., m, j] + gam[..., m, k, j] * h[..., i, m]
        oracle[..., i, j, k] = v
    assert np.max(np.abs(covariant_derivative(h, bump32) - oracle)) < 1e-13


def test_geodesic_ball_flat_area():
    grid = build_grid(2, [64, 64], [2 * math.pi] * 2)
    b = geodesic_ball(Metric.flat(grid), (10, 20), 0.5)
    assert abs(b.volume / (math.pi * 0.25) - 1) < 0.05


def test_geodesic_ball_translation(flat32):
    a = geodesic_ball(flat32, (3, 4), 0.8)
    b = geodesic_ball(flat32, (20, 11), 0.8)
    assert a.volume == b.volume and a.size == b.size


def test_geodesic_ball_singleton(bump32):
    b = geodesic_ball(bump32, (5, 7), 0.5 * bump32.grid.min_spacing)
    assert b.size == 1
    assert math.isclose(b.volume, bump32.sqrt_det[5, 7] * bump32.grid.cell_volume)
    with pytest.raises(ConfigurationError):
        geodesic_ball(bump32, (0, 0), 0.0)


def test_ball_indicator_rows_match_geodesic_ball(bump32):
    mat, vol = bump32.ball_indicator(0.7, np.array([0, 77, 500]))
    for row, c in enumerate([0, 77, 500]):
        b = geodesic_ball(bump32, bump32.grid.node(c), 0.7)
        assert np.array_equal(mat[row].indices, b.nodes)
        assert math.isclose(vol[row], b.volume)


def test_pointwise_norm(bump32):
    assert np.allclose(bump32.norm(bump32.g), math.sqrt(2))
    rng = np.random.default_rng(3)
    T = smooth_symmetric_field(bump32.grid, rng)
    assert np.allclose(bump32.norm(2 * T), 2 * bump32.norm(T))
    node = (4, 9)
    gi = np.linalg.inv(bump32.g[node])
    naive = sum(gi[a, c] * gi[b, d] * T[node][a, b] * T[node][c, d]
                for a, b, c, d in itertools.product(range(2), repeat=4))
    assert math.isclose(bump32.norm_squared(T)[node], naive, rel_tol=1e-13)


def test_singular_metric_rejected(grid16):
    g = np.zeros(grid16.shape + (2, 2))
    g[..., 0, 0] = 1
    with pytest.raises(SingularMetricError):
        Metric(grid16, g)


def test_conformal_family_curvature_scale(grid32):
    assert 0.9 < conformal_bump(grid32, 0.17).curvature.sup_rm(conformal_bump(grid32, 0.17)) <= 1.0
