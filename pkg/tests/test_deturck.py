import math

import numpy as np
import pytest

from flowlab.deturck import (
    ForcingDecomposition,
    divergence_of_S,
    lichnerowicz_apply,
    linearized_apply,
    quadratic_terms,
    raise_both,
    ricci_deturck_operator,
    deturck_vector_field,
    verify_decomposition,
)
from flowlab.errors import PositiveDefinitenessError
from flowlab.families import perturbation_direction, smooth_symmetric_field
from flowlab.geometry import Metric
from flowlab.grid import build_grid

from conftest import conformal


@pytest.fixture
def grid3():
    return build_grid(3, [16, 16, 16], [2 * math.pi] * 3)


def test_X_vanishes_when_g_is_gbar(bump32):
    assert np.max(np.abs(deturck_vector_field(bump32, bump32))) == 0


def test_X_conformal_oracle_3d(grid3):
    x, y, z = grid3.coords()
    u = 0.05 * np.sin(x)
    g = conformal(grid3, u)
    flat = Metric.flat(grid3)
    du = np.stack([0.05 * np.cos(x), 0 * x, 0 * x], axis=-1)
    # sum_i Gamma^k_ii = (2 - n) d_k u for a conformal metric
    assert np.max(np.abs(deturck_vector_field(g, flat) - np.exp(-2 * u)[..., None] * du)) < 1e-5
    # swapping the roles is not a sign flip
    swapped = deturck_vector_field(flat, g)
    assert np.max(np.abs(swapped + du)) < 1e-5
    assert np.max(np.abs(swapped + deturck_vector_field(g, flat))) > 1e-3


def test_X_vanishes_for_2d_conformal_against_flat(bump32, flat32):
    assert np.max(np.abs(deturck_vector_field(bump32, flat32))) < 1e-12


def test_P_trivial_cases(flat32, bump32):
    assert np.max(np.abs(ricci_deturck_operator(flat32, flat32))) == 0
    assert np.array_equal(ricci_deturck_operator(bump32, bump32), -2 * bump32.curvature.ricci)


def test_P_index_expansion_oracle(grid32, flat32):
    h = 0.1 * perturbation_direction(grid32, 4)
    g = Metric(grid32, np.eye(2) + h)
    X = deturck_vector_field(g, flat32)
    d = grid32.diff
    lie = np.zeros_like(g.g)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                lie[..., i, j] += (X[..., k] * d(g.g[..., i, j], k)
                                   + g.g[..., k, j] * d(X[..., k], i)
                                   + g.g[..., i, k] * d(X[..., k], j))
    oracle = -2 * g.curvature.ricci - lie
    # the two assemblies differ only by truncation error
    assert np.max(np.abs(ricci_deturck_operator(g, flat32) - oracle)) < 1e-6


def test_L_flat_is_componentwise_laplacian(flat32):
    h = smooth_symmetric_field(flat32.grid, np.random.default_rng(0), kmax=2)
    lap = sum(flat32.grid.diff2(h, a) for a in range(2))
    assert np.max(np.abs(linearized_apply(h, flat32, flat32) - lap)) < 1e-12


def test_L_linearity(bump32, flat32):
    rng = np.random.default_rng(1)
    h1, h2 = (smooth_symmetric_field(bump32.grid, rng) for _ in range(2))
    a, b = 0.7, -2.3
    lhs = linearized_apply(a * h1 + b * h2, bump32, flat32)
    rhs = a * linearized_apply(h1, bump32, flat32) + b * linearized_apply(h2, bump32, flat32)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_L_gateaux_slope(bump32, flat32):
    h = perturbation_direction(bump32.grid, 2, metric=bump32)
    P0 = ricci_deturck_operator(bump32, flat32)
    Lh = linearized_apply(h, bump32, flat32)
    eps = np.array([1e-2, 1e-3, 1e-4])
    errs = [np.max(np.abs(ricci_deturck_operator(Metric(bump32.grid, bump32.g + e * h), flat32) - P0 - e * Lh))
            for e in eps]
    slope = np.polyfit(np.log(eps), np.log(errs), 1)[0]
    assert abs(slope - 2) < 0.1


def test_lichnerowicz_of_metric_and_self_adjointness(flat32, bump32):
    assert np.max(np.abs(lichnerowicz_apply(flat32.g, flat32))) < 1e-12
    rng = np.random.default_rng(5)
    u, v = (smooth_symmetric_field(bump32.grid, rng) for _ in range(2))
    a = bump32.inner(lichnerowicz_apply(u, bump32), v)
    b = bump32.inner(u, lichnerowicz_apply(v, bump32))
    assert abs(a - b) <= 1e-6 * abs(a)


def test_Q_of_zero_is_zero(bump32, flat32):
    q = quadratic_terms(np.zeros(bump32.g.shape), bump32, flat32)
    assert not np.any(q.r_part) and not np.any(q.s_part)


def test_Q_is_quadratic(bump32, flat32):
    h = perturbation_direction(bump32.grid, 7, metric=bump32)
    eps = np.array([1e-1, 1e-2, 1e-3])
    qs = [quadratic_terms(e * h, bump32, flat32) for e in eps]
    for part in ("r_part", "s_part"):
        mags = [np.max(np.abs(getattr(q, part))) for q in qs]
        slope = np.polyfit(np.log(eps), np.log(mags), 1)[0]
        assert abs(slope - 2) < 0.1


def test_Q_pointwise_bounds_finite(bump32):
    rng = np.random.default_rng(8)
    ratios_s, ratios_r = [], []
    for _ in range(5):
        h = 0.05 * smooth_symmetric_field(bump32.grid, rng)
        q = quadratic_terms(h, bump32, bump32)
        nh = bump32.norm(h)
        ndh = bump32.norm(bump32.covariant_derivative(h))
        ratios_s.append(np.max(bump32.norm(q.s_part, nup=1) / (nh * ndh + 1e-300)))
        ratios_r.append(np.max(bump32.norm(q.r_part) / (nh**2 + ndh**2)))
    assert np.all(np.isfinite(ratios_s)) and np.all(np.isfinite(ratios_r))
    assert max(ratios_s) < 1e3 and max(ratios_r) < 1e3


def test_Q_rejects_indefinite_perturbation(flat32):
    with pytest.raises(PositiveDefinitenessError):
        quadratic_terms(-2 * flat32.g, flat32, flat32)


def test_divergence_of_S_oracle(flat32):
    x, y = flat32.grid.coords()
    S = np.zeros(flat32.grid.shape + (2, 2, 2))
    for k, c in enumerate((x, y)):
        S[..., k, :, :] = np.sin(c)[..., None, None] * np.eye(2)
    exact = -(np.cos(x) + np.cos(y))[..., None, None] * np.eye(2)
    assert np.max(np.abs(divergence_of_S(S, flat32) - exact)) < 1e-8
    assert not np.any(divergence_of_S(np.zeros_like(S), flat32))


def test_divergence_integration_by_parts(bump32):
    rng = np.random.default_rng(9)
    g = bump32
    S = np.stack([smooth_symmetric_field(g.grid, rng) for _ in range(2)], axis=-3)
    phi = smooth_symmetric_field(g.grid, rng)
    lhs = g.inner(divergence_of_S(S, g), phi)
    dphi = g.covariant_derivative(phi)  # [a, b, k]
    pair = np.einsum("...kij,...abk,...ia,...jb->...", S, dphi, g.inv, g.inv)
    rhs = float(g.integrate(pair))
    assert abs(lhs - rhs) <= 1e-6 * abs(rhs)


def test_decomposition_trivial_and_flat():
    grid = build_grid(2, [64, 64], [2 * math.pi] * 2)
    flat = Metric.flat(grid)
    assert verify_decomposition(flat, flat, flat).sup_residual == 0
    phi = perturbation_direction(grid, 0)
    r = verify_decomposition(flat, Metric(grid, flat.g + 0.05 * phi), flat)
    assert r.relative <= 1e-6


def test_decomposition_curved_with_gauge(bump32):
    flat = Metric.flat(bump32.grid)
    phi = perturbation_direction(bump32.grid, 3, metric=bump32)
    r = verify_decomposition(bump32, Metric(bump32.grid, bump32.g + 0.05 * phi), flat)
    assert r.relative < 1e-4
    assert r.term_magnitudes["lhs"] > 0


def test_forcing_decomposition_algebra(grid16):
    rng = np.random.default_rng(0)
    a = ForcingDecomposition(rng.standard_normal(grid16.shape + (2, 2)), rng.standard_normal(grid16.shape + (2, 2, 2)))
    z = ForcingDecomposition.zeros(grid16)
    assert np.array_equal((a - a).r_part, z.r_part)
    assert np.array_equal((a + z).s_part, a.s_part)
    assert np.array_equal(a.scaled(2.0).r_part, 2 * a.r_part)


def test_raise_both(bump32):
    assert np.allclose(raise_both(bump32.g, bump32), bump32.inv)


def test_delta_bundle_invariants(bump32, flat32):
    from flowlab.deturck import christoffel_delta_bundle

    h = 0.2 * perturbation_direction(bump32.grid, 11, metric=bump32)
    b = christoffel_delta_bundle(h, bump32, flat32)
    gi = bump32.inv
    # u^{pl} = -g^{pk} g^{ls} h_ks - u^{pk} g^{ls} h_ks, exact for the inverted u
    rhs = -np.einsum("...pk,...ls,...ks->...pl", gi, gi, h) - np.einsum("...pk,...ls,...ks->...pl", b.u, gi, h)
    assert np.max(np.abs(b.u - rhs)) < 1e-14
    assert np.max(np.abs(b.bold_gamma - np.swapaxes(b.bold_gamma, -3, -2))) < 1e-15
    for arr in (b.gamma_bar, b.gamma_hat):
        assert np.max(np.abs(arr - np.swapaxes(arr, -1, -2))) < 1e-12
    same = christoffel_delta_bundle(np.zeros_like(h), bump32, flat32)
    for name in ("bold_gamma", "B", "vartheta", "gamma_hat", "u", "G", "Y"):
        assert not np.any(getattr(same, name)), name


def test_forcing_parts_symmetric(bump32, flat32):
    h = 0.1 * perturbation_direction(bump32.grid, 12, metric=bump32)
    q = quadratic_terms(h, bump32, flat32)
    assert np.max(np.abs(q.r_part - np.swapaxes(q.r_part, -1, -2))) < 1e-14
    assert np.max(np.abs(q.s_part - np.swapaxes(q.s_part, -1, -2))) < 1e-14
