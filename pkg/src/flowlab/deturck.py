"""The Ricci-DeTurck operator, its linearization and the quadratic remainder.

With base metric ``g``, reference metric ``gbar`` and perturbed metric
``ghat = g + h`` the identity checked here is

    P(ghat) - P(g) = L h + div*(S[h]) + R[h],   P(g) = -2 Ric(g) - Lie_X g,

with ``X^k = g^{ij} (Gammabar - Gamma)^k_ij`` and ``(div* S)_ij = -nabla_k S^k_ij``.
All covariant derivatives in the remainder are taken with respect to ``g``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PositiveDefinitenessError
from .geometry import Metric, batched_einsum, symmetrize
from .grid import check_finite

_es = batched_einsum


@dataclass(frozen=True)
class ChristoffelDeltaBundle:
    gamma_bar: np.ndarray  # (1,2)  Gammabar - Gamma
    bold_gamma: np.ndarray  # (0,3)  1/2 (h_il,j + h_jl,i - h_ij,l)
    B: np.ndarray  # (0,1)
    vartheta: np.ndarray  # (1,0)
    gamma_hat: np.ndarray  # (1,2)  Gammahat - Gamma
    u: np.ndarray  # (2,0)  ghat^{-1} - g^{-1}
    G: np.ndarray  # (1,0)
    Y: np.ndarray  # (1,0)  Xhat - X


@dataclass(frozen=True)
class ForcingDecomposition:
    """A forcing written as ``r_part + div*(s_part)``."""

    r_part: np.ndarray  # (0,2)
    s_part: np.ndarray  # (1,2)

    def __add__(self, other):
        return ForcingDecomposition(self.r_part + other.r_part, self.s_part + other.s_part)

    def __sub__(self, other):
        return ForcingDecomposition(self.r_part - other.r_part, self.s_part - other.s_part)

    def scaled(self, alpha):
        return ForcingDecomposition(alpha * self.r_part, alpha * self.s_part)

    @classmethod
    def zeros(cls, grid):
        n = grid.dim
        return cls(grid.zeros(n, n), grid.zeros(n, n, n))


def gamma_bar(g: Metric, gbar: Metric):
    if gbar is g:
        return np.zeros_like(g.christoffel)
    return gbar.christoffel - g.christoffel


def deturck_vector_field(g: Metric, gbar: Metric):
    """X^k = g^{ij} (Gammabar^k_ij - Gamma^k_ij)."""
    return check_finite(np.einsum("...ij,...kij->...k", g.inv, gamma_bar(g, gbar)), "X")


def lie_derivative_of_metric(X, g: Metric):
    """(Lie_X g)_ij = X_i,j + X_j,i with X lowered by g."""
    dX = g.covariant_derivative(g.lower_index(X, 0))
    return dX + np.swapaxes(dX, -1, -2)


def ricci_deturck_operator(g: Metric, gbar: Metric):
    X = deturck_vector_field(g, gbar)
    P = -2.0 * g.curvature.ricci - lie_derivative_of_metric(X, g)
    return check_finite(symmetrize(P), "Ricci-DeTurck operator")


def raise_both(h, g: Metric):
    return np.einsum("...pa,...qb,...ab->...pq", g.inv, g.inv, h)


def lichnerowicz_apply(h, g: Metric):
    """Delta_L h = Delta h + 2 R_ipqj h^pq - R_i^p h_pj - R_j^p h_ip."""
    out = g.laplacian(h)
    if g.is_flat:
        return check_finite(symmetrize(out), "Lichnerowicz Laplacian")
    curv = g.curvature
    hup = raise_both(h, g)
    ric_mixed = np.einsum("...pq,...iq->...ip", g.inv, curv.ricci)
    n = g.grid.dim
    rm = np.moveaxis(curv.riemann_lower, -1, -3).reshape(h.shape[:-2] + (n * n, n * n))  # [ij, pq]
    out += 2.0 * np.matmul(rm, hup.reshape(h.shape[:-2] + (n * n, 1))).reshape(h.shape)
    rh = np.einsum("...ip,...pj->...ij", ric_mixed, h)
    out -= rh + np.swapaxes(rh, -1, -2)
    return check_finite(symmetrize(out), "Lichnerowicz Laplacian")


def linearized_apply(h, g: Metric, gbar: Metric):
    """L h = Delta h + E*h + F*nabla h; equals Delta_L h when gbar = g."""
    out = lichnerowicz_apply(h, g)
    gb = gamma_bar(g, gbar)
    if gbar is g or not np.any(gb):
        return out
    X = np.einsum("...ij,...kij->...k", g.inv, gb)
    gb_low = np.einsum("...jk,...kpq->...pqj", g.g, gb)  # gammabar_pqj
    dgb_low = g.covariant_derivative(gb_low)  # [..., p, q, j, i]
    dX = g.covariant_derivative(X, nup=1)  # [..., p, j] = X^p_,j
    hup = raise_both(h, g)
    dh = g.covariant_derivative(h)
    dhup = np.einsum("...pa,...qb,...abi->...pqi", g.inv, g.inv, dh)

    e = np.einsum("...pqji,...pq->...ij", dgb_low, hup)
    e -= np.einsum("...ip,...pj->...ij", h, dX)
    f = np.einsum("...pqi,...pqj->...ij", dhup, gb_low)
    sym = e + f
    out += sym + np.swapaxes(sym, -1, -2)
    out -= np.einsum("...k,...ijk->...ij", X, dh)
    return check_finite(symmetrize(out), "linearized operator")


def _perturbed(h, g: Metric):
    ghat_arr = g.g + h
    lam = np.min(np.linalg.eigvalsh(symmetrize(ghat_arr)))
    if not lam > 0:
        raise PositiveDefinitenessError(
            f"g + h is not positive definite (min eigenvalue {lam:.3g})"
        )
    return Metric(g.grid, ghat_arr, check=False)


def christoffel_delta_bundle(h, g: Metric, gbar: Metric, _cache=None):
    ghat = _perturbed(h, g)
    gi, gh = g.inv, ghat.inv
    u = gh - gi
    dh = g.covariant_derivative(h)  # h_ij,l
    bold = 0.5 * (
        _es("...ilj->...ijl", dh) + _es("...jli->...ijl", dh) - dh
    )
    B = _es("...ij,...ijl->...l", gi, bold)
    vartheta = _es("...lk,...k->...l", gi, B)
    ghat_d = _es("...kl,...ijl->...kij", gh, bold)
    gb = gamma_bar(g, gbar)
    hgb = _es("...ip,...jq,...pq,...kij->...k", gi, gi, h, gb)
    C = _es("...lm,...qm,...kpl->...kpq", gi, h, gb)
    G = _es("...kl,...l->...k", u, B) + _es("...ij,...kij->...k", u, ghat_d + C)
    Y = -vartheta - hgb - G
    bundle = ChristoffelDeltaBundle(gb, bold, B, vartheta, ghat_d, u, G, Y)
    if _cache is not None:
        _cache.update(ghat=ghat, dh=dh, C=C, hgb=hgb)
    return bundle


def quadratic_terms(h, g: Metric, gbar: Metric, return_terms=False):
    """The pair (R[h], S[h]) with Q[h] = div*(S[h]) + R[h]."""
    cache = {}
    bd = christoffel_delta_bundle(h, g, gbar, cache)
    ghat, dh, C, hgb = cache["ghat"], cache["dh"], cache["C"], cache["hgb"]
    u, bold, B, gh_d, gb = bd.u, bd.bold_gamma, bd.B, bd.gamma_hat, bd.gamma_bar
    gi, gh = g.inv, ghat.inv

    # u^{pl}_{,i} = -h_{ks,i} ghat^{ls} ghat^{pk}
    du = -_es("...ksi,...ls,...pk->...pli", dh, gh, gh)

    S = -_es("...kl,...ijl->...kij", u, dh)

    div_u = _es("...qpq->...p", du)
    term0 = -_es("...p,...ijp->...ij", div_u, dh)

    term1 = -2.0 * (
        _es("...q,...ijq->...ij", _es("...lql->...q", du), bold)
        - _es("...lqj,...ilq->...ij", du, bold)
    )
    term1 -= 2.0 * _es("...p,...pij->...ij", _es("...llp->...p", gh_d), gh_d)
    term1 += 2.0 * _es("...ljp,...pil->...ij", gh_d, gh_d)

    has_bar = bool(np.any(gb))
    if has_bar:
        dgb = g.covariant_derivative(gb, nup=1)  # [..., k, p, l, i]
        # (h_qm gammabar^k_pl)_{,i} g^{lm}
        dC = _es("...lm,...qmi,...kpl->...kpqi", gi, dh, gb) + _es(
            "...lm,...qm,...kpli->...kpqi", gi, h, dgb
        )
        # g^{pq} g^{ms} (h_sq gammabar^k_mp)_{,i}
        dD = _es("...pq,...ms,...sqi,...kmp->...ki", gi, gi, dh, gb) + _es(
            "...pq,...ms,...sq,...kmpi->...ki", gi, gi, h, dgb
        )
    A = _es("...kli,...l->...ki", du, B) + _es("...pqi,...kpq->...ki", du, gh_d + C)
    A += _es("...pq,...kli,...pql->...ki", u, du, bold)
    if has_bar:
        A += _es("...pq,...kpqi->...ki", u, dC)
    ag = _es("...ki,...kj->...ij", A, ghat.g)
    term2 = ag + np.swapaxes(ag, -1, -2)
    coef = bd.vartheta + hgb + _es("...kl,...l->...k", u, B) + _es(
        "...pq,...kpq->...k", u, gh_d + C
    )
    term2 += _es("...k,...ijk->...ij", coef, dh)
    if has_bar:
        dh_k = _es("...ki,...kj->...ij", dD, h)
        term2 += dh_k + np.swapaxes(dh_k, -1, -2)

    if g.is_flat:
        term3 = np.zeros_like(term0)
    else:
        term3 = _curvature_term(u, h, g.curvature.riemann)

    # the exact R is symmetric; the discrete antisymmetric part is truncation error
    R = symmetrize(term0 + term1 + term2 + term3)
    check_finite(R, "R[h]")
    check_finite(S, "S[h]")
    decomp = ForcingDecomposition(R, S)
    if return_terms:
        return decomp, {"u_div": term0, "I": term1, "II": term2, "III": term3}
    return decomp


def _curvature_term(u, h, riem):
    # riem[..., s, p, i, j] = R^s_pij
    term3 = _es(
        "...pq,...spjq,...si->...ij", u, riem, h
    ) + _es("...pq,...spji,...sq->...ij", u, riem, h)
    term3 += _es("...pq,...spiq,...sj->...ij", u, riem, h)
    term3 += _es("...pq,...spij,...sq->...ij", u, riem, h)
    term3 += 0.5 * (
        _es("...pq,...sijp,...sq->...ij", u, riem, h)
        + _es("...pq,...sijq,...sp->...ij", u, riem, h)
    )
    return term3


def divergence_of_S(s_part, g: Metric):
    """(div* S)_ij = -nabla_k S^k_ij."""
    return check_finite(-g.divergence(s_part), "div* S")


def forcing_value(q: ForcingDecomposition, g: Metric):
    return q.r_part + divergence_of_S(q.s_part, g)


@dataclass(frozen=True)
class DecompositionResidual:
    sup_residual: float
    l2_residual: float
    sup_lhs: float
    term_magnitudes: dict

    @property
    def relative(self):
        return self.sup_residual / self.sup_lhs if self.sup_lhs > 0 else self.sup_residual


def verify_decomposition(g: Metric, ghat: Metric, gbar: Metric):
    """Compare P(ghat) - P(g) with L h + Q[h] computed along the independent path."""
    h = ghat.g - g.g
    lhs = ricci_deturck_operator(ghat, gbar) - ricci_deturck_operator(g, gbar)
    Lh = linearized_apply(h, g, gbar)
    q, terms = quadratic_terms(h, g, gbar, return_terms=True)
    divS = divergence_of_S(q.s_part, g)
    rhs = Lh + divS + q.r_part
    res = lhs - rhs
    mags = {"lhs": lhs, "Lh": Lh, "div*S": divS, "R": q.r_part, **terms}
    return DecompositionResidual(
        sup_residual=float(np.max(np.abs(res))),
        l2_residual=float(np.sqrt(g.grid.integrate(np.sum(res**2, axis=(-1, -2))))),
        sup_lhs=float(np.max(np.abs(lhs))),
        term_magnitudes={k: float(np.max(np.abs(v))) for k, v in mags.items()},
    )
