"""Discrete Riemannian geometry on periodic grids.

Tensor fields are numpy arrays of shape ``grid.shape + (n,) * rank``.  Upper
(contravariant) indices come first, followed by the lower ones; a covariant
derivative appends its index at the end.  Index conventions:

* ``christoffel[..., k, i, j] = Gamma^k_ij``
* ``riemann[..., s, p, i, j] = R^s_pij`` with ``R(d_p, d_i) d_j = R^s_pij d_s``
  and ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``
* ``riemann_lower[..., p, i, j, s] = g_sm R^m_pij`` so ``R_ijji`` is the sectional
  curvature of the (i, j) plane
* ``ricci[..., i, j] = R^p_pij``
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix, vstack
from scipy.sparse.csgraph import dijkstra

from .errors import ConfigurationError, NonFiniteError, SingularMetricError
from .grid import Grid, check_finite

_BALL_CHUNK = 512

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def apply_matrix(m, t, pos):
    """Contract the second index of the matrix field ``m`` with index ``pos`` of ``t``."""
    spatial = m.ndim - 2
    n = m.shape[-1]
    rank = t.ndim - spatial
    ax = spatial + pos
    tm = np.moveaxis(t, ax, -1)
    mm = m.reshape(m.shape[:-2] + (1,) * (rank - 1) + (n, n))
    # explicit loop over the (tiny) contracted index beats broadcast einsum
    out = mm[..., :, 0] * tm[..., 0:1]
    for a in range(1, n):
        out = out + mm[..., :, a] * tm[..., a : a + 1]
    return np.moveaxis(out, -1, ax)


def symmetrize(t, i=-2, j=-1):
    return 0.5 * (t + np.swapaxes(t, i, j))


def component_rank(t, grid):
    return t.ndim - grid.dim


def constant_field(grid, value):
    value = np.asarray(value, dtype=float)
    return np.broadcast_to(value, grid.shape + value.shape).copy()


@dataclass(frozen=True)
class CurvatureBundle:
    christoffel: np.ndarray
    riemann: np.ndarray
    riemann_lower: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray

    def sup_rm(self, metric):
        return float(np.max(metric.norm(self.riemann_lower)))


def batched_einsum(subscripts, *operands):
    """einsum over ``...``-batched tensor fields, with the batch as one contiguous trailing axis.

    numpy's einsum loops innermost over the last axis; with size-2/3 component
    axes there that is several times slower than looping over grid nodes.
    """
    lhs, out = subscripts.split("->")
    if "..." not in out:
        return np.einsum(subscripts, *operands, optimize=True)
    terms = [t.replace("...", "") for t in lhs.split(",")]
    out = out.replace("...", "")
    z = next(c for c in _LETTERS if c not in subscripts)
    batch = np.broadcast_shapes(*[op.shape[: op.ndim - len(t)] for op, t in zip(operands, terms)])
    nb = math.prod(batch)
    moved = []
    for op, t in zip(operands, terms):
        comp = op.shape[op.ndim - len(t) :]
        a = np.broadcast_to(op, batch + comp).reshape((nb,) + comp)
        moved.append(np.ascontiguousarray(np.moveaxis(a, 0, -1)))
    sig = ",".join(t + z for t in terms) + "->" + out + z
    res = np.einsum(sig, *moved, optimize=True)
    return np.moveaxis(res, -1, 0).reshape(batch + res.shape[:-1])


def _christoffel_term(gam, t, pos, upper, base):
    """Gamma^a_{yZ} T^{..Z..} (upper) or Gamma^Z_{ya} T_{..Z..} (lower) at slot ``pos``.

    Output index order is T's indices with ``a`` at ``pos``, then ``y``.  Done as a
    batched matmul; einsum with this output ordering is several times slower.
    """
    n = gam.shape[-1]
    tm = np.moveaxis(t, base + pos, -1)
    A = np.moveaxis(gam, -1, -3) if upper else np.swapaxes(gam, -1, -2)  # [..., Z, a, y]
    rest = tm.shape[base:-1]
    r = np.matmul(tm.reshape(tm.shape[:base] + (-1, n)), A.reshape(A.shape[:base] + (n, n * n)))
    return np.moveaxis(r.reshape(tm.shape[:base] + rest + (n, n)), -2, base + pos)


class Metric:
    """A symmetric positive-definite (0,2) field with cached derived geometry."""

    def __init__(self, grid: Grid, g, check=True):
        g = np.asarray(g, dtype=float)
        n = grid.dim
        if g.shape != grid.shape + (n, n):
            raise ConfigurationError(f"metric array shape {g.shape} does not match grid")
        if check:
            check_finite(g, "metric")
            asym = np.max(np.abs(g - np.swapaxes(g, -1, -2)))
            if asym > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
                raise ConfigurationError(f"metric is not symmetric (max asymmetry {asym:.3g})")
        self.grid = grid
        self.g = symmetrize(g)
        if check:
            lam = self.min_eigenvalue()
            if not lam > 0:
                raise SingularMetricError(f"metric not positive definite (min eigenvalue {lam:.3g})")

    @classmethod
    def flat(cls, grid):
        return cls(grid, constant_field(grid, np.eye(grid.dim)))

    @property
    def dim(self):
        return self.grid.dim

    def min_eigenvalue(self):
        return float(np.min(np.linalg.eigvalsh(self.g)))

    @cached_property
    def inv(self):
        try:
            ginv = np.linalg.inv(self.g)
        except np.linalg.LinAlgError as exc:
            raise SingularMetricError("metric inverse failed at some node") from exc
        check_finite(ginv, "inverse metric")
        return symmetrize(ginv)

    @cached_property
    def sqrt_det(self):
        return np.sqrt(np.linalg.det(self.g))

    @cached_property
    def dg(self):
        # dg[..., a, b, c] = d_c g_ab
        return self.grid.grad(self.g)

    @cached_property
    def is_flat(self):
        """True when the components are constant, so Gamma and Rm vanish identically."""
        return not np.any(self.dg)

    @cached_property
    def christoffel(self):
        dg = self.dg
        lowered = 0.5 * (
            np.einsum("...jli->...lij", dg)
            + np.einsum("...ilj->...lij", dg)
            - np.einsum("...ijl->...lij", dg)
        )
        return check_finite(np.einsum("...kl,...lij->...kij", self.inv, lowered), "christoffel")

    @cached_property
    def curvature(self):
        gam = self.christoffel
        # dgam[..., l, j, k, i] = d_i Gamma^l_jk
        dgam = self.grid.grad(gam)
        riem = (
            np.einsum("...ljki->...lijk", dgam)
            - np.einsum("...likj->...lijk", dgam)
            + np.einsum("...lim,...mjk->...lijk", gam, gam)
            - np.einsum("...ljm,...mik->...lijk", gam, gam)
        )
        lower = np.einsum("...sm,...mpij->...pijs", self.g, riem)
        ricci = symmetrize(np.einsum("...ppij->...ij", riem))
        scalar = np.einsum("...ij,...ij->...", self.inv, ricci)
        for name, arr in (("riemann", riem), ("ricci", ricci), ("scalar", scalar)):
            check_finite(arr, name)
        return CurvatureBundle(gam, riem, lower, ricci, scalar)

    def covariant_derivative(self, t, nup=0, gamma=None):
        """nabla T for a tensor with ``nup`` leading upper indices; the new index is last."""
        rank = component_rank(t, self.grid)
        out = self.grid.grad(t)
        if gamma is None and self.is_flat:
            return out
        gam = self.christoffel if gamma is None else gamma
        for pos in range(rank):
            if pos < nup:
                out += _christoffel_term(gam, t, pos, True, self.grid.dim)
            else:
                out -= _christoffel_term(gam, t, pos, False, self.grid.dim)
        return out

    def raise_index(self, t, pos):
        return apply_matrix(self.inv, t, pos)

    def lower_index(self, t, pos):
        return apply_matrix(self.g, t, pos)

    def norm_squared(self, t, nup=0):
        rank = component_rank(t, self.grid)
        other = t
        for pos in range(rank):
            other = apply_matrix(self.g if pos < nup else self.inv, other, pos)
        axes = tuple(range(self.grid.dim, t.ndim))
        return np.sum(t * other, axis=axes)

    def norm(self, t, nup=0):
        return np.sqrt(np.maximum(self.norm_squared(t, nup), 0.0))

    def laplacian(self, t, nup=0):
        """Rough Laplacian g^{pq} nabla_q nabla_p T."""
        d1 = self.covariant_derivative(t, nup)
        d2 = self.covariant_derivative(d1, nup)
        # swap the composite pure second differences for compact ones
        grid = self.grid
        for a in range(grid.dim):
            d2[..., a, a] += grid.diff2(t, a) - grid.diff(grid.diff(t, a), a)
        n, base = grid.dim, grid.dim
        flat = np.matmul(d2.reshape(d2.shape[:base] + (-1, n * n)), self.inv.reshape(self.inv.shape[:base] + (n * n, 1)))
        return flat.reshape(t.shape)

    def divergence(self, t):
        """nabla_k T^k... for a tensor whose first index is upper."""
        rank = component_rank(t, self.grid)
        d = self.covariant_derivative(t, nup=1)
        rest = _LETTERS[: rank - 1]
        return np.einsum(f"...Z{rest}Z->...{rest}", d)

    def volume(self):
        return float(self.grid.integrate(self.sqrt_det))

    def integrate(self, f):
        return self.grid.integrate(f, self.sqrt_det)

    def inner(self, a, b, nup=0):
        """L^2(dV_g) pairing of two tensor fields of the same type."""
        rank = component_rank(a, self.grid)
        other = b
        for pos in range(rank):
            other = apply_matrix(self.g if pos < nup else self.inv, other, pos)
        axes = tuple(range(self.grid.dim, a.ndim))
        return float(self.integrate(np.sum(a * other, axis=axes)))

    def shifted(self, offset):
        return Metric(self.grid, self.grid.shift(self.g, offset), check=False)

    @cached_property
    def _graph(self):
        return _metric_graph(self)

    def distances_from(self, sources, limit=np.inf):
        return dijkstra(self._graph, indices=np.atleast_1d(sources), limit=limit)

    def ball_indicator(self, r, centers=None):
        """Sparse (centers x nodes) 0/1 matrix of graph balls of radius r, and ball volumes.

        Cached per radius; every row of the matrix is one ``geodesic_ball`` node set.
        """
        if not r > 0:
            raise ConfigurationError(f"ball radius must be positive, got {r}")
        n_nodes = self.grid.n_nodes
        centers = np.arange(n_nodes) if centers is None else np.asarray(centers, dtype=int)
        key = (float(r), centers.tobytes())
        cache = self.__dict__.setdefault("_ball_cache", {})
        if key not in cache:
            blocks = []
            for start in range(0, len(centers), _BALL_CHUNK):
                dist = self.distances_from(centers[start : start + _BALL_CHUNK], limit=r)
                blocks.append(csr_matrix(dist <= r, dtype=float))
            mat = vstack(blocks, format="csr") if len(blocks) > 1 else blocks[0]
            mat.sort_indices()
            vol = (mat @ self.sqrt_det.ravel()) * self.grid.cell_volume
            cache[key] = (mat, vol)
        return cache[key]

    def geodesic_ball(self, x, r):
        return geodesic_ball(self, x, r)


def _neighbor_offsets(dim):
    """Primitive lattice steps with entries in {-2..2}; a 5^n stencil keeps graph balls round."""
    offs = []
    for v in itertools.product(range(-2, 3), repeat=dim):
        if any(v) and math.gcd(*[abs(c) for c in v]) == 1:
            offs.append(v)
    return np.array(offs)


def _metric_graph(metric):
    grid = metric.grid
    n_nodes = grid.n_nodes
    ids = np.arange(n_nodes).reshape(grid.shape)
    h = np.array(grid.spacing)
    g_flat = metric.g.reshape(n_nodes, grid.dim, grid.dim)
    rows, cols, vals = [], [], []
    for v in _neighbor_offsets(grid.dim):
        d = v * h
        q = np.sqrt(np.einsum("i,nij,j->n", d, g_flat, d))
        target = np.roll(ids, tuple(-v), axis=tuple(range(grid.dim))).ravel()
        rows.append(ids.ravel())
        cols.append(target)
        vals.append(0.5 * (q + q[target]))
    return csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_nodes, n_nodes),
    )


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    nodes: np.ndarray
    distances: np.ndarray
    volume: float
    wraps: bool

    @property
    def size(self):
        return len(self.nodes)


def geodesic_ball(metric, x, r):
    """Nodes within graph-geodesic distance r of node x, with their Riemannian volume."""
    if not r > 0:
        raise ConfigurationError(f"ball radius must be positive, got {r}")
    grid = metric.grid
    src = grid.flat_index(x)
    dist = metric.distances_from(src, limit=r)[0]
    nodes = np.flatnonzero(dist <= r)
    w = metric.sqrt_det.ravel()
    vol = float(np.sum(w[nodes]) * grid.cell_volume)
    return Ball(
        center=grid.wrap(x),
        radius=float(r),
        nodes=nodes,
        distances=dist[nodes],
        volume=vol,
        wraps=bool(r >= 0.5 * min(grid.periods)),
    )


def christoffel(metric):
    return metric.christoffel


def curvature(metric):
    return metric.curvature


def covariant_derivative(t, metric, nup=0):
    return check_finite(metric.covariant_derivative(t, nup), "covariant derivative")


def tensor_pointwise_norm(t, metric, nup=0):
    return metric.norm(t, nup)


def inverse_field(g):
    inv = np.linalg.inv(g)
    if not np.all(np.isfinite(inv)):
        raise NonFiniteError("non-finite inverse")
    return symmetrize(inv)
