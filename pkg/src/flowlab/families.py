"""Named metric families and seeded perturbation directions."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError
from .geometry import Metric, constant_field, symmetrize
from .grid import Grid

FAMILIES = ("flat", "conformal", "diagonal")


def flat_metric(grid: Grid):
    return Metric.flat(grid)


def conformal_bump(grid: Grid, amplitude=0.17, modes=(1, 1)):
    """g = exp(2a sin(k1 x1) sin(k2 x2)) delta on a 2D torus (coordinates scaled to the periods)."""
    if grid.dim != 2:
        raise ConfigurationError("the conformal family is two-dimensional")
    x, y = _angles(grid)
    u = amplitude * np.sin(modes[0] * x) * np.sin(modes[1] * y)
    return Metric(grid, np.exp(2 * u)[..., None, None] * np.eye(2))


def diagonal_bump(grid: Grid, amplitudes=(0.1, 0.15, 0.2)):
    """g_ii = exp(2 a_i sin(x_{i+1}) sin(x_{i+2})) on a 3D torus."""
    if grid.dim != 3:
        raise ConfigurationError("the diagonal family is three-dimensional")
    if len(amplitudes) != 3:
        raise ConfigurationError("need one amplitude per axis")
    th = _angles(grid)
    g = np.zeros(grid.shape + (3, 3))
    for i, a in enumerate(amplitudes):
        g[..., i, i] = np.exp(2 * a * np.sin(th[(i + 1) % 3]) * np.sin(th[(i + 2) % 3]))
    return Metric(grid, g)


def _angles(grid):
    return [2 * math.pi * x / L for x, L in zip(grid.coords(), grid.periods)]


def build_metric(grid: Grid, family="flat", amplitude=None):
    """Dispatch on a family name; ``amplitude`` is a scalar or per-axis list."""
    if family == "flat":
        return flat_metric(grid)
    if family == "conformal":
        return conformal_bump(grid, 0.17 if amplitude is None else float(amplitude))
    if family == "diagonal":
        amps = (0.1, 0.15, 0.2) if amplitude is None else amplitude
        if np.isscalar(amps):
            amps = (float(amps),) * 3
        return diagonal_bump(grid, tuple(amps))
    raise ConfigurationError(f"unknown metric family {family!r}; valid: {', '.join(FAMILIES)}")


def smooth_symmetric_field(grid: Grid, rng, kmax=1, unit_sup=True):
    """Random symmetric (0,2) field built from low Fourier modes |k_i| <= kmax."""
    n = grid.dim
    th = _angles(grid)
    out = np.zeros(grid.shape + (n, n))
    for k in np.ndindex(*(2 * kmax + 1,) * n):
        k = np.array(k) - kmax
        phase = sum(kk * t for kk, t in zip(k, th))
        for basis in (np.cos, np.sin):
            if basis is np.sin and not np.any(k):
                continue
            A = symmetrize(rng.standard_normal((n, n)))
            out += basis(phase)[..., None, None] * A
    if unit_sup:
        out /= np.max(np.sqrt(np.sum(out**2, axis=(-1, -2))))
    return out


def perturbation_direction(grid: Grid, seed=0, kmax=1, metric: Metric | None = None):
    """Seeded smooth symmetric direction phi with sup_M |phi|_g = 1."""
    rng = np.random.default_rng(seed)
    phi = smooth_symmetric_field(grid, rng, kmax, unit_sup=False)
    g = metric if metric is not None else Metric(grid, constant_field(grid, np.eye(grid.dim)))
    return phi / float(np.max(g.norm(phi)))


def random_trajectory_fields(grid: Grid, times, rng, kmax=1):
    """phi_a + (t / T) phi_b for two random smooth symmetric fields; unit component sup."""
    a = smooth_symmetric_field(grid, rng, kmax)
    b = smooth_symmetric_field(grid, rng, kmax)
    s = (np.asarray(times) - times[0]) / (times[-1] - times[0])
    out = a[None] + s[(...,) + (None,) * (grid.dim + 2)] * b[None]
    return out / np.max(np.sqrt(np.sum(out**2, axis=(-1, -2))))
