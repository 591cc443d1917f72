"""Periodic lattices and finite differences on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NonFiniteError

MIN_RESOLUTION = 8

# one-sided weights of the centered first-derivative stencils
_STENCILS = {
    2: (0.5,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
    8: (4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0),
    10: (5.0 / 6.0, -5.0 / 21.0, 5.0 / 84.0, -5.0 / 504.0, 1.0 / 1260.0),
    12: (6.0 / 7.0, -15.0 / 56.0, 5.0 / 63.0, -1.0 / 56.0, 1.0 / 385.0, -1.0 / 5544.0),
}

# compact second-derivative stencils: (center, one-sided weights)
_STENCILS2 = {
    2: (-2.0, (1.0,)),
    4: (-5.0 / 2.0, (4.0 / 3.0, -1.0 / 12.0)),
    6: (-49.0 / 18.0, (3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0)),
    8: (-205.0 / 72.0, (8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0)),
    10: (-5269.0 / 1800.0, (5.0 / 3.0, -5.0 / 21.0, 5.0 / 126.0, -5.0 / 1008.0, 1.0 / 3150.0)),
    12: (-5369.0 / 1800.0, (12.0 / 7.0, -15.0 / 56.0, 10.0 / 189.0, -1.0 / 112.0, 2.0 / 1925.0, -1.0 / 16632.0)),
}

DEFAULT_ORDER = 8


def _wrap_pad(f, axis, m):
    """Periodically pad ``f`` by ``m`` along ``axis``; ``shift(k)`` views f(x + k h)."""
    n = f.shape[axis]
    if m > n:
        raise ConfigurationError(f"stencil half-width {m} exceeds {n} nodes along axis {axis}")
    idx = np.r_[n - m : n, 0:n, 0:m]
    p = np.take(f, idx, axis=axis)
    lead = (slice(None),) * axis

    def shift(k):
        return p[lead + (slice(m + k, m + k + n),)]

    return p, shift


@dataclass(frozen=True)
class Grid:
    """A uniform periodic lattice on the flat torus prod_i [0, periods[i]).

    Fields living on the grid are numpy arrays whose leading ``dim`` axes are
    the spatial axes; any trailing axes hold tensor components.
    """

    dim: int
    resolution: tuple[int, ...]
    periods: tuple[float, ...]
    order: int = DEFAULT_ORDER
    spacing: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.resolution) != self.dim or len(self.periods) != self.dim:
            raise ConfigurationError("resolution and periods need one entry per axis")
        if any(r < MIN_RESOLUTION for r in self.resolution):
            raise ConfigurationError(
                f"resolution {self.resolution} below stencil minimum {MIN_RESOLUTION}"
            )
        if any(not np.isfinite(p) or p <= 0 for p in self.periods):
            raise ConfigurationError(f"periods must be positive, got {self.periods}")
        if self.order not in _STENCILS:
            raise ConfigurationError(f"unsupported stencil order {self.order}")
        object.__setattr__(
            self, "spacing", tuple(p / r for p, r in zip(self.periods, self.resolution))
        )

    @property
    def shape(self):
        return self.resolution

    @property
    def n_nodes(self):
        return int(np.prod(self.resolution))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def min_spacing(self):
        return min(self.spacing)

    def axes(self):
        return [np.arange(r) * h for r, h in zip(self.resolution, self.spacing)]

    def coords(self):
        """Coordinate arrays x_1..x_n, each of grid shape."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def wrap(self, node):
        return tuple(int(i) % r for i, r in zip(node, self.resolution))

    def flat_index(self, node):
        return int(np.ravel_multi_index(self.wrap(node), self.resolution))

    def node(self, flat):
        return tuple(int(i) for i in np.unravel_index(int(flat), self.resolution))

    def diff(self, f, axis):
        """Centered finite difference of ``f`` along spatial ``axis`` with periodic wrap."""
        if not 0 <= axis < self.dim:
            raise ConfigurationError(f"axis {axis} out of range for dim {self.dim}")
        weights = _STENCILS[self.order]
        p, shift = _wrap_pad(f, axis, len(weights))
        out = np.zeros_like(f, dtype=float)
        for k, w in enumerate(weights, start=1):
            out += w * (shift(k) - shift(-k))
        return out / self.spacing[axis]

    def diff2(self, f, axis):
        """Compact centered second difference along ``axis``; damps the Nyquist mode."""
        center, weights = _STENCILS2[self.order]
        p, shift = _wrap_pad(f, axis, len(weights))
        out = center * np.asarray(f, dtype=float)
        for k, w in enumerate(weights, start=1):
            out += w * (shift(k) + shift(-k))
        return out / self.spacing[axis] ** 2

    def grad(self, f):
        """Partial derivatives of every component; the new index is appended last."""
        return np.stack([self.diff(f, a) for a in range(self.dim)], axis=-1)

    def shift(self, f, offset):
        """Translate a field by an integer number of cells per axis."""
        return np.roll(f, tuple(offset), axis=tuple(range(self.dim)))

    def integrate(self, f, weight=None):
        """Cell-volume quadrature over the torus; sums the spatial axes only."""
        axes = tuple(range(self.dim))
        if weight is not None:
            f = f * weight.reshape(weight.shape + (1,) * (f.ndim - self.dim))
        return np.sum(f, axis=axes) * self.cell_volume

    def zeros(self, *components):
        return np.zeros(self.resolution + tuple(components))


def build_grid(dim, resolution, periods, order=DEFAULT_ORDER):
    return Grid(dim=dim, resolution=tuple(resolution), periods=tuple(periods), order=order)


def check_finite(arr, what="field"):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values in {what}")
    return arr


def partial_derivative(f, grid, axis):
    return check_finite(grid.diff(f, axis), "partial derivative")
