"""Localized and global X_T / Y_T norms over parabolic cylinders.

For a center x and radius r, P = B(x, r) x (0, r^2] and Omega = B(x, r) x [r^2/2, r^2].
Balls and |B| come from the background metric at time 0; pointwise norms,
gradients and the volume element come from g_t.  Time integrals use the
trapezoidal (averaged-midpoint) rule over integrator samples, with both ends
of each window snapped to the nearest sample.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .deturck import quadratic_terms
from .errors import ConfigurationError, EmptyCylinderError
from .geometry import Metric
from .grid import Grid
from .parabolic import FlowTrajectory, duhamel_solve, evolve_homogeneous, time_grid

MIN_RADIUS_CELLS = 3


@dataclass
class NormReport:
    kind: str
    value: float
    witness: tuple
    term_breakdown: dict
    radii: list
    centers: np.ndarray
    local_values: np.ndarray  # (n_radii, n_centers)
    metadata: dict = field(default_factory=dict)

    @property
    def sample_set(self):
        return [(int(c), float(r)) for r in self.radii for c in self.centers]

    def to_text(self):
        lines = [
            f"kind: {self.kind}",
            f"value: {self.value:.17g}",
            f"witness_center: {list(self.witness[0])}",
            f"witness_radius: {self.witness[1]:.17g}",
        ]
        for k, v in self.term_breakdown.items():
            lines.append(f"term.{k}: {v:.17g}")
        lines.append(f"radii: {[float(r) for r in self.radii]}")
        lines.append(f"n_centers: {len(self.centers)}")
        for k, v in self.metadata.items():
            lines.append(f"meta.{k}: {v}")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["center", "radius", "local_value"])
        for i, r in enumerate(self.radii):
            for j, c in enumerate(self.centers):
                w.writerow([int(c), f"{r:.17g}", f"{self.local_values[i, j]:.17g}"])
        return buf.getvalue()


def sample_radii(grid: Grid, T):
    """Dyadic radii sqrt(T), sqrt(T)/2, ... down to three spacings.

    When sqrt(T) itself is below three spacings the set is the single radius sqrt(T).
    """
    r = math.sqrt(T)
    floor = MIN_RADIUS_CELLS * grid.min_spacing
    radii = []
    while r >= floor * (1 - 1e-12):
        radii.append(r)
        r /= 2
    return radii or [math.sqrt(T)]


def sample_centers(grid: Grid, stride=1):
    if stride == 1:
        return np.arange(grid.n_nodes)
    sl = tuple(slice(0, n, stride) for n in grid.shape)
    return np.arange(grid.n_nodes).reshape(grid.shape)[sl].ravel()


def _snap(times, t):
    return int(np.argmin(np.abs(times - t)))


def _window_weights(times, a, b):
    """Trapezoid weights on samples for the window [a, b], both snapped to samples."""
    ia, ib = _snap(times, a), _snap(times, b)
    w = np.zeros(len(times))
    if ib > ia:
        dt = np.diff(times[ia : ib + 1])
        w[ia:ib] += 0.5 * dt
        w[ia + 1 : ib + 1] += 0.5 * dt
    return w, ia, ib


class _Pointwise:
    """Per-sample pointwise data of one trajectory against one background."""

    def __init__(self, traj: FlowTrajectory, bg, gradient=True, nup=0):
        self.grid = traj.grid
        self.times = traj.times
        self.ball_metric: Metric = bg.metric_at(traj.times[0])
        vals, grads, weights = [], [], []
        for t, f in zip(traj.times, traj.fields):
            g = bg.metric_at(t)
            vals.append(g.norm(f, nup).ravel())
            if gradient:
                grads.append(g.norm(g.covariant_derivative(f, nup), nup).ravel())
            weights.append(g.sqrt_det.ravel() * self.grid.cell_volume)
        self.vals = np.array(vals)
        self.grads = np.array(grads) if gradient else None
        self.weights = np.array(weights)

    def window(self, r):
        times = self.times
        r2 = r * r
        if len(times) < 2 or r2 < (times[1] - times[0]) * (1 - 1e-9):
            raise EmptyCylinderError(f"r^2 = {r2:.4g} is below the first time sample")
        wP, _, ibP = _window_weights(times, times[0], times[0] + r2)
        wO, iaO, ibO = _window_weights(times, times[0] + r2 / 2, times[0] + r2)
        return wP, ibP, wO, (iaO, ibO)

    def integral(self, arr, w):
        """Node-wise space-time integral sum_k w_k arr_k dV_k."""
        return np.einsum("k,kn->n", w, arr * self.weights)


def _ball(metric: Metric, r, centers):
    mat, vol = metric.ball_indicator(r, centers)
    return mat, vol


def _ball_max(mat, nodal):
    return np.asarray(mat.multiply(nodal[None, :]).max(axis=1).todense()).ravel()


def _x_terms(pw: _Pointwise, r, centers):
    n = pw.grid.dim
    p = n + 4
    wP, ibP, wO, _ = pw.window(r)
    mat, vol = _ball(pw.ball_metric, r, centers)
    linf = _ball_max(mat, np.max(pw.vals[: ibP + 1], axis=0))
    l2 = np.sqrt(mat @ pw.integral(pw.grads**2, wP)) / np.sqrt(vol)
    lp = r ** ((n + 2) / p) * (mat @ pw.integral(pw.grads**p, wO)) ** (1 / p) / vol ** (1 / p)
    return {"linf": linf, "grad_l2": l2, "grad_lp": lp}


def _y0_terms(pw: _Pointwise, r, centers):
    n = pw.grid.dim
    q = (n + 4) / 2
    wP, _, wO, _ = pw.window(r)
    mat, vol = _ball(pw.ball_metric, r, centers)
    l1 = (mat @ pw.integral(pw.vals, wP)) / vol
    lq = r ** ((2 * n + 4) / (n + 4)) * (mat @ pw.integral(pw.vals**q, wO)) ** (1 / q) / vol ** (2 / (n + 4))
    return {"r_l1": l1, "r_lq": lq}


def _y1_terms(pw: _Pointwise, r, centers):
    n = pw.grid.dim
    p = n + 4
    wP, _, wO, _ = pw.window(r)
    mat, vol = _ball(pw.ball_metric, r, centers)
    l2 = np.sqrt(mat @ pw.integral(pw.vals**2, wP)) / np.sqrt(vol)
    lp = r ** ((n + 2) / p) * (mat @ pw.integral(pw.vals**p, wO)) ** (1 / p) / vol ** (1 / p)
    return {"s_l2": l2, "s_lp": lp}


def _restrict(traj: FlowTrajectory, T):
    if T is None:
        return traj
    k = _snap(traj.times, traj.times[0] + T)
    if k < 1:
        raise EmptyCylinderError(f"horizon {T} is below the first time sample")
    return FlowTrajectory(traj.grid, traj.times[: k + 1], traj.fields[: k + 1], traj.kind, traj.step_meta)


def _assemble(kind, grid, radii, centers, per_radius, meta):
    totals = np.array([sum(t.values()) for t in per_radius])
    i, j = np.unravel_index(int(np.argmax(totals)), totals.shape)
    center = grid.node(centers[j])
    breakdown = {k: float(v[j]) for k, v in per_radius[i].items()}
    return NormReport(
        kind=kind, value=float(totals[i, j]), witness=(center, float(radii[i])),
        term_breakdown=breakdown, radii=list(map(float, radii)), centers=centers,
        local_values=totals, metadata=meta,
    )


def _options(grid, T, stride, radii):
    centers = sample_centers(grid, stride)
    radii = sample_radii(grid, T) if radii is None else list(radii)
    return centers, radii


def x_norm(f: FlowTrajectory, bg, T=None, stride=1, radii=None):
    """||f||_{X_T}: sup over sampled centers and dyadic radii of the local X norm."""
    f = _restrict(f, T)
    T = f.T - f.times[0]
    pw = _Pointwise(f, bg)
    centers, radii = _options(f.grid, T, stride, radii)
    per_radius = [_x_terms(pw, r, centers) for r in radii]
    return _assemble("X", f.grid, radii, centers, per_radius,
                     dict(T=T, background=bg.tag, stride=stride))


def local_x_norm(f: FlowTrajectory, bg, x, r):
    pw = _Pointwise(f, bg)
    terms = _x_terms(pw, r, np.array([f.grid.flat_index(x)]))
    return float(sum(v[0] for v in terms.values()))


def _split(q, grid, times):
    n = grid.dim
    if isinstance(q, FlowTrajectory):
        return q, FlowTrajectory(grid, times, np.zeros((len(times),) + grid.shape + (n, n, n)))
    r = np.array([d.r_part for d in q])
    s = np.array([d.s_part for d in q])
    return FlowTrajectory(grid, times, r), FlowTrajectory(grid, times, s)


def y_norm(q, bg, times, T=None, stride=1, radii=None):
    """||r||_{Y0_T} + ||s||_{Y1_T} for the supplied decomposition q = r + div*(s).

    ``q`` is a sequence of ``ForcingDecomposition`` sampled at ``times``.  The two
    global suprema are taken separately, which is an upper bound for the
    infimum over decompositions.
    """
    grid = bg.grid
    times = np.asarray(times, dtype=float)
    rt, st = _split(q, grid, times)
    rt, st = _restrict(rt, T), _restrict(st, T)
    T = rt.T - rt.times[0]
    centers, radii = _options(grid, T, stride, radii)
    pw_r = _Pointwise(rt, bg, gradient=False)
    pw_s = _Pointwise(st, bg, gradient=False, nup=1)
    rep0 = _assemble("Y0", grid, radii, centers, [_y0_terms(pw_r, r, centers) for r in radii], {})
    rep1 = _assemble("Y1", grid, radii, centers, [_y1_terms(pw_s, r, centers) for r in radii], {})
    return NormReport(
        kind="Y", value=rep0.value + rep1.value, witness=rep0.witness,
        term_breakdown={**{f"Y0.{k}": v for k, v in rep0.term_breakdown.items()},
                        **{f"Y1.{k}": v for k, v in rep1.term_breakdown.items()},
                        "Y0": rep0.value, "Y1": rep1.value},
        radii=radii, centers=centers,
        local_values=rep0.local_values + rep1.local_values,
        metadata=dict(T=T, background=bg.tag, stride=stride, Y1_witness=rep1.witness),
    )


# ---------------------------------------------------------------------------
# inequality audits


@dataclass
class AuditRow:
    inequality: str
    trial: int
    lhs: float
    rhs: float
    ratio: float | None
    extra: dict = field(default_factory=dict)


def _ratio(lhs, rhs):
    return None if rhs == 0 and lhs == 0 else (lhs / rhs if rhs > 0 else math.inf)


def audit_linear(bg, T, forcing_family, trials, stride=1):
    """||int K Q||_X / ||Q||_Y for sampled forcings Q = r + div*(s)."""
    times = time_grid(bg.grid, T)
    rows = []
    for i in range(trials):
        q = forcing_family(i, times)
        sol = duhamel_solve(None, q, bg, times=times)
        lhs = x_norm(sol, bg, stride=stride).value
        rhs = y_norm(q, bg, times, stride=stride).value
        rows.append(AuditRow("linear", i, lhs, rhs, _ratio(lhs, rhs)))
    return rows


def audit_quadratic(bg, T, h_family, trials, stride=1):
    """||Q[h]||_Y / ||h||_X^2 for sampled perturbation trajectories h."""
    times = time_grid(bg.grid, T)
    rows = []
    for i in range(trials):
        h = h_family(i, times)
        q = [quadratic_terms(f, bg.metric_at(t), bg.metric_at(t)) for t, f in zip(times, h.fields)]
        lhs = y_norm(q, bg, times, stride=stride).value
        xn = x_norm(h, bg, stride=stride).value
        rows.append(AuditRow("quadratic", i, lhs, xn**2, _ratio(lhs, xn**2), {"x_norm": xn}))
    return rows


def audit_source(bg, T_list, Z, stride=1):
    """||int K Z||_X / (T ||Z||_inf) across horizons, with the fitted T exponent."""
    rows = []
    zsup = float(np.max(bg.metric_at(0.0).norm(Z)))
    for i, T in enumerate(T_list):
        times = time_grid(bg.grid, T)
        sol = duhamel_solve(None, [Z] * len(times), bg, times=times)
        lhs = x_norm(sol, bg, stride=stride).value
        rows.append(AuditRow("source", i, lhs, T * zsup, _ratio(lhs, T * zsup), {"T": T}))
    lhs = np.array([r.lhs for r in rows])
    exponent = None
    if np.all(lhs > 0) and len(T_list) > 1:
        exponent = float(np.polyfit(np.log(T_list), np.log(lhs), 1)[0])
    return rows, exponent


def audit_initial(bg, T, h0_family, trials, stride=1):
    """||K h0||_X / ||h0||_inf for sampled initial data."""
    rows = []
    for i in range(trials):
        h0 = h0_family(i)
        traj = evolve_homogeneous(h0, 0.0, T, bg, return_trajectory=True)
        lhs = x_norm(traj, bg, stride=stride).value
        rhs = float(np.max(bg.metric_at(0.0).norm(h0)))
        rows.append(AuditRow("initial", i, lhs, rhs, _ratio(lhs, rhs)))
    return rows


def norm_inequality_audit(bg, T, variants, stride=1):
    """Run the requested audits; returns {name: rows} with the max ratio per audit.

    ``variants`` maps an audit name ("linear", "quadratic", "source", "initial")
    to its keyword arguments for the matching ``audit_*`` function.
    """
    out = {}
    for name, kw in variants.items():
        if name == "linear":
            rows = audit_linear(bg, T, stride=stride, **kw)
        elif name == "quadratic":
            rows = audit_quadratic(bg, T, stride=stride, **kw)
        elif name == "source":
            rows, exponent = audit_source(bg, stride=stride, **kw)
            out["source_exponent"] = exponent
        elif name == "initial":
            rows = audit_initial(bg, T, stride=stride, **kw)
        else:
            raise ConfigurationError(f"unknown audit {name!r}")
        ratios = [r.ratio for r in rows if r.ratio is not None]
        out[name] = {"rows": rows, "max_ratio": max(ratios) if ratios else None}
    return out
