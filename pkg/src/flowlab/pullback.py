"""Recovering a Ricci flow from a Ricci-DeTurck flow by pulling back along X(t).

With d_t ghat = -2 Ric(ghat) - Lie_X ghat, the maps d_t phi_t = X(phi_t, t),
phi_0 = id, make phi_t^* ghat_t a solution of d_t g = -2 Ric(g).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .deturck import deturck_vector_field
from .errors import ConfigurationError, JacobianDegeneracyError
from .geometry import Metric, symmetrize
from .grid import Grid, check_finite
from .parabolic import FlowTrajectory, interpolate_samples

JACOBIAN_RANGE = (0.1, 10.0)


@dataclass
class PullbackReport:
    sup_residual: float
    residual_by_time: np.ndarray
    max_displacement: float
    jacobian_range: tuple
    velocity_sign: float


def periodic_interpolate(grid: Grid, field, points):
    """Cubic-spline interpolation of a periodic field at physical points (..., n)."""
    coords = [points[..., a] / grid.spacing[a] for a in range(grid.dim)]
    comp_shape = field.shape[grid.dim :]
    flat = field.reshape(grid.shape + (-1,))
    out = np.empty(points.shape[:-1] + (flat.shape[-1],))
    for c in range(flat.shape[-1]):
        out[..., c] = map_coordinates(flat[..., c], coords, order=3, mode="grid-wrap")
    return out.reshape(points.shape[:-1] + comp_shape)


def _metric_trajectory(deturck: FlowTrajectory, bg):
    if deturck.kind == "metric":
        return deturck.fields
    return np.array([bg.metric_at(t).g + f for t, f in zip(deturck.times, deturck.fields)])


def flow_map_jacobian(grid: Grid, phi):
    """d phi^a / d x^i from the periodic displacement phi - x."""
    x = np.stack(grid.coords(), axis=-1)
    disp = phi - x
    jac = grid.grad(disp)  # [..., a, i]
    return jac + np.eye(grid.dim)


def pull_back(grid: Grid, ghat, phi):
    """(phi^* ghat)_ij = d_i phi^a d_j phi^b ghat_ab(phi)."""
    J = flow_map_jacobian(grid, phi)
    det = np.linalg.det(J)
    lo, hi = float(det.min()), float(det.max())
    if lo < JACOBIAN_RANGE[0] or hi > JACOBIAN_RANGE[1]:
        raise JacobianDegeneracyError(f"det d(phi) left [0.1, 10]: range [{lo:.3g}, {hi:.3g}]")
    g_phi = periodic_interpolate(grid, ghat, phi)
    return symmetrize(np.einsum("...ai,...bj,...ab->...ij", J, J, g_phi)), (lo, hi)


def recover_ricci_flow(deturck: FlowTrajectory, bg, velocity_sign=1.0):
    """Integrate the flow maps of X(t) by RK4 and pull the DeTurck metrics back.

    ``deturck`` is either a metric trajectory ghat_t or a perturbation h_t
    (then ghat_t = g(t) + h_t).  Returns (ricci-flow trajectory, report); the
    report's residual is sup |d_t g + 2 Ric(g)|_g over interior samples, with
    d_t taken by centered differences.
    """
    grid = deturck.grid
    times = deturck.times
    if len(times) < 4:
        raise ConfigurationError("need at least four samples to recover the flow")
    ghat = _metric_trajectory(deturck, bg)
    X = np.array([
        deturck_vector_field(Metric(grid, g, check=False), bg.metric_at(t))
        for t, g in zip(times, ghat)
    ])

    def velocity(t, pts):
        return velocity_sign * periodic_interpolate(grid, interpolate_samples(times, X, t), pts)

    x0 = np.stack(grid.coords(), axis=-1)
    phi = x0.copy()
    pulled, jac_lo, jac_hi = [], np.inf, -np.inf
    for k, t in enumerate(times):
        if k > 0:
            dt = times[k] - times[k - 1]
            tp = times[k - 1]
            k1 = velocity(tp, phi)
            k2 = velocity(tp + dt / 2, phi + dt / 2 * k1)
            k3 = velocity(tp + dt / 2, phi + dt / 2 * k2)
            k4 = velocity(tp + dt, phi + dt * k3)
            phi = phi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        g_t, (lo, hi) = pull_back(grid, ghat[k], phi)
        jac_lo, jac_hi = min(jac_lo, lo), max(jac_hi, hi)
        pulled.append(g_t)
    pulled = check_finite(np.array(pulled), "pulled-back metrics")
    traj = FlowTrajectory(grid, times, pulled, kind="metric",
                          step_meta=dict(integrator="rk4-flow-map", dt=deturck.dt))

    res = np.zeros(len(times))
    dt = deturck.dt
    for k in range(1, len(times) - 1):
        m = Metric(grid, pulled[k], check=False)
        dgdt = (pulled[k + 1] - pulled[k - 1]) / (2 * dt)
        res[k] = float(np.max(m.norm(dgdt + 2 * m.curvature.ricci)))
    res[0], res[-1] = np.nan, np.nan
    report = PullbackReport(
        sup_residual=float(np.nanmax(res)),
        residual_by_time=res,
        max_displacement=float(np.max(np.abs(_wrap_disp(grid, phi - x0)))),
        jacobian_range=(jac_lo, jac_hi),
        velocity_sign=velocity_sign,
    )
    return traj, report


def _wrap_disp(grid, d):
    L = np.array(grid.periods)
    return d - L * np.round(d / L)
