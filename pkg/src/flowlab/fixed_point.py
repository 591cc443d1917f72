"""Picard iteration for the integral form of the Ricci-DeTurck perturbation problem.

Static existence: g(t) = gbar = g0, h(0) = 0 and the forcing carries Z = -2 Ric(g0).
Perturbation: g(t) a Ricci flow (or a static metric), h(t0) = ghat0 - g(t0), no Z.
An explicit ``times`` grid (possibly starting at t0 > 0) overrides T and dt.
In both cases Phi(h) = K h0 + int K (Z + R[h] + div* S[h]), evaluated by a
forward Duhamel solve on the integrator time grid.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .deturck import ForcingDecomposition, quadratic_terms
from .errors import (
    BallEscapeError,
    ConfigurationError,
    ConvergenceError,
    DegeneratePairError,
    PositiveDefinitenessError,
)
from .norms import x_norm
from .parabolic import (
    FlowTrajectory,
    duhamel_solve,
    static_source_term,
    time_grid,
    zero_trajectory,
)

MODES = ("static-existence", "perturbation")


@dataclass
class PicardProblem:
    mode: str
    bg: object
    T: float
    delta: float
    tol: float | None = None
    max_iter: int = 50
    h0: np.ndarray | None = None
    dt: float | None = None
    stride: int = 1
    times: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown Picard mode {self.mode!r}; valid: {', '.join(MODES)}")
        if not self.delta > 0 or not self.T > 0:
            raise ConfigurationError("delta and T must be positive")
        if self.tol is None:
            self.tol = 1e-10 * self.delta
        grid = self.bg.grid
        n = grid.dim
        if self.mode == "static-existence":
            if self.bg.tag != "static":
                raise ConfigurationError("static-existence mode needs a static background (gbar = g0)")
            if self.h0 is not None and np.any(self.h0):
                raise ConfigurationError("static-existence mode starts from h0 = 0")
            self.h0 = np.zeros(grid.shape + (n, n))
        else:
            if self.h0 is None:
                raise ConfigurationError("perturbation mode needs h0 = ghat0 - g0")
            self.h0 = np.asarray(self.h0, dtype=float)
            t0 = 0.0 if self.times is None else float(self.times[0])
            h0_sup = float(np.max(self.bg.metric_at(t0).norm(self.h0)))
            if not h0_sup < self.delta:
                raise ConfigurationError(f"sup|h0| = {h0_sup:.4g} is not below delta = {self.delta}")
        if self.times is None:
            self.times = time_grid(grid, self.T, self.dt)
        else:
            self.times = np.asarray(self.times, dtype=float)
            self.T = float(self.times[-1] - self.times[0])
        self.Z = static_source_term(self.bg) if self.mode == "static-existence" else None

    @property
    def grid(self):
        return self.bg.grid

    def xnorm(self, traj):
        return x_norm(traj, self.bg, stride=self.stride).value


@dataclass
class IterationTrace:
    norms: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.increments)

    @property
    def ratios(self):
        inc = self.increments
        return [None] + [inc[k] / inc[k - 1] if inc[k - 1] > 0 else None for k in range(1, len(inc))]

    @property
    def measured_ratio(self):
        """Largest increment ratio past the first iteration (geometric-rate estimate)."""
        r = [x for x in self.ratios[2:] if x is not None]
        if not r:
            r = [x for x in self.ratios[1:] if x is not None]
        return max(r) if r else 0.0

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "norm", "increment", "ratio"])
        for k, (nrm, inc, rat) in enumerate(zip(self.norms, self.increments, self.ratios), start=1):
            w.writerow([k, f"{nrm:.17g}", f"{inc:.17g}", "" if rat is None else f"{rat:.17g}"])
        return buf.getvalue()


def forcing_of(h: FlowTrajectory, prob: PicardProblem):
    """(Z + R[h], S[h]) at every sample time, with Q taken relative to g(t) = gbar(t)."""
    out = []
    for t, f in zip(h.times, h.fields):
        g = prob.bg.metric_at(t)
        try:
            q = quadratic_terms(f, g, g)
        except PositiveDefinitenessError as exc:
            raise PositiveDefinitenessError(str(exc), t) from exc
        if prob.Z is not None:
            q = ForcingDecomposition(q.r_part + prob.Z, q.s_part)
        out.append(q)
    return out


def phi_apply(h: FlowTrajectory, prob: PicardProblem) -> FlowTrajectory:
    """Phi(h) = K h0 + int K (Z + R[h]) + grad K . S[h], via a Duhamel solve."""
    if len(h.times) != len(prob.times) or not np.allclose(h.times, prob.times):
        raise ConfigurationError("h must be sampled on the problem's time grid")
    return duhamel_solve(prob.h0, forcing_of(h, prob), prob.bg, times=prob.times)


def initial_iterate(prob: PicardProblem) -> FlowTrajectory:
    """Zero trajectory (static) or homogeneous evolution of h0 (perturbation)."""
    if prob.mode == "static-existence":
        return zero_trajectory(prob.grid, prob.times)
    return duhamel_solve(prob.h0, None, prob.bg, times=prob.times)


def picard_solve(prob: PicardProblem, start: FlowTrajectory | None = None):
    """Iterate h_{k+1} = Phi(h_k) until ||h_{k+1} - h_k||_X <= tol.

    Every iterate must stay in the delta-ball of X_T; leaving it raises
    ``BallEscapeError``.  Returns (solution, trace).
    """
    h = initial_iterate(prob) if start is None else start
    trace = IterationTrace()
    for k in range(1, prob.max_iter + 1):
        t0 = time.perf_counter()
        h_next = phi_apply(h, prob)
        nrm = prob.xnorm(h_next)
        inc = prob.xnorm(h_next - h)
        trace.norms.append(nrm)
        trace.increments.append(inc)
        trace.wall_times.append(time.perf_counter() - t0)
        if not nrm <= prob.delta:
            raise BallEscapeError(
                f"iterate {k} has X_T norm {nrm:.4g} > delta = {prob.delta}", iteration=k
            )
        h = h_next
        if inc <= prob.tol:
            trace.converged = True
            return h, trace
    raise ConvergenceError(
        f"no convergence after {prob.max_iter} iterations (last increment {trace.increments[-1]:.3g})",
        last_ratio=trace.ratios[-1],
    )


@dataclass
class ContractionReport:
    ratio: float
    norm_v: float
    norm_w: float
    norm_diff: float
    norm_image_diff: float


def contraction_ratio(v: FlowTrajectory, w: FlowTrajectory, prob: PicardProblem,
                      norm_v=None, norm_w=None):
    """||Phi(v) - Phi(w)||_X / ||v - w||_X.

    The h0 and Z contributions cancel in the difference, so a single Duhamel
    solve of Q[v] - Q[w] from zero data is used.  Known ||v||_X, ||w||_X may be
    passed to skip recomputing them.
    """
    diff = prob.xnorm(v - w)
    if diff == 0:
        raise DegeneratePairError("v and w coincide in X_T")
    qv = forcing_of(v, prob)
    qw = forcing_of(w, prob)
    dq = [a - b for a, b in zip(qv, qw)]
    image = duhamel_solve(None, dq, prob.bg, times=prob.times)
    img = prob.xnorm(image)
    norm_v = prob.xnorm(v) if norm_v is None else norm_v
    norm_w = prob.xnorm(w) if norm_w is None else norm_w
    return ContractionReport(img / diff, norm_v, norm_w, diff, img)
