"""Mild solutions of du/dt + Box u = |u|^{m-1} u by Picard iteration.

The integral (Duhamel) form

    u(t) = e^{-t Box} u0 + int_0^t e^{-(t-s) Box} f(u(s)) ds,
    f(u) = |u|^{m-1} u,  m > 2,

is iterated as u^{k+1} = Phi(u^k) starting from the linear trajectory
Phi(0).  One application of Phi is a single forward sweep over a uniform
snapshot schedule: with Prop the one-interval propagator and f_j = f(v(t_j)),

    u_{j+1} = Prop [ u_j + (ds/2) f_j ] + (ds/2) f_{j+1},

which telescopes to the linear term plus the trapezoid-rule Duhamel
integral with every quadrature node propagated by the same scheme.

Distances between iterates are measured in the contraction norm

    ||v||_Y = sup_t ||v(t)||_{m-1} + sup_{t>0} t^{1/(m-1)-1/q} ||v(t)||_q,

whose two pieces mirror the persistence and smoothing halves of the
fixed-point argument; the iteration is a contraction when the data are
small and 1 < m-1 < q < m(m-1).

A first-order IMEX scheme (backward Euler on Box, explicit forcing) is the
independent cross-check on the fixed point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import ComplexField, lp_norm
from .semigroup import (
    BLOWUP_FACTOR,
    Propagator,
    StepperConfig,
    Trajectory,
    _steps_for,
    evolve_linear,
)

__all__ = [
    "Nonlinearity",
    "PicardReport",
    "f_apply",
    "y_norm",
    "y_distance",
    "duhamel_apply",
    "picard_solve",
    "solve_imex",
]


@dataclass(frozen=True)
class Nonlinearity:
    """Power nonlinearity f(u) = |u|^{m-1} u with exponent m > 2.

    The pointwise Lipschitz bound |f(a) - f(b)| <= m (|a|^{m-1} + |b|^{m-1})
    |a - b| is what the contraction argument consumes; lipschitz_constant
    records the factor m.
    """

    m: float

    def __post_init__(self):
        if self.m <= 2:
            raise ConfigError("nonlinearity exponent must satisfy m > 2")

    @property
    def lipschitz_constant(self):
        return self.m

    def apply(self, field):
        v = field.values
        # inf * 0j inside the product is caught by the finiteness check
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.abs(v) ** (self.m - 1.0) * v
        if not np.all(np.isfinite(out)):
            raise NumericalError("nonlinear forcing overflowed")
        return ComplexField(field.spec, out)


def f_apply(nl, field):
    """Functional form of Nonlinearity.apply."""
    return nl.apply(field)


def y_norm(traj, m, q):
    """Contraction-space norm of a trajectory.

    sup_t ||u(t)||_{m-1} + sup_{t>0} t^{1/(m-1)-1/q} ||u(t)||_q; the t = 0
    snapshot is excluded from the weighted term.  Warns when (m, q) leaves
    the window 1 < m-1 < q < m(m-1) in which the norm controls the
    fixed-point argument.
    """
    if not (1.0 < m - 1.0 < q < m * (m - 1.0)):
        warnings.warn(
            "(m=%g, q=%g) outside the contraction window 1 < m-1 < q < m(m-1)"
            % (m, q),
            stacklevel=2,
        )
    alpha = 1.0 / (m - 1.0) - 1.0 / q
    sup_base = 0.0
    sup_weighted = 0.0
    for t, f in zip(traj.times, traj.fields):
        sup_base = max(sup_base, lp_norm(f, m - 1.0))
        if t > 0:
            sup_weighted = max(sup_weighted, t ** alpha * lp_norm(f, q))
    return sup_base + sup_weighted


def y_distance(a, b, m, q):
    """Y-norm of the difference of two trajectories on a common schedule."""
    if len(a.fields) != len(b.fields) or not np.allclose(a.times, b.times):
        raise ConfigError("trajectories live on different schedules")
    diff = Trajectory(
        spec=a.spec,
        times=a.times,
        fields=[fa - fb for fa, fb in zip(a.fields, b.fields)],
    )
    return y_norm(diff, m, q)


def _check_uniform(times):
    times = np.asarray(times, dtype=float)
    if times.size < 2 or times[0] != 0.0:
        raise ConfigError("schedule must start at 0 and contain >= 2 times")
    steps = np.diff(times)
    if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
        raise ConfigError("Duhamel sweep needs a uniform snapshot schedule")
    return float(steps[0])


def duhamel_apply(op, nl, u0, v, cfg):
    """One Picard map application Phi(v) over v's own snapshot schedule.

    The schedule step must be a multiple of cfg.dt; each interval is
    propagated with cfg.dt substeps while the trapezoid rule accumulates
    the forcing, so the returned trajectory is the mild-solution map of v
    up to O(ds^2) quadrature and O(dt^2) stepping error.
    """
    ds = _check_uniform(v.times)
    sub = _steps_for(ds, cfg.dt)
    prop = Propagator(op, cfg)
    f_prev = nl.apply(v.fields[0]).ravel()
    u = u0.ravel().astype(complex)
    fields = [ComplexField(op.spec, u.reshape(op.spec.points, -1).copy())]
    for j in range(1, len(v.times)):
        f_next = nl.apply(v.fields[j]).ravel()
        u = prop.advance(u + (0.5 * ds) * f_prev, sub) + (0.5 * ds) * f_next
        if not np.all(np.isfinite(u)):
            raise NumericalError("Duhamel sweep overflowed at t=%g" % v.times[j])
        fields.append(ComplexField(op.spec, u.reshape(op.spec.points, -1).copy()))
        f_prev = f_next
    return Trajectory(spec=op.spec, times=v.times.copy(), fields=fields)


@dataclass
class PicardReport:
    """Convergence record of the fixed-point iteration."""

    converged: bool
    diverged: bool
    iterations: int
    distances: List[float]
    ratios: List[float]
    y_norm_final: float
    tol: float
    m: float
    q: float


def picard_solve(op, nl, u0, schedule, cfg, q=3.0, tol=1e-9, max_iter=25):
    """Iterate u <- Phi(u) from the linear trajectory until the Y-distance
    of successive iterates drops below tol * (1 + Y(linear)).

    Divergence is declared on three consecutive growing distances or on a
    non-finite iterate (large data genuinely blow up; the detector keeps
    that informative instead of raising from deep inside a solver).
    Returns (trajectory, report).
    """
    times = np.asarray(schedule, dtype=float)
    _check_uniform(times)
    current = evolve_linear(op, u0, float(times[-1]), cfg,
                            snapshot_times=list(times))
    scale = 1.0 + y_norm(current, nl.m, q)
    distances: List[float] = []
    ratios: List[float] = []
    converged = diverged = False
    grow = 0
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        try:
            nxt = duhamel_apply(op, nl, u0, current, cfg)
            d = y_distance(nxt, current, nl.m, q)
        except NumericalError:
            diverged = True
            distances.append(math.inf)
            if distances and len(distances) > 1:
                ratios.append(math.inf)
            break
        if distances:
            ratios.append(d / distances[-1] if distances[-1] > 0 else 0.0)
        distances.append(d)
        current = nxt
        if not math.isfinite(d):
            diverged = True
            break
        if d <= tol * scale:
            converged = True
            break
        if len(distances) >= 2 and distances[-1] > distances[-2]:
            grow += 1
            if grow >= 3:
                diverged = True
                break
        else:
            grow = 0
    report = PicardReport(
        converged=converged,
        diverged=diverged,
        iterations=iterations,
        distances=distances,
        ratios=ratios,
        y_norm_final=y_norm(current, nl.m, q),
        tol=tol,
        m=nl.m,
        q=q,
    )
    return current, report


def solve_imex(op, nl, u0, t_final, cfg, snapshot_times=None, norm_cap=100.0):
    """First-order IMEX scheme: (I + dt Box) u^{k+1} = u^k + dt f(u^k).

    Backward Euler on the stiff linear part regardless of cfg.scheme, the
    forcing explicit.  Aborts once the L^2 norm exceeds norm_cap times its
    initial value (blow-up detector for super-threshold data).
    """
    from .semigroup import _snapshot_steps  # shared schedule validation

    times, steps = _snapshot_steps(snapshot_times, t_final, cfg.dt)
    be_cfg = StepperConfig(dt=cfg.dt, scheme="backward_euler",
                           tol=cfg.tol, max_iterations=cfg.max_iterations)
    prop = Propagator(op, be_cfg)
    spec = op.spec
    u = u0.ravel().astype(complex)
    norm0 = max(np.linalg.norm(u), 1e-300)
    fields = []
    done = 0
    for t, k in zip(times, steps):
        for _ in range(k - done):
            fu = nl.apply(ComplexField(spec, u.reshape(spec.points, -1))).ravel()
            u = prop.solve(u + cfg.dt * fu, x0=u)
            if not np.all(np.isfinite(u)) or np.linalg.norm(u) > norm_cap * norm0:
                raise NumericalError("IMEX evolution blew up near t=%g" % t)
        done = k
        fields.append(ComplexField(spec, u.reshape(spec.points, -1).copy()))
    return Trajectory(spec=spec, times=np.array(times), fields=fields)
