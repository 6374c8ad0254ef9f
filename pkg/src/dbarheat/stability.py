"""Decay-rate fits, L^p-L^q probes, perturbation stability, Beta identity.

The linear semigroup is expected to obey

    ||e^{-t Box} u0||_q <= C t^{-(1/p - 1/q)} ||u0||_p          (delta = 0)
    ||e^{-t Box} u0||_q <= C t^{-(1/p - 1/q)} e^{-c delta t} ||u0||_p  (delta > 0)

and two mild solutions with close data to separate no faster than a
power law t^{-(1/(m-1) - 1/q)} (flat weight) or an exponential (positive
delta).  Everything here measures those rates empirically: evolve, take
norm ratios, fit log-log or log-linear, compare the fitted exponent or
rate against its target.  Boundary contamination is screened out by the
outer-ring mass indicator before any point enters a fit.

beta_identity_check verifies the time-singular convolution identity

    t^{k+l-1} int_0^t (t-s)^{-k} s^{-l} ds = B(1-k, 1-l),  0 < k, l < 1,

by adaptive quadrature in the substitution s = t sin^2(theta) against a
log-Gamma evaluation of the Beta function.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import ConfigError, NumericalError
from .grid import ComplexField, boundary_mass, lp_norm
from .mild import Nonlinearity, picard_solve, solve_imex, y_norm
from .semigroup import StepperConfig, Trajectory, evolve_linear

__all__ = [
    "BOUNDARY_MASS_TOL",
    "DecayFit",
    "fit_decay",
    "model_for_classification",
    "LpLqProbe",
    "lp_lq_probe",
    "PerturbReport",
    "stability_experiment",
    "BetaCheckReport",
    "beta_identity_check",
    "y_norm",
]

# Snapshots whose outer-ring amplitude exceeds this absolute level never
# enter a fit: past it the Dirichlet wall, not the weight, sets the rate.
BOUNDARY_MASS_TOL = 1e-4


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of a decay law on a time window.

    model "power_law":    v ~ coefficient * t^exponent
    model "exponential":  v ~ coefficient * exp(-rate * t)
    model "exp_power":    v ~ coefficient * t^exponent * exp(-rate * t)
    """

    model: str
    coefficient: float
    exponent: float
    rate: float
    r_squared: float
    window: tuple
    n_points: int
    target: Optional[float] = None

    @property
    def rel_deviation(self):
        """|fitted - target| / |target| for the model's lead parameter."""
        if self.target is None:
            return None
        fitted = self.rate if self.model == "exponential" else self.exponent
        denom = abs(self.target)
        if denom == 0.0:
            return abs(fitted)
        return abs(fitted - self.target) / denom


def _fit_points(times, values, window):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (
        (times >= window[0])
        & (times <= window[1])
        & (times > 0)
        & (values > 0)
        & np.isfinite(values)
    )
    if np.count_nonzero(keep) < 5:
        raise ConfigError(
            "decay fit needs >= 5 positive samples in the window, got %d"
            % np.count_nonzero(keep)
        )
    return times[keep], values[keep]


def _lsq_line(x, y):
    a = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ sol
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return sol[0], sol[1], r2


def fit_decay(times, values, model, window, target=None):
    """Fit v(t) on the window by the named decay model.

    power_law regresses log v on log t, exponential regresses log v on t,
    exp_power regresses log v on both.  Needs at least five positive
    samples inside the window.
    """
    t, v = _fit_points(times, values, window)
    logv = np.log(v)
    if model == "power_law":
        slope, intercept, r2 = _lsq_line(np.log(t), logv)
        return DecayFit(model, math.exp(intercept), float(slope), 0.0,
                        r2, tuple(window), t.size, target)
    if model == "exponential":
        slope, intercept, r2 = _lsq_line(t, logv)
        return DecayFit(model, math.exp(intercept), 0.0, float(-slope),
                        r2, tuple(window), t.size, target)
    if model == "exp_power":
        a = np.vstack([np.log(t), t, np.ones_like(t)]).T
        sol, *_ = np.linalg.lstsq(a, logv, rcond=None)
        resid = logv - a @ sol
        ss_tot = float(np.sum((logv - logv.mean()) ** 2))
        r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
        return DecayFit(model, math.exp(sol[2]), float(sol[0]),
                        float(-sol[1]), r2, tuple(window), t.size, target)
    raise ConfigError("unknown decay model %r" % model)


def model_for_classification(classification):
    """Decay-model choice is a pure function of the delta classification."""
    if classification == "delta_positive":
        return "exponential"
    if classification == "delta_zero":
        return "power_law"
    raise ConfigError("unknown delta classification %r" % classification)


@dataclass
class LpLqProbe:
    """Norm-ratio decay ||u(t)||_p / ||u0||_q over a family of probes.

    Convention: q is the norm the datum is measured in, p the norm the
    evolved field is measured in, q <= p; the predicted prefactor decays
    like t^{-(1/q - 1/p)}.
    """

    p: float
    q: float
    model: str
    times: np.ndarray
    ratios: np.ndarray          # (n_probes, n_times)
    boundary_excluded: np.ndarray  # bool, per (probe, time)
    fits: List[DecayFit]
    target_exponent: float
    target_rate: Optional[float] = None

    @property
    def mean_exponent(self):
        return float(np.mean([f.exponent for f in self.fits]))

    @property
    def mean_rate(self):
        return float(np.mean([f.rate for f in self.fits]))

    @property
    def worst_rel_deviation(self):
        devs = [f.rel_deviation for f in self.fits if f.rel_deviation is not None]
        return max(devs) if devs else None


def lp_lq_probe(op, p, q, probes, schedule, cfg, window=None, model=None,
                delta_positive=False, target_rate=None):
    """Evolve each probe linearly and fit the ||u(t)||_p / ||u0||_q decay.

    Model selection when model is None: power_law for a flat weight; for
    delta > 0 the p == q ratio is fitted purely exponentially and q < p
    by the combined exp_power law.  Snapshots whose boundary mass exceeds
    BOUNDARY_MASS_TOL are dropped from the fit, per probe.
    """
    if p < q:
        raise ConfigError("probe requires q <= p (datum norm below flow norm)")
    times = np.asarray(schedule, dtype=float)
    if model is None:
        if not delta_positive:
            model = "power_law"
        else:
            model = "exponential" if p == q else "exp_power"
    target_exp = -(1.0 / q - 1.0 / p)
    if window is None:
        pos = times[times > 0]
        window = (float(pos[0]), float(times[-1]))
    ratios = []
    excluded = []
    fits = []
    for u0 in probes:
        norm0 = lp_norm(u0, q)
        if norm0 == 0:
            raise ConfigError("probe field is identically zero")
        traj = evolve_linear(op, u0, float(times[-1]), cfg,
                             snapshot_times=[t for t in times if t > 0])
        row = np.array([lp_norm(fld, p) / norm0 for fld in traj.fields])
        flags = np.array([boundary_mass(fld) > BOUNDARY_MASS_TOL
                          for fld in traj.fields])
        ok = ~flags
        if model == "power_law":
            target = target_exp
        elif model == "exponential":
            target = target_rate
        else:
            target = None
        fits.append(
            fit_decay(traj.times[ok], row[ok], model, window, target=target)
        )
        ratios.append(row)
        excluded.append(flags)
    return LpLqProbe(
        p=p, q=q, model=model,
        times=traj.times,
        ratios=np.array(ratios),
        boundary_excluded=np.array(excluded),
        fits=fits,
        target_exponent=target_exp,
        target_rate=target_rate,
    )


@dataclass
class PerturbReport:
    """Separation of two mild solutions with nearby data."""

    model: str
    times: np.ndarray
    distances: np.ndarray
    boundary_excluded: np.ndarray
    fit: DecayFit
    constant: float
    initial_gap: float
    q: float
    m: float
    solver: str
    picard_iterations: tuple
    converged: bool


def stability_experiment(op, nl, u0, u0_hat, schedule, cfg, q=3.0,
                         window=None, delta_positive=False,
                         target_rate=None, solver="picard",
                         picard_tol=1e-9, fit_subsample=None):
    """Run two mild solutions and fit the decay of their L^q distance.

    Flat weight: ||u - u_hat||_q should decay like t^{-(1/(m-1) - 1/q)}
    times the initial gap in L^{m-1}; the implied constant reported is
    max_t d(t) t^{nu} / gap.  Positive delta: exponential model, constant
    max_t d(t) e^{rate t} / gap.  fit_subsample, when given, restricts the
    fitted snapshots to those times (geometric subsampling keeps log-log
    fits from over-weighting late times).
    """
    times = np.asarray(schedule, dtype=float)
    if solver == "picard":
        traj_a, rep_a = picard_solve(op, nl, u0, times, cfg, q=q,
                                     tol=picard_tol)
        traj_b, rep_b = picard_solve(op, nl, u0_hat, times, cfg, q=q,
                                     tol=picard_tol)
        iters = (rep_a.iterations, rep_b.iterations)
        converged = rep_a.converged and rep_b.converged
    elif solver == "imex":
        traj_a = solve_imex(op, nl, u0, float(times[-1]), cfg,
                            snapshot_times=[t for t in times if t > 0])
        traj_b = solve_imex(op, nl, u0_hat, float(times[-1]), cfg,
                            snapshot_times=[t for t in times if t > 0])
        iters = (0, 0)
        converged = True
    else:
        raise ConfigError("unknown solver %r" % solver)

    gap = lp_norm(u0 - u0_hat, nl.m - 1.0)
    if gap == 0:
        raise ConfigError("perturbed datum equals the base datum")
    dist = []
    flags = []
    for fa, fb in zip(traj_a.fields, traj_b.fields):
        w = fa - fb
        dist.append(lp_norm(w, q))
        flags.append(boundary_mass(w) > BOUNDARY_MASS_TOL)
    dist = np.array(dist)
    flags = np.array(flags)
    tarr = traj_a.times

    model = "exponential" if delta_positive else "power_law"
    nu = 1.0 / (nl.m - 1.0) - 1.0 / q
    target = target_rate if delta_positive else -nu
    if window is None:
        pos = tarr[tarr > 0]
        window = (float(pos[0]), float(tarr[-1]))
    ok = ~flags & (tarr > 0)
    if fit_subsample is not None:
        sub = np.zeros_like(ok)
        for t in fit_subsample:
            sub[int(np.argmin(np.abs(tarr - t)))] = True
        ok &= sub
    fit = fit_decay(tarr[ok], dist[ok], model, window, target=target)

    in_win = ok & (tarr >= window[0]) & (tarr <= window[1]) & (dist > 0)
    if model == "power_law":
        consts = dist[in_win] * tarr[in_win] ** nu / gap
    else:
        consts = dist[in_win] * np.exp(fit.rate * tarr[in_win]) / gap
    return PerturbReport(
        model=model,
        times=tarr,
        distances=dist,
        boundary_excluded=flags,
        fit=fit,
        constant=float(np.max(consts)),
        initial_gap=gap,
        q=q,
        m=nl.m,
        solver=solver,
        picard_iterations=iters,
        converged=converged,
    )


@dataclass(frozen=True)
class BetaCheckReport:
    k: float
    l: float
    t: float
    quadrature: float
    closed_form: float

    @property
    def abs_error(self):
        return abs(self.quadrature - self.closed_form)


def beta_identity_check(k, l, t=1.0):
    """Verify t^{k+l-1} int_0^t (t-s)^{-k} s^{-l} ds = B(1-k, 1-l).

    The substitution s = t sin^2(theta) turns the integral into
    2 t^{1-k-l} int_0^{pi/2} cos(theta)^{1-2k} sin(theta)^{1-2l} d(theta);
    the prefactor cancels t^{k+l-1} exactly, but both factors are kept
    numerically so the check exercises the scaling too.  The closed form
    is evaluated through log-Gamma for stability near the endpoints.
    """
    if not (0.0 < k < 1.0 and 0.0 < l < 1.0):
        raise ConfigError("Beta identity requires 0 < k < 1 and 0 < l < 1")
    if t <= 0:
        raise ConfigError("Beta identity requires t > 0")

    def integrand(theta):
        # t - s written as t*cos^2 so it cannot round to zero mid-interval
        sn, cs = math.sin(theta), math.cos(theta)
        jac = 2.0 * t * sn * cs
        return (t * cs * cs) ** (-k) * (t * sn * sn) ** (-l) * jac

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0.0, math.pi / 2.0,
                                  epsabs=1e-13, epsrel=1e-13, limit=400)
    lhs = t ** (k + l - 1.0) * val
    rhs = math.exp(gammaln(1.0 - k) + gammaln(1.0 - l) - gammaln(2.0 - k - l))
    if err > 1e-8 * max(1.0, abs(val)):
        raise NumericalError("Beta quadrature error estimate too large")
    return BetaCheckReport(k=k, l=l, t=t, quadrature=lhs, closed_form=rhs)
