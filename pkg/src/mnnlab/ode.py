"""Explicit adaptive Runge-Kutta integration and convergence detection.

The integrator is the Dormand-Prince 5(4) pair (7 stages, FSAL) with a
proportional-integral step-size controller.  Errors are measured in the
max norm, scaled by ``atol + rtol*max(|y_old|, |y_new|)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (NumericalBlowupError, NumericalError, TruncatedTrajectoryError,
                     ValidationError, MnnLabError)

__all__ = [
    "ConvergenceCriterion",
    "ConvergenceStats",
    "IntegratorOptions",
    "Trajectory",
    "cluster_points",
    "convergence_stop",
    "detect_convergence",
    "integrate",
    "run_ensemble",
]

# Dormand & Prince (1980) coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_E = _B - _B_LOW

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA = 0.04                 # integral gain of the PI controller
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass
class IntegratorOptions:
    t_end: float
    rtol: float = 1e-9
    atol: float = 1e-11
    h_init: float | None = None
    h_max: float | None = None
    max_steps: int = 1_000_000
    tstops: tuple = ()
    t0: float = 0.0

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValidationError("rtol and atol must be positive")
        if not self.t_end > self.t0:
            raise ValidationError("t_end must exceed t0")
        if self.h_max is None:
            self.h_max = self.t_end - self.t0
        if not self.h_max > 0:
            raise ValidationError("h_max must be positive")
        if self.h_init is not None and not 0 < self.h_init <= self.h_max:
            raise ValidationError("need 0 < h_init <= h_max")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be positive")


@dataclass
class ConvergenceCriterion:
    derivative_tol: float = 1e-8
    window: float = 1.0
    state_tol: float = 1e-7

    def __post_init__(self):
        if not (self.derivative_tol > 0 and self.window > 0 and self.state_tol > 0):
            raise ValidationError("convergence thresholds must be positive")


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    nfev: int = 0
    rejected: int = 0
    stopped_early: bool = False

    @property
    def final(self):
        return self.y[-1]

    def __len__(self):
        return len(self.t)

    def at(self, time):
        """State at a time that is on the step grid (e.g. one of the tstops)."""
        k = int(np.argmin(np.abs(self.t - time)))
        if abs(self.t[k] - time) > 1e-12 * max(1.0, abs(time)):
            raise KeyError(f"t={time} is not a recorded time")
        return self.y[k]


def _initial_step(rhs, t0, y0, f0, rtol, atol, h_max):
    # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, h_max)


def integrate(rhs, y0, opts, stop=None, record=True):
    """Integrate ``dy/dt = rhs(t, y)`` from ``opts.t0`` to ``opts.t_end``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> ndarray``.
    y0 : array_like
        Initial state.
    opts : IntegratorOptions
    stop : callable, optional
        ``stop(t, y, f) -> bool`` evaluated after every accepted step;
        returning True ends the integration early.
    record : bool
        Keep every accepted step (default) or only the endpoints and tstops.

    Returns
    -------
    Trajectory

    Raises
    ------
    TruncatedTrajectoryError
        ``max_steps`` exhausted; the exception carries the partial trajectory.
    NumericalBlowupError
        The vector field returned a non-finite value.
    """
    y = np.array(y0, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValidationError("initial state must be a nonempty vector")
    if not np.all(np.isfinite(y)):
        raise ValidationError("initial state must be finite")
    t, t_end = float(opts.t0), float(opts.t_end)
    rtol, atol, h_max = opts.rtol, opts.atol, opts.h_max
    stops = sorted(s for s in opts.tstops if t < s < t_end) + [t_end]
    stop_k = 0

    ts, ys = [t], [y.copy()]
    f = np.asarray(rhs(t, y), dtype=float)
    nfev = 1
    if not np.all(np.isfinite(f)):
        raise NumericalBlowupError("non-finite vector field at the initial state",
                                   Trajectory(np.array(ts), np.array(ys), nfev))
    if opts.h_init is None:
        h = _initial_step(rhs, t, y, f, rtol, atol, h_max)
        nfev += 1
    else:
        h = opts.h_init
    err_old = 1e-4
    rejected = 0
    k = np.empty((7, y.size))
    steps = 0

    def partial():
        return Trajectory(np.array(ts), np.array(ys), nfev, rejected)

    while True:
        if steps >= opts.max_steps:
            raise TruncatedTrajectoryError(
                f"max_steps={opts.max_steps} reached at t={t:.6g}", partial())
        target = stops[stop_k]
        h = min(h, h_max)
        landing = t + h >= target - 1e-12 * max(1.0, abs(target))
        if landing:
            h = target - t
        k[0] = f
        # overflow near a blowup is caught by the finiteness test below
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 7):
                ys_ = y + h * (_A[s] @ k[:s])
                k[s] = rhs(t + _C[s] * h, ys_)
        nfev += 6
        y_new = ys_  # last stage evaluates at the 5th order solution (FSAL)
        f_new = k[6].copy()
        if not (np.all(np.isfinite(f_new)) and np.all(np.isfinite(y_new))):
            if h > 1e-14 * max(1.0, abs(t)):
                h *= 0.25
                rejected += 1
                continue
            raise NumericalBlowupError(f"non-finite vector field at t={t:.6g}", partial())
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(h * (_E @ k)) / scale))
        if err <= 1.0:
            steps += 1
            t = target if landing else t + h
            y, f = y_new, f_new
            err = max(err, 1e-10)
            fac = min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err ** -_ALPHA * err_old ** _BETA))
            err_old = err
            at_stop = landing
            if landing:
                stop_k += 1
            if record or at_stop:
                ts.append(t)
                ys.append(y.copy())
            if at_stop and stop_k == len(stops):
                break
            if stop is not None and stop(t, y, f):
                if ts[-1] != t:
                    ts.append(t)
                    ys.append(y.copy())
                return Trajectory(np.array(ts), np.array(ys), nfev, rejected, stopped_early=True)
            h = h * fac
        else:
            rejected += 1
            h = h * max(_FAC_MIN, _SAFETY * err ** -_ALPHA)
            if h < 1e-14 * max(1.0, abs(t)):
                raise NumericalError(f"step size underflow at t={t:.6g}")
    return Trajectory(np.array(ts), np.array(ys), nfev, rejected)


def convergence_stop(crit):
    """Early-stop predicate: ``||f||_inf <= derivative_tol`` held for ``window``.

    Movement over the window is bounded by ``window * derivative_tol`` while
    the derivative test holds, so integration may stop once the window is
    covered; :func:`detect_convergence` re-checks the recorded trajectory.
    """
    since = [None]

    def stop(t, y, f):
        if float(np.max(np.abs(f))) <= crit.derivative_tol:
            if since[0] is None:
                since[0] = t
            return t - since[0] >= crit.window
        since[0] = None
        return False

    return stop


def detect_convergence(trajectory, rhs, crit):
    """Equilibrium estimate if the trailing window shows convergence, else None.

    Every recorded point in ``[t_last - window, t_last]`` must have
    ``||rhs||_inf <= derivative_tol`` and lie within ``state_tol`` (max norm)
    of the terminal state.
    """
    t = np.asarray(trajectory.t)
    y = np.asarray(trajectory.y)
    if t.size == 0:
        raise ValidationError("trajectory is empty")
    t_last = t[-1]
    if t_last - t[0] < crit.window and t.size > 1:
        return None
    sel = np.flatnonzero(t >= t_last - crit.window)
    for idx in sel:
        if float(np.max(np.abs(rhs(t[idx], y[idx])))) > crit.derivative_tol:
            return None
        if float(np.max(np.abs(y[idx] - y[-1]))) > crit.state_tol:
            return None
    return y[-1].copy()


def cluster_points(points, tol=1e-4):
    """Greedy clustering in the max norm; returns representatives and labels."""
    reps, labels = [], []
    for p in points:
        for k, r in enumerate(reps):
            if np.max(np.abs(p - r)) <= tol:
                labels.append(k)
                break
        else:
            reps.append(np.asarray(p, dtype=float))
            labels.append(len(reps) - 1)
    return reps, labels


@dataclass
class RunResult:
    index: int
    initial: np.ndarray
    converged: bool
    terminal: np.ndarray | None = None
    terminal_v_norm: float | None = None
    t_final: float | None = None
    error: str | None = None


@dataclass
class ConvergenceStats:
    runs: list
    equilibria: list
    labels: list
    seed: int | None = None

    @property
    def n_runs(self):
        return len(self.runs)

    @property
    def converged_fraction(self):
        return sum(r.converged for r in self.runs) / len(self.runs)

    @property
    def max_terminal_v(self):
        vals = [r.terminal_v_norm for r in self.runs if r.terminal_v_norm is not None]
        return max(vals) if vals else float("nan")

    def to_dict(self):
        return {
            "seed": self.seed,
            "runs": self.n_runs,
            "converged_fraction": self.converged_fraction,
            "distinct_equilibria": len(self.equilibria),
            "equilibria": [e.tolist() for e in self.equilibria],
            "max_terminal_v": self.max_terminal_v,
            "per_run": [
                {"index": r.index, "converged": r.converged,
                 "terminal": None if r.terminal is None else r.terminal.tolist(),
                 "terminal_v_norm": r.terminal_v_norm, "t_final": r.t_final,
                 "error": r.error}
                for r in self.runs
            ],
        }


def run_ensemble(net, q0, initial_conditions, opts, crit, seed=None, cluster_tol=1e-4):
    """Integrate the reduced system from each initial flux vector.

    Per-run failures are recorded in the result rather than raised.  The
    terminal voltage norm comes from lifting the terminal fluxes back to the
    full state.
    """
    from .fcd import fcd_vector_field
    from .vcd import gamma_lift

    ics = [np.asarray(x, dtype=float) for x in initial_conditions]
    if not ics:
        raise ValidationError("initial_conditions must be nonempty")
    if net.n == 0:
        raise ValidationError("empty vector field")
    rhs = fcd_vector_field(net, q0)
    runs = []
    for idx, x0 in enumerate(ics):
        try:
            traj = integrate(rhs, x0, opts, stop=convergence_stop(crit))
            eq = detect_convergence(traj, rhs, crit)
            lifted = gamma_lift(net, traj.final, q0)
            runs.append(RunResult(idx, x0, eq is not None, traj.final.copy(),
                                  float(np.max(np.abs(lifted.v))), float(traj.t[-1])))
        except MnnLabError as exc:
            runs.append(RunResult(idx, x0, False, error=f"{type(exc).__name__}: {exc}"))
    conv = [r.terminal for r in runs if r.converged]
    reps, labels = cluster_points(conv, cluster_tol)
    return ConvergenceStats(runs, reps, labels, seed)
