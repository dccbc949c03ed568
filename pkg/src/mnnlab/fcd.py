"""Reduced flux-charge-domain dynamics on an invariant manifold.

On ``M(Q_0)`` the network reduces to ``n`` equations in the self fluxes::

    C_i dphis_i/dt = -g_i phis_i - q_i(phis_i)
                     + sum_{j in C_i} q_ij(phis_j - Q_ij0) + Q_i0

(``phis_j - Q_ij0`` equals ``phis_j + phi_ij0 - phis_j0`` for the reference
fluxes that define ``Q_0``.)  This module also hosts the checks of the
convergence hypotheses: cooperativity, the boundedness margin, and the
max-norm Lyapunov bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, ValidationError
from .memristor import charge
from .topology import is_irreducible

__all__ = [
    "BoundednessReport",
    "CooperativityReport",
    "MonitorReport",
    "attracting_radius",
    "check_boundedness",
    "check_cooperative",
    "fcd_jacobian",
    "fcd_rhs",
    "fcd_vector_field",
    "lyapunov_monitor",
    "lyapunov_v",
]


def _state(net, phi_s):
    x = np.asarray(phi_s, dtype=float)
    if x.shape != (net.n,):
        raise ValidationError(f"FCD state must have length {net.n}, got shape {x.shape}")
    return x


def fcd_vector_field(net, q0):
    """Return ``f(t, phis)`` of the reduced system for the integrator."""
    q0.check(net)
    cap, g = net.capacitance, net.conductance
    cols, shift, q_s = net.cols, q0.q_i, q0.q_s
    has_pairs = cols.size > 0

    def rhs(t, x):
        out = q_s - g * x - net.self_bank.charge(x)
        if has_pairs:
            out = out + net.coupling_sum(net.inter_bank.charge(x[cols] - shift))
        return out / cap

    return rhs


def fcd_rhs(net, q0, phi_s):
    return fcd_vector_field(net, q0)(0.0, _state(net, phi_s))


def fcd_jacobian(net, q0, phi_s):
    """Jacobian of :func:`fcd_rhs` with respect to the self fluxes."""
    x = _state(net, phi_s)
    q0.check(net)
    jac = np.diag(-net.conductance - net.self_bank.memductance(x))
    if net.n_c:
        w = net.inter_bank.memductance(x[net.cols] - q0.q_i)
        np.add.at(jac, (net.rows, net.cols), w)
    return jac / net.capacitance[:, None]


@dataclass
class CooperativityReport:
    passed: bool
    samples: int
    min_offdiag: float
    min_connected: float
    irreducible: bool
    violations: list = field(default_factory=list)

    @property
    def hypotheses_hold(self):
        """Cooperative and irreducible: the premises of generic convergence."""
        return self.passed and self.irreducible


def check_cooperative(net, q0, samples=1000, box=(-20.0, 20.0), seed=0):
    """Sample the Jacobian at uniform random states and check its sign pattern."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = box
    mask = ~np.eye(net.n, dtype=bool)
    connected = np.zeros((net.n, net.n), dtype=bool)
    connected[net.rows, net.cols] = True
    min_off, min_conn = np.inf, np.inf
    violations = []
    for k in range(samples):
        x = rng.uniform(lo, hi, size=net.n)
        jac = fcd_jacobian(net, q0, x)
        if net.n > 1:
            off = jac[mask]
            m = float(off.min())
            min_off = min(min_off, m)
            if m < 0 and len(violations) < 20:
                violations.append({"sample": k, "state": x.tolist(), "min_offdiag": m})
        if connected.any():
            min_conn = min(min_conn, float(jac[connected].min()))
    return CooperativityReport(
        passed=not violations and (min_off >= 0 if np.isfinite(min_off) else True),
        samples=samples,
        min_offdiag=float(min_off) if np.isfinite(min_off) else 0.0,
        min_connected=float(min_conn) if np.isfinite(min_conn) else float("nan"),
        irreducible=is_irreducible(net.topology),
        violations=violations,
    )


@dataclass
class BoundednessReport:
    margins: np.ndarray
    epsilon: float
    passed: bool

    @property
    def lam(self):
        return self.epsilon / (len(self.margins) + 1)

    def to_dict(self):
        return {"margins": [float(m) for m in self.margins], "epsilon": self.epsilon,
                "passed": self.passed}


def check_boundedness(net):
    """Per-neuron margin of the asymptotic-slope boundedness condition.

    ``margin_i = min(G_i+, G_i-) + g_i - sum_{j in C_i} max(G_ij+, G_ij-)``;
    all margins must be strictly positive.
    """
    self_min = np.array([min(c.asymptotic.g_minus_inf, c.asymptotic.g_plus_inf)
                         for c in net.self_chars])
    inter_max = np.array([max(c.asymptotic.g_minus_inf, c.asymptotic.g_plus_inf)
                          for c in net.inter_chars])
    margins = self_min + net.conductance
    if net.n_c:
        margins = margins - net.coupling_sum(inter_max)
    eps = float(margins.min())
    return BoundednessReport(margins, eps, bool((margins > 0).all()))


def lyapunov_v(phi_s):
    """Max-norm of the fluxes and the lowest index attaining it."""
    x = np.abs(np.asarray(phi_s, dtype=float))
    k = int(np.argmax(x))
    return float(x[k]), k


def _tail_radius(resid, lam, start, top=2.0 ** 40, rel=1e-9):
    """Smallest sampled ``R`` with ``resid(phi) < lam*|phi|`` for ``|phi| > R``.

    ``resid`` maps an array of fluxes to ``|q(phi) - G_sign(phi)*phi|``.
    """
    octaves = 80

    def holds(r):
        grid = r * np.geomspace(1.0, top / r, octaves * 8) if r < top else np.array([r])
        for s in (1.0, -1.0):
            x = s * grid
            if not np.all(resid(x) < lam * np.abs(x)):
                return False
        return True

    r = max(start, 1e-6)
    while not holds(r):
        r *= 2
        if r > top:
            raise HypothesisError("no attracting radius below 2**40")
    lo, hi = r / 2, r
    if not holds(lo):
        while hi - lo > rel * hi:
            mid = 0.5 * (lo + hi)
            if holds(mid):
                hi = mid
            else:
                lo = mid
    else:
        hi = lo
    return hi


def attracting_radius(net, q0, epsilon):
    """Radius of a max-norm ball that is positively invariant and attracting.

    For each neuron the asymptotic-slope estimates with tolerance
    ``lam = epsilon/(n+1)`` are located by doubling then bisection; the
    result is the largest of those radii and ``(n+1) * max|Q_k0| / epsilon``.
    Conservative: the returned radius may exceed the tightest admissible one.
    """
    rep = check_boundedness(net)
    # a relative slack absorbs rounding in the margin sum (0.8 comes out as 0.7999...)
    if not rep.passed or rep.epsilon < epsilon * (1 - 1e-12):
        raise HypothesisError(
            f"boundedness margin {rep.epsilon:.6g} is below epsilon={epsilon}")
    q0.check(net)
    n = net.n
    lam = epsilon / (n + 1)
    radius = 0.0
    shifts = q0.q_i

    def make(ch, shift):
        gm, gp = ch.asymptotic.g_minus_inf, ch.asymptotic.g_plus_inf

        def resid(x):
            q = np.asarray(charge(ch, x - shift))
            return np.abs(q - np.where(x > 0, gp, gm) * x)
        return resid

    for i, ch in enumerate(net.self_chars):
        radius = max(radius, _tail_radius(make(ch, 0.0), lam, 1.0))
    for k, ch in enumerate(net.inter_chars):
        radius = max(radius, _tail_radius(make(ch, shifts[k]), lam, 1.0))
    q_term = (n + 1) * float(np.abs(q0.q_s).max()) / epsilon if n else 0.0
    return max(radius, q_term)


@dataclass
class MonitorReport:
    radius: float
    monitored_steps: int
    violations: list
    entry_time: float | None

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return {"radius": self.radius, "monitored_steps": self.monitored_steps,
                "violations": self.violations, "entry_time": self.entry_time,
                "passed": self.passed}


def lyapunov_monitor(net, q0, trajectory, radius):
    """Check that ``V = ||phis||_inf`` strictly decreases while ``V > radius``.

    ``trajectory`` is an FCD trajectory (``t``, ``y`` arrays).  A step
    ``k -> k+1`` is monitored when ``V(t_k) > radius``.
    """
    t = np.asarray(trajectory.t)
    vals = np.abs(np.asarray(trajectory.y)).max(axis=1)
    monitored = 0
    violations = []
    entry = None
    for k in range(len(t) - 1):
        if vals[k] > radius:
            monitored += 1
            if not vals[k + 1] < vals[k]:
                violations.append({"step": k, "t": float(t[k]), "V": float(vals[k]),
                                   "V_next": float(vals[k + 1])})
        elif entry is None:
            entry = float(t[k])
    if entry is None and len(t) and vals[-1] <= radius:
        entry = float(t[-1])
    return MonitorReport(float(radius), monitored, violations, entry)
