"""Voltage-current-domain model of the memristor network.

State layout (flat vector of length ``2n + n_c``)::

    [v_1 .. v_n, phis_1 .. phis_n, phi_(i,j) for (i, j) in topology.pairs]

Dynamics::

    C_i dv_i/dt   = -g_i v_i - q_i'(phis_i) v_i + sum_{j in C_i} q_ij'(phi_ij) v_j
    dphis_i/dt    = v_i
    dphi_ij/dt    = v_j

with ``g_i = G_i + G_ai`` the net linear conductance of neuron ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .memristor import (CharacteristicBank, default_probe_grid, verify_assumption1)
from .topology import Topology

__all__ = [
    "ManifoldIndex",
    "NetworkSpec",
    "VcdState",
    "DriftReport",
    "gamma_lift",
    "invariant_drift",
    "invariants",
    "manifold_index",
    "vcd_rhs",
    "vcd_vector_field",
]


@dataclass(eq=False)
class NetworkSpec:
    """Parameters of a memristor network.

    ``phi_s0`` / ``phi0`` are the reference initial memristor fluxes.  When
    omitted they default to zero.  ``check=False`` skips the passivity-bound
    screening of the characteristics (negative controls only).
    """

    topology: Topology
    capacitance: np.ndarray
    conductance: np.ndarray
    self_chars: list
    inter_chars: list
    phi_s0: np.ndarray = None
    phi0: np.ndarray = None
    check: bool = True

    def __post_init__(self):
        n, n_c = self.topology.n, self.topology.n_c
        self.capacitance = _vector(self.capacitance, n, "capacitance")
        self.conductance = _vector(self.conductance, n, "conductance")
        self.phi_s0 = np.zeros(n) if self.phi_s0 is None else _vector(self.phi_s0, n, "phi_s0")
        self.phi0 = np.zeros(n_c) if self.phi0 is None else _vector(self.phi0, n_c, "phi0")
        self.self_chars = list(self.self_chars)
        self.inter_chars = list(self.inter_chars)
        if len(self.self_chars) != n:
            raise ValidationError(f"expected {n} self characteristics, got {len(self.self_chars)}")
        if len(self.inter_chars) != n_c:
            raise ValidationError(f"expected {n_c} interconnection characteristics, got {len(self.inter_chars)}")
        if not (self.capacitance > 0).all():
            raise ValidationError("capacitances must be positive")
        if self.check:
            seen = set()
            for k, ch in enumerate(self.self_chars + self.inter_chars):
                if id(ch) in seen:
                    continue
                seen.add(id(ch))
                rep = verify_assumption1(ch, default_probe_grid(ch, num=401))
                if not rep.passed:
                    raise ValidationError(f"characteristic {k} violates the passivity bounds: {rep.failures}")
        self.self_bank = CharacteristicBank(self.self_chars)
        self.inter_bank = CharacteristicBank(self.inter_chars)
        self.rows, self.cols = self.topology.pair_arrays()

    @property
    def n(self):
        return self.topology.n

    @property
    def n_c(self):
        return self.topology.n_c

    @property
    def dim(self):
        return 2 * self.n + self.n_c

    def coupling_sum(self, values):
        """``out[i] = sum over pairs (i, j) of values[pair]``."""
        return np.bincount(self.rows, weights=values, minlength=self.n)

    def replace(self, **changes):
        kw = dict(topology=self.topology, capacitance=self.capacitance,
                  conductance=self.conductance, self_chars=self.self_chars,
                  inter_chars=self.inter_chars, phi_s0=self.phi_s0, phi0=self.phi0,
                  check=self.check)
        kw.update(changes)
        return NetworkSpec(**kw)


def _vector(x, n, name):
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = np.full(n, float(a))
    if a.shape != (n,):
        raise ValidationError(f"{name}: expected length {n}, got shape {a.shape}")
    return a.copy()


@dataclass
class VcdState:
    v: np.ndarray
    phi_s: np.ndarray
    phi: np.ndarray

    def to_vector(self):
        return np.concatenate([self.v, self.phi_s, self.phi])

    @classmethod
    def from_vector(cls, y, n):
        y = np.asarray(y, dtype=float)
        return cls(y[:n].copy(), y[n:2 * n].copy(), y[2 * n:].copy())


@dataclass
class ManifoldIndex:
    """Values of the ``n`` charge invariants and ``n_c`` flux invariants."""

    q_s: np.ndarray
    q_i: np.ndarray = field(default=None)

    def __post_init__(self):
        self.q_s = np.asarray(self.q_s, dtype=float)
        self.q_i = np.zeros(0) if self.q_i is None else np.asarray(self.q_i, dtype=float)

    @classmethod
    def zeros(cls, net):
        return cls(np.zeros(net.n), np.zeros(net.n_c))

    def to_vector(self):
        return np.concatenate([self.q_s, self.q_i])

    def check(self, net):
        if self.q_s.shape != (net.n,) or self.q_i.shape != (net.n_c,):
            raise ValidationError(
                f"manifold index has shapes {self.q_s.shape}, {self.q_i.shape}; "
                f"network needs ({net.n},), ({net.n_c},)")
        return self


def _as_vector(net, state):
    y = state.to_vector() if isinstance(state, VcdState) else np.asarray(state, dtype=float)
    if y.shape != (net.dim,):
        raise ValidationError(f"state must have length {net.dim}, got shape {y.shape}")
    return y


def vcd_vector_field(net):
    """Return ``f(t, y)`` for the flat VCD state, suitable for the integrator."""
    n = net.n
    cap = net.capacitance
    g = net.conductance
    rows, cols = net.rows, net.cols

    def rhs(t, y):
        v = y[:n]
        phi_s = y[n:2 * n]
        phi = y[2 * n:]
        w_self = net.self_bank.memductance(phi_s)
        cur = -g * v - w_self * v
        if rows.size:
            cur = cur + net.coupling_sum(net.inter_bank.memductance(phi) * v[cols])
        return np.concatenate([cur / cap, v, v[cols]])

    return rhs


def vcd_rhs(net, state):
    """Time derivative of a VCD state, returned in the same form as given."""
    y = _as_vector(net, state)
    dy = vcd_vector_field(net)(0.0, y)
    return VcdState.from_vector(dy, net.n) if isinstance(state, VcdState) else dy


def invariants(net, state):
    """Evaluate the ``n + n_c`` invariants of motion at a state.

    ``Q_i = C_i v_i + g_i phis_i + q_i(phis_i) - sum_j q_ij(phi_ij)`` and
    ``Q_ij = phis_j - phi_ij``.
    """
    y = _as_vector(net, state)
    n = net.n
    v, phi_s, phi = y[:n], y[n:2 * n], y[2 * n:]
    q_s = net.capacitance * v + net.conductance * phi_s + net.self_bank.charge(phi_s)
    if net.n_c:
        q_s = q_s - net.coupling_sum(net.inter_bank.charge(phi))
    q_i = phi_s[net.cols] - phi
    return ManifoldIndex(q_s, q_i)


def manifold_index(net, initial):
    """Index ``Q_0`` of the invariant manifold through an initial state."""
    return invariants(net, initial)


def gamma_lift(net, phi_s, q0):
    """Lift reduced fluxes to the full state on the manifold ``M(q0)``.

    Interconnection fluxes are ``phi_ij = phis_j - Q_ij0`` and voltages solve
    the charge invariant for ``v``.  Accepts a single flux vector or a 2-D
    array of them (one per row); returns :class:`VcdState` or a 2-D array.
    """
    q0.check(net)
    phi_s = np.asarray(phi_s, dtype=float)
    if phi_s.ndim == 2:
        return np.array([gamma_lift(net, p, q0).to_vector() for p in phi_s])
    phi = phi_s[net.cols] - q0.q_i
    num = q0.q_s - net.conductance * phi_s - net.self_bank.charge(phi_s)
    if net.n_c:
        num = num + net.coupling_sum(net.inter_bank.charge(phi))
    return VcdState(num / net.capacitance, phi_s.copy(), phi)


def initial_state_on_manifold(net, phi_s0, q0):
    """Initial VCD state with given self fluxes lying on ``M(q0)``.

    This is the construction used to place a network on a prescribed
    manifold: ``phi_ij0 = phis_j0 - Q_ij0`` and ``v_i0`` from the charge
    invariant.
    """
    return gamma_lift(net, phi_s0, q0)


@dataclass
class DriftReport:
    absolute: float
    relative: float
    per_component: np.ndarray
    worst_time: float


def invariant_drift(net, trajectory):
    """Maximum deviation of the invariants from their initial values.

    ``trajectory`` is a sequence of ``(t, state)`` pairs or an object with
    ``t`` and ``y`` arrays.  The relative figure divides by
    ``max(1, max|Q(0)|)``.
    """
    if hasattr(trajectory, "t") and hasattr(trajectory, "y"):
        items = list(zip(trajectory.t, trajectory.y))
    else:
        items = list(trajectory)
    if not items:
        raise ValidationError("trajectory is empty")
    q_ref = invariants(net, items[0][1]).to_vector()
    per = np.zeros_like(q_ref)
    worst, worst_t = 0.0, float(items[0][0])
    for t, state in items:
        d = np.abs(invariants(net, state).to_vector() - q_ref)
        per = np.maximum(per, d)
        if d.size and d.max() > worst:
            worst, worst_t = float(d.max()), float(t)
    scale = max(1.0, float(np.abs(q_ref).max()) if q_ref.size else 1.0)
    return DriftReport(worst, worst / scale, per, worst_t)
