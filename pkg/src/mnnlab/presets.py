"""Reference networks and manifold recipes used by the experiments."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .memristor import DEFAULT_SMOOTHING, HpCharacteristic, pwl_from_slopes
from .topology import Topology, grid_topology
from .vcd import ManifoldIndex, NetworkSpec

__all__ = [
    "CASE2_BASE",
    "CASE3_BASE",
    "FOUR_NEURON_T",
    "TABLE_SWEEPS",
    "case_manifold",
    "case_network",
    "four_neuron_hp_network",
    "four_neuron_network",
    "holefill_network",
]

FOUR_NEURON_T = np.array([
    [1, 1, 0, 1],
    [1, 1, 1, 0],
    [0, 1, 1, 0],
    [0, 1, 0, 1],
])

CASE2_BASE = np.array([1.0, -1.0, 1.0, -1.0])
# ordering (Q_12, Q_14, Q_21, Q_23, Q_32, Q_42)
CASE3_BASE = np.array([1.0, -0.5, 0.6, -0.3, 0.7, -0.4])

TABLE_SWEEPS = {
    1: [-0.21, -0.22, -0.24, -0.25, -0.35, -0.4, -0.6],
    2: [0.0, 0.3, 0.6, 0.7, 1.2, 1.4, 3.0],
    3: [0.0, 2.0, 3.0, 4.0, 5.0, 8.0, 10.0],
}


def four_neuron_network(g=-1.0, smoothing=DEFAULT_SMOOTHING, self_slopes=(3.0, 0.1, 2.6),
                        inter_slopes=(0.3, 0.1, 0.4), check=True):
    """The four-neuron pwl network with the fixed irreducible indicator matrix."""
    top = Topology(FOUR_NEURON_T)
    s = pwl_from_slopes(*self_slopes, -1.0, 1.0, smoothing)
    w = pwl_from_slopes(*inter_slopes, -1.0, 1.0, smoothing)
    return NetworkSpec(top, 1.0, g, [s] * top.n, [w] * top.n_c, check=check)


def four_neuron_hp_network(g=-1.0, smoothing=DEFAULT_SMOOTHING, self_slopes=(8.0, 0.1, 8.0),
                           r_on=0.2, r_off=1.0, beta=0.1, x0=0.5):
    """Same topology with HP interconnections and steeper pwl self-connections."""
    top = Topology(FOUR_NEURON_T)
    s = pwl_from_slopes(*self_slopes, -1.0, 1.0, smoothing)
    w = HpCharacteristic(r_on, r_off, beta, x0)
    return NetworkSpec(top, 1.0, g, [s] * top.n, [w] * top.n_c)


def holefill_network(rows=20, cols=20, g=-3.0, smoothing=DEFAULT_SMOOTHING,
                     self_slopes=(10.0, 0.1, 10.0), inter_slopes=(0.69, 0.345, 0.69)):
    top = grid_topology(rows, cols)
    s = pwl_from_slopes(*self_slopes, -1.0, 1.0, smoothing)
    w = pwl_from_slopes(*inter_slopes, -1.0, 1.0, smoothing)
    return NetworkSpec(top, 1.0, g, [s] * top.n, [w] * top.n_c)


def case_manifold(case, param, n=4, n_c=6, base=None):
    """Manifold index for one table row.

    Case 1 uses ``Q_0 = 0`` (``param`` is the conductance); case 2 scales
    ``base`` (default ``(1, -1, 1, -1)``) into ``Q_0^s``; case 3 scales
    ``base`` (default ``(1, -0.5, 0.6, -0.3, 0.7, -0.4)``) into ``Q_0^i``.
    """
    if case == 1:
        return ManifoldIndex(np.zeros(n), np.zeros(n_c))
    if case == 2:
        b = CASE2_BASE if base is None else np.asarray(base, dtype=float)
        return ManifoldIndex(param * b, np.zeros(n_c))
    if case == 3:
        b = CASE3_BASE if base is None else np.asarray(base, dtype=float)
        return ManifoldIndex(np.zeros(n), param * b)
    raise ValidationError(f"unknown case {case!r}")


def case_network(case, param, smoothing=DEFAULT_SMOOTHING):
    """Network for one table row: case 1 varies ``g``; cases 2 and 3 fix ``g = -1``."""
    g = param if case == 1 else -1.0
    return four_neuron_network(g=g, smoothing=smoothing)
