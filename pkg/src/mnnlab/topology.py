"""Interconnection structure of a memristor network.

``T[i, j] = 1`` (``i != j``) means neuron ``j`` drives neuron ``i`` through an
interconnection memristor; the diagonal is always one (self-connections).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTopologyError

__all__ = [
    "Topology",
    "connection_sets",
    "grid_topology",
    "is_irreducible",
    "is_irreducible_by_power",
    "topology_from_config",
]


@dataclass(frozen=True, eq=False)
class Topology:
    indicator: np.ndarray

    def __post_init__(self):
        t = np.array(self.indicator, dtype=np.int8)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
            raise InvalidTopologyError(f"indicator must be a nonempty square matrix, got shape {t.shape}")
        if not np.isin(t, (0, 1)).all():
            raise InvalidTopologyError("indicator entries must be 0 or 1")
        if not (np.diag(t) == 1).all():
            raise InvalidTopologyError("indicator must have a unit diagonal")
        t.setflags(write=False)
        object.__setattr__(self, "indicator", t)
        sets = tuple(tuple(int(j) for j in np.flatnonzero(t[i]) if j != i) for i in range(t.shape[0]))
        object.__setattr__(self, "_sets", sets)
        pairs = [(i, j) for i, c in enumerate(sets) for j in c]
        object.__setattr__(self, "_pairs", pairs)

    @property
    def n(self):
        return self.indicator.shape[0]

    @property
    def connection_sets(self):
        """``C_i`` for each neuron, ascending."""
        return self._sets

    @property
    def n_c(self):
        return len(self._pairs)

    @property
    def pairs(self):
        """Interconnection pairs ``(i, j)`` in row-major order (i, then ascending j)."""
        return list(self._pairs)

    def pair_arrays(self):
        if not self._pairs:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        rows, cols = zip(*self._pairs)
        return np.array(rows, dtype=int), np.array(cols, dtype=int)

    def __eq__(self, other):
        return isinstance(other, Topology) and np.array_equal(self.indicator, other.indicator)

    def __hash__(self):
        return hash(self.indicator.tobytes())


def connection_sets(top):
    """Return ``(C, n_c)`` with ``C[i]`` the sorted neighbours of neuron ``i``."""
    return [list(c) for c in top.connection_sets], top.n_c


def _reaches_all(adj, start):
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def is_irreducible(top):
    """True iff the interconnection digraph is strongly connected.

    Two depth-first passes from neuron 0: one on the edges ``j -> i``
    (``T[i, j] = 1``) and one on the reversed edges.
    """
    n = top.n
    if n == 1:
        return True
    fwd = [[] for _ in range(n)]
    rev = [[] for _ in range(n)]
    for i, j in top.pairs:
        fwd[j].append(i)
        rev[i].append(j)
    return _reaches_all(fwd, 0) and _reaches_all(rev, 0)


def is_irreducible_by_power(top):
    """Boolean test ``T**(n-1) > 0`` (saturating arithmetic); for cross-checks."""
    t = top.indicator.astype(bool)
    p = t.copy()
    for _ in range(top.n - 2):
        p = (p.astype(np.int64) @ t.astype(np.int64)) > 0
    return bool(p.all())


def grid_topology(rows, cols):
    """Four-neighbour grid coupling without wraparound; neuron ``r*cols + c``."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidTopologyError(f"grid must have at least 2 cells, got {rows}x{cols}")
    n = rows * cols
    t = np.eye(n, dtype=np.int8)
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if r > 0:
                t[k, k - cols] = 1
            if r < rows - 1:
                t[k, k + cols] = 1
            if c > 0:
                t[k, k - 1] = 1
            if c < cols - 1:
                t[k, k + 1] = 1
    return Topology(t)


def topology_from_config(rec, path="topology"):
    from .errors import ValidationError

    try:
        if isinstance(rec, dict):
            if rec.get("kind") != "grid":
                raise ValidationError(f"unknown topology kind {rec.get('kind')!r}", path)
            return grid_topology(int(rec["rows"]), int(rec["cols"]))
        return Topology(np.asarray(rec))
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}", path) from None
    except InvalidTopologyError as exc:
        raise ValidationError(str(exc), path) from None
