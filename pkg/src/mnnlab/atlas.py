"""Exhaustive equilibrium enumeration for networks of ideal pwl memristors.

Each memristor corner induces a breakpoint on one flux axis: the corners of
``q_j`` on axis ``j`` and, for each pair ``(i, j)``, the corners of ``q_ij``
shifted by ``Q_ij0`` (the argument of ``q_ij`` is ``phis_j - Q_ij0``).  The
breakpoints cut the flux space into boxes on which the reduced vector field
is affine, ``f(phi) = A phi + b``.  Every box is solved independently and
the solution is kept when it lies in the (closed) box.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from .errors import AtlasTooLargeError, ClassificationError, UnsupportedCharacteristicError
from .fcd import fcd_rhs
from .memristor import PwlCharacteristic

__all__ = [
    "AxisPartition",
    "Equilibrium",
    "EquilibriumAtlas",
    "Region",
    "axis_breakpoints",
    "build_atlas",
    "classify",
    "enumerate_regions",
    "ideal_network",
    "isolatedness_check",
    "region_affine_system",
    "solve_region",
]

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"

DEFAULT_REGION_CAP = 10 ** 7
MEMBERSHIP_TOL = 1e-9
RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-9
EPS_STAB = 1e-9
SINGULAR_TOL = 1e-12        # absolute floor on singular values (entries are O(1) conductances)


def ideal_network(net):
    """Copy of ``net`` with every pwl characteristic unsmoothed."""
    for ch in net.self_chars + net.inter_chars:
        if not isinstance(ch, PwlCharacteristic):
            raise UnsupportedCharacteristicError(
                f"equilibrium atlas needs pwl characteristics, got {type(ch).__name__}")
    if all(ch.smoothing_radius == 0 for ch in net.self_chars + net.inter_chars):
        return net
    return net.replace(self_chars=[c.ideal() for c in net.self_chars],
                       inter_chars=[c.ideal() for c in net.inter_chars])


@dataclass(frozen=True)
class AxisPartition:
    breakpoints: tuple          # one sorted tuple per axis

    @property
    def counts(self):
        return tuple(len(b) + 1 for b in self.breakpoints)

    @property
    def n_regions(self):
        return math.prod(self.counts)

    def bounds(self, axis, k):
        edges = (-math.inf,) + self.breakpoints[axis] + (math.inf,)
        return edges[k], edges[k + 1]


@dataclass(frozen=True)
class Region:
    index: tuple
    bounds: tuple               # ((lo, hi), ...) per axis

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return all(lo - tol <= xi <= hi + tol for xi, (lo, hi) in zip(x, self.bounds))


def _dedupe(values, tol=1e-12):
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return tuple(out)


def axis_breakpoints(net, q0):
    """Per-axis breakpoints of the reduced field on ``M(q0)``."""
    net = ideal_network(net)
    q0.check(net)
    axes = [list(ch.breakpoints) for ch in net.self_chars]
    for k, (i, j) in enumerate(net.topology.pairs):
        ch = net.inter_chars[k]
        axes[j].extend(s + q0.q_i[k] for s in ch.breakpoints)
    return AxisPartition(tuple(_dedupe(a) for a in axes))


def enumerate_regions(partition, cap=DEFAULT_REGION_CAP):
    """Lazily yield every region in lexicographic index order."""
    if partition.n_regions > cap:
        raise AtlasTooLargeError(f"{partition.n_regions} regions exceed the cap of {cap}")
    ranges = [range(c) for c in partition.counts]
    for idx in itertools.product(*ranges):
        yield Region(idx, tuple(partition.bounds(a, k) for a, k in enumerate(idx)))


def _interior_point(lo, hi):
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - 1.0
    if math.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def _segment_of(ch, x):
    return sum(1 for s in ch.breakpoints if s < x)


def region_affine_system(net, q0, region):
    """Matrix ``A`` and vector ``b`` with ``fcd_rhs(phi) = A phi + b`` on ``region``."""
    net = ideal_network(net)
    n = net.n
    reps = [_interior_point(lo, hi) for lo, hi in region.bounds]
    A = np.zeros((n, n))
    b = np.array(q0.q_s, dtype=float)
    for i, ch in enumerate(net.self_chars):
        slope, offset = ch.segment(_segment_of(ch, reps[i]))
        A[i, i] -= net.conductance[i] + slope
        b[i] -= offset
    for k, (i, j) in enumerate(net.topology.pairs):
        ch = net.inter_chars[k]
        shift = q0.q_i[k]
        slope, offset = ch.segment(_segment_of(ch, reps[j] - shift))
        A[i, j] += slope
        b[i] += offset - slope * shift
    cap = net.capacitance
    return A / cap[:, None], b / cap


@dataclass
class Equilibrium:
    phi: np.ndarray
    region: tuple
    eigenvalues: np.ndarray
    label: str
    matrix: np.ndarray = field(repr=False, default=None)

    @property
    def stable(self):
        return self.label == STABLE

    def to_dict(self):
        return {
            "phi": self.phi.tolist(),
            "region": list(self.region),
            "label": self.label,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
        }


def is_singular(A):
    """Rank test with both the usual relative tolerance and an absolute floor."""
    sv = np.linalg.svd(np.atleast_2d(A), compute_uv=False)
    if sv.size == 0:
        return False
    tol = max(sv[0] * max(A.shape) * np.finfo(float).eps, SINGULAR_TOL)
    return bool(sv[-1] <= tol)


@dataclass
class SolveOutcome:
    """Result of one region solve: a candidate, nothing, or a degenerate region."""
    candidate: np.ndarray | None
    matrix: np.ndarray
    degenerate: bool = False


def solve_region(net, q0, region, A=None, b=None):
    """Solve ``A phi = -b`` and keep the solution when it lies in the region."""
    net = ideal_network(net)
    if A is None:
        A, b = region_affine_system(net, q0, region)
    if is_singular(A):
        return SolveOutcome(None, A, degenerate=True)
    x = np.linalg.solve(A, -b)
    if not region.contains(x):
        return SolveOutcome(None, A)
    if float(np.max(np.abs(fcd_rhs(net, q0, x)))) > RESIDUAL_TOL:
        return SolveOutcome(None, A)
    return SolveOutcome(x, A)


def classify(A, eps=EPS_STAB):
    """Stability label from the eigenvalues of a region matrix."""
    A = np.asarray(A, dtype=float)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ClassificationError(f"eigenvalue computation failed: {exc}", A) from exc
    if not np.all(np.isfinite(ev)):
        raise ClassificationError("non-finite eigenvalues", A)
    top = float(ev.real.max())
    if top < -eps:
        label = STABLE
    elif top > eps:
        label = UNSTABLE
    else:
        label = MARGINAL
    return label, ev


@dataclass
class EquilibriumAtlas:
    partition: AxisPartition
    equilibria: list
    degenerate_regions: list = field(default_factory=list)

    @property
    def n_regions(self):
        return self.partition.n_regions

    @property
    def n_as(self):
        return sum(e.label == STABLE for e in self.equilibria)

    @property
    def n_u(self):
        """Unstable count; marginal equilibria are folded in here."""
        return sum(e.label != STABLE for e in self.equilibria)

    @property
    def n_marginal(self):
        return sum(e.label == MARGINAL for e in self.equilibria)

    @property
    def counts(self):
        return self.n_regions, self.n_as, self.n_u

    def stable(self):
        return [e for e in self.equilibria if e.label == STABLE]

    def unstable(self):
        return [e for e in self.equilibria if e.label != STABLE]

    def to_dict(self):
        return {
            "regions": self.n_regions,
            "interval_counts": list(self.partition.counts),
            "n_as": self.n_as,
            "n_u": self.n_u,
            "n_marginal": self.n_marginal,
            "degenerate_regions": [list(r) for r in self.degenerate_regions],
            "equilibria": [e.to_dict() for e in self.equilibria],
        }


def build_atlas(net, q0, cap=DEFAULT_REGION_CAP):
    """Enumerate, solve and classify every region of the partition."""
    net = ideal_network(net)
    partition = axis_breakpoints(net, q0)
    seen = set()
    equilibria, degenerate = [], []
    for region in enumerate_regions(partition, cap):
        out = solve_region(net, q0, region)
        if out.degenerate:
            degenerate.append(region.index)
            continue
        if out.candidate is None:
            continue
        key = tuple(np.round(out.candidate / DEDUP_TOL).astype(np.int64))
        if key in seen:
            continue
        seen.add(key)
        label, ev = classify(out.matrix)
        equilibria.append(Equilibrium(out.candidate, region.index, ev, label, out.matrix))
    return EquilibriumAtlas(partition, equilibria, degenerate)


@dataclass
class IsolatednessReport:
    isolated: int
    degenerate_equilibria: list
    degenerate_regions: list

    @property
    def passed(self):
        return not self.degenerate_equilibria

    @property
    def all_isolated(self):
        return self.passed and not self.degenerate_regions


def isolatedness_check(atlas, net, q0):
    """Check that every equilibrium has a nonsingular region matrix."""
    bad, good = [], 0
    for e in atlas.equilibria:
        A = e.matrix
        if A is None:
            region = Region(e.region, tuple(atlas.partition.bounds(a, k) for a, k in enumerate(e.region)))
            A, _ = region_affine_system(net, q0, region)
        if is_singular(A):
            bad.append(e.region)
        else:
            good += 1
    return IsolatednessReport(good, bad, list(atlas.degenerate_regions))
