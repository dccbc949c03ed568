"""Binary images, the hole-filling task, and its flood-fill ground truth.

Pixels are stored as booleans, ``True`` = white (background) and
``False`` = black (foreground).  On the grid network neuron ``r*cols + c``
owns pixel ``(r, c)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import TaskFailure, ValidationError
from .fcd import fcd_vector_field
from .memristor import DEFAULT_SMOOTHING
from .ode import ConvergenceCriterion, IntegratorOptions, convergence_stop, detect_convergence, integrate
from .presets import holefill_network
from .vcd import ManifoldIndex, gamma_lift

__all__ = [
    "BinaryImage",
    "HoleFillParams",
    "HoleFillResult",
    "decode_state",
    "encode_image",
    "flood_fill_oracle",
    "generate_hole_image",
    "hole_filling",
]

DEFAULT_MAGNITUDE = 3.8 * 1.2


@dataclass(eq=False)
class BinaryImage:
    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=bool)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValidationError(f"image must be a nonempty 2-D array, got shape {p.shape}")
        self.pixels = p

    @property
    def rows(self):
        return self.pixels.shape[0]

    @property
    def cols(self):
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"BinaryImage({self.rows}x{self.cols}, white={int(self.pixels.sum())})"

    def to_text(self):
        return "\n".join("".join("." if p else "#" for p in row) for row in self.pixels)

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.strip().splitlines()]
        return cls(np.array([[ch != "#" for ch in ln] for ln in lines]))


def encode_image(img, magnitude=DEFAULT_MAGNITUDE, topology=None):
    """Manifold index carrying the image: ``+magnitude`` white, ``-magnitude`` black."""
    n = img.rows * img.cols
    n_c = 0
    if topology is not None:
        if topology.n != n:
            raise ValidationError(f"image has {n} pixels but the network has {topology.n} neurons")
        n_c = topology.n_c
    q_s = np.where(img.pixels.ravel(), magnitude, -magnitude).astype(float)
    return ManifoldIndex(q_s, np.zeros(n_c))


def decode_state(phi_s, shape, threshold=0.0):
    """White where the flux exceeds ``threshold``."""
    rows, cols = shape if not hasattr(shape, "n") else _grid_shape(shape)
    x = np.asarray(phi_s, dtype=float)
    if x.size != rows * cols:
        raise ValidationError(f"state of size {x.size} does not fit a {rows}x{cols} image")
    return BinaryImage(x.reshape(rows, cols) > threshold)


def _grid_shape(top):
    # infer (rows, cols) from the grid indicator: the first vertical neighbour of cell 0
    n = top.n
    nbrs = top.connection_sets[0]
    cols = max(nbrs) if len(nbrs) > 1 or (nbrs and nbrs[0] != 1) else n
    return n // cols, cols


def flood_fill_oracle(img):
    """Fill holes: white pixels not 4-connected to the border become black."""
    white = img.pixels
    rows, cols = white.shape
    reach = np.zeros_like(white)
    queue = deque()
    for r in range(rows):
        for c in (0, cols - 1):
            if white[r, c] and not reach[r, c]:
                reach[r, c] = True
                queue.append((r, c))
    for c in range(cols):
        for r in (0, rows - 1):
            if white[r, c] and not reach[r, c]:
                reach[r, c] = True
                queue.append((r, c))
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols and white[rr, cc] and not reach[rr, cc]:
                reach[rr, cc] = True
                queue.append((rr, cc))
    return BinaryImage(reach)


def generate_hole_image(rng, rows=20, cols=20, max_hole=3, gap=2, max_shapes=6):
    """Random black shapes on white, at least one of them a ring around a hole.

    Rings enclose holes of at most ``max_hole`` x ``max_hole`` pixels; shapes
    keep ``gap`` white pixels between each other.  Larger holes and
    one-pixel white corridors between shapes are outside what the reference
    parameters resolve.
    """
    img = np.ones((rows, cols), dtype=bool)
    occupied = np.zeros((rows, cols), dtype=bool)
    holes = 0
    for _ in range(200):
        if holes and (holes + 1 > max_shapes or rng.random() >= 0.6):
            break
        ring = holes == 0 or rng.random() < 0.7
        if ring:
            h, w = (int(v) for v in rng.integers(1, max_hole + 1, size=2))
            t = int(rng.integers(1, 3))
            H, W = h + 2 * t, w + 2 * t
        else:
            H, W = (int(v) for v in rng.integers(1, 5, size=2))
        if H > rows or W > cols:
            continue
        r = int(rng.integers(0, rows - H + 1))
        c = int(rng.integers(0, cols - W + 1))
        if occupied[max(r - gap, 0):r + H + gap, max(c - gap, 0):c + W + gap].any():
            continue
        occupied[r:r + H, c:c + W] = True
        img[r:r + H, c:c + W] = False
        if ring:
            hole = rng.random((h, w)) < 0.8
            hole[rng.integers(h), rng.integers(w)] = True
            img[r + t:r + t + h, c + t:c + t + w] = hole
            holes += 1
    return BinaryImage(img)


@dataclass
class HoleFillParams:
    g: float = -3.0
    self_slopes: tuple = (10.0, 0.1, 10.0)
    inter_slopes: tuple = (0.69, 0.345, 0.69)
    smoothing: float = DEFAULT_SMOOTHING
    initial_flux: float = -1.2
    magnitude: float = DEFAULT_MAGNITUDE
    snapshots: tuple = (1.4, 2.2)
    t_end: float = 10.0
    rtol: float = 1e-6
    atol: float = 1e-9
    h_max: float = 0.1
    criterion: ConvergenceCriterion = field(default_factory=ConvergenceCriterion)
    threshold: float = 0.0


@dataclass
class HoleFillResult:
    input: BinaryImage
    final: BinaryImage
    oracle: BinaryImage
    snapshots: dict
    final_state: np.ndarray
    terminal_v: float
    t_final: float
    trajectory: object = field(repr=False, default=None)

    @property
    def matches_oracle(self):
        return self.final == self.oracle


def hole_filling(img, params=None, net=None):
    """Run the hole-filling network on ``img`` until convergence.

    Raises
    ------
    TaskFailure
        The flux dynamics did not settle within ``params.t_end``.
    """
    params = params or HoleFillParams()
    if net is None:
        net = holefill_network(img.rows, img.cols, params.g, params.smoothing,
                               params.self_slopes, params.inter_slopes)
    q0 = encode_image(img, params.magnitude, net.topology)
    rhs = fcd_vector_field(net, q0)
    x0 = np.full(net.n, params.initial_flux)
    opts = IntegratorOptions(t_end=params.t_end, rtol=params.rtol, atol=params.atol,
                             h_max=params.h_max, tstops=tuple(params.snapshots))
    crit = params.criterion
    base_stop = convergence_stop(crit)
    last_snap = max(params.snapshots, default=0.0)

    def stop(t, y, f):
        return base_stop(t, y, f) and t >= last_snap

    traj = integrate(rhs, x0, opts, stop=stop)
    eq = detect_convergence(traj, rhs, crit)
    if eq is None:
        f_end = float(np.max(np.abs(rhs(traj.t[-1], traj.final))))
        raise TaskFailure(f"hole filling did not converge by t={traj.t[-1]:.4g}",
                          {"t_final": float(traj.t[-1]), "max_rhs": f_end})
    shape = (img.rows, img.cols)
    snaps = {float(s): decode_state(traj.at(s), shape, params.threshold)
             for s in params.snapshots if s <= traj.t[-1]}
    lifted = gamma_lift(net, traj.final, q0)
    return HoleFillResult(
        input=img,
        final=decode_state(traj.final, shape, params.threshold),
        oracle=flood_fill_oracle(img),
        snapshots=snaps,
        final_state=traj.final.copy(),
        terminal_v=float(np.max(np.abs(lifted.v))),
        t_final=float(traj.t[-1]),
        trajectory=traj,
    )
