"""Flux-controlled memristor characteristics q = q(phi).

Two families are provided:

* :class:`PwlCharacteristic` -- three-segment piecewise-linear law in
  canonical form ``a + b*phi + c_minus*|phi - sigma_minus| + c_plus*|phi - sigma_plus|``,
  optionally smoothed into a C1 function near the two corners.
* :class:`HpCharacteristic` -- the HP (TiO2) memristor with the Joglekar
  window ``W(x) = 1 - (2x - 1)**2``, evaluated through a closed-form
  charge -> flux antiderivative and its numerical inverse.

Every function accepts scalars or numpy arrays for the flux argument.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, InvalidCharacteristicError

__all__ = [
    "AsymptoticSlopes",
    "AssumptionReport",
    "CharacteristicBank",
    "HpCharacteristic",
    "PwlCharacteristic",
    "charge",
    "characteristic_from_dict",
    "characteristic_to_dict",
    "hp_charge_of_flux",
    "hp_flux_of_charge",
    "memductance",
    "pwl_from_slopes",
    "verify_assumption1",
]

DEFAULT_SMOOTHING = 1e-3


@dataclass(frozen=True)
class AsymptoticSlopes:
    g_minus_inf: float
    g_plus_inf: float


@dataclass(frozen=True)
class PwlCharacteristic:
    """Three-segment pwl flux-charge law in canonical (absolute value) form.

    Use :func:`pwl_from_slopes` to build one from segment slopes; the raw
    constructor does not validate, which lets negative controls build
    characteristics that violate strict passivity on purpose.
    """

    a: float
    b: float
    c_minus: float
    c_plus: float
    sigma_minus: float
    sigma_plus: float
    smoothing_radius: float = 0.0

    kind = "pwl"

    @property
    def slopes(self):
        """Segment slopes ``(G_minus, G_zero, G_plus)``."""
        b, cm, cp = self.b, self.c_minus, self.c_plus
        return (b - cm - cp, b + cm - cp, b + cm + cp)

    @property
    def asymptotic(self):
        g_minus, _, g_plus = self.slopes
        return AsymptoticSlopes(g_minus, g_plus)

    @property
    def g_off(self):
        return min(self.slopes)

    @property
    def g_on(self):
        return max(self.slopes)

    @property
    def breakpoints(self):
        return (self.sigma_minus, self.sigma_plus)

    def ideal(self):
        """The same law with the corner smoothing removed."""
        if self.smoothing_radius == 0.0:
            return self
        return PwlCharacteristic(self.a, self.b, self.c_minus, self.c_plus,
                                 self.sigma_minus, self.sigma_plus, 0.0)

    def segment(self, index):
        """Return ``(slope, offset)`` of segment 0 (left), 1 (middle) or 2 (right).

        On that segment the ideal law reads ``q = slope*phi + offset``.
        """
        g_minus, g_zero, g_plus = self.slopes
        sm, sp = self.sigma_minus, self.sigma_plus
        q_sm = self.a + self.b * sm + self.c_plus * (sp - sm)
        q_sp = self.a + self.b * sp + self.c_minus * (sp - sm)
        if index == 0:
            return g_minus, q_sm - g_minus * sm
        if index == 1:
            return g_zero, q_sm - g_zero * sm
        if index == 2:
            return g_plus, q_sp - g_plus * sp
        raise IndexError(index)

    def validate(self):
        g = self.slopes
        if not all(s > 0 for s in g):
            raise InvalidCharacteristicError(f"segment slopes must be positive, got {g}")
        if not self.sigma_minus < 0 < self.sigma_plus:
            raise InvalidCharacteristicError(
                f"need sigma_minus < 0 < sigma_plus, got {self.sigma_minus}, {self.sigma_plus}")
        delta = self.smoothing_radius
        if delta < 0 or delta >= min(-self.sigma_minus, self.sigma_plus) / 2:
            raise InvalidCharacteristicError(f"smoothing radius {delta} out of range")
        return self


def pwl_from_slopes(g_minus, g_zero, g_plus, sigma_minus=-1.0, sigma_plus=1.0,
                    smoothing_radius=0.0, strict=True):
    """Build the canonical pwl law from its three segment slopes.

    >>> ch = pwl_from_slopes(0.3, 0.1, 0.4, -1.0, 1.0)
    >>> round(ch.a, 12), ch.b, ch.c_minus, round(ch.c_plus, 12)
    (-0.05, 0.35, -0.1, 0.15)
    """
    b = (g_plus + g_minus) / 2
    c_plus = (g_plus - g_zero) / 2
    c_minus = (g_zero - g_minus) / 2
    a = (g_zero * (sigma_plus + sigma_minus) - g_plus * sigma_plus - g_minus * sigma_minus) / 2
    ch = PwlCharacteristic(float(a), float(b), float(c_minus), float(c_plus),
                           float(sigma_minus), float(sigma_plus), float(smoothing_radius))
    if strict:
        if min(g_minus, g_zero, g_plus) <= 0:
            raise InvalidCharacteristicError(
                f"segment slopes must be positive, got {(g_minus, g_zero, g_plus)}")
        ch.validate()
    return ch


def _smooth_abs(x, delta):
    ax = np.abs(x)
    if delta == 0.0:
        return ax
    with np.errstate(over="ignore"):
        blend = (x * x + delta * delta) / (2 * delta)
    return np.where(ax < delta, blend, ax)


def _smooth_sign(x, delta):
    if delta == 0.0:
        return np.sign(x)
    with np.errstate(over="ignore"):
        lin = x / delta
    return np.where(np.abs(x) < delta, lin, np.sign(x))


def _pwl_charge(ch, phi):
    d = ch.smoothing_radius
    return (ch.a + ch.b * phi
            + ch.c_minus * _smooth_abs(phi - ch.sigma_minus, d)
            + ch.c_plus * _smooth_abs(phi - ch.sigma_plus, d))


def _pwl_memductance(ch, phi):
    # sign(0) == 0 gives the mean of the adjacent slopes at an ideal corner
    d = ch.smoothing_radius
    return (ch.b + ch.c_minus * _smooth_sign(phi - ch.sigma_minus, d)
            + ch.c_plus * _smooth_sign(phi - ch.sigma_plus, d))


@dataclass(frozen=True)
class HpCharacteristic:
    """HP memristor with linear dopant drift and window ``1 - (2x - 1)**2``.

    Along the charge axis the normalized layer length is
    ``x(q) = (1 + tanh(2*beta*q + c0)) / 2`` with ``c0 = artanh(2*x0 - 1)``,
    so the resistance ``R(x) = r_on*x + r_off*(1 - x)`` integrates in closed
    form to the flux.
    """

    r_on: float
    r_off: float
    beta: float
    x0: float = 0.5

    kind = "hp"

    def __post_init__(self):
        if not 0 < self.r_on < self.r_off:
            raise InvalidCharacteristicError(
                f"need 0 < r_on < r_off, got r_on={self.r_on}, r_off={self.r_off}")
        if not self.beta > 0:
            raise InvalidCharacteristicError(f"beta must be positive, got {self.beta}")
        if not 0 < self.x0 < 1:
            raise InvalidCharacteristicError(f"x0 must lie in (0, 1), got {self.x0}")

    @property
    def c0(self):
        return float(np.arctanh(2 * self.x0 - 1))

    @property
    def asymptotic(self):
        return AsymptoticSlopes(1.0 / self.r_off, 1.0 / self.r_on)

    @property
    def g_off(self):
        return 1.0 / self.r_off

    @property
    def g_on(self):
        return 1.0 / self.r_on

    def ideal(self):
        return self

    def validate(self):
        return self

    def resistance_of_charge(self, q):
        # convex combination form keeps R exactly within [r_on, r_off] under rounding
        x = 0.5 * (1.0 + np.tanh(2 * self.beta * np.asarray(q, dtype=float) + self.c0))
        return self.r_on * x + self.r_off * (1.0 - x)


def _log_cosh(u):
    u = np.abs(u)
    return u + np.log1p(np.exp(-2 * u)) - np.log(2.0)


def hp_flux_of_charge(ch, q):
    """Closed-form flux ``phi(q) = integral_0^q R(x(s)) ds``; ``phi(0) = 0``.

    >>> hp = HpCharacteristic(0.2, 1.0, 0.1, 0.5)
    >>> round(float(hp_flux_of_charge(hp, 1.0)), 6)
    0.560263
    """
    if not 0 < ch.x0 < 1:
        raise InvalidCharacteristicError(f"x0 must lie in (0, 1), got {ch.x0}")
    q = np.asarray(q, dtype=float)
    dr = ch.r_off - ch.r_on
    c0 = ch.c0
    out = (ch.r_off - dr / 2) * q - (dr / (4 * ch.beta)) * (
        _log_cosh(2 * ch.beta * q + c0) - _log_cosh(c0))
    return out if out.ndim else float(out)


def hp_charge_of_flux(ch, phi, max_iter=200):
    """Invert :func:`hp_flux_of_charge` by bracketed Newton iteration.

    The flux law has slope in ``[r_on, r_off]``, so the root is bracketed by
    ``phi/r_off`` and ``phi/r_on``.  Newton steps leaving the bracket are
    replaced by bisection.
    """
    phi = np.asarray(phi, dtype=float)
    scalar = phi.ndim == 0
    phi = np.atleast_1d(phi)
    lo = np.minimum(phi / ch.r_on, phi / ch.r_off)
    hi = np.maximum(phi / ch.r_on, phi / ch.r_off)
    q = phi / ch.resistance_of_charge(0.0)
    q = np.clip(q, lo, hi)
    tol = 1e-12 * np.maximum(1.0, np.abs(phi))
    for _ in range(max_iter):
        res = hp_flux_of_charge(ch, q) - phi
        res = np.atleast_1d(res)
        done = np.abs(res) <= tol
        if done.all():
            break
        hi = np.where(res > 0, q, hi)
        lo = np.where(res < 0, q, lo)
        step = q - res / ch.resistance_of_charge(q)
        inside = (step > lo) & (step < hi)
        q = np.where(done, q, np.where(inside, step, 0.5 * (lo + hi)))
    else:
        res = np.atleast_1d(hp_flux_of_charge(ch, q) - phi)
        if not (np.abs(res) <= 1e-10 * np.maximum(1.0, np.abs(phi))).all():
            raise ConvergenceFailure("HP flux inversion did not converge",
                                     residual=float(np.abs(res).max()))
    return float(q[0]) if scalar else q


def charge(ch, phi):
    """Charge ``q(phi)`` of a characteristic."""
    if isinstance(ch, HpCharacteristic):
        return hp_charge_of_flux(ch, phi)
    out = _pwl_charge(ch, np.asarray(phi, dtype=float))
    return out if out.ndim else float(out)


def memductance(ch, phi):
    """Memductance ``dq/dphi``.

    For an ideal pwl law exactly at a corner the mean of the two adjacent
    slopes is returned.
    """
    if isinstance(ch, HpCharacteristic):
        q = hp_charge_of_flux(ch, phi)
        out = 1.0 / ch.resistance_of_charge(q)
    else:
        out = _pwl_memductance(ch, np.asarray(phi, dtype=float))
    out = np.asarray(out)
    return out if out.ndim else float(out)


@dataclass
class AssumptionReport:
    passed: bool
    q_at_zero: float
    min_memductance: float
    max_memductance: float
    g_minus_estimate: float
    g_plus_estimate: float
    failures: list = field(default_factory=list)


def verify_assumption1(ch, probe_grid, atol=1e-12):
    """Check ``q(0) = 0`` and ``0 < G_off <= q'(phi) <= G_on`` on a probe grid.

    The asymptotic slopes are estimated as the memductance at the two
    extreme probes; they are sanity estimates, not limits.
    """
    grid = np.sort(np.asarray(probe_grid, dtype=float).ravel())
    if grid.size == 0:
        raise ValueError("probe_grid must be nonempty")
    failures = []
    q0 = float(charge(ch, 0.0))
    if abs(q0) > atol:
        failures.append(f"q(0) = {q0} != 0")
    m = np.atleast_1d(memductance(ch, grid))
    if not np.all(np.isfinite(m)):
        failures.append("non-finite memductance")
    if m.min() <= 0:
        failures.append(f"memductance not strictly positive (min {m.min()})")
    slopes = getattr(ch, "slopes", None)
    if slopes is not None and min(slopes) <= 0:
        failures.append(f"segment slope not strictly positive: {slopes}")
    q = np.atleast_1d(charge(ch, grid))
    if np.any(np.diff(q) <= 0):
        failures.append("charge not strictly increasing on probe grid")
    return AssumptionReport(
        passed=not failures,
        q_at_zero=q0,
        min_memductance=float(m.min()),
        max_memductance=float(m.max()),
        g_minus_estimate=float(m[0]),
        g_plus_estimate=float(m[-1]),
        failures=failures,
    )


def default_probe_grid(ch, span=50.0, num=2001):
    """Probe grid covering the corners and well beyond them."""
    grid = np.linspace(-span, span, num)
    if isinstance(ch, PwlCharacteristic):
        extra = [s + k * max(ch.smoothing_radius, 1e-6) for s in ch.breakpoints for k in (-1, 0, 1)]
        grid = np.union1d(grid, extra)
    return grid


# ---------------------------------------------------------------------------
# Vectorised evaluation of many characteristics at once.

class CharacteristicBank:
    """Evaluate a list of characteristics elementwise: ``q_k(phi_k)``.

    Pwl laws are stored as parameter arrays; HP laws are grouped by
    parameter set so that one vectorised inversion serves the whole group.
    """

    def __init__(self, chars):
        self.chars = list(chars)
        m = len(self.chars)
        self.size = m
        pwl_idx = [k for k, c in enumerate(self.chars) if isinstance(c, PwlCharacteristic)]
        self._pwl_idx = np.array(pwl_idx, dtype=int)
        self._all_pwl = len(pwl_idx) == m
        if pwl_idx:
            p = [self.chars[k] for k in pwl_idx]
            self._a = np.array([c.a for c in p])
            self._b = np.array([c.b for c in p])
            self._cm = np.array([c.c_minus for c in p])
            self._cp = np.array([c.c_plus for c in p])
            self._sm = np.array([c.sigma_minus for c in p])
            self._sp = np.array([c.sigma_plus for c in p])
            self._d = np.array([c.smoothing_radius for c in p])
        groups = {}
        for k, c in enumerate(self.chars):
            if isinstance(c, HpCharacteristic):
                groups.setdefault(c, []).append(k)
            elif not isinstance(c, PwlCharacteristic):
                raise InvalidCharacteristicError(f"unsupported characteristic {c!r}")
        self._hp_groups = [(c, np.array(idx, dtype=int)) for c, idx in groups.items()]

    def _abs(self, x):
        d = self._d
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sm = (x * x + d * d) / (2 * d)
        return np.where(ax < d, sm, ax)

    def _sign(self, x):
        d = self._d
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lin = x / d
        return np.where(np.abs(x) < d, lin, np.sign(x))

    def charge(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self._all_pwl:
            return (self._a + self._b * phi + self._cm * self._abs(phi - self._sm)
                    + self._cp * self._abs(phi - self._sp))
        out = np.empty(self.size)
        if self._pwl_idx.size:
            x = phi[self._pwl_idx]
            out[self._pwl_idx] = (self._a + self._b * x + self._cm * self._abs(x - self._sm)
                                  + self._cp * self._abs(x - self._sp))
        for ch, idx in self._hp_groups:
            out[idx] = hp_charge_of_flux(ch, phi[idx])
        return out

    def memductance(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self._all_pwl:
            return self._b + self._cm * self._sign(phi - self._sm) + self._cp * self._sign(phi - self._sp)
        out = np.empty(self.size)
        if self._pwl_idx.size:
            x = phi[self._pwl_idx]
            out[self._pwl_idx] = (self._b + self._cm * self._sign(x - self._sm)
                                  + self._cp * self._sign(x - self._sp))
        for ch, idx in self._hp_groups:
            q = hp_charge_of_flux(ch, phi[idx])
            out[idx] = 1.0 / ch.resistance_of_charge(q)
        return out


# ---------------------------------------------------------------------------
# Config records.

def characteristic_from_dict(rec, path="characteristic"):
    from .errors import ValidationError

    if not isinstance(rec, dict) or "kind" not in rec:
        raise ValidationError("expected a record with a 'kind' field", path)
    kind = rec["kind"]
    try:
        if kind == "pwl":
            return pwl_from_slopes(
                float(rec["g_minus"]), float(rec["g_zero"]), float(rec["g_plus"]),
                float(rec.get("sigma_minus", -1.0)), float(rec.get("sigma_plus", 1.0)),
                float(rec.get("smoothing", 0.0)),
            )
        if kind == "hp":
            return HpCharacteristic(float(rec["r_on"]), float(rec["r_off"]),
                                    float(rec["beta"]), float(rec.get("x0", 0.5)))
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}", path) from None
    except InvalidCharacteristicError as exc:
        raise ValidationError(str(exc), path) from None
    raise ValidationError(f"unknown characteristic kind {kind!r}", path)


def characteristic_to_dict(ch):
    if isinstance(ch, HpCharacteristic):
        return {"kind": "hp", "r_on": ch.r_on, "r_off": ch.r_off, "beta": ch.beta, "x0": ch.x0}
    g_minus, g_zero, g_plus = ch.slopes
    return {"kind": "pwl", "g_minus": g_minus, "g_zero": g_zero, "g_plus": g_plus,
            "sigma_minus": ch.sigma_minus, "sigma_plus": ch.sigma_plus,
            "smoothing": ch.smoothing_radius}
