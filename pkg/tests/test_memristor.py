import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_ivp

from mnnlab.errors import InvalidCharacteristicError, ValidationError
from mnnlab.memristor import (CharacteristicBank, HpCharacteristic, PwlCharacteristic, charge,
                              characteristic_from_dict, characteristic_to_dict,
                              default_probe_grid, hp_charge_of_flux, hp_flux_of_charge,
                              memductance, pwl_from_slopes, verify_assumption1)

HP = HpCharacteristic(0.2, 1.0, 0.1, 0.5)
PWL = pwl_from_slopes(0.3, 0.1, 0.4)


def test_canonical_coefficients():
    ch = pwl_from_slopes(0.3, 0.1, 0.4, -1, 1, 0)
    assert ch.b == pytest.approx(0.35)
    assert ch.c_plus == pytest.approx(0.15)
    assert ch.c_minus == pytest.approx(-0.1)
    assert ch.a == pytest.approx(-0.05)
    assert charge(ch, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_linear_resistor_degenerate_case():
    ch = pwl_from_slopes(0.7, 0.7, 0.7)
    assert (ch.a, ch.c_minus, ch.c_plus) == pytest.approx((0.0, 0.0, 0.0))
    assert ch.b == pytest.approx(0.7)


def test_slopes_recovered():
    assert pwl_from_slopes(3, 0.1, 2.6).slopes == pytest.approx((3, 0.1, 2.6))


def test_pwl_charge_values():
    assert charge(PWL, 2.0) == pytest.approx(0.5)
    assert charge(PWL, -2.0) == pytest.approx(-0.4)
    assert memductance(PWL, 2.0) == pytest.approx(0.4)
    assert memductance(PWL, -5.0) == pytest.approx(0.3)
    assert memductance(PWL, 0.0) == pytest.approx(0.1)


def test_ideal_corner_memductance_is_mean_slope():
    ch = pwl_from_slopes(0.3, 0.1, 0.4, smoothing_radius=0.0)
    assert memductance(ch, 1.0) == pytest.approx(0.25)
    assert memductance(ch, -1.0) == pytest.approx(0.2)


def test_smoothing_is_c1_and_local():
    ideal = pwl_from_slopes(0.3, 0.1, 0.4, smoothing_radius=0.0)
    smooth = pwl_from_slopes(0.3, 0.1, 0.4, smoothing_radius=1e-3)
    far = np.array([-3.0, -1.0011, -0.5, 0.0, 0.9989, 1.5, 4.0])
    assert np.array_equal(charge(ideal, far), charge(smooth, far))
    # slopes match at the blend edges
    for s in (-1.0, 1.0):
        for e in (-1e-3, 1e-3):
            assert memductance(smooth, s + e) == pytest.approx(memductance(ideal, s + 2 * e))
    x = np.linspace(0.995, 1.005, 2001)
    assert np.all(np.diff(memductance(smooth, x)) >= -1e-15)


def test_hp_zero_and_closed_form_against_quadrature():
    assert hp_flux_of_charge(HP, 0.0) == 0.0
    assert charge(HP, 0.0) == 0.0

    def resistance(q):
        x = 0.5 * (1 + np.tanh(2 * HP.beta * q))
        return HP.r_on * x + HP.r_off * (1 - x)

    ref, _ = quad(resistance, 0.0, 1.0, epsabs=1e-13)
    assert hp_flux_of_charge(HP, 1.0) == pytest.approx(ref, abs=1e-12)
    assert hp_flux_of_charge(HP, 1.0) == pytest.approx(0.560263, abs=1e-5)


def test_hp_closed_form_against_state_equation():
    # drive the HP state equation with i(t) = cos t and accumulate the flux
    beta, r_on, r_off = HP.beta, HP.r_on, HP.r_off

    def rhs(t, y):
        x = y[0]
        i = np.cos(t)
        return [beta * 4 * x * (1 - x) * i, (r_on * x + r_off * (1 - x)) * i]

    ts = np.linspace(0, 6, 25)
    sol = solve_ivp(rhs, (0, 6), [0.5, 0.0], t_eval=ts, rtol=1e-11, atol=1e-13)
    q = np.sin(ts)
    assert np.allclose(hp_flux_of_charge(HP, q), sol.y[1], atol=1e-8)


def test_hp_asymptotic_slopes_of_flux():
    h = 1e-3
    for q, target in ((200.0, HP.r_on), (-200.0, HP.r_off)):
        slope = (hp_flux_of_charge(HP, q + h) - hp_flux_of_charge(HP, q - h)) / (2 * h)
        assert slope == pytest.approx(target, rel=1e-6)


@pytest.mark.parametrize("phi", [-10.0, -1.0, 0.0, 0.3, 7.0])
def test_hp_round_trip(phi):
    q = hp_charge_of_flux(HP, phi)
    assert abs(hp_flux_of_charge(HP, q) - phi) <= 1e-10 * max(1.0, abs(phi))


def test_hp_charge_derivative_in_bounds(rng):
    phi = rng.uniform(-30, 30, 200)
    h = 1e-5
    d = (hp_charge_of_flux(HP, phi + h) - hp_charge_of_flux(HP, phi - h)) / (2 * h)
    assert np.all((d >= 1 - 1e-6) & (d <= 5 + 1e-6))


def test_hp_invalid_x0():
    with pytest.raises(InvalidCharacteristicError):
        HpCharacteristic(0.2, 1.0, 0.1, 1.0)


def test_verify_assumption1():
    rep = verify_assumption1(pwl_from_slopes(0.3, 0.1, 0.4, smoothing_radius=1e-3),
                             default_probe_grid(PWL))
    assert rep.passed
    assert rep.min_memductance == pytest.approx(0.1)
    assert rep.max_memductance == pytest.approx(0.4)
    rep = verify_assumption1(HP, np.linspace(-200, 200, 801))
    assert rep.passed
    assert HP.g_off == 1.0 and HP.g_on == pytest.approx(5.0)
    bad = pwl_from_slopes(0.3, 0.0, 0.4, strict=False)
    assert not verify_assumption1(bad, default_probe_grid(bad)).passed


def test_dict_round_trip():
    assert characteristic_from_dict(characteristic_to_dict(HP)) == HP
    back = characteristic_from_dict(characteristic_to_dict(PWL))
    assert back.slopes == pytest.approx(PWL.slopes, abs=1e-15)
    assert back.breakpoints == PWL.breakpoints
    with pytest.raises(ValidationError):
        characteristic_from_dict({"kind": "spline"})


def test_bank_matches_scalar_evaluation(rng):
    chars = [PWL, HP, pwl_from_slopes(3, 0.1, 2.6), HP]
    bank = CharacteristicBank(chars)
    phi = rng.uniform(-5, 5, 4)
    assert np.allclose(bank.charge(phi), [charge(c, p) for c, p in zip(chars, phi)], atol=1e-13)
    assert np.allclose(bank.memductance(phi), [memductance(c, p) for c, p in zip(chars, phi)],
                       atol=1e-13)


slopes = st.floats(0.05, 5.0)


@settings(max_examples=60, deadline=None)
@given(slopes, slopes, slopes, st.floats(0.0, 1e-2))
def test_pwl_properties(gm, g0, gp, delta):
    ch = pwl_from_slopes(gm, g0, gp, smoothing_radius=delta)
    x = np.linspace(-6, 6, 1201)
    q = charge(ch, x)
    assert np.all(np.diff(q) > 0)
    m = memductance(ch, x)
    lo, hi = min(gm, g0, gp), max(gm, g0, gp)
    assert np.all((m >= lo - 1e-12) & (m <= hi + 1e-12))
    # derivative consistency away from the corners
    away = x[np.min(np.abs(x[:, None] - np.array([-1.0, 1.0])), axis=1) > delta + 1e-5]
    h = 1e-6
    fd = (charge(ch, away + h) - charge(ch, away - h)) / (2 * h)
    assert np.allclose(memductance(ch, away), fd, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(1.0, 5.0), st.floats(0.01, 1.0), st.floats(0.05, 0.95))
def test_hp_properties(r_on, r_off, beta, x0):
    ch = HpCharacteristic(r_on, r_off, beta, x0)
    phi = np.linspace(-40, 40, 401)
    m = memductance(ch, phi)
    assert np.all(np.diff(m) >= -1e-13)  # rounding wobble once tanh saturates
    # strictness where the state x is away from saturation in double precision
    core = hp_flux_of_charge(ch, np.linspace(-3 / beta, 3 / beta, 101))
    assert np.all(np.diff(memductance(ch, core)) > 0)
    assert np.all((m >= 1 / r_off - 1e-12) & (m <= 1 / r_on + 1e-12))
    q = charge(ch, phi)
    assert np.all(np.abs(hp_flux_of_charge(ch, q) - phi) <= 1e-10 * np.maximum(1, np.abs(phi)))


def test_raw_constructor_does_not_validate():
    ch = PwlCharacteristic(0.0, -1.0, 0.0, 0.0, -1.0, 1.0)
    assert ch.slopes[1] < 0
