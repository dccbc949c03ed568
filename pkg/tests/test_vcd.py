import numpy as np
import pytest

from mnnlab.memristor import pwl_from_slopes
from mnnlab.ode import IntegratorOptions, integrate
from mnnlab.presets import case_manifold
from mnnlab.topology import Topology
from mnnlab.vcd import (ManifoldIndex, NetworkSpec, VcdState, gamma_lift, invariant_drift,
                        invariants, manifold_index, vcd_rhs, vcd_vector_field)


def single_neuron():
    return NetworkSpec(Topology(np.eye(1, dtype=int)), 1.0, -1.0,
                       [pwl_from_slopes(3, 0.1, 2.6)], [])


def test_single_neuron_derivative():
    d = vcd_rhs(single_neuron(), VcdState([1.0], [0.0], []))
    assert d.v == pytest.approx([0.9])
    assert d.phi_s == pytest.approx([1.0])


def test_zero_voltage_states_are_equilibria(net4, rng):
    for _ in range(20):
        s = VcdState(np.zeros(4), rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 6))
        assert np.all(vcd_rhs(net4, s).to_vector() == 0)
    s = VcdState(rng.uniform(-1, 1, 4), rng.uniform(-5, 5, 4), rng.uniform(-5, 5, 6))
    assert np.any(vcd_rhs(net4, s).v != 0)
    assert net4.dim == 2 * 4 + 6


def test_invariant_examples(net4):
    zero = VcdState(np.zeros(4), np.zeros(4), np.zeros(6))
    q = invariants(net4, zero)
    assert np.all(q.q_s == 0) and np.all(q.q_i == 0)
    s = VcdState(np.ones(4), np.array([0.3, -0.2, 1.5, 2.0]), None)
    s = VcdState(s.v, s.phi_s, s.phi_s[net4.cols])
    assert np.all(invariants(net4, s).q_i == 0)


def test_case3_construction_reproduces_target(net4):
    alpha = 1.3
    q0 = case_manifold(3, alpha)
    phi_s0 = np.array([0.2, -0.7, 1.1, 0.4])
    # explicit construction: phi_ij0 = phis_j0 - Q_ij0, voltages from the charge invariant
    expected_phi = np.array([phi_s0[1] - alpha, phi_s0[3] + 0.5 * alpha, phi_s0[0] - 0.6 * alpha,
                             phi_s0[2] + 0.3 * alpha, phi_s0[1] - 0.7 * alpha, phi_s0[1] + 0.4 * alpha])
    lifted = gamma_lift(net4, phi_s0, q0)
    assert np.allclose(lifted.phi, expected_phi)
    got = manifold_index(net4, lifted)
    assert np.allclose(got.q_s, 0, atol=1e-14)
    assert np.allclose(got.q_i, q0.q_i, atol=1e-14)


def test_lift_round_trip(net4, rng):
    for _ in range(1000):
        q0 = ManifoldIndex(rng.uniform(-3, 3, 4), rng.uniform(-3, 3, 6))
        phi_s = rng.uniform(-5, 5, 4)
        back = invariants(net4, gamma_lift(net4, phi_s, q0))
        assert np.allclose(back.q_s, q0.q_s, atol=1e-12)
        assert np.allclose(back.q_i, q0.q_i, atol=1e-12)


def test_lift_of_zero_is_zero(net4):
    s = gamma_lift(net4, np.zeros(4), ManifoldIndex.zeros(net4))
    assert np.all(s.to_vector() == 0)


def test_drift_examples(net4, rng):
    s = gamma_lift(net4, rng.uniform(-2, 2, 4), case_manifold(3, 2.0)).to_vector()
    const = [(0.0, s), (1.0, s), (2.0, s)]
    assert invariant_drift(net4, const).absolute == 0
    bumped = s.copy()
    bumped[4] += 0.25              # phis_1: changes Q_1 and Q_21
    rep = invariant_drift(net4, [(0.0, s), (1.0, bumped)])
    dq = np.abs(invariants(net4, bumped).to_vector() - invariants(net4, s).to_vector())
    assert rep.absolute == pytest.approx(dq.max())


def test_conservation_along_vcd_trajectory(net4, rng):
    q0 = case_manifold(3, 8.0)
    y0 = gamma_lift(net4, rng.uniform(-3, 3, 4), q0).to_vector()
    traj = integrate(vcd_vector_field(net4), y0, IntegratorOptions(t_end=50.0, rtol=1e-9,
                                                                   atol=1e-11))
    rep = invariant_drift(net4, traj)
    assert rep.relative <= 1e-6
