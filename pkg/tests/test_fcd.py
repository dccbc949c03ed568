import numpy as np
import pytest

from mnnlab.errors import HypothesisError
from mnnlab.fcd import (attracting_radius, check_boundedness, check_cooperative, fcd_jacobian,
                        fcd_rhs, fcd_vector_field, lyapunov_monitor, lyapunov_v)
from mnnlab.memristor import PwlCharacteristic, pwl_from_slopes
from mnnlab.ode import IntegratorOptions, integrate
from mnnlab.presets import (case_manifold, four_neuron_hp_network, four_neuron_network,
                            holefill_network)
from mnnlab.topology import Topology
from mnnlab.vcd import ManifoldIndex, NetworkSpec, gamma_lift, vcd_rhs


def toy(smoothing=0.0):
    return NetworkSpec(Topology(np.eye(1, dtype=int)), 1.0, -1.0,
                       [pwl_from_slopes(3, 0.1, 2.6, smoothing_radius=smoothing)], [])


def test_single_neuron_values():
    net, q0 = toy(), ManifoldIndex([0.0], [])
    assert fcd_rhs(net, q0, [0.0]) == pytest.approx([0.0])
    assert fcd_rhs(net, q0, [0.5]) == pytest.approx([0.45])


def test_jacobian_matches_finite_differences(net4, rng):
    q0 = case_manifold(3, 3.0)
    h = 1e-7
    for _ in range(100):
        x = rng.uniform(-6, 6, 4)
        jac = fcd_jacobian(net4, q0, x)
        fd = np.column_stack([(fcd_rhs(net4, q0, x + h * e) - fcd_rhs(net4, q0, x - h * e)) / (2 * h)
                              for e in np.eye(4)])
        assert np.allclose(jac, fd, atol=1e-5)


def test_jacobian_diagonal_without_interconnections():
    net = NetworkSpec(Topology(np.eye(3, dtype=int)), 1.0, -1.0, [pwl_from_slopes(3, 0.1, 2.6)] * 3, [])
    jac = fcd_jacobian(net, ManifoldIndex.zeros(net), np.array([0.3, 2.0, -4.0]))
    assert np.count_nonzero(jac - np.diag(np.diag(jac))) == 0


def test_cooperativity_reports(net4):
    rep = check_cooperative(net4, case_manifold(3, 8.0), samples=10_000)
    assert rep.passed and rep.irreducible and rep.hypotheses_hold
    assert rep.min_connected >= 0.1 - 1e-12
    hp = four_neuron_hp_network()
    rep = check_cooperative(hp, case_manifold(3, 8.0), samples=1000)
    assert rep.passed and rep.min_connected >= 1.0 - 1e-9
    neg = PwlCharacteristic(0.0, -0.2, 0.0, 0.0, -1.0, 1.0)
    bad = NetworkSpec(net4.topology, 1.0, -1.0, net4.self_chars, [neg] * 6, check=False)
    assert not check_cooperative(bad, ManifoldIndex.zeros(bad), samples=50).passed


def test_boundedness_margins():
    rep = check_boundedness(four_neuron_network(g=-1.0))
    assert rep.passed
    assert rep.margins == pytest.approx([0.8, 0.8, 1.2, 1.2])
    assert rep.epsilon == pytest.approx(0.8)
    assert check_boundedness(four_neuron_network(g=-1.7)).passed
    assert not check_boundedness(four_neuron_network(g=-1.9, check=False)).passed
    hf = check_boundedness(holefill_network(4, 4))
    assert hf.passed
    assert hf.epsilon == pytest.approx(10 - 3 - 4 * 0.69)


def test_hp_network_fails_the_sufficient_condition():
    rep = check_boundedness(four_neuron_hp_network())
    assert not rep.passed
    assert rep.epsilon == pytest.approx(8 - 1 - 2 * 5)


def test_lyapunov_v():
    assert lyapunov_v([1, -3, 2]) == (3.0, 1)
    assert lyapunov_v([0, 0]) == (0.0, 0)
    assert lyapunov_v([2, -2]) == (2.0, 0)
    v, _ = lyapunov_v(np.array([1, -3, 2]) * 2.5)
    assert v == pytest.approx(7.5)


def test_attracting_radius(net4):
    q0 = ManifoldIndex.zeros(net4)
    ideal = net4.replace(self_chars=[c.ideal() for c in net4.self_chars],
                         inter_chars=[c.ideal() for c in net4.inter_chars])
    r = attracting_radius(ideal, q0, 0.8)
    # affine tails: the largest intercept is 2.9 (left tail of the 3/0.1/2.6 law, q = 3*phi + 2.9),
    # so the bound is |phi| > 2.9 * (n+1) / eps = 18.125
    assert r == pytest.approx(2.9 * 5 / 0.8, rel=1e-8)
    assert r <= 1.0 + 5 * 2.9 / 0.8
    small = attracting_radius(net4, case_manifold(2, 0.5), 0.8)
    large = attracting_radius(net4, case_manifold(2, 3.0), 0.8)
    assert large > small
    with pytest.raises(HypothesisError):
        attracting_radius(net4, q0, 0.9)


def test_trajectories_enter_and_stay_in_ball(net4, rng):
    q0 = ManifoldIndex.zeros(net4)
    r = attracting_radius(net4, q0, 0.8)
    rhs = fcd_vector_field(net4, q0)
    opts = IntegratorOptions(t_end=40.0, rtol=1e-6, atol=1e-9)
    for _ in range(100):
        traj = integrate(rhs, rng.uniform(-20, 20, 4), opts)
        vals = np.abs(traj.y).max(axis=1)
        inside = np.nonzero(vals <= r)[0]
        assert inside.size
        assert np.all(vals[inside[0]:] <= r + 1e-9)


def test_monitor_from_far_away_and_from_inside(net4):
    q0 = ManifoldIndex.zeros(net4)
    r = attracting_radius(net4, q0, 0.8)
    rhs = fcd_vector_field(net4, q0)
    opts = IntegratorOptions(t_end=30.0, rtol=1e-9, atol=1e-11)
    traj = integrate(rhs, np.array([10 * r, -5 * r, 3 * r, -10 * r]), opts)
    rep = lyapunov_monitor(net4, q0, traj, r)
    assert rep.passed and rep.monitored_steps > 0 and rep.entry_time is not None
    inside = integrate(rhs, np.array([0.5, -0.5, 0.2, 0.1]), opts)
    rep = lyapunov_monitor(net4, q0, inside, r)
    assert rep.passed and rep.monitored_steps == 0


def test_equilibrium_correspondence(net4):
    from mnnlab.atlas import build_atlas
    q0 = case_manifold(3, 8.0)
    for eq in build_atlas(net4, q0).equilibria:
        s = gamma_lift(net4.replace(self_chars=[c.ideal() for c in net4.self_chars],
                                    inter_chars=[c.ideal() for c in net4.inter_chars]),
                       eq.phi, q0)
        assert np.max(np.abs(s.v)) <= 1e-10
