import numpy as np
import pytest

from mnnlab.errors import InvalidTopologyError, ValidationError
from mnnlab.presets import FOUR_NEURON_T
from mnnlab.topology import (Topology, connection_sets, grid_topology, is_irreducible,
                             is_irreducible_by_power, topology_from_config)


def test_four_neuron_sets():
    top = Topology(FOUR_NEURON_T)
    sets, n_c = connection_sets(top)
    # 0-based neuron indices for C_1={2,4}, C_2={1,3}, C_3={2}, C_4={2}
    assert [list(s) for s in sets] == [[1, 3], [0, 2], [1], [1]]
    assert n_c == 6
    assert top.pairs == [(0, 1), (0, 3), (1, 0), (1, 2), (2, 1), (3, 1)]
    assert is_irreducible(top)
    t3 = np.linalg.matrix_power(FOUR_NEURON_T, 3)
    assert np.all(t3 > 0)


def test_trivial_topologies():
    eye = Topology(np.eye(2, dtype=int))
    assert not is_irreducible(eye)
    assert eye.n_c == 0
    full = Topology(np.ones((3, 3), dtype=int))
    assert full.n_c == 6 and all(len(s) == 2 for s in full.connection_sets)
    ring = Topology(np.array([[1, 0, 1], [1, 1, 0], [0, 1, 1]]))
    assert is_irreducible(ring)


@pytest.mark.parametrize("bad", [
    np.array([[1, 1], [1, 0]]),
    np.array([[1, 2], [1, 1]]),
    np.ones((2, 3)),
])
def test_invalid_indicator(bad):
    with pytest.raises(InvalidTopologyError):
        Topology(bad)


def test_irreducibility_agrees_with_power_test(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        t = (rng.random((n, n)) < rng.uniform(0.1, 0.6)).astype(int)
        np.fill_diagonal(t, 1)
        top = Topology(t)
        assert is_irreducible(top) == is_irreducible_by_power(top)
        if n >= 2:
            assert not is_irreducible(Topology(np.eye(n, dtype=int)))


def test_grids():
    g = grid_topology(2, 2)
    assert g.n_c == 8 and all(len(s) == 2 for s in g.connection_sets)
    g = grid_topology(1, 2)
    assert g.n_c == 2
    g = grid_topology(20, 20)
    assert g.n == 400
    assert len(g.connection_sets[21]) == 4
    assert len(g.connection_sets[0]) == 2
    assert np.array_equal(g.indicator, g.indicator.T)
    assert is_irreducible(g)
    with pytest.raises(InvalidTopologyError):
        grid_topology(1, 1)


def test_from_config():
    assert topology_from_config({"kind": "grid", "rows": 3, "cols": 2}).n == 6
    assert topology_from_config(FOUR_NEURON_T.tolist()).n_c == 6
    with pytest.raises(ValidationError) as exc:
        topology_from_config({"kind": "ring"}, "network.topology")
    assert exc.value.path == "network.topology"
