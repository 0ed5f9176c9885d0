"""Small hand-built instances used across the test modules."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from lprc.genbench import GenConfig, gen_random_instance
from lprc.instance import Arc, Bus, Instance, Line, Network, ODPair


def path_network(n_nodes):
    nodes = tuple(f"v{i}" for i in range(n_nodes))
    arcs = tuple(Arc(f"a{i}", f"v{i}", f"v{i + 1}") for i in range(n_nodes - 1))
    return Network(nodes, arcs)


def path_instance(n_arcs, ods, capacity=3, rewards=None, n_buses=1, capacities=None,
                  costs=None, K=1):
    """Buses sharing one line along a path ``v0 -> ... -> v{n_arcs}``.

    ``ods`` holds ``(i, j, demand)`` with node indices.  ``rewards`` maps
    ``(bus index, od index)`` to a value, or is a per-OD list shared by all buses.
    """
    net = path_network(n_arcs + 1)
    lines = (Line("dummy"), Line("L", tuple(a.id for a in net.arcs)))
    caps = capacities or [capacity] * n_buses
    buses = tuple(Bus(f"b{m}", caps[m], ("dummy", "L")) for m in range(n_buses))
    od_pairs = tuple(ODPair(f"v{i}", f"v{j}", d) for i, j, d in ods)
    rew = {}
    for m, bus in enumerate(buses):
        for n, od in enumerate(od_pairs):
            if isinstance(rewards, dict):
                v = rewards.get((m, n), 0)
            elif rewards is None:
                v = 1
            else:
                v = rewards[n]
            rew[(bus.id, "L", od.key)] = v
    cost = {}
    for m, bus in enumerate(buses):
        for k in range(K):
            if costs:
                cost[(bus.id, "L", k)] = costs[m][k] if isinstance(costs[m], (list, tuple)) else costs[m]
    return Instance(net, lines, buses, od_pairs, K, rew, cost)


def random_pricing_instance(rng: np.random.Generator):
    """One bus on a path line with up to 8 arcs, 6 ODs, demand <= 4, capacity <= 5."""
    n_arcs = int(rng.integers(1, 9))
    n_od = int(rng.integers(1, 7))
    ods = set()
    while len(ods) < n_od and len(ods) < n_arcs * (n_arcs + 1) // 2:
        i = int(rng.integers(0, n_arcs))
        j = int(rng.integers(i + 1, n_arcs + 1))
        ods.add((i, j))
    ods = sorted(ods)
    demand = [int(rng.integers(1, 5)) for _ in ods]
    rewards = [int(rng.integers(0, 6)) for _ in ods]
    inst = path_instance(n_arcs, [(i, j, d) for (i, j), d in zip(ods, demand)],
                         capacity=int(rng.integers(1, 6)), rewards=rewards)
    w = [Fraction(int(rng.integers(0, 9)), 2) for _ in ods]
    return inst, w


def micro_config(**kw):
    base = dict(n_buses=3, n_nodes=7, n_lines=3, line_arcs=(2, 4), n_od=4, demand=(1, 3),
                capacities=(2, 3), reward_rule="uniform")
    base.update(kw)
    return GenConfig(**base)


def micro_instance(seed, **kw):
    return gen_random_instance(micro_config(**kw), seed)
