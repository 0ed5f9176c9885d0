"""Instance generators, the Monte Carlo trial harness and benchmark suites."""

from __future__ import annotations

import csv
import io
import itertools
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .composite import DEFAULT_ENUM_CAP, CompositeResult, prepare_c, prepare_c_tol
from .instance import Arc, Bus, Instance, Line, Network, ODPair, find_subpath
from .relaxation import FractionalPlan, solve_relaxation
from .rounding import (
    IntegralPlan, RoundingParams, check_feasibility, frac, round_lc, round_nc,
)

ALGORITHMS = ("NC", "LC", "C", "C-Tol")
E = math.e


class GenerationError(RuntimeError):
    pass


class FeasibilityViolation(AssertionError):
    pass


# ---------------------------------------------------------------------------
# max k-cover reduction


@dataclass(frozen=True)
class KCoverSpec:
    n: int
    sets: tuple[frozenset, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        for s in self.sets:
            if not s or not s <= set(range(1, self.n + 1)):
                raise ValueError(f"set {sorted(s)} must be a nonempty subset of 1..{self.n}")
        if not 1 <= self.k <= len(self.sets):
            raise ValueError("k must lie in 1..L")


def max_k_cover_value(spec: KCoverSpec) -> int:
    """Largest union of k sets, by enumerating every k-subset of the family."""
    return max(len(frozenset().union(*combo)) for combo in
               itertools.combinations(spec.sets, spec.k))


def gen_kcover_instance(spec: KCoverSpec) -> Instance:
    """Line-planning instance whose optimum equals the max k-cover value of ``spec``.

    Element ``p_i`` becomes the unit-demand OD ``o{i}_1 -> o{i}_2``; set
    ``G_j`` becomes line ``L{j}`` visiting its elements in increasing order.
    There are ``k`` unit-capacity buses sharing all lines plus a dummy.
    """
    nodes = []
    for i in range(1, spec.n + 1):
        nodes += [f"o{i}_1", f"o{i}_2"]
    arcs = {f"e{i}": Arc(f"e{i}", f"o{i}_1", f"o{i}_2") for i in range(1, spec.n + 1)}
    lines = [Line("dummy", ())]
    for j, members in enumerate(spec.sets, start=1):
        seq = []
        elems = sorted(members)
        for a, b in zip(elems, elems[1:] + [None]):
            seq.append(f"e{a}")
            if b is not None:
                cid = f"c{a}_{b}"
                arcs.setdefault(cid, Arc(cid, f"o{a}_2", f"o{b}_1"))
                seq.append(cid)
        lines.append(Line(f"L{j}", tuple(seq)))
    line_ids = tuple(l.id for l in lines)
    buses = tuple(Bus(f"b{m}", 1, line_ids) for m in range(1, spec.k + 1))
    ods = tuple(ODPair(f"o{i}_1", f"o{i}_2", 1) for i in range(1, spec.n + 1))
    rewards = {}
    for j, members in enumerate(spec.sets, start=1):
        for i in members:
            for bus in buses:
                rewards[(bus.id, f"L{j}", (f"o{i}_1", f"o{i}_2"))] = 1
    network = Network(tuple(nodes), tuple(sorted(arcs.values(), key=lambda a: a.id)))
    return Instance(network, tuple(lines), buses, ods, K=1, rewards=rewards, costs={})


def random_kcover_spec(rng: np.random.Generator, n_max: int = 12, L_max: int = 8,
                       k_max: int = 4) -> KCoverSpec:
    n = int(rng.integers(2, n_max + 1))
    L = int(rng.integers(1, L_max + 1))
    sets = []
    for _ in range(L):
        size = int(rng.integers(1, n + 1))
        sets.append(frozenset(int(x) + 1 for x in rng.choice(n, size=size, replace=False)))
    k = int(rng.integers(1, min(k_max, L) + 1))
    return KCoverSpec(n, tuple(sets), k)


# ---------------------------------------------------------------------------
# random geometric instances


@dataclass
class GenConfig:
    n_buses: int = 3
    n_nodes: int = 8
    n_lines: int = 3
    line_arcs: tuple = (2, 4)
    n_od: int = 4
    demand: tuple = (1, 4)
    capacities: tuple = (2, 3)
    K: int = 1
    cost_regime: str = "ZERO"          # ZERO | SMALL | GENERAL
    eta: float = 0.2                   # SMALL regime threshold parameter
    general_cost: tuple = (0.1, 0.7)   # GENERAL regime cost range
    reward_rule: str = "distance"      # distance | uniform
    lines_per_bus: Optional[int] = None
    neighbors: int = 2
    max_retries: int = 50

    @classmethod
    def from_dict(cls, doc: dict) -> "GenConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown generator options: {sorted(unknown)}")
        doc = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**doc)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def _network(rng, n_nodes: int, neighbors: int) -> nx.DiGraph:
    pts = rng.random((n_nodes, 2))
    g = nx.DiGraph()
    g.add_nodes_from(range(n_nodes))
    centre = pts.mean(axis=0)
    ring = sorted(range(n_nodes), key=lambda i: math.atan2(*(pts[i] - centre)[::-1]))
    for a, b in zip(ring, ring[1:] + ring[:1]):
        if a != b:
            g.add_edge(a, b)
            g.add_edge(b, a)
    for i in range(n_nodes):
        dist = np.linalg.norm(pts - pts[i], axis=1)
        for j in np.argsort(dist)[1:neighbors + 1]:
            g.add_edge(i, int(j))
            g.add_edge(int(j), i)
    return g


def _random_path(rng, g: nx.DiGraph, lo: int, hi: int):
    target = int(rng.integers(lo, hi + 1))
    for _ in range(20):
        path = [int(rng.integers(g.number_of_nodes()))]
        while len(path) - 1 < target:
            nxt = [v for v in sorted(g.successors(path[-1])) if v not in path]
            if not nxt:
                break
            path.append(int(rng.choice(nxt)))
        if len(path) - 1 >= lo:
            return path
    return None


def gen_random_instance(config: GenConfig, seed: int) -> Instance:
    """Reproducible random instance; see :class:`GenConfig` for the knobs."""
    rng = np.random.default_rng(seed)
    regime = config.cost_regime.upper()
    if regime not in ("ZERO", "SMALL", "GENERAL"):
        raise ValueError(f"unknown cost regime {config.cost_regime!r}")
    for _ in range(config.max_retries):
        g = _network(rng, config.n_nodes, config.neighbors)
        paths = [_random_path(rng, g, *config.line_arcs) for _ in range(config.n_lines)]
        if any(p is None for p in paths):
            continue
        servable = sorted({(p[i], p[j]) for p in paths
                           for i in range(len(p)) for j in range(i + 1, len(p))})
        if len(servable) >= config.n_od:
            break
    else:
        raise GenerationError("could not place the requested OD pairs on the generated lines")

    name = lambda v: f"n{v}"
    arc_id = {e: f"a{t}" for t, e in enumerate(sorted(g.edges()))}
    network = Network(tuple(name(v) for v in sorted(g.nodes())),
                      tuple(Arc(arc_id[e], name(e[0]), name(e[1])) for e in sorted(g.edges())))
    lines = [Line("dummy", ())]
    for t, p in enumerate(paths, start=1):
        lines.append(Line(f"L{t}", tuple(arc_id[(a, b)] for a, b in zip(p, p[1:]))))
    picks = rng.choice(len(servable), size=config.n_od, replace=False)
    ods = []
    for t in sorted(int(x) for x in picks):
        o, d = servable[t]
        ods.append(ODPair(name(o), name(d), int(rng.integers(config.demand[0], config.demand[1] + 1))))

    caps = list(config.capacities)
    buses = []
    real_lines = [l.id for l in lines[1:]]
    for m in range(config.n_buses):
        cap = int(caps[m * len(caps) // config.n_buses])
        if config.lines_per_bus is None:
            cand = real_lines
        else:
            size = min(config.lines_per_bus, len(real_lines))
            cand = sorted(rng.choice(real_lines, size=size, replace=False).tolist(),
                          key=real_lines.index)
        buses.append(Bus(f"b{m + 1}", cap, ("dummy",) + tuple(cand)))

    shortest = dict(nx.all_pairs_shortest_path_length(g))
    node_paths = {l.id: [f"n{v}" for v in p] for l, p in zip(lines[1:], paths)}
    rewards = {}
    for bus in buses:
        for lid in bus.candidate_lines[1:]:
            for od in ods:
                rng_ = find_subpath(node_paths[lid], od.origin, od.destination)
                if rng_ is None:
                    continue
                if config.reward_rule == "uniform":
                    v = Fraction(int(rng.integers(1, 6)))
                else:
                    d_line = rng_[1] - rng_[0]
                    d_short = shortest[int(od.origin[1:])][int(od.destination[1:])]
                    v = distance_reward(d_short, d_line, bus.capacity)
                rewards[(bus.id, lid, od.key)] = v

    costs = {}
    if regime != "ZERO":
        small = frac(config.eta) ** 3 / (256 * config.K**3)
        lo, hi = (int(round(100 * x)) for x in config.general_cost)
        for bus in buses:
            for lid in bus.candidate_lines[1:]:
                for k in range(config.K):
                    if regime == "SMALL":
                        costs[(bus.id, lid, k)] = Fraction(int(rng.integers(0, 101)), 100) * small
                    else:
                        costs[(bus.id, lid, k)] = Fraction(int(rng.integers(lo, hi + 1)), 100)
    return Instance(network, tuple(lines), tuple(buses), tuple(ods), config.K, rewards, costs)


def distance_reward(d_short, d_line, capacity: int) -> Fraction:
    """Per-unit reward ``max(0, (1.5*D_s - D_l) / sqrt(C))``, rounded to a denominator <= 10^4."""
    num = Fraction(3, 2) * d_short - d_line
    if num <= 0:
        return Fraction(0)
    root = math.isqrt(capacity)
    if root * root == capacity:
        return Fraction(num) / root
    return Fraction(float(num) / math.sqrt(capacity)).limit_denominator(10**4)


# ---------------------------------------------------------------------------
# trial harness


@dataclass
class TrialStats:
    algorithm: str
    T: int
    base_seed: int
    rewards: list
    discarded: list
    usages: list
    mean: float
    stderr: float
    best: float
    discard_count: int
    violation_count: int = 0
    gamma: Optional[float] = None
    opt: Optional[float] = None
    bound: Optional[float] = None
    bound_label: Optional[str] = None
    context: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm, "T": self.T, "base_seed": self.base_seed,
            "mean": self.mean, "stderr": self.stderr, "best": self.best,
            "discard_count": self.discard_count, "violation_count": self.violation_count,
            "gamma": self.gamma, "opt": self.opt, "bound": self.bound,
            "bound_label": self.bound_label, "context": self.context,
            "max_usage": [max(col) for col in zip(*self.usages)] if self.usages else [],
            "rewards": self.rewards,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        K = len(self.usages[0]) if self.usages else 0
        writer.writerow(["seed", "reward", "discarded"] + [f"usage_{k}" for k in range(K)])
        for i, (r, d, u) in enumerate(zip(self.rewards, self.discarded, self.usages)):
            writer.writerow([self.base_seed + i, repr(r), int(d)] + [repr(x) for x in u])
        return buf.getvalue()


def summarize(rewards: Sequence[float]) -> tuple[float, float, float]:
    """(mean, standard error, max) of a reward list."""
    mean = statistics.fmean(rewards)
    stderr = statistics.stdev(rewards) / math.sqrt(len(rewards)) if len(rewards) > 1 else 0.0
    return mean, stderr, max(rewards)


@dataclass
class Prepared:
    """Everything a single trial needs: a plan and how to round it."""

    algorithm: str
    plan: FractionalPlan
    params: Optional[RoundingParams] = None
    composite: Optional[CompositeResult] = None

    def round(self, instance: Instance, seed: int) -> IntegralPlan:
        if self.composite is not None:
            return self.composite.round(instance, seed)
        if self.algorithm == "NC":
            return round_nc(self.plan, instance, seed)
        return round_lc(self.plan, instance, self.params, seed)

    @property
    def budget(self):
        if self.composite is not None:
            return self.composite.budget
        return 1


def prepare(instance: Instance, algorithm: str, eta=None, tau=None, exact: bool = False,
            cap: Optional[int] = DEFAULT_ENUM_CAP) -> Prepared:
    if algorithm == "NC":
        return Prepared("NC", solve_relaxation(instance, exact=exact))
    if algorithm == "LC":
        params = RoundingParams(eta, instance.K)
        return Prepared("LC", solve_relaxation(instance, exact=exact), params)
    if algorithm == "C":
        comp = prepare_c(instance, eta, exact=exact, cap=cap)
        return Prepared("C", comp.plan, comp.params, comp)
    if algorithm == "C-Tol":
        comp = prepare_c_tol(instance, eta, tau, exact=exact, cap=cap)
        return Prepared("C-Tol", comp.plan, comp.params, comp)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def bound_line(prepared: Prepared, opt=None) -> tuple[Optional[float], str]:
    """The expected-reward guarantee that applies to ``prepared``."""
    a = prepared.algorithm
    if a == "NC":
        return (1 - 1 / E) * float(prepared.plan.gamma), "(1-1/e)*Gamma"
    eta = float(prepared.params.eta)
    if a == "LC":
        return (1 - 1 / E - eta) * float(prepared.plan.gamma), "(1-1/e-eta)*Gamma"
    if opt is None:
        return None, "needs OPT"
    if a == "C":
        return (0.5 - 0.5 / E - eta) * float(opt), "(1/2-1/(2e)-eta)*OPT"
    return (1 - 1 / E - eta) * float(opt), "(1-1/e-eta)*OPT"


def _run_seeds(args):
    prepared, instance, seeds, budget = args
    out = []
    for s in seeds:
        plan = prepared.round(instance, s)
        report = check_feasibility(plan, instance, budget)
        if not report.ok:
            raise FeasibilityViolation(f"seed {s}: {report.violations}")
        out.append((float(plan.reward), plan.discarded, tuple(float(u) for u in plan.usage)))
    return out


def run_trials(instance: Instance, prepared: Prepared, T: int, base_seed: int = 0,
               opt=None, budget="auto", jobs: int = 1) -> TrialStats:
    """Round ``prepared`` ``T`` times with seeds ``base_seed + i`` and audit every plan.

    Any infeasible plan raises :class:`FeasibilityViolation`.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if budget == "auto":
        budget = prepared.budget
    seeds = list(range(base_seed, base_seed + T))
    if jobs > 1:
        chunks = [seeds[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_seeds, [(prepared, instance, c, budget) for c in chunks]))
        by_seed = {}
        for chunk, part in zip(chunks, parts):
            by_seed.update(zip(chunk, part))
        results = [by_seed[s] for s in seeds]
    else:
        results = _run_seeds((prepared, instance, seeds, budget))
    rewards = [r for r, _, _ in results]
    mean, stderr, best = summarize(rewards)
    bound, label = bound_line(prepared, opt)
    context = {"budget": None if budget is None else str(budget)}
    if prepared.composite is not None:
        context.update(prepared.composite.to_json())
    return TrialStats(
        algorithm=prepared.algorithm, T=T, base_seed=base_seed, rewards=rewards,
        discarded=[d for _, d, _ in results], usages=[u for _, _, u in results],
        mean=mean, stderr=stderr, best=best,
        discard_count=sum(d for _, d, _ in results),
        gamma=float(prepared.plan.gamma), opt=None if opt is None else float(opt),
        bound=bound, bound_label=label, context=context,
    )
