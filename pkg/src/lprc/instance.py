"""LPRC problem instances: data model, validation, subpath indexing and I/O.

An instance holds a directed network, candidate lines (directed walks over
its arcs), buses with capacities and candidate line sets, OD pairs with
integral demand, per-unit rewards ``v[b, l, od]`` and per-resource costs
``c[b, l, k]``.  Rewards and costs are kept as :class:`fractions.Fraction`
so that relaxation values can be compared exactly against the oracle.

Resource indices ``k`` are 0-based everywhere, including the JSON format.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

import jsonschema

OD = tuple[str, str]


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be parsed or violates the schema."""


@dataclass(frozen=True)
class Arc:
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    arcs: tuple[Arc, ...]

    @cached_property
    def arc_by_id(self) -> dict[str, Arc]:
        return {a.id: a for a in self.arcs}


@dataclass(frozen=True)
class Line:
    id: str
    arc_sequence: tuple[str, ...] = ()

    @property
    def is_dummy(self) -> bool:
        return not self.arc_sequence

    def node_sequence(self, network: Network) -> tuple[str, ...]:
        if not self.arc_sequence:
            return ()
        arcs = [network.arc_by_id[a] for a in self.arc_sequence]
        return (arcs[0].tail,) + tuple(a.head for a in arcs)


@dataclass(frozen=True)
class Bus:
    id: str
    capacity: int
    candidate_lines: tuple[str, ...]


@dataclass(frozen=True)
class ODPair:
    origin: str
    destination: str
    demand: int

    @property
    def key(self) -> OD:
        return (self.origin, self.destination)


def as_fraction(value) -> Fraction:
    """Convert an int, decimal string, ``"p/q"`` string, ``[p, q]`` pair or float to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a rational value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class Instance:
    """A full LPRC instance.

    ``rewards`` maps ``(bus, line, (origin, destination))`` to the per-unit
    reward and ``costs`` maps ``(bus, line, k)`` to the resource cost.  Zero
    entries are dropped on construction, so missing keys mean zero.
    """

    network: Network
    lines: tuple[Line, ...]
    buses: tuple[Bus, ...]
    od_pairs: tuple[ODPair, ...]
    K: int
    rewards: Mapping[tuple[str, str, OD], Fraction] = field(default_factory=dict)
    costs: Mapping[tuple[str, str, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("rewards", "costs"):
            table = {key: as_fraction(v) for key, v in getattr(self, name).items()}
            object.__setattr__(self, name, {key: v for key, v in table.items() if v != 0})

    # lookups -----------------------------------------------------------------

    @cached_property
    def line_by_id(self) -> dict[str, Line]:
        return {line.id: line for line in self.lines}

    @cached_property
    def bus_by_id(self) -> dict[str, Bus]:
        return {bus.id: bus for bus in self.buses}

    @cached_property
    def od_index(self) -> dict[OD, int]:
        return {od.key: i for i, od in enumerate(self.od_pairs)}

    @property
    def M(self) -> int:
        return len(self.buses)

    def reward(self, bus: str, line: str, od: OD) -> Fraction:
        return self.rewards.get((bus, line, od), Fraction(0))

    def cost(self, bus: str, line: str, k: int) -> Fraction:
        return self.costs.get((bus, line, k), Fraction(0))

    def cost_vector(self, bus: str, line: str) -> tuple[Fraction, ...]:
        return tuple(self.cost(bus, line, k) for k in range(self.K))

    def dummy_line(self, bus: str) -> str:
        """First candidate line of ``bus`` with an empty arc sequence."""
        for lid in self.bus_by_id[bus].candidate_lines:
            line = self.line_by_id.get(lid)
            if line is not None and line.is_dummy:
                return lid
        raise KeyError(f"bus {bus!r} has no dummy line")

    @cached_property
    def subpaths(self) -> "SubpathIndex":
        return build_subpath_index(self)


# ---------------------------------------------------------------------------
# subpath index


@dataclass(frozen=True)
class SubpathIndex:
    """Arc ranges ``[start, stop)`` of each servable (od, line) pair.

    Pairs that a line cannot serve are absent from ``ranges``.
    """

    ranges: Mapping[tuple[OD, str], tuple[int, int]]

    def get(self, od: OD, line: str) -> Optional[tuple[int, int]]:
        return self.ranges.get((od, line))

    def servable(self, line: str) -> list[OD]:
        return [od for (od, lid) in self.ranges if lid == line]


def find_subpath(nodes: Sequence[str], origin: str, destination: str) -> Optional[tuple[int, int]]:
    """Arc range from the first visit of ``origin`` to the first later visit of ``destination``."""
    try:
        i = nodes.index(origin)
    except ValueError:
        return None
    for j in range(i + 1, len(nodes)):
        if nodes[j] == destination:
            return (i, j)
    return None


def build_subpath_index(instance: Instance) -> SubpathIndex:
    ranges = {}
    for line in instance.lines:
        if line.is_dummy:
            continue
        nodes = line.node_sequence(instance.network)
        for od in instance.od_pairs:
            r = find_subpath(nodes, od.origin, od.destination)
            if r is not None:
                ranges[(od.key, line.id)] = r
    return SubpathIndex(ranges)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message}


def validate(instance: Instance) -> list[Violation]:
    """Check every structural invariant; an empty list means the instance is valid."""
    out: list[Violation] = []

    def bad(code, msg):
        out.append(Violation(code, msg))

    net = instance.network
    node_set = set(net.nodes)
    if len(node_set) != len(net.nodes):
        bad("duplicate-node", "node ids are not unique")
    seen_arcs = set()
    for arc in net.arcs:
        if arc.id in seen_arcs:
            bad("duplicate-arc", f"arc id {arc.id!r} is not unique")
        seen_arcs.add(arc.id)
        if arc.tail == arc.head:
            bad("self-loop", f"arc {arc.id!r} has tail equal to head")
        for end in (arc.tail, arc.head):
            if end not in node_set:
                bad("unknown-node", f"arc {arc.id!r} references unknown node {end!r}")

    if instance.K < 1:
        bad("bad-K", f"K must be at least 1, got {instance.K}")

    line_ids = set()
    for line in instance.lines:
        if line.id in line_ids:
            bad("duplicate-line", f"line id {line.id!r} is not unique")
        line_ids.add(line.id)
        prev = None
        for aid in line.arc_sequence:
            arc = net.arc_by_id.get(aid)
            if arc is None:
                bad("unknown-arc", f"line {line.id!r} uses unknown arc {aid!r}")
                prev = None
                continue
            if prev is not None and prev.head != arc.tail:
                bad("bad-chaining", f"line {line.id!r}: arc {prev.id!r} does not chain into {aid!r}")
            prev = arc

    bus_ids = set()
    for bus in instance.buses:
        if bus.id in bus_ids:
            bad("duplicate-bus", f"bus id {bus.id!r} is not unique")
        bus_ids.add(bus.id)
        if not isinstance(bus.capacity, int) or bus.capacity < 1:
            bad("bad-capacity", f"bus {bus.id!r} capacity must be a positive integer")
        for lid in bus.candidate_lines:
            if lid not in line_ids:
                bad("unknown-line", f"bus {bus.id!r} lists unknown line {lid!r}")
        if not any(lid in instance.line_by_id and instance.line_by_id[lid].is_dummy
                   for lid in bus.candidate_lines):
            bad("missing-dummy", f"bus {bus.id!r} has no dummy line among its candidates")

    ods = set()
    for od in instance.od_pairs:
        if od.key in ods:
            bad("duplicate-od", f"OD pair {od.key} listed twice")
        ods.add(od.key)
        if od.origin == od.destination:
            bad("od-loop", f"OD pair {od.key}: origin equals destination")
        if not isinstance(od.demand, int) or od.demand < 1:
            bad("bad-demand", f"OD pair {od.key}: demand must be a positive integer")
        for end in (od.origin, od.destination):
            if end not in node_set:
                bad("unknown-node", f"OD pair {od.key} references unknown node {end!r}")

    structural_ok = not out
    index = build_subpath_index(instance) if structural_ok else None

    for (b, l, od), v in instance.rewards.items():
        if b not in bus_ids or l not in line_ids or od not in ods:
            bad("unknown-key", f"reward entry {(b, l, od)} references unknown bus/line/od")
            continue
        if v < 0:
            bad("negative-reward", f"reward {(b, l, od)} is negative")
        if instance.line_by_id[l].is_dummy:
            bad("dummy-reward", f"dummy line must have zero reward: {(b, l, od)}")
        elif index is not None and index.get(od, l) is None:
            bad("unservable-reward", f"reward on OD {od} that line {l!r} does not serve")

    for (b, l, k), c in instance.costs.items():
        if b not in bus_ids or l not in line_ids:
            bad("unknown-key", f"cost entry {(b, l, k)} references unknown bus/line")
            continue
        if not 0 <= k < max(instance.K, 0):
            bad("bad-resource", f"cost entry {(b, l, k)}: resource index out of range")
        if not 0 <= c <= 1:
            bad("cost-range", f"cost out of [0,1]: {(b, l, k)} = {c}")
        if instance.line_by_id[l].is_dummy:
            bad("dummy-cost", f"dummy line must have zero cost: {(b, l, k)}")
    return out


# ---------------------------------------------------------------------------
# serialization


def _load_schema(name: str) -> dict:
    return json.loads(resources.files("lprc.schemas").joinpath(name).read_text("utf-8"))


def fraction_to_json(x: Fraction):
    """Decimal string when the value has a terminating expansion, else ``[num, den]``."""
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return [x.numerator, x.denominator]
    digits = max(twos, fives)
    if digits == 0:
        return str(x.numerator)
    scaled = abs(x.numerator) * 10**digits // x.denominator
    sign = "-" if x < 0 else ""
    s = str(scaled).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def instance_to_dict(instance: Instance) -> dict:
    return {
        "K": instance.K,
        "nodes": list(instance.network.nodes),
        "arcs": [{"id": a.id, "tail": a.tail, "head": a.head} for a in instance.network.arcs],
        "lines": [{"id": l.id, "arcs": list(l.arc_sequence)} for l in instance.lines],
        "buses": [
            {"id": b.id, "capacity": b.capacity, "candidate_lines": list(b.candidate_lines)}
            for b in instance.buses
        ],
        "od_pairs": [
            {"origin": od.origin, "destination": od.destination, "demand": od.demand}
            for od in instance.od_pairs
        ],
        "rewards": [
            {"bus": b, "line": l, "origin": od[0], "destination": od[1], "value": fraction_to_json(v)}
            for (b, l, od), v in sorted(instance.rewards.items())
        ],
        "costs": [
            {"bus": b, "line": l, "k": k, "value": fraction_to_json(v)}
            for (b, l, k), v in sorted(instance.costs.items())
        ],
    }


def instance_from_dict(doc: dict) -> Instance:
    try:
        jsonschema.validate(doc, _load_schema("instance.schema.json"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InstanceFormatError(f"schema violation at {where}: {exc.message}") from None
    network = Network(
        nodes=tuple(doc["nodes"]),
        arcs=tuple(Arc(a["id"], a["tail"], a["head"]) for a in doc["arcs"]),
    )
    rewards = {}
    for i, r in enumerate(doc.get("rewards", [])):
        try:
            rewards[(r["bus"], r["line"], (r["origin"], r["destination"]))] = as_fraction(r["value"])
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise InstanceFormatError(f"rewards/{i}/value: {exc}") from None
    costs = {}
    for i, c in enumerate(doc.get("costs", [])):
        try:
            costs[(c["bus"], c["line"], c["k"])] = as_fraction(c["value"])
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise InstanceFormatError(f"costs/{i}/value: {exc}") from None
    return Instance(
        network=network,
        lines=tuple(Line(l["id"], tuple(l["arcs"])) for l in doc["lines"]),
        buses=tuple(Bus(b["id"], b["capacity"], tuple(b["candidate_lines"])) for b in doc["buses"]),
        od_pairs=tuple(ODPair(o["origin"], o["destination"], o["demand"]) for o in doc["od_pairs"]),
        K=doc["K"],
        rewards=rewards,
        costs=costs,
    )


def save_instance(instance: Instance) -> bytes:
    return (json.dumps(instance_to_dict(instance), indent=1) + "\n").encode("utf-8")


def load_instance(data: bytes | str) -> Instance:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(doc)


def load_od_csv(data: bytes | str, network: Network) -> list[ODPair]:
    """Read ``origin,destination,demand`` rows, summing duplicate pairs."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data))
    if reader.fieldnames is None:
        return []
    if [f.strip() for f in reader.fieldnames] != ["origin", "destination", "demand"]:
        raise InstanceFormatError("OD csv header must be origin,destination,demand")
    nodes = set(network.nodes)
    totals: dict[OD, int] = {}
    for lineno, row in enumerate(reader, start=2):
        o, d, raw = row["origin"].strip(), row["destination"].strip(), row["demand"].strip()
        for end in (o, d):
            if end not in nodes:
                raise InstanceFormatError(f"line {lineno}: unknown node id {end!r}")
        if o == d:
            raise InstanceFormatError(f"line {lineno}: origin equals destination")
        try:
            demand = int(raw)
        except ValueError:
            raise InstanceFormatError(f"line {lineno}: demand {raw!r} is not an integer") from None
        if demand < 1:
            raise InstanceFormatError(f"line {lineno}: demand must be positive")
        totals[(o, d)] = totals.get((o, d), 0) + demand
    return [ODPair(o, d, n) for (o, d), n in totals.items()]


def replace_od_pairs(instance: Instance, od_pairs: Iterable[ODPair]) -> Instance:
    return Instance(instance.network, instance.lines, instance.buses, tuple(od_pairs),
                    instance.K, instance.rewards, instance.costs)
