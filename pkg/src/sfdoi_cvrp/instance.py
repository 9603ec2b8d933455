"""CVRPLIB instance parsing, rounded distance matrices and ng-neighborhoods.

Node numbering used everywhere downstream: ``0`` is the start depot,
``1..N`` are the customers in file order and ``N + 1`` is a copy of the
depot acting as the end depot, so every route is an open path ``0 -> N+1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Instance",
    "Neighborhoods",
    "ParseError",
    "parse_cvrplib",
    "read_instance",
    "to_cvrplib",
    "build_neighborhoods",
    "bundled_instances",
    "bundled_path",
]


class ParseError(ValueError):
    """Raised for malformed instance files; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    coords: np.ndarray  # (N + 2, 2), rows 0 and N + 1 are the depot
    demand: np.ndarray  # (N + 2,), zero at both depots
    capacity: int
    dist: np.ndarray  # (N + 2, N + 2) int64
    fixed_cost: Fraction = Fraction(0)
    vehicle_bound: int = 0

    def __post_init__(self):
        if self.vehicle_bound <= 0:
            object.__setattr__(self, "vehicle_bound", self.n_customers)

    @property
    def n_customers(self) -> int:
        return len(self.demand) - 2

    @property
    def end_depot(self) -> int:
        return len(self.demand) - 1

    @property
    def customers(self) -> range:
        return range(1, self.n_customers + 1)

    @classmethod
    def from_coords(
        cls,
        depot: Sequence[float],
        customers: Sequence[Sequence[float]],
        demands: Sequence[int],
        capacity: int,
        fixed_cost=0,
        name: str = "instance",
        vehicle_bound: int = 0,
    ) -> "Instance":
        if len(customers) != len(demands):
            raise ValueError("one demand per customer required")
        pts = np.array([depot, *customers, depot], dtype=float).reshape(-1, 2)
        dem = np.array([0, *demands, 0], dtype=np.int64)
        if np.any(dem[1:-1] <= 0):
            raise ValueError("customer demands must be positive")
        if np.any(dem > capacity):
            raise ValueError("a customer demand exceeds the vehicle capacity")
        return cls(
            name=name,
            coords=pts,
            demand=dem,
            capacity=int(capacity),
            dist=euclidean_rounded(pts),
            fixed_cost=Fraction(fixed_cost),
            vehicle_bound=vehicle_bound,
        )

    def with_fixed_cost(self, fixed_cost) -> "Instance":
        return Instance(self.name, self.coords, self.demand, self.capacity,
                        self.dist, Fraction(fixed_cost), self.vehicle_bound)

    def with_vehicle_bound(self, kappa: int) -> "Instance":
        return Instance(self.name, self.coords, self.demand, self.capacity,
                        self.dist, self.fixed_cost, kappa)


def euclidean_rounded(points: np.ndarray) -> np.ndarray:
    n = len(points)
    dist = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            d = math.hypot(points[i, 0] - points[j, 0], points[i, 1] - points[j, 1])
            dist[i, j] = dist[j, i] = round_half_away(d)
    return dist


_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:\s*(.*?)\s*$")
_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def parse_cvrplib(text: str, name: str | None = None) -> Instance:
    """Parse a TSPLIB/CVRPLIB ``.vrp`` document with EUC_2D weights."""
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    demand_line: dict[int, int] = {}
    depots: list[int] = []
    section = None
    section_line: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        key = line.split()[0].rstrip(":")
        if key in _SECTIONS:
            section = key
            section_line[key] = lineno
            continue
        m = _HEADER.match(line)
        if m and not line[0].isdigit() and not line.startswith("-"):
            header[m.group(1)] = m.group(2)
            section = None
            continue
        if section is None:
            raise ParseError(f"unexpected content {line!r}", lineno)
        parts = line.split()
        try:
            if section == "NODE_COORD_SECTION":
                if len(parts) != 3:
                    raise ValueError
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "DEMAND_SECTION":
                if len(parts) != 2:
                    raise ValueError
                demands[int(parts[0])] = int(parts[1])
                demand_line[int(parts[0])] = lineno
            else:
                for p in parts:
                    if int(p) != -1:
                        depots.append(int(p))
        except ValueError:
            raise ParseError(f"malformed {section} entry {line!r}", lineno) from None

    weight_type = header.get("EDGE_WEIGHT_TYPE", "EUC_2D")
    if weight_type != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {weight_type}")
    if "CAPACITY" not in header:
        raise ParseError("missing CAPACITY")
    try:
        capacity = int(header["CAPACITY"])
    except ValueError:
        raise ParseError(f"bad CAPACITY {header['CAPACITY']!r}") from None
    for sec in ("NODE_COORD_SECTION", "DEMAND_SECTION"):
        if sec not in section_line:
            raise ParseError(f"missing {sec}")
    dim = int(header.get("DIMENSION", len(coords)))
    ids = list(range(1, dim + 1))
    if sorted(coords) != ids:
        raise ParseError("node ids in NODE_COORD_SECTION do not match DIMENSION",
                         section_line["NODE_COORD_SECTION"])
    if sorted(demands) != ids:
        raise ParseError("node ids in DEMAND_SECTION do not match DIMENSION",
                         section_line["DEMAND_SECTION"])
    depot = depots[0] if depots else 1
    if depot not in coords:
        raise ParseError(f"depot {depot} is not a node", section_line.get("DEPOT_SECTION"))
    if demands[depot] != 0:
        raise ParseError(f"depot {depot} has nonzero demand {demands[depot]}",
                         demand_line[depot])
    custs = [i for i in ids if i != depot]
    for i in custs:
        if demands[i] <= 0:
            raise ParseError(f"customer {i} has non-positive demand {demands[i]}",
                             demand_line[i])
        if demands[i] > capacity:
            raise ParseError(f"customer {i} demand exceeds capacity", demand_line[i])

    name = header.get("NAME", name or "instance")
    m = re.search(r"-k(\d+)$", name)
    return Instance.from_coords(
        coords[depot],
        [coords[i] for i in custs],
        [demands[i] for i in custs],
        capacity,
        name=name,
        vehicle_bound=int(m.group(1)) if m else 0,
    )


def read_instance(path: str | Path, fixed_cost=0, vehicle_bound: int | None = None) -> Instance:
    path = Path(path)
    inst = parse_cvrplib(path.read_text(), name=path.stem)
    if fixed_cost:
        inst = inst.with_fixed_cost(fixed_cost)
    if vehicle_bound:
        inst = inst.with_vehicle_bound(vehicle_bound)
    return inst


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def to_cvrplib(inst: Instance) -> str:
    """Serialize back to the CVRPLIB grammar (the end depot is dropped)."""
    n = inst.n_customers
    lines = [
        f"NAME : {inst.name}",
        "TYPE : CVRP",
        f"DIMENSION : {n + 1}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {inst.capacity}",
        "NODE_COORD_SECTION",
    ]
    for i in range(n + 1):
        x, y = inst.coords[i]
        lines.append(f"{i + 1} {_fmt(x)} {_fmt(y)}")
    lines.append("DEMAND_SECTION")
    lines += [f"{i + 1} {int(inst.demand[i])}" for i in range(n + 1)]
    lines += ["DEPOT_SECTION", " 1", " -1", "EOF", ""]
    return "\n".join(lines)


@dataclass(frozen=True)
class Neighborhoods:
    """ng-sets ``N_u`` indexed by customer (index 0 is an unused placeholder)."""

    sets: tuple[frozenset[int], ...]
    ng_size: int
    order: tuple[tuple[int, ...], ...] = field(default=(), compare=False)

    def __getitem__(self, u: int) -> frozenset[int]:
        return self.sets[u]

    def __len__(self) -> int:
        return len(self.sets) - 1


def build_neighborhoods(inst: Instance, ng_size: int) -> Neighborhoods:
    n = inst.n_customers
    if n == 1:
        # nothing to remember on a single-customer instance
        return Neighborhoods((frozenset(), frozenset()), 0, ((), ()))
    if not 1 <= ng_size <= n - 1:
        raise ValueError(f"ng_size must lie in [1, {n - 1}], got {ng_size}")
    sets, order = [frozenset()], [()]
    for u in inst.customers:
        others = sorted((int(inst.dist[u, v]), v) for v in inst.customers if v != u)
        near = tuple(v for _, v in others[:ng_size])
        sets.append(frozenset(near))
        order.append(near)
    return Neighborhoods(tuple(sets), ng_size, tuple(order))


def bundled_path(name: str) -> Path:
    if not name.endswith(".vrp"):
        name += ".vrp"
    return Path(str(resources.files("sfdoi_cvrp") / "data" / name))


def bundled_instances(sets: str = "ABEP", max_customers: int = 50) -> list[str]:
    """Names of packaged benchmark instances, filtered by set letter and size."""
    out = []
    for p in sorted((resources.files("sfdoi_cvrp") / "data").iterdir(), key=lambda p: p.name):
        m = re.match(r"([A-Z])-n(\d+)-k\d+\.vrp$", p.name)
        if m and m.group(1) in sets and int(m.group(2)) - 1 <= max_customers:
            out.append(p.name[:-4])
    out.sort(key=lambda s: (s[0], int(re.search(r"-n(\d+)", s).group(1)), s))
    return out
