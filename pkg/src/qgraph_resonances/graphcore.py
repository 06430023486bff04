"""Metric graphs with leads, their combinatorial invariants, and a catalog of named graphs."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Base class for invalid graph input."""


class GraphParseError(GraphError):
    pass


class NonPositiveLengthError(GraphError):
    pass


class UnknownVertexError(GraphError):
    pass


class DuplicateIdError(GraphError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class CatalogError(GraphError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.source == self.target


@dataclass(frozen=True)
class MetricGraph:
    """A finite metric graph with half-line leads attached at some vertices.

    Loops and parallel edges are allowed.  ``leads`` maps a vertex to its
    number of leads; vertices absent from the map carry none.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    leads: tuple[tuple[str, int], ...] = ()
    _lead_map: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(str(v) for v in self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        lead_map: dict[str, int] = {}
        for v, n in self.leads:
            if v in lead_map:
                raise DuplicateIdError(f"lead record for vertex {v!r} given twice")
            lead_map[str(v)] = int(n)
        object.__setattr__(self, "leads", tuple(lead_map.items()))
        object.__setattr__(self, "_lead_map", lead_map)
        self._validate()

    def _validate(self) -> None:
        if len(set(self.vertices)) != len(self.vertices):
            dup = next(v for v in self.vertices if self.vertices.count(v) > 1)
            raise DuplicateIdError(f"duplicate vertex id {dup!r}")
        if not self.vertices:
            raise GraphError("graph has no vertices")
        known = set(self.vertices)
        seen: set[str] = set()
        for e in self.edges:
            if e.id in seen:
                raise DuplicateIdError(f"duplicate edge id {e.id!r}")
            seen.add(e.id)
            for v in (e.source, e.target):
                if v not in known:
                    raise UnknownVertexError(f"edge {e.id!r} references unknown vertex {v!r}")
            if not (e.length > 0) or not math.isfinite(e.length):
                raise NonPositiveLengthError(f"edge {e.id!r} has nonpositive length {e.length!r}")
        for v, n in self._lead_map.items():
            if v not in known:
                raise UnknownVertexError(f"lead attached to unknown vertex {v!r}")
            if n < 1:
                raise GraphError(f"lead count at {v!r} must be >= 1, got {n}")
        if not _is_connected(self.vertices, self.edges):
            raise DisconnectedGraphError("graph is not connected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_leads(self) -> int:
        return sum(self._lead_map.values())

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(e.length for e in self.edges)

    @property
    def total_length(self) -> float:
        return math.fsum(self.lengths)

    @property
    def v0(self) -> tuple[str, ...]:
        """Vertices carrying at least one lead, in vertex order."""
        return tuple(v for v in self.vertices if v in self._lead_map)

    def lead_count(self, v: str) -> int:
        return self._lead_map.get(v, 0)

    def edge_degree(self, v: str) -> int:
        """Number of edge endpoints at ``v`` (a loop counts twice)."""
        return sum((e.source == v) + (e.target == v) for e in self.edges)

    def degree(self, v: str) -> int:
        """Degree in G: edge endpoints plus attached leads."""
        return self.edge_degree(v) + self.lead_count(v)

    def with_lengths(self, lengths: Sequence[float]) -> "MetricGraph":
        if len(lengths) != len(self.edges):
            raise GraphError(f"expected {len(self.edges)} lengths, got {len(lengths)}")
        edges = tuple(Edge(e.id, e.source, e.target, float(l)) for e, l in zip(self.edges, lengths))
        return MetricGraph(self.vertices, edges, self.leads)

    def to_document(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "from": e.source, "to": e.target, "length": e.length}
                for e in self.edges
            ],
            "leads": [{"vertex": v, "count": n} for v, n in self.leads],
        }


def _is_connected(vertices: Sequence[str], edges: Iterable[Edge]) -> bool:
    adj: dict[str, set[str]] = {v: set() for v in vertices}
    for e in edges:
        adj[e.source].add(e.target)
        adj[e.target].add(e.source)
    start = vertices[0]
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(vertices)


def load_graph(text: str) -> MetricGraph:
    """Parse a JSON graph document into a validated :class:`MetricGraph`.

    The document has top-level keys ``vertices`` (list of strings), ``edges``
    (records with ``id``, ``from``, ``to``, ``length``) and ``leads`` (records
    with ``vertex`` and ``count``).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphParseError("graph document must be a JSON object")
    try:
        vertices = doc["vertices"]
        edge_docs = doc.get("edges", [])
        lead_docs = doc.get("leads", [])
    except KeyError as exc:
        raise GraphParseError(f"missing field {exc}") from exc
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        raise GraphParseError("'vertices' must be a list of strings")
    if not isinstance(edge_docs, list) or not isinstance(lead_docs, list):
        raise GraphParseError("'edges' and 'leads' must be lists")
    edges = []
    for rec in edge_docs:
        try:
            length = _parse_number(rec["length"])
            edges.append(Edge(str(rec["id"]), str(rec["from"]), str(rec["to"]), length))
        except (KeyError, TypeError) as exc:
            raise GraphParseError(f"malformed edge record {rec!r}") from exc
    leads = []
    for rec in lead_docs:
        try:
            count = rec["count"]
            if isinstance(count, bool) or not isinstance(count, int):
                raise GraphParseError(f"lead count must be an integer in {rec!r}")
            leads.append((str(rec["vertex"]), count))
        except (KeyError, TypeError) as exc:
            raise GraphParseError(f"malformed lead record {rec!r}") from exc
    return MetricGraph(tuple(vertices), tuple(edges), tuple(leads))


def _parse_number(value) -> float:
    if isinstance(value, bool):
        raise GraphParseError(f"length must be numeric, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise GraphParseError(f"length must be numeric, got {value!r}") from None
    raise GraphParseError(f"length must be numeric, got {value!r}")


# ---------------------------------------------------------------------------
# invariants

@dataclass(frozen=True)
class GraphInvariants:
    graph_type: str  # "I" or "II"
    g: float  # positive integer, or math.inf for type I
    total_length: float
    v0_size: int
    d_lower: int
    d_upper: float
    d_conjecture: float

    def to_json(self) -> dict:
        def num(x):
            return "inf" if x == math.inf else int(x)

        return {
            "type": self.graph_type,
            "g": num(self.g),
            "total_length": self.total_length,
            "v0_size": self.v0_size,
            "d_lower": self.d_lower,
            "d_upper": num(self.d_upper),
            "d_conjecture": num(self.d_conjecture),
        }


@dataclass
class _Skeleton:
    """Mutable combinatorial skeleton used for degree-2 suppression."""

    vertices: set
    edges: dict  # edge key -> [u, v, length]
    leads: dict

    def edge_degree(self, v) -> int:
        return sum((u == v) + (w == v) for u, w, _ in self.edges.values())

    def degree(self, v) -> int:
        return self.edge_degree(v) + self.leads.get(v, 0)


def _suppress_degree_two(g: MetricGraph) -> _Skeleton:
    """Remove degree-2 vertices of G, merging series edges.

    A lead-free vertex between two distinct edges is smoothed out; a vertex
    with one edge and a single lead is absorbed into that lead, which then
    hangs from the far end of the edge.  Isolated circles are kept as they are.
    """
    sk = _Skeleton(
        set(g.vertices),
        {i: [e.source, e.target, e.length] for i, e in enumerate(g.edges)},
        dict(g.leads),
    )
    counter = len(g.edges)
    changed = True
    while changed:
        changed = False
        for v in sorted(sk.vertices):
            if sk.degree(v) != 2:
                continue
            incident = [k for k, (a, b, _) in sk.edges.items() if v in (a, b)]
            if sk.leads.get(v, 0) == 0 and len(incident) == 2:
                (k1, k2) = incident
                a1, b1, l1 = sk.edges.pop(k1)
                a2, b2, l2 = sk.edges.pop(k2)
                far1 = b1 if a1 == v else a1
                far2 = b2 if a2 == v else a2
                sk.edges[counter] = [far1, far2, l1 + l2]
                counter += 1
                sk.vertices.discard(v)
                changed = True
                break
            if sk.leads.get(v, 0) == 1 and len(incident) == 1:
                a, b, _ = sk.edges[incident[0]]
                if a == b:
                    continue
                far = b if a == v else a
                del sk.edges[incident[0]]
                del sk.leads[v]
                sk.leads[far] = sk.leads.get(far, 0) + 1
                sk.vertices.discard(v)
                changed = True
                break
    return sk


def _shortest_cycle(sk: _Skeleton) -> float:
    """Vertex count of the shortest simple cycle of the multigraph skeleton."""
    if any(a == b for a, b, _ in sk.edges.values()):
        return 1
    pairs = set()
    for a, b, _ in sk.edges.values():
        key = (a, b) if a <= b else (b, a)
        if key in pairs:
            return 2
        pairs.add(key)
    adj: dict = {v: set() for v in sk.vertices}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    best = math.inf
    for root in sorted(adj):
        dist = {root: 0}
        parent = {root: None}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in sorted(adj[v]):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    parent[w] = v
                    queue.append(w)
                elif parent[v] != w:
                    best = min(best, dist[v] + dist[w] + 1)
    return best


def _shortest_leaf_path(sk: _Skeleton) -> float:
    """Edge count of the shortest path joining two distinct degree-1 vertices."""
    leaves = sorted(v for v in sk.vertices if sk.degree(v) == 1)
    if len(leaves) < 2:
        return math.inf
    adj: dict = {v: set() for v in sk.vertices}
    for a, b, _ in sk.edges.values():
        adj[a].add(b)
        adj[b].add(a)
    leaf_set = set(leaves)
    best = math.inf
    for root in leaves:
        dist = {root: 0}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            if v != root and v in leaf_set:
                best = min(best, dist[v])
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
    return best


def compute_invariants(g: MetricGraph) -> GraphInvariants:
    sk = _suppress_degree_two(g)
    cycle = _shortest_cycle(sk)
    n_leaves = sum(1 for v in sk.vertices if sk.degree(v) == 1)
    is_tree = cycle == math.inf
    if is_tree and n_leaves <= 1:
        return GraphInvariants("I", math.inf, g.total_length, len(g.v0), 0, math.inf, math.inf)
    girth = min(cycle, _shortest_leaf_path(sk))
    v0 = [v for v in sorted(sk.vertices) if sk.leads.get(v, 0) > 0]
    loops_at = {a for a, b, _ in sk.edges.values() if a == b}
    d_lower = 1 if any(a not in loops_at for a in v0) else 0
    d_upper = girth - 1
    return GraphInvariants(
        "II", girth, g.total_length, len(g.v0), d_lower, d_upper, min(d_upper, len(v0))
    )


# ---------------------------------------------------------------------------
# catalog

def _ring_graph(n_vertices, edge_pairs, lead_counts, lengths, prefix="v"):
    names = [f"{prefix}{i}" for i in range(n_vertices)]
    if lengths is None:
        lengths = [1.0] * len(edge_pairs)
    if len(lengths) != len(edge_pairs):
        raise CatalogError(f"expected {len(edge_pairs)} lengths, got {len(lengths)}")
    edges = [
        Edge(f"e{i + 1}", names[a], names[b], float(l))
        for i, ((a, b), l) in enumerate(zip(edge_pairs, lengths))
    ]
    leads = [(names[i], int(n)) for i, n in enumerate(lead_counts) if n]
    return MetricGraph(tuple(names), tuple(edges), tuple(leads))


def _polyhedron_edges(name: str) -> tuple[int, list[tuple[int, int]]]:
    if name == "tetrahedron":
        return 4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    if name == "cube":
        pairs = []
        for a in range(8):
            for bit in (1, 2, 4):
                b = a ^ bit
                if a < b:
                    pairs.append((a, b))
        return 8, pairs
    if name == "petersen":
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        return 10, outer + spokes + inner
    if name == "dodecahedron":
        # outer 5-ring, middle 10-ring, inner 5-ring
        outer = [(i, (i + 1) % 5) for i in range(5)]
        to_mid = [(i, 5 + 2 * i) for i in range(5)]
        mid = [(5 + i, 5 + (i + 1) % 10) for i in range(10)]
        to_inner = [(5 + 2 * i + 1, 15 + i) for i in range(5)]
        inner = [(15 + i, 15 + (i + 1) % 5) for i in range(5)]
        return 20, outer + to_mid + mid + to_inner + inner
    raise CatalogError(f"unknown polyhedron {name!r}")


CATALOG_NAMES = (
    "star", "interval_Gnn", "Y", "circular", "tetrahedron", "cube", "petersen", "dodecahedron",
)


def catalog(name: str, params: Sequence[float] = (), lengths: Sequence[float] | None = None) -> MetricGraph:
    """Build one of the named example graphs.

    ``star``          params ``[l, N]``: one edge of length ``l`` with ``N`` leads at
                      its centre end; ``l = 0`` gives a bare vertex with ``N`` leads.
    ``interval_Gnn``  params ``[l, N, N']``: an edge with ``N`` and ``N'`` leads at its ends.
    ``Y``             params ``[l, L]``: two edges meeting at a centre carrying one lead.
    ``circular``      params ``[N_1, ..., N_p]``: ``p`` vertices on a cycle with ``N_i``
                      leads each; ``lengths`` gives the ``p`` arcs (default 1 each).
    polyhedra         params: lead counts for vertices ``v0, v1, ...`` (default ``[1]``);
                      ``lengths`` per edge, default 1.
    """
    params = list(params)
    if name == "star":
        _arity(name, params, 2)
        l, n = float(params[0]), _count(params[1])
        if l == 0:
            return MetricGraph(("c",), (), (("c", n),))
        return MetricGraph(("c", "p"), (Edge("e1", "c", "p", l),), (("c", n),))
    if name == "interval_Gnn":
        _arity(name, params, 3)
        l = float(params[0])
        return MetricGraph(
            ("v", "w"), (Edge("e1", "v", "w", l),),
            (("v", _count(params[1])), ("w", _count(params[2]))),
        )
    if name == "Y":
        _arity(name, params, 2)
        return MetricGraph(
            ("c", "p", "q"),
            (Edge("e1", "c", "p", float(params[0])), Edge("e2", "c", "q", float(params[1]))),
            (("c", 1),),
        )
    if name == "circular":
        if not params:
            raise CatalogError("circular needs at least one lead count")
        counts = [_count(x) for x in params]
        p = len(counts)
        pairs = [(i, (i + 1) % p) for i in range(p)]
        return _ring_graph(p, pairs, counts, lengths)
    if name in ("tetrahedron", "cube", "petersen", "dodecahedron"):
        n_vertices, pairs = _polyhedron_edges(name)
        counts = [_count(x, allow_zero=True) for x in params] if params else [1]
        if len(counts) > n_vertices:
            raise CatalogError(f"{name} has only {n_vertices} vertices, got {len(counts)} lead counts")
        return _ring_graph(n_vertices, pairs, counts, lengths)
    raise CatalogError(f"unknown catalog graph {name!r}; choose from {', '.join(CATALOG_NAMES)}")


def _arity(name, params, n):
    if len(params) != n:
        raise CatalogError(f"{name} takes {n} parameters, got {len(params)}")


def _count(x, allow_zero=False) -> int:
    n = int(round(float(x)))
    if n != float(x) or n < (0 if allow_zero else 1):
        raise CatalogError(f"lead count must be a positive integer, got {x!r}")
    return n
