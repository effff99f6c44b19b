"""Polynomial-time algorithms for the tractable constraint shapes under AV.

Three shapes are recognised:

* one representation TGD ``R(x) -> EXISTS c . S(c,x) & Com(c)`` with the first
  attribute of ``S`` a key (greedy);
* two such TGDs, both keyed (min-cost max-flow);
* the common-neighbour DC ``Com(c1) & Com(c2) & R(c1,x) & R(c2,x) & c1 != c2``
  with the first attribute of ``R`` a key (greedy).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Tuple, Union

from abcc.constraints import CmpAtom, ConstraintSet, Dc, RelAtom, Tgd, Var
from abcc.election import AV, Committee, Election, committee_score
from abcc.errors import PatternViolation
from abcc.relational import Database, Schema, validate_keys


@dataclass(frozen=True)
class SingleTgdPattern:
    unary: str  # R: the values that must be represented
    binary: str  # S: candidate -> value, keyed on the candidate


@dataclass(frozen=True)
class DoubleTgdPattern:
    first: SingleTgdPattern
    second: SingleTgdPattern


@dataclass(frozen=True)
class DcKeyPattern:
    relation: str


Pattern = Union[SingleTgdPattern, DoubleTgdPattern, DcKeyPattern]


def _is_var(t) -> bool:
    return isinstance(t, Var)


def _match_single(tgd: Tgd, schema: Schema) -> Optional[SingleTgdPattern]:
    if len(tgd.body) != 1 or len(tgd.head) != 2 or len(tgd.existential_vars) != 1:
        return None
    (body,) = tgd.body
    if body.is_com or len(body.terms) != 1 or not _is_var(body.terms[0]):
        return None
    x = body.terms[0].name
    c = tgd.existential_vars[0]
    com = [a for a in tgd.head if a.is_com]
    other = [a for a in tgd.head if not a.is_com]
    if len(com) != 1 or len(other) != 1:
        return None
    if com[0].terms != (Var(c),) or other[0].terms != (Var(c), Var(x)) or c == x:
        return None
    if schema[body.relation].arity != 1 or schema[other[0].relation].arity != 2:
        return None
    return SingleTgdPattern(body.relation, other[0].relation)


def _match_dc(dc: Dc, schema: Schema) -> Optional[DcKeyPattern]:
    if len(dc.relational_atoms) != 4 or len(dc.comparison_atoms) != 1:
        return None
    com = [a for a in dc.relational_atoms if a.is_com]
    rel = [a for a in dc.relational_atoms if not a.is_com]
    if len(com) != 2 or len(rel) != 2 or rel[0].relation != rel[1].relation:
        return None
    if not all(_is_var(a.terms[0]) for a in com):
        return None
    c1, c2 = (a.terms[0].name for a in com)
    if c1 == c2:
        return None
    if not all(len(a.terms) == 2 and all(map(_is_var, a.terms)) for a in rel):
        return None
    xs = {a.terms[1].name for a in rel}
    firsts = {a.terms[0].name for a in rel}
    if len(xs) != 1 or firsts != {c1, c2} or xs & {c1, c2}:
        return None
    (cmp,) = dc.comparison_atoms
    if cmp.op != "!=" or not (_is_var(cmp.left) and _is_var(cmp.right)):
        return None
    if {cmp.left.name, cmp.right.name} != {c1, c2}:
        return None
    return DcKeyPattern(rel[0].relation)


def _first_attribute_key(schema: Schema, db: Optional[Database], relation: str) -> bool:
    if 1 not in schema[relation].key_attributes:
        return False
    if db is None:
        return True
    return not any(v.relation == relation and v.attribute == 1 for v in validate_keys(db, schema))


def detect_pattern(schema: Schema, gamma: ConstraintSet, db: Optional[Database] = None) -> Optional[Pattern]:
    """The tractable shape ``gamma`` has, if any.

    Keys must be declared in the schema; when ``db`` is given they must also
    hold in the data.
    """
    if not gamma.dcs and len(gamma.tgds) in (1, 2):
        singles = [_match_single(t, schema) for t in gamma.tgds]
        if any(s is None for s in singles):
            return None
        if not all(_first_attribute_key(schema, db, s.binary) for s in singles):
            return None
        if len(singles) == 1:
            return singles[0]
        return DoubleTgdPattern(*singles)
    if not gamma.tgds and len(gamma.dcs) == 1:
        pat = _match_dc(gamma.dcs[0], schema)
        if pat is not None and _first_attribute_key(schema, db, pat.relation):
            return pat
    return None


def _require_key(db: Database, relation: str):
    if not _first_attribute_key(db.schema, db, relation):
        raise PatternViolation(f"the first attribute of {relation} is not a (valid) key")


def _by_approvals(election: Election, counts: Dict[str, int]):
    return lambda c: (-counts[c], election.position(c))


def _candidate_values(db: Database, election: Election, relation: str) -> Dict[str, object]:
    cands = set(election.candidates)
    return {c: a for c, a in db[relation] if c in cands}


def greedy_single_tgd(election: Election, db: Database, pattern: SingleTgdPattern) -> Optional[Committee]:
    """Best committee under AV with one keyed representation TGD, or ``None``."""
    _require_key(db, pattern.binary)
    counts = election.approval_counts()
    best_first = _by_approvals(election, counts)
    groups: Dict[object, List[str]] = {}
    for c, a in _candidate_values(db, election, pattern.binary).items():
        groups.setdefault(a, []).append(c)
    chosen = []
    for (a,) in db.sorted_tuples(pattern.unary):
        members = groups.get(a)
        if not members:
            return None
        chosen.append(min(members, key=best_first))
    if len(chosen) > election.k:
        return None
    rest = sorted((c for c in election.candidates if c not in chosen), key=best_first)
    chosen += rest[: election.k - len(chosen)]
    members = election.ordered(chosen)
    return Committee(members, committee_score(election, AV(), members))


def dc_key_greedy(election: Election, db: Database, pattern: DcKeyPattern) -> Optional[Committee]:
    """Best committee under AV with the keyed common-neighbour DC, or ``None``."""
    _require_key(db, pattern.relation)
    counts = election.approval_counts()
    best_first = _by_approvals(election, counts)
    groups: Dict[object, List[str]] = {}
    for c, a in _candidate_values(db, election, pattern.relation).items():
        groups.setdefault(a, []).append(c)
    removed = set()
    for members in groups.values():
        if len(members) >= 2:
            keep = min(members, key=best_first)
            removed.update(c for c in members if c != keep)
    pool = sorted((c for c in election.candidates if c not in removed), key=best_first)
    if len(pool) < election.k:
        return None
    members = election.ordered(pool[: election.k])
    return Committee(members, committee_score(election, AV(), members))


# -- min-cost max-flow -------------------------------------------------------


@dataclass(frozen=True)
class FlowEdge:
    tail: Hashable
    head: Hashable
    capacity: int
    cost: Fraction


@dataclass
class FlowNetwork:
    source: Hashable
    sink: Hashable
    vertices: List[Hashable] = field(default_factory=list)
    edges: List[FlowEdge] = field(default_factory=list)

    def __post_init__(self):
        self._known = set(self.vertices)
        for v in (self.source, self.sink):
            self.add_vertex(v)

    def add_vertex(self, v):
        if v not in self._known:
            self._known.add(v)
            self.vertices.append(v)

    def add_edge(self, tail, head, capacity=1, cost=0) -> int:
        if capacity < 0:
            raise ValueError("edge capacity must be non-negative")
        if head == self.source or tail == self.sink:
            raise ValueError("no edges may enter the source or leave the sink")
        self.add_vertex(tail)
        self.add_vertex(head)
        self.edges.append(FlowEdge(tail, head, int(capacity), Fraction(cost)))
        return len(self.edges) - 1

    def vertices_of(self, kind: str) -> List[Hashable]:
        return [v for v in self.vertices if isinstance(v, tuple) and v[0] == kind]


@dataclass
class FlowResult:
    flow_value: int
    cost: Fraction
    edge_flows: List[int]


def min_cost_max_flow(network: FlowNetwork) -> FlowResult:
    """Integral min-cost max-flow by successive shortest paths.

    Potentials start from one Bellman-Ford pass, after which every
    augmenting path is found with Dijkstra on reduced costs.
    """
    index = {v: i for i, v in enumerate(network.vertices)}
    n = len(index)
    # residual arcs: to, capacity, cost, reverse arc id
    graph: List[List[int]] = [[] for _ in range(n)]
    to: List[int] = []
    cap: List[int] = []
    cost: List[Fraction] = []
    for e in network.edges:
        u, v = index[e.tail], index[e.head]
        graph[u].append(len(to))
        to.append(v), cap.append(e.capacity), cost.append(e.cost)
        graph[v].append(len(to))
        to.append(u), cap.append(0), cost.append(-e.cost)
    s, t = index[network.source], index[network.sink]

    potential: List[Optional[Fraction]] = [None] * n
    potential[s] = Fraction(0)
    for _ in range(n - 1):
        changed = False
        for u in range(n):
            if potential[u] is None:
                continue
            for arc in graph[u]:
                if cap[arc] > 0:
                    cand = potential[u] + cost[arc]
                    if potential[to[arc]] is None or cand < potential[to[arc]]:
                        potential[to[arc]] = cand
                        changed = True
        if not changed:
            break
    pot = [p if p is not None else Fraction(0) for p in potential]

    flow = 0
    total = Fraction(0)
    while True:
        dist: List[Optional[Fraction]] = [None] * n
        via: List[Optional[int]] = [None] * n
        dist[s] = Fraction(0)
        heap = [(Fraction(0), 0, s)]
        tie = itertools.count(1)
        done = [False] * n
        while heap:
            d, _, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for arc in graph[u]:
                if cap[arc] <= 0:
                    continue
                v = to[arc]
                nd = d + cost[arc] + pot[u] - pot[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    via[v] = arc
                    heapq.heappush(heap, (nd, next(tie), v))
        if dist[t] is None:
            break
        for v in range(n):
            if dist[v] is not None:
                pot[v] += dist[v]
        push = None
        v = t
        while v != s:
            arc = via[v]
            push = cap[arc] if push is None else min(push, cap[arc])
            v = to[arc ^ 1]
        v = t
        while v != s:
            arc = via[v]
            cap[arc] -= push
            cap[arc ^ 1] += push
            total += push * cost[arc]
            v = to[arc ^ 1]
        flow += push
    edge_flows = [network.edges[i].capacity - cap[2 * i] for i in range(len(network.edges))]
    return FlowResult(flow, total, edge_flows)


def build_mcmf_network(election: Election, db: Database, pattern: DoubleTgdPattern) -> FlowNetwork:
    """Unit-capacity network whose k-unit flows are the legal committees.

    Vertices are tuples: ``("s",)``, ``("t",)``, ``("c_in", c)``,
    ``("c_out", c)``, ``("u", a)``, ``("w", b)``, ``("u'", i)``, ``("w'", i)``.
    Only the ``c_in -> c_out`` edges cost anything: ``|V| - |V_c|``.
    """
    first, second = pattern.first, pattern.second
    _require_key(db, first.binary)
    _require_key(db, second.binary)
    k = election.k
    r1 = db.sorted_tuples(first.unary)
    r2 = db.sorted_tuples(second.unary)
    if len(r1) > k or len(r2) > k:
        raise ValueError("more values to represent than committee seats; no legal committee exists")
    counts = election.approval_counts()
    n_voters = len(election.voters)

    net = FlowNetwork(("s",), ("t",))
    for c in election.candidates:
        net.add_edge(("c_in", c), ("c_out", c), 1, n_voters - counts[c])
    s1 = _candidate_values(db, election, first.binary)
    s2 = _candidate_values(db, election, second.binary)
    for (a,) in r1:
        net.add_edge(("s",), ("u", a))
        for c in election.candidates:
            if c in s1 and s1[c] == a:
                net.add_edge(("u", a), ("c_in", c))
    for i in range(1, k - len(r1) + 1):
        net.add_edge(("s",), ("u'", i))
        for c in election.candidates:
            net.add_edge(("u'", i), ("c_in", c))
    for (b,) in r2:
        for c in election.candidates:
            if c in s2 and s2[c] == b:
                net.add_edge(("c_out", c), ("w", b))
        net.add_edge(("w", b), ("t",))
    for i in range(1, k - len(r2) + 1):
        for c in election.candidates:
            net.add_edge(("c_out", c), ("w'", i))
        net.add_edge(("w'", i), ("t",))
    return net


def mcmf_two_tgds(election: Election, db: Database, pattern: DoubleTgdPattern) -> Optional[Committee]:
    """Best committee under AV with two keyed representation TGDs, or ``None``."""
    k = election.k
    if len(db[pattern.first.unary]) > k or len(db[pattern.second.unary]) > k:
        _require_key(db, pattern.first.binary)
        _require_key(db, pattern.second.binary)
        return None
    net = build_mcmf_network(election, db, pattern)
    result = min_cost_max_flow(net)
    if result.flow_value < k:
        return None
    chosen = [
        e.tail[1]
        for e, f in zip(net.edges, result.edge_flows)
        if f and e.tail[0] == "c_in" and e.head[0] == "c_out"
    ]
    members = election.ordered(chosen)
    return Committee(members, committee_score(election, AV(), members))
