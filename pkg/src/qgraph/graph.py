"""Rooted noncompact metric graphs and their cycle/a-edge structure."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import StructuralError

INTERNAL = "internal"
BOUNDARY_D = "boundary_D"
BOUNDARY_K = "boundary_K"
VERTEX_KINDS = (INTERNAL, BOUNDARY_D, BOUNDARY_K)


@dataclass(frozen=True)
class Potential:
    """Real potential on one edge, parameterised by arc length from its start.

    ``kind`` is one of ``zero``, ``const``, ``pw`` (piece ``k`` holds
    ``values[k]`` on ``[breaks[k], breaks[k+1])``, the last piece runs to the
    end of the domain) or ``grid`` (cell ``k`` holds ``values[k]`` on
    ``[k*h, (k+1)*h)``).  Outside the declared pieces the potential is zero.
    """

    kind: str = "zero"
    values: tuple = ()
    breaks: tuple = ()
    h: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "const", "pw", "grid"):
            raise StructuralError(f"unknown potential kind {self.kind!r}")
        vals = tuple(float(v) for v in self.values)
        brk = tuple(float(b) for b in self.breaks)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "breaks", brk)
        if not all(np.isfinite(vals)):
            raise StructuralError("potential values must be finite")
        if self.kind == "const" and len(vals) != 1:
            raise StructuralError("const potential takes exactly one value")
        if self.kind == "pw":
            if len(brk) != len(vals) or not brk:
                raise StructuralError("pw potential needs matching breakpoint/value pairs")
            if brk[0] < 0 or any(b1 <= b0 for b0, b1 in zip(brk, brk[1:])):
                raise StructuralError("pw breakpoints must be nonnegative and strictly increasing")
        if self.kind == "grid" and (not self.h > 0 or not vals):
            raise StructuralError("grid potential needs a positive step and at least one value")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def const(cls, value):
        return cls("const", (value,))

    @classmethod
    def piecewise(cls, breaks, values):
        return cls("pw", tuple(values), tuple(breaks))

    @classmethod
    def grid(cls, h, values):
        return cls("grid", tuple(values), (), float(h))

    def check_domain(self, length, what="edge"):
        if self.kind == "pw" and self.breaks[-1] >= length:
            raise StructuralError(f"pw breakpoint {self.breaks[-1]} outside {what} domain [0, {length})")
        if self.kind == "grid" and len(self.values) * self.h > length * (1 + 1e-12) + 1e-14:
            raise StructuralError(f"grid of {len(self.values)} cells of width {self.h} exceeds {what} length {length}")

    def pieces(self, length):
        """Widths and values of constant pieces covering ``[0, length]``."""
        if length <= 0:
            return np.zeros(0), np.zeros(0)
        if self.kind == "zero":
            return np.array([length]), np.array([0.0])
        if self.kind == "const":
            return np.array([length]), np.array([self.values[0]])
        if self.kind == "pw":
            starts = list(self.breaks)
            vals = list(self.values)
        else:
            starts = [k * self.h for k in range(len(self.values))]
            vals = list(self.values)
            if len(vals) * self.h < length:
                starts.append(len(vals) * self.h)
                vals.append(0.0)
        if starts[0] > 0:
            starts.insert(0, 0.0)
            vals.insert(0, 0.0)
        ends = starts[1:] + [length]
        widths, out = [], []
        for s, e, v in zip(starts, ends, vals):
            e = min(e, length)
            if e > s:
                widths.append(e - s)
                out.append(v)
        return np.array(widths), np.array(out)

    def reversed(self, length):
        """The same function read from the other end of ``[0, length]``."""
        if self.kind in ("zero", "const"):
            return self
        w, v = self.pieces(length)
        return Potential.from_pieces(w[::-1], v[::-1])

    @classmethod
    def from_pieces(cls, widths, values):
        widths = np.asarray(widths, float)
        starts = np.concatenate([[0.0], np.cumsum(widths)[:-1]])
        keep = [0] + [k for k in range(1, len(values)) if values[k] != values[k - 1]]
        if len(keep) == 1:
            return cls.zero() if values[0] == 0.0 else cls.const(values[0])
        return cls.piecewise([starts[k] for k in keep], [values[k] for k in keep])

    def add(self, other, length):
        """Pointwise sum of two potentials on ``[0, length]``."""
        w1, v1 = self.pieces(length)
        w2, v2 = other.pieces(length)
        cuts = np.union1d(np.cumsum(w1), np.cumsum(w2))
        cuts = cuts[cuts > 0]
        starts = np.concatenate([[0.0], cuts[:-1]])
        mids = 0.5 * (starts + cuts)
        e1, e2 = np.cumsum(w1), np.cumsum(w2)
        vals = v1[np.minimum(np.searchsorted(e1, mids), len(v1) - 1)] + v2[np.minimum(np.searchsorted(e2, mids), len(v2) - 1)]
        return Potential.from_pieces(cuts - starts, list(vals))

    def max_abs(self):
        return max((abs(v) for v in self.values), default=0.0)

    def min_value(self):
        return min(min(self.values, default=0.0), 0.0) if self.kind != "const" else min(self.values[0], 0.0)

    def __call__(self, x, length):
        w, v = self.pieces(length)
        ends = np.cumsum(w)
        idx = np.minimum(np.searchsorted(ends, np.asarray(x), side="right"), len(v) - 1)
        return v[idx]


def check_ray_potential(pot: Potential, support, rid="?"):
    """A ray potential must vanish past the support radius.

    ``pw`` and ``grid`` pieces are confined to ``[0, support)``; a nonzero
    ``const`` covers the whole ray and is rejected.
    """
    if pot.kind == "const" and pot.values[0] != 0.0:
        raise StructuralError(f"ray {rid}: const potential extends past support radius {support}")
    if pot.kind in ("pw", "grid"):
        if support <= 0:
            raise StructuralError(f"ray {rid}: nonzero potential needs a positive support radius")
        pot.check_domain(support, "ray support")


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str
    order_index: int = 0

    @property
    def is_boundary(self):
        return self.kind != INTERNAL


@dataclass(frozen=True)
class CompactEdge:
    id: str
    initial: str
    terminal: str
    length: float
    potential: Potential = field(default_factory=Potential.zero)

    @property
    def is_loop(self):
        return self.initial == self.terminal


@dataclass(frozen=True)
class Ray:
    id: str
    base: str
    support: float = 0.0
    potential: Potential = field(default_factory=Potential.zero)


@dataclass(frozen=True)
class AEdge:
    kind: str  # "simple_edge" or "cycle"
    members: tuple
    order: Optional[int] = None
    anchor: Optional[str] = None

    @property
    def is_cycle(self):
        return self.kind == "cycle"


@dataclass
class ValidationReport:
    ok: bool
    violations: list

    def __bool__(self):
        return self.ok


class MetricGraph:
    """Immutable rooted metric graph.

    The order of ``vertices``, ``edges`` and ``rays`` is the ordering used by
    every determinant in the package.  Compact edges run from ``initial`` to
    ``terminal`` with the initial vertex earlier in the vertex ordering.
    """

    __slots__ = ("vertices", "edges", "rays", "root", "_vidx", "_eidx", "_ridx", "_inc")

    def __init__(self, vertices, edges=(), rays=(), root=None):
        vs = tuple(replace(v, order_index=i) if v.order_index != i else v for i, v in enumerate(vertices))
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "rays", tuple(rays))
        object.__setattr__(self, "root", root)
        vidx = {v.id: i for i, v in enumerate(vs)}
        if len(vidx) != len(vs):
            raise StructuralError("duplicate vertex id")
        ids = [e.id for e in self.edges] + [r.id for r in self.rays]
        if len(set(ids)) != len(ids):
            raise StructuralError("duplicate edge/ray id")
        for e in self.edges:
            for end in (e.initial, e.terminal):
                if end not in vidx:
                    raise StructuralError(f"edge {e.id} references unknown vertex {end!r}")
            if not e.length > 0:
                raise StructuralError(f"edge {e.id} has nonpositive length {e.length}")
            if vidx[e.initial] > vidx[e.terminal]:
                raise StructuralError(f"edge {e.id}: initial vertex must precede terminal vertex")
        for r in self.rays:
            if r.base not in vidx:
                raise StructuralError(f"ray {r.id} references unknown vertex {r.base!r}")
            check_ray_potential(r.potential, r.support, r.id)
        if root is not None and root not in vidx:
            raise StructuralError(f"root references unknown vertex {root!r}")
        inc = {v.id: [] for v in vs}
        for e in self.edges:
            inc[e.initial].append(e.id)
            if not e.is_loop:
                inc[e.terminal].append(e.id)
            else:
                inc[e.initial].append(e.id)
        for r in self.rays:
            inc[r.base].append(r.id)
        object.__setattr__(self, "_vidx", vidx)
        object.__setattr__(self, "_eidx", {e.id: i for i, e in enumerate(self.edges)})
        object.__setattr__(self, "_ridx", {r.id: i for i, r in enumerate(self.rays)})
        object.__setattr__(self, "_inc", inc)

    def __setattr__(self, name, value):
        raise AttributeError("MetricGraph is immutable")

    def __eq__(self, other):
        return isinstance(other, MetricGraph) and (self.vertices, self.edges, self.rays, self.root) == (
            other.vertices, other.edges, other.rays, other.root)

    def __hash__(self):
        return hash((self.vertices, self.edges, self.rays, self.root))

    def __repr__(self):
        return f"MetricGraph(|V|={len(self.vertices)}, |E|={len(self.edges)}, |R|={len(self.rays)}, root={self.root!r})"

    # lookups
    def vertex(self, vid) -> Vertex:
        try:
            return self.vertices[self._vidx[vid]]
        except KeyError:
            raise StructuralError(f"unknown vertex {vid!r}") from None

    def vertex_index(self, vid):
        return self._vidx[vid]

    def edge(self, eid):
        if eid in self._eidx:
            return self.edges[self._eidx[eid]]
        if eid in self._ridx:
            return self.rays[self._ridx[eid]]
        raise StructuralError(f"unknown edge/ray {eid!r}")

    def edge_index(self, eid):
        return self._eidx[eid]

    def ray_index(self, rid):
        return self._ridx[rid]

    def is_ray(self, eid):
        return eid in self._ridx

    def has_edge(self, eid):
        return eid in self._eidx or eid in self._ridx

    def incident(self, vid):
        """Incident edge/ray ids of ``vid``; a loop appears twice."""
        return list(self._inc[vid])

    def degree(self, vid):
        return len(self._inc[vid])

    def endpoints(self, eid):
        e = self.edge(eid)
        return (e.base,) if isinstance(e, Ray) else (e.initial, e.terminal)

    def edge_ids(self):
        return [e.id for e in self.edges] + [r.id for r in self.rays]

    # global quantities
    @property
    def total_length(self):
        return float(sum(e.length for e in self.edges))

    @property
    def n_dirichlet(self):
        return sum(1 for v in self.vertices if v.kind == BOUNDARY_D)

    @property
    def n_cycles(self):
        return len(enumerate_cycles(self, check=False))

    @property
    def n_index(self):
        """``N_D + N_C``: Dirichlet vertices plus cycles."""
        return self.n_dirichlet + self.n_cycles

    @property
    def is_compact(self):
        return not self.rays

    def with_potentials(self, potentials):
        """Copy with edge/ray potentials replaced from a mapping id -> Potential."""
        edges = [replace(e, potential=potentials.get(e.id, e.potential)) for e in self.edges]
        rays = [replace(r, potential=potentials.get(r.id, r.potential)) for r in self.rays]
        return MetricGraph(self.vertices, edges, rays, self.root)

    def potentials(self):
        return {e.id: e.potential for e in self.edges} | {r.id: r.potential for r in self.rays}

    def zero_potential(self):
        return self.with_potentials({i: Potential.zero() for i in self.edge_ids()})

    def potential_bounds(self):
        vals = [0.0]
        for e in list(self.edges) + list(self.rays):
            vals.extend(e.potential.values)
        return min(vals), max(vals)


# ---------------------------------------------------------------------------
# block decomposition


def _blocks(g: MetricGraph):
    """Biconnected blocks of the compact part, as lists of edge ids.

    Self-loops form their own blocks.  Parallel edges are handled by skipping
    the tree edge id rather than the parent vertex.
    """
    adj = {v.id: [] for v in g.vertices}
    blocks = []
    for e in g.edges:
        if e.is_loop:
            blocks.append([e.id])
            continue
        adj[e.initial].append((e.terminal, e.id))
        adj[e.terminal].append((e.initial, e.id))
    disc, low = {}, {}
    t = 0
    stack = []
    for v0 in g.vertices:
        s = v0.id
        if s in disc:
            continue
        disc[s] = low[s] = t
        t += 1
        frames = [(s, None, iter(adj[s]))]
        while frames:
            v, pe, nbrs = frames[-1]
            descended = False
            for w, eid in nbrs:
                if eid == pe:
                    continue
                if w not in disc:
                    stack.append(eid)
                    disc[w] = low[w] = t
                    t += 1
                    frames.append((w, eid, iter(adj[w])))
                    descended = True
                    break
                if disc[w] < disc[v]:
                    stack.append(eid)
                    low[v] = min(low[v], disc[w])
            if descended:
                continue
            frames.pop()
            if frames:
                u = frames[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] >= disc[u]:
                    comp = []
                    while True:
                        e = stack.pop()
                        comp.append(e)
                        if e == pe:
                            break
                    blocks.append(comp)
    return blocks


def _components(g: MetricGraph):
    parent = {v.id: v.id for v in g.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        parent[find(e.initial)] = find(e.terminal)
    comps = {}
    for v in g.vertices:
        comps.setdefault(find(v.id), []).append(v.id)
    return list(comps.values())


def _block_vertices(g, block):
    vs = set()
    for eid in block:
        vs.update(g.endpoints(eid))
    return vs


def validate_a_graph(g: MetricGraph, require_root=False) -> ValidationReport:
    """Connectivity plus the A-graph condition (cycles pairwise share <= 1 vertex)."""
    violations = []
    comps = _components(g)
    if len(comps) > 1:
        violations.append("disconnected: components " + "; ".join(",".join(c) for c in comps))
    for block in _blocks(g):
        if len(block) < 2:
            continue
        vs = _block_vertices(g, block)
        if len(vs) != len(block):
            pair = _two_cycles_sharing(g, block)
            msg = f"cycles sharing two or more vertices in block {{{','.join(sorted(block, key=g.edge_index))}}}"
            if pair:
                msg += f": {list(pair[0])} and {list(pair[1])}"
            violations.append(msg)
    for v in g.vertices:
        if v.is_boundary and g.degree(v.id) != 1:
            violations.append(f"boundary vertex {v.id} has degree {g.degree(v.id)}")
    if require_root or g.root is not None:
        if g.root is None:
            violations.append("no root")
        else:
            rv = g.vertex(g.root)
            if not rv.is_boundary or g.degree(g.root) != 1:
                violations.append(f"root {g.root} is not a boundary vertex of degree 1")
            elif g.root in _cycle_vertices(g):
                violations.append(f"root {g.root} lies on a cycle")
    return ValidationReport(not violations, violations)


def _two_cycles_sharing(g, block):
    cycles = brute_force_cycles(g, block)
    for i, a in enumerate(cycles):
        for b in cycles[i + 1:]:
            if len(_block_vertices(g, a) & _block_vertices(g, b)) >= 2:
                return a, b
    return None


def _cycle_vertices(g):
    out = set()
    for blk in _blocks(g):
        if len(blk) >= 2 or g.edge(blk[0]).is_loop:
            out |= _block_vertices(g, blk)
    return out


def brute_force_cycles(g: MetricGraph, edge_ids=None):
    """All cycles (as sorted tuples of edge ids) by subset enumeration.

    Exponential; intended as a test oracle for small graphs.
    """
    ids = [e.id for e in g.edges] if edge_ids is None else list(edge_ids)
    out = []
    n = len(ids)
    for mask in range(1, 1 << n):
        sub = [ids[k] for k in range(n) if mask >> k & 1]
        deg = {}
        for eid in sub:
            a, b = g.endpoints(eid)
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        if any(d != 2 for d in deg.values()):
            continue
        # connected?
        seen = {sub[0]}
        frontier = [sub[0]]
        while frontier:
            cur = frontier.pop()
            ends = set(g.endpoints(cur))
            for other in sub:
                if other not in seen and ends & set(g.endpoints(other)):
                    seen.add(other)
                    frontier.append(other)
        if len(seen) == len(sub):
            out.append(tuple(sorted(sub, key=g.edge_index)))
    return out


def _root_edge(g):
    if g.root is None:
        raise StructuralError("operation requires a root")
    inc = g.incident(g.root)
    if len(inc) != 1:
        raise StructuralError(f"root {g.root} must have exactly one incident edge")
    return inc[0]


def _reachable_avoiding(g, start, banned):
    """Vertices and edges reachable from ``start`` without using ``banned`` edges."""
    seen_v = {start}
    seen_e = set()
    q = deque([start])
    while q:
        v = q.popleft()
        for eid in g.incident(v):
            if eid in banned:
                continue
            seen_e.add(eid)
            for w in g.endpoints(eid):
                if w not in seen_v:
                    seen_v.add(w)
                    q.append(w)
    return seen_v, seen_e


def _chain(g, members, anchor):
    """Order cycle edges as a closed chain starting at ``anchor``."""
    members = sorted(members, key=g.edge_index)
    if len(members) == 1:
        return tuple(members)
    at_anchor = [m for m in members if anchor in g.endpoints(m)]
    chain = [at_anchor[0]]
    cur = anchor
    used = {at_anchor[0]}
    while True:
        a, b = g.endpoints(chain[-1])
        cur = b if a == cur else a
        nxt = [m for m in members if m not in used and cur in g.endpoints(m)]
        if not nxt:
            break
        chain.append(nxt[0])
        used.add(nxt[0])
    return tuple(chain)


def cycle_anchor(g: MetricGraph, members):
    """Vertex of the cycle nearest to the root (lowest order index if unrooted)."""
    vs = _block_vertices(g, members)
    if g.root is not None:
        reached, _ = _reachable_avoiding(g, g.root, set(members))
        hit = [v for v in vs if v in reached]
        if hit:
            return min(hit, key=g.vertex_index)
    return min(vs, key=g.vertex_index)


def enumerate_cycles(g: MetricGraph, check=True):
    """All cycles of an A-graph as ``AEdge`` objects, ordered by smallest member."""
    if check:
        rep = validate_a_graph(g)
        cyc_viol = [v for v in rep.violations if v.startswith("cycles sharing")]
        if cyc_viol:
            raise StructuralError(cyc_viol[0])
    out = []
    for blk in _blocks(g):
        if len(blk) >= 2 or g.edge(blk[0]).is_loop:
            anchor = cycle_anchor(g, blk)
            out.append(AEdge("cycle", _chain(g, blk, anchor), None, anchor))
    out.sort(key=lambda a: min(g.edge_index(m) for m in a.members))
    return out


def a_edges(g: MetricGraph):
    """Simple edges (compact and rays) and cycles, without orders."""
    cycles = enumerate_cycles(g)
    in_cycle = {m for c in cycles for m in c.members}
    simple = [AEdge("simple_edge", (eid,)) for eid in g.edge_ids() if eid not in in_cycle]
    return simple + cycles


def compute_orders(g: MetricGraph):
    """Orders of all a-edges (BFS distance from the rooted edge) and the graph order."""
    rep = validate_a_graph(g, require_root=True)
    if not rep.ok:
        raise StructuralError("; ".join(rep.violations))
    r0 = _root_edge(g)
    items = a_edges(g)
    owner = {}
    for k, a in enumerate(items):
        for m in a.members:
            owner[m] = k
    at_vertex = {v.id: {owner[e] for e in g.incident(v.id)} for v in g.vertices}
    verts = [set(v for m in a.members for v in g.endpoints(m)) for a in items]
    dist = {owner[r0]: 0}
    q = deque([owner[r0]])
    while q:
        k = q.popleft()
        for v in verts[k]:
            for j in at_vertex[v]:
                if j not in dist:
                    dist[j] = dist[k] + 1
                    q.append(j)
    out = []
    for k, a in enumerate(items):
        if a.is_cycle:
            anchor = a.anchor
        else:
            ends = g.endpoints(a.members[0])
            reached, _ = _reachable_avoiding(g, g.root, {a.members[0]})
            near = [v for v in ends if v in reached] or list(ends)
            anchor = min(near, key=g.vertex_index)
            if a.members[0] == r0:
                anchor = g.root
        out.append(replace(a, order=dist[k], anchor=anchor))
    omega = max(a.order for a in out)
    return out, omega


def subgraph_beyond(g: MetricGraph, a: AEdge) -> MetricGraph:
    """Union of edges every root path to which passes through ``a``."""
    for m in a.members:
        if not g.has_edge(m):
            raise StructuralError(f"a-edge member {m!r} not in graph")
    _root_edge(g)
    _, near = _reachable_avoiding(g, g.root, set(a.members))
    keep = [eid for eid in g.edge_ids() if eid not in near]
    return induced_subgraph(g, keep)


def is_boundary_cycle(g: MetricGraph, c: AEdge) -> bool:
    sub = subgraph_beyond(g, c)
    return set(sub.edge_ids()) == set(c.members)


def induced_subgraph(g: MetricGraph, edge_ids, extra_vertices=(), keep_root=False) -> MetricGraph:
    """Subgraph on the given edges; internal vertices left with degree <= 1 become K-type."""
    edge_ids = set(edge_ids)
    edges = [e for e in g.edges if e.id in edge_ids]
    rays = [r for r in g.rays if r.id in edge_ids]
    used = set(extra_vertices)
    for e in edges:
        used.update((e.initial, e.terminal))
    for r in rays:
        used.add(r.base)
    deg = {v: 0 for v in used}
    for e in edges:
        deg[e.initial] += 1
        deg[e.terminal] += 1
    for r in rays:
        deg[r.base] += 1
    verts = []
    for v in g.vertices:
        if v.id not in used:
            continue
        kind = v.kind
        if kind == INTERNAL and deg[v.id] <= 1:
            kind = BOUNDARY_K
        verts.append(Vertex(v.id, kind))
    root = g.root if keep_root and g.root in used else None
    return MetricGraph(verts, edges, rays, root)
