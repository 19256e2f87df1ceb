"""Graph rewriting: vertex splitting, K/D cut-offs and cycle unrolling."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import StructuralError
from .graph import (BOUNDARY_D, BOUNDARY_K, INTERNAL, AEdge, CompactEdge, MetricGraph, Vertex,
                    _chain, cycle_anchor)


@dataclass(frozen=True)
class SurgeryResult:
    graph: MetricGraph
    vertex_map: dict = field(default_factory=dict)
    edge_map: dict = field(default_factory=dict)
    created: tuple = ()


def _identity_maps(g):
    return {v.id: v.id for v in g.vertices}, {eid: eid for eid in g.edge_ids()}


def split_vertex(g: MetricGraph, v: str) -> SurgeryResult:
    """Replace ``v`` by one Dirichlet vertex per incident edge end.

    The copies take ``v``'s slot in the vertex ordering, in the order of the
    incident edges (compact edges first, then rays; the two ends of a loop
    start end first).  Keeping the slot preserves every edge orientation, so
    the determinant of the split graph is exactly the complementary minor of
    the original system.
    """
    vert = g.vertex(v)
    if vert.kind == BOUNDARY_D:
        raise StructuralError(f"cannot split Dirichlet vertex {v!r}")
    copies = []
    edges = []
    for e in g.edges:
        if e.initial == v or e.terminal == v:
            a = b = None
            if e.initial == v:
                a = f"{v}'{e.id}"
                copies.append(a)
            if e.terminal == v:
                b = f"{v}'{e.id}" if not e.is_loop else f"{v}'{e.id}+"
                copies.append(b)
            e = replace(e, initial=a or e.initial, terminal=b or e.terminal)
        edges.append(e)
    rays = []
    for r in g.rays:
        if r.base == v:
            nid = f"{v}'{r.id}"
            copies.append(nid)
            r = replace(r, base=nid)
        rays.append(r)
    verts = []
    for u in g.vertices:
        if u.id == v:
            verts.extend(Vertex(c, BOUNDARY_D) for c in copies)
        else:
            verts.append(u)
    vmap, emap = _identity_maps(g)
    vmap[v] = tuple(copies)
    root = None if g.root == v else g.root
    return SurgeryResult(MetricGraph(verts, edges, rays, root), vmap, emap, tuple(copies))


def _part_ids(part):
    if isinstance(part, MetricGraph):
        return set(part.edge_ids())
    if isinstance(part, AEdge):
        return set(part.members)
    if isinstance(part, str):
        return {part}
    return set(part)


def _split_parts(g, part, at):
    pids = _part_ids(part)
    for eid in pids:
        if not g.has_edge(eid):
            raise StructuralError(f"unknown edge/ray {eid!r} in cut selection")
    rest = [eid for eid in g.edge_ids() if eid not in pids]
    pv = {w for eid in pids for w in g.endpoints(eid)}
    rv = {w for eid in rest for w in g.endpoints(eid)}
    shared = pv & rv
    if rest:
        if len(shared) != 1:
            raise StructuralError(f"cut selection meets the rest in {len(shared)} vertices, expected 1")
        (v,) = shared
        if at is not None and at != v:
            raise StructuralError(f"cut vertex is {v!r}, not {at!r}")
    else:
        if at is None or at not in pv:
            raise StructuralError("cutting off everything needs an explicit cut vertex in the selection")
        v = at
    return pids, rest, v


def cut_keep(g: MetricGraph, part, at=None) -> MetricGraph:
    """Remove ``part``; the cut vertex keeps Kirchhoff conditions (K-type if boundary)."""
    pids, rest, v = _split_parts(g, part, at)
    return _rest_graph(g, rest, v)


def _rest_graph(g, rest, v):
    rset = set(rest)
    edges = [e for e in g.edges if e.id in rset]
    rays = [r for r in g.rays if r.id in rset]
    used = {w for eid in rest for w in g.endpoints(eid)} | {v}
    deg = sum((e.initial == v) + (e.terminal == v) for e in edges) + sum(r.base == v for r in rays)
    verts = []
    for u in g.vertices:
        if u.id not in used:
            continue
        if u.id == v:
            if u.kind == BOUNDARY_D:
                kind = BOUNDARY_D
            else:
                kind = INTERNAL if deg >= 2 else BOUNDARY_K
            u = Vertex(u.id, kind)
        verts.append(u)
    root = g.root if g.root in used and g.root != v else None
    return MetricGraph(verts, edges, rays, root)


def cut_dirichlet(g: MetricGraph, part, at=None) -> MetricGraph:
    """Remove ``part`` and split the cut vertex into Dirichlet ends."""
    pids, rest, v = _split_parts(g, part, at)
    if g.vertex(v).kind == BOUNDARY_D:
        raise StructuralError(f"cut vertex {v!r} is already Dirichlet; the split is undefined there")
    kept = _rest_graph(g, rest, v)
    if kept.degree(v) == 0:
        verts = [u for u in kept.vertices if u.id != v]
        return MetricGraph(verts, kept.edges, kept.rays, kept.root)
    return split_vertex(kept, v).graph


def unroll_cycle(g: MetricGraph, c: AEdge) -> SurgeryResult:
    """Open cycle ``c`` at its root-nearest vertex.

    The last chain edge, joining ``v_{p-1}`` to the anchor, is re-terminated at
    a new K-type vertex appended to the vertex ordering; its potential is kept
    as a function of the distance from ``v_{p-1}``.
    """
    if not c.is_cycle:
        raise StructuralError("unroll_cycle needs a cycle")
    for m in c.members:
        if not g.has_edge(m) or g.is_ray(m):
            raise StructuralError(f"cycle member {m!r} is not a compact edge of the graph")
    anchor = cycle_anchor(g, c.members)
    chain = _chain(g, c.members, anchor)
    last = g.edge(chain[-1])
    if len(chain) == 1:
        prev = anchor
        pot = last.potential
    else:
        a, b = last.initial, last.terminal
        prev = b if a == anchor else a
        pot = last.potential if last.initial == prev else last.potential.reversed(last.length)
    new_v = f"{last.id}*"
    if any(u.id == new_v for u in g.vertices):
        raise StructuralError(f"vertex id {new_v!r} already in use")
    edges = [CompactEdge(e.id, prev, new_v, e.length, pot) if e.id == last.id else e for e in g.edges]
    verts = list(g.vertices) + [Vertex(new_v, BOUNDARY_K)]
    vmap, emap = _identity_maps(g)
    return SurgeryResult(MetricGraph(verts, edges, g.rays, g.root), vmap, emap, (new_v,))


def branches_at(g: MetricGraph, v: str):
    """Edge-id groups of the pieces meeting only at ``v`` (one per branch)."""
    g.vertex(v)
    ids = g.edge_ids()
    parent = {eid: eid for eid in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    at = {}
    for eid in ids:
        for w in g.endpoints(eid):
            if w == v:
                continue
            if w in at:
                parent[find(eid)] = find(at[w])
            else:
                at[w] = eid
    groups = {}
    for eid in ids:
        groups.setdefault(find(eid), []).append(eid)
    out = [sorted(grp, key=lambda e: g.edge_ids().index(e)) for grp in groups.values()
           if any(v in g.endpoints(e) for e in grp)]
    out.sort(key=lambda grp: g.edge_ids().index(grp[0]))
    return out


def piece(g: MetricGraph, edge_ids, v: str) -> MetricGraph:
    """Subgraph on ``edge_ids`` (which meets the rest only at ``v``) with inherited orderings."""
    rest = [eid for eid in g.edge_ids() if eid not in set(edge_ids)]
    if not rest:
        return g
    return cut_keep(g, rest, at=v)
