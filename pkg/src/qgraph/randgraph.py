"""Random rooted A-graphs for property sweeps."""
import numpy as np

from .graph import BOUNDARY_D, BOUNDARY_K, INTERNAL, CompactEdge, MetricGraph, Potential, Ray, Vertex


def random_potential(rng, length, qmax=5.0, zero=False):
    if zero:
        return Potential.zero()
    k = int(rng.integers(1, 4))
    cuts = np.sort(rng.uniform(0.0, length, k - 1))
    breaks = [0.0] + [float(c) for c in cuts]
    vals = [float(v) for v in rng.uniform(-qmax, qmax, k)]
    return Potential.piecewise(breaks, vals)


def random_a_graph(rng, max_edges=6, max_cycles=2, max_rays=2, qmax=5.0, zero=False, min_edges=2):
    """Connected rooted A-graph with compact edges, loops/short cycles and rays.

    The root is a boundary vertex joined to the rest by a compact edge.
    """
    n_target = int(rng.integers(min_edges, max_edges + 1))
    vkinds = ["root", INTERNAL]
    edges = []  # (u_index, v_index, length)
    edges.append((0, 1, rng.uniform(0.5, 1.5)))
    rays = []
    n_cyc = 0
    want_rays = int(rng.integers(0, max_rays + 1))

    def new_vertex():
        vkinds.append(INTERNAL)
        return len(vkinds) - 1

    while len(edges) < n_target:
        anchor = int(rng.integers(1, len(vkinds)))
        choice = rng.random()
        room = n_target - len(edges)
        if choice < 0.25 and n_cyc < max_cycles:
            edges.append((anchor, anchor, rng.uniform(0.5, 1.5)))
            n_cyc += 1
        elif choice < 0.45 and n_cyc < max_cycles and room >= 2:
            p = int(rng.integers(2, min(3, room) + 1))
            chain = [anchor] + [new_vertex() for _ in range(p - 1)]
            for a, b in zip(chain, chain[1:] + [anchor]):
                edges.append((min(a, b), max(a, b), rng.uniform(0.5, 1.5)))
            n_cyc += 1
        else:
            edges.append((anchor, new_vertex(), rng.uniform(0.5, 1.5)))
    deg = [0] * len(vkinds)
    for a, b, _ in edges:
        deg[a] += 1
        deg[b] += 1
    for _ in range(want_rays):
        cands = [k for k in range(1, len(vkinds))]
        base = int(rng.choice(cands))
        rays.append(base)
        deg[base] += 1
    names = [f"v{k}" for k in range(len(vkinds))]
    verts = []
    for k, kind in enumerate(vkinds):
        if k == 0:
            verts.append(Vertex(names[0], BOUNDARY_D if rng.random() < 0.5 else BOUNDARY_K))
        elif deg[k] == 1:
            verts.append(Vertex(names[k], BOUNDARY_D if rng.random() < 0.5 else BOUNDARY_K))
        else:
            verts.append(Vertex(names[k], INTERNAL))
    es = []
    for j, (a, b, L) in enumerate(edges):
        L = round(float(L), 3)
        es.append(CompactEdge(f"e{j}", names[a], names[b], L, random_potential(rng, L, qmax, zero)))
    rs = []
    for k, base in enumerate(rays):
        rs.append(Ray(f"r{k}", names[base], 1.0, random_potential(rng, 1.0, qmax, zero)))
    return MetricGraph(verts, es, rs, names[0])
