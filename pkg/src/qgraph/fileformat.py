"""Line-oriented graph description files.

::

    # comment
    vertex <id> internal|boundary_D|boundary_K
    edge <id> <u> <v> length <float> potential <spec>
    ray <id> <v> support <float> potential <spec>
    root <vertex-id>

``<spec>`` is ``zero``, ``const <c>``, ``pw <b0> <v0> <b1> <v1> ...`` or
``grid <h> <v0> <v1> ...``.  Declaration order fixes every ordering.  An edge
potential is read from the first named endpoint; if that endpoint is declared
after the second one the edge is stored reversed.
"""
from dataclasses import replace

from .errors import ParseError, StructuralError
from .graph import VERTEX_KINDS, check_ray_potential, CompactEdge, MetricGraph, Potential, Ray, Vertex


def _num(tok, lineno, what):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(lineno, f"expected a number for {what}, got {tok!r}") from None


def parse_potential(tokens, lineno=0) -> Potential:
    if not tokens:
        raise ParseError(lineno, "missing potential spec")
    kind, args = tokens[0], tokens[1:]
    try:
        if kind == "zero" and not args:
            return Potential.zero()
        if kind == "const" and len(args) == 1:
            return Potential.const(_num(args[0], lineno, "const value"))
        if kind == "pw" and args and len(args) % 2 == 0:
            nums = [_num(a, lineno, "pw entry") for a in args]
            return Potential.piecewise(nums[0::2], nums[1::2])
        if kind == "grid" and len(args) >= 2:
            nums = [_num(a, lineno, "grid entry") for a in args]
            return Potential.grid(nums[0], nums[1:])
    except StructuralError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(lineno, str(exc)) from None
    raise ParseError(lineno, f"malformed potential spec {' '.join(tokens)!r}")


def format_potential(p: Potential) -> str:
    if p.kind == "zero":
        return "zero"
    if p.kind == "const":
        return f"const {p.values[0]!r}"
    if p.kind == "pw":
        return "pw " + " ".join(f"{b!r} {v!r}" for b, v in zip(p.breaks, p.values))
    return f"grid {p.h!r} " + " ".join(repr(v) for v in p.values)


def _keyword(toks, pos, word, lineno):
    if len(toks) <= pos or toks[pos] != word:
        raise ParseError(lineno, f"expected {word!r} at field {pos + 1}")


def parse_graph_file(text: str) -> MetricGraph:
    """Parse a graph description; raises ``ParseError`` with line numbers."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    vertices, seen = [], {}
    for lineno, toks in lines:
        if toks[0] != "vertex":
            continue
        if len(toks) != 3 or toks[2] not in VERTEX_KINDS:
            raise ParseError(lineno, "expected: vertex <id> internal|boundary_D|boundary_K")
        if toks[1] in seen:
            raise ParseError(lineno, f"duplicate vertex {toks[1]!r}")
        seen[toks[1]] = len(vertices)
        vertices.append(Vertex(toks[1], toks[2]))
    edges, rays, root, ids = [], [], None, set()

    def need_vertex(vid, lineno):
        if vid not in seen:
            raise ParseError(lineno, f"dangling vertex reference {vid!r}")

    for lineno, toks in lines:
        head = toks[0]
        if head == "vertex":
            continue
        if head == "edge":
            if len(toks) < 8:
                raise ParseError(lineno, "expected: edge <id> <u> <v> length <float> potential <spec>")
            eid, u, v = toks[1:4]
            need_vertex(u, lineno)
            need_vertex(v, lineno)
            _keyword(toks, 4, "length", lineno)
            length = _num(toks[5], lineno, "length")
            if not length > 0:
                raise ParseError(lineno, f"edge {eid}: nonpositive length {length}")
            _keyword(toks, 6, "potential", lineno)
            pot = parse_potential(toks[7:], lineno)
            try:
                pot.check_domain(length)
            except StructuralError as exc:
                raise ParseError(lineno, str(exc)) from None
            if seen[u] > seen[v]:
                u, v, pot = v, u, pot.reversed(length)
            if eid in ids:
                raise ParseError(lineno, f"duplicate edge id {eid!r}")
            ids.add(eid)
            edges.append(CompactEdge(eid, u, v, length, pot))
        elif head == "ray":
            if len(toks) < 7:
                raise ParseError(lineno, "expected: ray <id> <v> support <float> potential <spec>")
            rid, v = toks[1:3]
            need_vertex(v, lineno)
            _keyword(toks, 3, "support", lineno)
            support = _num(toks[4], lineno, "support")
            if support < 0:
                raise ParseError(lineno, f"ray {rid}: negative support radius")
            _keyword(toks, 5, "potential", lineno)
            pot = parse_potential(toks[6:], lineno)
            try:
                check_ray_potential(pot, support, rid)
            except StructuralError as exc:
                raise ParseError(lineno, str(exc)) from None
            if rid in ids:
                raise ParseError(lineno, f"duplicate edge id {rid!r}")
            ids.add(rid)
            rays.append(Ray(rid, v, support, pot))
        elif head == "root":
            if len(toks) != 2:
                raise ParseError(lineno, "expected: root <vertex-id>")
            need_vertex(toks[1], lineno)
            if root is not None:
                raise ParseError(lineno, "root declared twice")
            root = toks[1]
        else:
            raise ParseError(lineno, f"unknown directive {head!r}")
    return MetricGraph(vertices, edges, rays, root)


def emit_graph(g: MetricGraph) -> str:
    """Canonical text form; ``parse_graph_file(emit_graph(g)) == g``."""
    out = [f"vertex {v.id} {v.kind}" for v in g.vertices]
    out += [f"edge {e.id} {e.initial} {e.terminal} length {e.length!r} potential {format_potential(e.potential)}"
            for e in g.edges]
    out += [f"ray {r.id} {r.base} support {r.support!r} potential {format_potential(r.potential)}" for r in g.rays]
    if g.root is not None:
        out.append(f"root {g.root}")
    return "\n".join(out) + "\n"


def load_graph(path) -> MetricGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph_file(fh.read())


def graph_with_vertex_kind(g: MetricGraph, vid, kind) -> MetricGraph:
    verts = [replace(v, kind=kind) if v.id == vid else v for v in g.vertices]
    return MetricGraph(verts, g.edges, g.rays, g.root)
