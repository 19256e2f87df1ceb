"""Command-line front end.

Every command prints one JSON document (``"schema": "qgraph/1"``) or, with
``--format csv``, a table.  Exit status: 0 success, 1 numerical failure,
2 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .asymptotics import exp_sum_coefficients, leading_coefficient_recursive
from .characteristic import (
    compact_eigenvalues,
    delta,
    delta_batch,
    negative_spectrum,
    positive_singular_set,
    weyl_function,
    weyl_function_batch,
)
from .errors import NumericalError, QGraphError, StructuralError
from .fileformat import emit_graph, load_graph
from .graph import Ray, compute_orders, enumerate_cycles, validate_a_graph
from .local import MINUS, PLUS, SpectralPoint, jost, local_basis
from .propagation import ProbeConfig, peel_schedule, uniqueness_probe
from .randgraph import random_a_graph
from .scattering import full_data, lambda_grid, rho_grid, scattering_data
from .surgery import cut_dirichlet, cut_keep, split_vertex, unroll_cycle

SCHEMA = "qgraph/1"


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    lam: complex | None = None
    side: str | None = None
    vertex: str | None = None
    ray: str | None = None
    edge: str | None = None
    grid: tuple | None = None
    fmt: str = "json"
    tol: float | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid is not None:
            a, b, n = self.grid
            if n < 1 or not b > a:
                raise ValueError(f"grid needs a < b and n >= 1, got {self.grid}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("--tol must be positive")


class _InputError(Exception):
    pass


def _cplx(z):
    z = complex(z)
    return {"re": _f(z.real), "im": _f(z.imag)}


def _f(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _parse_lambda(text):
    try:
        parts = [float(t) for t in text.split(",")]
    except ValueError:
        raise _InputError(f"--lambda expects RE,IM, got {text!r}") from None
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2:
        raise _InputError(f"--lambda expects RE,IM, got {text!r}")
    return complex(*parts)


def _parse_grid(text):
    try:
        a, b, n = text.split(",")
        return float(a), float(b), int(n)
    except ValueError:
        raise _InputError(f"--grid expects a,b,n, got {text!r}") from None


def _need(cfg, name):
    val = getattr(cfg, name)
    if val is None:
        raise _InputError(f"command {cfg.command!r} needs --{name if name != 'lam' else 'lambda'}")
    return val


def _sp(cfg):
    lam = _need(cfg, "lam")
    side = {None: None, "plus": PLUS, "minus": MINUS}[cfg.side]
    if side is not None and not (lam.imag == 0 and lam.real >= 0):
        raise _InputError("--side only applies to real nonnegative lambda")
    return SpectralPoint.from_lambda(lam, side)


def _real_grid(cfg):
    if cfg.grid is None:
        raise _InputError("csv output needs --grid a,b,n")
    return np.linspace(*cfg.grid)


# ---------------------------------------------------------------------------
# commands; each returns (document, csv rows or None)


def cmd_validate(g, cfg):
    rep = validate_a_graph(g)
    doc = {"ok": rep.ok, "violations": rep.violations, "cycles": [list(c.members) for c in enumerate_cycles(g, check=False)]}
    if g.root is not None and rep.ok:
        items, omega = compute_orders(g)
        doc["orders"] = [{"members": list(a.members), "kind": a.kind, "order": a.order, "anchor": a.anchor} for a in items]
        doc["omega"] = omega
    return doc, None


def cmd_surgery(g, cfg):
    op = cfg.extra.get("op")
    if op == "split":
        res = split_vertex(g, _need(cfg, "vertex"))
        out = res.graph
    elif op in ("cut_keep", "cut_dirichlet"):
        part = cfg.extra.get("part")
        if not part:
            raise _InputError(f"{op} needs --part ID[,ID...]")
        fn = cut_keep if op == "cut_keep" else cut_dirichlet
        out = fn(g, part.split(","), at=cfg.vertex)
    elif op == "unroll":
        eid = _need(cfg, "edge")
        cyc = [c for c in enumerate_cycles(g) if eid in c.members]
        if not cyc:
            raise _InputError(f"edge {eid!r} is not on a cycle")
        out = unroll_cycle(g, cyc[0]).graph
    else:
        raise _InputError("surgery needs --op split|cut_keep|cut_dirichlet|unroll")
    return {"op": op, "graph": emit_graph(out)}, None


def cmd_basis(g, cfg):
    sp = _sp(cfg)
    e = g.edge(_need(cfg, "edge"))
    if isinstance(e, Ray):
        raise _InputError("basis needs a compact edge")
    C, S = local_basis(e, sp)
    (c, dc), (s, ds) = C(e.length), S(e.length)
    return {"lambda": _cplx(sp.lam), "edge": e.id, "length": e.length,
            "C": _cplx(c[0]), "dC": _cplx(dc[0]), "S": _cplx(s[0]), "dS": _cplx(ds[0])}, None


def cmd_jost(g, cfg):
    sp = _sp(cfg)
    r = g.edge(_need(cfg, "ray"))
    if not isinstance(r, Ray):
        raise _InputError(f"{r.id!r} is not a ray")
    js = jost(r, sp)
    return {"lambda": _cplx(sp.lam), "rho": _cplx(sp.rho), "ray": r.id,
            "d": _cplx(js.d), "d_inward": _cplx(js.dd)}, None


def cmd_delta(g, cfg):
    if cfg.fmt == "csv":
        lams = _real_grid(cfg) + 0j
        side = MINUS if cfg.side == "minus" else PLUS
        sps = [SpectralPoint.from_lambda(l, side if l.real >= 0 else None) for l in lams]
        vals = delta_batch(g, lams, np.array([s.rho for s in sps]))
        return None, [("lambda", "re", "im")] + [(l.real, v.real, v.imag) for l, v in zip(lams, vals)]
    sp = _sp(cfg)
    return {"lambda": _cplx(sp.lam), "side": sp.side, "value": _cplx(delta(g, sp))}, None


def cmd_spectrum(g, cfg):
    lam_max = cfg.extra.get("lam_max") or 400.0
    if g.is_compact:
        ev = compact_eigenvalues(g, lam_max)
        doc = {"eigenvalues": [{"lambda": _f(l), "multiplicity": m} for l, m in ev], "lambda_max": lam_max}
    else:
        neg = negative_spectrum(g)
        pos = positive_singular_set(g, rho_max=float(np.sqrt(lam_max)))
        doc = {"eigenvalues": [{"lambda": _f(l), "multiplicity": m} for l, m in neg.negative_eigenvalues],
               "positive_candidates": [{k: (_f(v) if isinstance(v, float) else v) for k, v in c.items()}
                                       for c in pos.positive_candidates],
               "diagnostics": {k: v for k, v in neg.diagnostics.items()}}
    return doc, None


def cmd_weyl(g, cfg):
    v = _need(cfg, "vertex")
    if cfg.fmt == "csv":
        lams = _real_grid(cfg) + 1j
        vals = weyl_function_batch(g, v, lams)
        return None, [("re_lambda", "im_lambda", "re", "im")] + [(l.real, l.imag, m.real, m.imag) for l, m in zip(lams, vals)]
    sp = _sp(cfg)
    M = weyl_function(g, v, sp, rtol=cfg.tol or 1e-6)
    return {"lambda": _cplx(sp.lam), "vertex": v, "value": _cplx(M)}, None


def cmd_bcoeffs(g, cfg):
    ex = exp_sum_coefficients(g)
    doc = {"N": ex.N, "total_length": ex.total_length,
           "coefficients": {repr(float(l)): b for l, b in ex.coefficients.items()},
           "leading": ex.leading, "diagnostics": ex.diagnostics}
    if any(g.degree(v.id) >= 3 for v in g.vertices):
        doc["leading_recursive"] = leading_coefficient_recursive(g).value
    return doc, None


def _rgrid(cfg):
    return rho_grid(*cfg.grid) if cfg.grid else rho_grid()


def cmd_scatter(g, cfg):
    sd = scattering_data(g, _need(cfg, "ray"), _rgrid(cfg))
    if cfg.fmt == "csv":
        return None, [("rho", "re", "im", "quality")] + [(p, s.real, s.imag, q) for p, s, q in zip(sd.rho, sd.reflection, sd.quality)]
    return sd.to_json(), None


def cmd_fulldata(g, cfg):
    fd = full_data(g, _rgrid(cfg))
    if cfg.fmt == "csv":
        rows = [("ray", "rho", "re", "im", "quality")]
        for rid, sd in fd.scattering.items():
            rows += [(rid, p, s.real, s.imag, q) for p, s, q in zip(sd.rho, sd.reflection, sd.quality)]
        return None, rows
    return fd.to_json(), None


def cmd_schedule(g, cfg):
    steps = peel_schedule(g)
    _, omega = compute_orders(g)
    return {"omega": omega, "steps": [s.to_json() for s in steps]}, None


def cmd_probe(g, cfg):
    q = load_graph(cfg.extra["q"]) if cfg.extra.get("q") else None
    qt = load_graph(cfg.extra["qtilde"]) if cfg.extra.get("qtilde") else None
    pc = ProbeConfig(lam=lambda_grid(), rho=_rgrid(cfg), mode=cfg.extra.get("mode") or "localized")
    if cfg.tol:
        pc.match_tol = cfg.tol
    return uniqueness_probe(g, q, qt, pc).to_json(), None


def cmd_random(g, cfg):
    rng = np.random.default_rng(cfg.seed)
    return {"seed": cfg.seed, "graph": emit_graph(random_a_graph(rng))}, None


COMMANDS = {
    "validate": cmd_validate, "surgery": cmd_surgery, "basis": cmd_basis, "jost": cmd_jost,
    "delta": cmd_delta, "spectrum": cmd_spectrum, "weyl": cmd_weyl, "bcoeffs": cmd_bcoeffs,
    "scatter": cmd_scatter, "fulldata": cmd_fulldata, "schedule": cmd_schedule, "probe": cmd_probe,
    "random": cmd_random,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qgraph", description="Spectral and scattering computations on metric A-graphs.")
    p.add_argument("--version", action="version", version=f"qgraph {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--graph", required=name != "random")
        s.add_argument("--lambda", dest="lam")
        s.add_argument("--side", choices=("plus", "minus"))
        s.add_argument("--vertex")
        s.add_argument("--ray")
        s.add_argument("--edge")
        s.add_argument("--grid")
        s.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
        s.add_argument("--csv", action="store_const", dest="fmt", const="csv")
        s.add_argument("--tol", type=float)
        s.add_argument("--seed", type=int, default=0)
        if name == "surgery":
            s.add_argument("--op", choices=("split", "cut_keep", "cut_dirichlet", "unroll"))
            s.add_argument("--part")
        if name == "spectrum":
            s.add_argument("--lam-max", type=float)
        if name == "probe":
            s.add_argument("--q")
            s.add_argument("--qtilde")
            s.add_argument("--mode", choices=("direct", "localized"))
    return p


def _config(ns):
    extra = {k: getattr(ns, k) for k in ("op", "part", "lam_max", "q", "qtilde", "mode") if hasattr(ns, k)}
    return RunConfig(ns.command, ns.graph, _parse_lambda(ns.lam) if ns.lam else None, ns.side, ns.vertex,
                     ns.ray, ns.edge, _parse_grid(ns.grid) if ns.grid else None, ns.fmt, ns.tol, ns.seed, extra)


def _emit_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([format(x, ".17g") if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def run(cfg: RunConfig):
    """Execute one command; returns ``(exit_status, text)``."""
    try:
        g = load_graph(cfg.graph) if cfg.graph else None
        doc, rows = COMMANDS[cfg.command](g, cfg)
    except (_InputError, StructuralError, ValueError, KeyError, OSError) as exc:
        return 2, _document(cfg.command, {"error": {"kind": "input", "message": _msg(exc)}})
    except (NumericalError, QGraphError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return 1, _document(cfg.command, {"error": {"kind": "numerical", "message": _msg(exc)}})
    if rows is not None:
        return 0, _emit_csv(rows)
    return 0, _document(cfg.command, doc)


def _msg(exc):
    return exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)


def _document(command, body):
    doc = {"schema": SCHEMA, "command": command}
    doc.update(body)
    return json.dumps(_clean(doc), indent=1, allow_nan=False) + "\n"


def _clean(o):
    """Plain JSON values; non-finite floats become null, complex numbers objects."""
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple, np.ndarray)):
        return [_clean(v) for v in o]
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        return _f(o)
    if isinstance(o, (complex, np.complexfloating)):
        return _cplx(o)
    return o


def _join_values(argv):
    """Let ``--lambda -1,0`` through: argparse would take ``-1,0`` for an option."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--lambda", "--grid"):
            val = next(it, None)
            out.append(tok if val is None else f"{tok}={val}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(_join_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        cfg = _config(ns)
    except (_InputError, ValueError) as exc:
        sys.stdout.write(_document(ns.command, {"error": {"kind": "input", "message": str(exc)}}))
        return 2
    status, text = run(cfg)
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
