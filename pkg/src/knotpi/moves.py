"""Contexts, contextual application, and Reidemeister moves as rewrites.

A context is a process term with exactly one hole; contextual application
M[P] is plain substitution of P for the hole (capture permitted by
design: contexts bind over their holes).

Move templates give the two sides of each Reidemeister move as
abstractions over the splice interface:

  R1L(y0,y1)          one crossing whose x-ports are joined by a wire,
                      spliced at y0/y1 (restrictions embedded);
  R1R(y0,y1)          a single wire;
  R2L(x00,x01,x10,x11) two crossings doubly linked through their y-ports,
                      spliced at the four x-ports;
  R2R                 two pass-through wires reconnecting the strands as
                      R2L does: x00 runs to x11 and x01 to x10 (tracing
                      R2L, the strand entering at x00 passes under the
                      first crossing, crosses to the second and exits
                      over it at x11; likewise x01 to x10);
  R3L/R3R             three crossings; the strand c slides from below the
                      a-b crossing to above it, keeping each pair's
                      over/under relation (a over b, a over c, b over c).

Applying a move rewrites a KnotEncoding structurally: the matched
crossings/wires are replaced by the opposite side instantiated at the
same splice points, with new crossing quadruples appended as fresh
formals.  The hidden-name vector returned alongside is the set of
formals to restrict when comparing the two encodings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import SiteMismatch
from .terms import (
    Term, Name, NameUniverse, Abstraction, HOLE, sum_, input_, output_,
    bound_output, par, new, call, rec, free_names,
)
from .knot import (
    KnotEncoding, CrossingPorts, WireSpec, crossing_process, wire_process,
    shared_defs, X0, X1, Y0, Y1,
)


# ------------------------------------------------------------------ contexts

def count_holes(t: Term) -> int:
    k = t.kind
    if k == "hole":
        return 1
    if k == "sum":
        return sum(count_holes(br) for br in t.a)
    if k == "br":
        return count_holes(t.e)
    if k == "par":
        return sum(count_holes(c) for c in t.a)
    if k == "new":
        return count_holes(t.b)
    if k == "rec":
        return count_holes(t.c)
    return 0


class Context:
    """A process-shaped tree with exactly one hole."""

    __slots__ = ("term",)

    def __init__(self, term: Term):
        n = count_holes(term)
        if n != 1:
            raise ValueError(f"a context must have exactly one hole, got {n}")
        self.term = term

    def __repr__(self):
        return f"Context({self.term!r})"


def contextual_application(m: Context | Term, p: Term) -> Term:
    """M[P]: plain substitution of P for the hole; capture is intended."""
    t = m.term if isinstance(m, Context) else m

    def fill(x: Term) -> Term:
        if x.kind == "hole":
            return p
        if count_holes(x) == 0:
            return x
        k = x.kind
        if k == "sum":
            return sum_(fill(br) for br in x.a)
        if k == "br":
            cont = fill(x.e)
            if x.a == "i":
                return input_(x.b, x.c, cont)
            if x.a == "o":
                return output_(x.b, x.c, cont)
            return bound_output(x.b, x.d, x.c, cont)
        if k == "par":
            return par(fill(c) for c in x.a)
        if k == "new":
            return new(x.a, fill(x.b))
        if k == "rec":
            return rec(x.a, x.b, fill(x.c), x.d)
        return x

    return fill(t)


# ------------------------------------------------------------------- sites

@dataclass(frozen=True)
class MoveSite:
    """Anchors select the redex by index into the encoding's structure.

    R1 forward: anchors = (wire index,)
    R1 backward: anchors = (crossing index,)
    R2 forward: anchors = (wire index, wire index)
    R2 backward / R3: anchors = crossing indices
    """
    move: str  # "R1" | "R2" | "R3"
    direction: str  # "forward" | "backward"
    anchors: tuple[int, ...]

    def __post_init__(self):
        if self.move not in ("R1", "R2", "R3"):
            raise ValueError(f"unknown move {self.move}")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"unknown direction {self.direction}")


# ---------------------------------------------------------------- templates

def move_template(move: str, side: str,
                  universe: Optional[NameUniverse] = None) -> Abstraction:
    """Splice-interface abstraction for one side of a Reidemeister move."""
    uni = universe if universe is not None else NameUniverse()
    if move == "R1":
        y0, y1 = uni.fresh("y0"), uni.fresh("y1")
        if side == "R":
            return Abstraction((y0, y1), wire_process(y0, y1))
        x0, x1, w0, w1, u = (uni.fresh(s) for s in ("x0", "x1", "w0", "w1", "u"))
        body = new((x0, x1, w0, w1), par([
            wire_process(y0, w0),
            new((u,), call("C", (x0, x1, w0, w1, u))),
            wire_process(x0, x1),
            wire_process(y1, w1),
        ]))
        return Abstraction((y0, y1), body)
    if move == "R2":
        x00, x01, x10, x11 = (uni.fresh(s) for s in ("x00", "x01", "x10", "x11"))
        if side == "R":
            return Abstraction((x00, x01, x10, x11),
                               par([wire_process(x00, x11),
                                    wire_process(x01, x10)]))
        y00, y01, y10, y11 = (uni.fresh(s) for s in ("y00", "y01", "y10", "y11"))
        w00, w01, w10, w11 = (uni.fresh(s) for s in ("w00", "w01", "w10", "w11"))
        u0, u1 = uni.fresh("u0"), uni.fresh("u1")
        body = new((y00, y01, y10, y11, w00, w01, w10, w11), par([
            wire_process(x00, w00),
            wire_process(x01, w01),
            new((u0,), call("C", (w00, w01, y00, y01, u0))),
            wire_process(y00, y11),
            wire_process(y01, y10),
            new((u1,), call("C", (w10, w11, y10, y11, u1))),
            wire_process(x10, w10),
            wire_process(x11, w11),
        ]))
        return Abstraction((x00, x01, x10, x11), body)
    if move == "R3":
        splice = tuple(uni.fresh(s) for s in ("a1", "a2", "b1", "b2", "c1", "c2"))
        crossings = _r3_crossings(uni)
        wires = _r3_wires(side, splice, crossings)
        comps = [new((c.u,), crossing_process(c)) for c in crossings]
        comps += [wire_process(w.a, w.b) for w in wires]
        hidden = tuple(p for c in crossings for p in c.quadruple())
        return Abstraction(splice, new(hidden, par(comps)))
    raise ValueError(f"unknown move {move}")


def _r3_crossings(uni: NameUniverse):
    """Internal crossings of an R3 side: P = a/b, Q = a/c, S = b/c.

    The first strand of each pair runs the over route (x1 <-> y0), the
    second the under route (x0 <-> y1).
    """
    out = []
    for tag in ("P", "Q", "S"):
        q = tuple(uni.fresh(f"{tag}{s}") for s in ("x0", "x1", "y0", "y1"))
        out.append(CrossingPorts(q[0], q[1], q[2], q[3], uni.fresh(f"{tag}u")))
    return tuple(out)


def _r3_wires(side: str, splice, crossings) -> list[WireSpec]:
    """R3 wiring over given crossings; strand c slides past the a/b
    crossing P, reversing the order it meets Q and S in."""
    a1, a2, b1, b2, c1, c2 = splice
    P, Q, S = crossings  # noqa: N806 - crossing tags
    if side == "L":
        return [
            # strand a: over at Q then over at P
            WireSpec(a1, Q.x1), WireSpec(Q.y0, P.x1), WireSpec(P.y0, a2),
            # strand b: over at S then under at P
            WireSpec(b1, S.x1), WireSpec(S.y0, P.x0), WireSpec(P.y1, b2),
            # strand c: under at Q then under at S
            WireSpec(c1, Q.x0), WireSpec(Q.y1, S.x0), WireSpec(S.y1, c2),
        ]
    return [
        # strand a: over at P then over at Q
        WireSpec(a1, P.x1), WireSpec(P.y0, Q.x1), WireSpec(Q.y0, a2),
        # strand b: under at P then over at S
        WireSpec(b1, P.x0), WireSpec(P.y1, S.x1), WireSpec(S.y0, b2),
        # strand c: under at S then under at Q
        WireSpec(c1, S.x0), WireSpec(S.y1, Q.x0), WireSpec(Q.y1, c2),
    ]


# ------------------------------------------------------------------- factor

def _body_with_hole(enc: KnotEncoding, skip_crossings: set[int],
                    skip_wires: set[int]) -> Term:
    comps: list[Term] = []
    placed = False
    for i, c in enumerate(enc.crossings):
        if i in skip_crossings:
            if not placed:
                comps.append(HOLE)
                placed = True
            continue
        comps.append(new((c.u,), crossing_process(c)))
    for k, w in enumerate(enc.wires):
        if k in skip_wires:
            if not placed:
                comps.append(HOLE)
                placed = True
            continue
        comps.append(wire_process(w.a, w.b))
    if not placed:
        comps.append(HOLE)
    return par(comps)


def _redex_term(enc: KnotEncoding, crossings: list[int], wires: list[int]) -> Term:
    comps = [new((enc.crossings[i].u,), crossing_process(enc.crossings[i]))
             for i in crossings]
    comps += [wire_process(enc.wires[k].a, enc.wires[k].b) for k in wires]
    return par(comps)


def _wire_index(enc: KnotEncoding, a: Name, b: Name) -> Optional[int]:
    for k, w in enumerate(enc.wires):
        if {w.a, w.b} == {a, b}:
            return k
    return None


def _wire_from(enc: KnotEncoding, port: Name) -> Optional[int]:
    for k, w in enumerate(enc.wires):
        if port in (w.a, w.b):
            return k
    return None


def _match_r1_backward(enc: KnotEncoding, ci: int):
    """The R1L shape at crossing ci: self-wire x0-x1, external y-wires."""
    if not 0 <= ci < enc.n:
        raise SiteMismatch(f"no crossing {ci}")
    c = enc.crossings[ci]
    self_wire = _wire_index(enc, c.x0, c.x1)
    if self_wire is None:
        raise SiteMismatch(
            f"crossing {ci} has no x0-x1 self-wire (not an R1 curl)")
    wy0 = _wire_from(enc, c.y0)
    wy1 = _wire_from(enc, c.y1)
    asserted = {self_wire, wy0, wy1}
    if None in asserted or len(asserted) != 3:
        raise SiteMismatch(f"crossing {ci} curl wires are not disjoint")
    w0 = enc.wires[wy0]
    w1 = enc.wires[wy1]
    a = w0.b if w0.a == c.y0 else w0.a
    b = w1.b if w1.a == c.y1 else w1.a
    ports = set(c.quadruple())
    if a in ports or b in ports:
        raise SiteMismatch(
            f"crossing {ci} curl is closed onto itself; removing it would "
            "leave no diagram")
    return c, self_wire, wy0, wy1, a, b


def _match_r2_backward(enc: KnotEncoding, ci: int, cj: int):
    """The R2L shape at crossings ci, cj: y-y double link, external x-wires."""
    for i in (ci, cj):
        if not 0 <= i < enc.n:
            raise SiteMismatch(f"no crossing {i}")
    if ci == cj:
        raise SiteMismatch("R2 needs two distinct crossings")
    c1, c2 = enc.crossings[ci], enc.crossings[cj]
    wa = _wire_index(enc, c1.y0, c2.y1)
    wb = _wire_index(enc, c1.y1, c2.y0)
    if wa is None or wb is None:
        raise SiteMismatch(
            f"crossings {ci},{cj} are not doubly linked through their y-ports")
    ext = {}
    for tag, port in (("x00", c1.x0), ("x01", c1.x1),
                      ("x10", c2.x0), ("x11", c2.x1)):
        k = _wire_from(enc, port)
        if k is None or k in (wa, wb):
            raise SiteMismatch(f"port {tag} of the R2 pair has no external wire")
        w = enc.wires[k]
        ext[tag] = (k, w.b if w.a == port else w.a)
    inner = set(c1.quadruple()) | set(c2.quadruple())
    if any(other in inner for _k, other in ext.values()):
        raise SiteMismatch("R2 pair is wired back into itself")
    kidx = {k for k, _ in ext.values()}
    if len(kidx) != 4:
        raise SiteMismatch("R2 external wires are not distinct")
    return c1, c2, wa, wb, ext


def factor(enc: KnotEncoding, site: MoveSite) -> tuple[Context, Term]:
    """Split the encoding body into a one-hole context and the move redex."""
    if site.move == "R1" and site.direction == "forward":
        (k,) = site.anchors
        if not 0 <= k < len(enc.wires):
            raise SiteMismatch(f"no wire {k}")
        ctx = Context(_body_with_hole(enc, set(), {k}))
        return ctx, _redex_term(enc, [], [k])
    if site.move == "R1" and site.direction == "backward":
        (ci,) = site.anchors
        _c, sw, wy0, wy1, _a, _b = _match_r1_backward(enc, ci)
        ctx = Context(_body_with_hole(enc, {ci}, {sw, wy0, wy1}))
        return ctx, _redex_term(enc, [ci], sorted((sw, wy0, wy1)))
    if site.move == "R2" and site.direction == "forward":
        ka, kb = site.anchors
        if ka == kb or not all(0 <= k < len(enc.wires) for k in (ka, kb)):
            raise SiteMismatch(f"need two distinct wires, got {site.anchors}")
        ctx = Context(_body_with_hole(enc, set(), {ka, kb}))
        return ctx, _redex_term(enc, [], sorted((ka, kb)))
    if site.move == "R2" and site.direction == "backward":
        ci, cj = site.anchors
        c1, c2, wa, wb, ext = _match_r2_backward(enc, ci, cj)
        wires = sorted({wa, wb} | {k for k, _ in ext.values()})
        ctx = Context(_body_with_hole(enc, {ci, cj}, set(wires)))
        return ctx, _redex_term(enc, sorted((ci, cj)), wires)
    if site.move == "R3":
        cs = list(site.anchors)
        if len(cs) != 3 or len(set(cs)) != 3:
            raise SiteMismatch("R3 needs three distinct crossings")
        match = _match_r3(enc, cs, "L" if site.direction == "forward" else "R")
        wires = sorted(match["wires"])
        ctx = Context(_body_with_hole(enc, set(cs), set(wires)))
        return ctx, _redex_term(enc, sorted(cs), wires)
    raise SiteMismatch(f"unsupported move/site {site}")


def _match_r3(enc: KnotEncoding, cs: list[int], side: str) -> dict:
    """Match the three-crossing R3 wiring (P, Q, S in anchor order).

    Returns the matched wire indices plus the actual splice endpoints
    keyed by the template splice slot (a1..c2 order)."""
    actual = tuple(enc.crossings[i] for i in cs)
    probe = NameUniverse()
    probe_splice = tuple(probe.fresh(f"s{i}") for i in range(6))
    probe_cross = _r3_crossings(probe)
    want_wires = _r3_wires(side, probe_splice, probe_cross)
    m = {}
    for tc, ac in zip(probe_cross, actual):
        for tp, ap in zip(tc.quadruple(), ac.quadruple()):
            m[tp] = ap
    wires = []
    splice: dict[int, Name] = {}
    for w in want_wires:
        a = m.get(w.a)
        b = m.get(w.b)
        if a is not None and b is not None:
            k = _wire_index(enc, a, b)
            if k is None:
                raise SiteMismatch(
                    f"crossings {cs} lack the internal {side}-side wiring")
            wires.append(k)
        else:
            slot, port = (w.a, b) if a is None else (w.b, a)
            k = _wire_from(enc, port)
            if k is None:
                raise SiteMismatch(f"port of crossings {cs} is unwired")
            w2 = enc.wires[k]
            other = w2.b if w2.a == port else w2.a
            inner = {p for c in actual for p in c.quadruple()}
            if other in inner:
                raise SiteMismatch(
                    f"R3 site at {cs} is wired back into itself")
            wires.append(k)
            splice[probe_splice.index(slot)] = other
    if len(set(wires)) != len(wires) or len(splice) != 6:
        raise SiteMismatch(f"crossings {cs} do not form an R3 {side} site")
    return {"wires": wires,
            "splice": tuple(splice[i] for i in range(6))}


# -------------------------------------------------------------- apply_move

def apply_move(enc: KnotEncoding, site: MoveSite
               ) -> tuple[KnotEncoding, tuple[Name, ...]]:
    """Rewrite the encoding at the site; returns (new encoding, hidden).

    `hidden` is the vector of formals that must be restricted on the
    larger side when comparing the encodings before and after the move
    (the new formals for forward moves, the removed ones for backward).
    """
    factor(enc, site)  # validate the shape; raises SiteMismatch otherwise
    if site.move == "R1" and site.direction == "forward":
        return _apply_r1_forward(enc, site.anchors[0])
    if site.move == "R1" and site.direction == "backward":
        return _apply_r1_backward(enc, site.anchors[0])
    if site.move == "R2" and site.direction == "forward":
        return _apply_r2_forward(enc, *site.anchors)
    if site.move == "R2" and site.direction == "backward":
        return _apply_r2_backward(enc, *site.anchors)
    if site.move == "R3":
        return _apply_r3(enc, site)
    raise SiteMismatch(f"unsupported move/site {site}")


def _fresh_quadruple(enc: KnotEncoding) -> tuple[CrossingPorts, tuple[Name, ...]]:
    uni = enc.universe
    base = enc.arity
    q = tuple(uni.fresh(f"v{base + i}") for i in range(4))
    c = CrossingPorts(q[X0], q[X1], q[Y0], q[Y1], uni.fresh(f"u{enc.n}"))
    return c, q


def _apply_r1_forward(enc: KnotEncoding, k: int):
    w = enc.wires[k]
    c, q = _fresh_quadruple(enc)
    wires = [x for i, x in enumerate(enc.wires) if i != k]
    wires += [WireSpec(c.x0, c.x1), WireSpec(c.y0, w.a), WireSpec(c.y1, w.b)]
    out = KnotEncoding(code=None, formals=enc.formals + q,
                       crossings=enc.crossings + (c,), wires=tuple(wires),
                       defs=enc.defs, universe=enc.universe)
    out.validate()
    return out, q


def _apply_r1_backward(enc: KnotEncoding, ci: int):
    c, sw, wy0, wy1, a, b = _match_r1_backward(enc, ci)
    removed = c.quadruple()
    wires = [w for i, w in enumerate(enc.wires) if i not in (sw, wy0, wy1)]
    wires.append(WireSpec(a, b))
    out = KnotEncoding(
        code=None,
        formals=tuple(f for f in enc.formals if f not in removed),
        crossings=tuple(x for i, x in enumerate(enc.crossings) if i != ci),
        wires=tuple(wires), defs=enc.defs, universe=enc.universe)
    out.validate()
    return out, removed


def _apply_r2_forward(enc: KnotEncoding, ka: int, kb: int):
    wa, wb = enc.wires[ka], enc.wires[kb]
    cA, qA = _fresh_quadruple(enc)
    encA = KnotEncoding(code=None, formals=enc.formals + qA,
                        crossings=enc.crossings + (cA,), wires=enc.wires,
                        defs=enc.defs, universe=enc.universe)
    cB, qB = _fresh_quadruple(encA)
    # R2L at splice (x00,x01,x10,x11) = (wa.a, wb.a, wb.b, wa.b):
    # strand wa.a=>wa.b runs x00->x11, strand wb.a=>wb.b runs x01->x10
    wires = [w for i, w in enumerate(enc.wires) if i not in (ka, kb)]
    wires += [
        WireSpec(wa.a, cA.x0), WireSpec(wb.a, cA.x1),
        WireSpec(cA.y0, cB.y1), WireSpec(cA.y1, cB.y0),
        WireSpec(wb.b, cB.x0), WireSpec(wa.b, cB.x1),
    ]
    out = KnotEncoding(code=None, formals=enc.formals + qA + qB,
                       crossings=enc.crossings + (cA, cB), wires=tuple(wires),
                       defs=enc.defs, universe=enc.universe)
    out.validate()
    return out, qA + qB


def _apply_r2_backward(enc: KnotEncoding, ci: int, cj: int):
    c1, c2, wa, wb, ext = _match_r2_backward(enc, ci, cj)
    removed = c1.quadruple() + c2.quadruple()
    drop = {wa, wb} | {k for k, _ in ext.values()}
    wires = [w for i, w in enumerate(enc.wires) if i not in drop]
    # strand continuity of R2L: x00 runs to x11 and x01 to x10
    wires.append(WireSpec(ext["x00"][1], ext["x11"][1]))
    wires.append(WireSpec(ext["x01"][1], ext["x10"][1]))
    out = KnotEncoding(
        code=None,
        formals=tuple(f for f in enc.formals if f not in removed),
        crossings=tuple(x for i, x in enumerate(enc.crossings)
                        if i not in (ci, cj)),
        wires=tuple(wires), defs=enc.defs, universe=enc.universe)
    out.validate()
    return out, removed


def _apply_r3(enc: KnotEncoding, site: MoveSite):
    cs = list(site.anchors)
    from_side = "L" if site.direction == "forward" else "R"
    to_side = "R" if site.direction == "forward" else "L"
    match = _match_r3(enc, cs, from_side)
    actual = tuple(enc.crossings[i] for i in cs)
    splice = match["splice"]
    wires = [w for i, w in enumerate(enc.wires) if i not in set(match["wires"])]
    wires += _r3_wires(to_side, splice, actual)
    out = KnotEncoding(code=None, formals=enc.formals,
                       crossings=enc.crossings, wires=tuple(wires),
                       defs=enc.defs, universe=enc.universe)
    out.validate()
    return out, ()
