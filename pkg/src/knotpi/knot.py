"""DT codes, crossing/wire process templates, and the knot encoder.

A Dowker-Thistlethwaite code for an n-crossing diagram is the list
delta(1), delta(3), ..., delta(2n-1) of signed even integers.  From it we
derive sigma (the parity-reversing involution pairing the two labels of
each crossing), tau (label -> signed label), delta = tau . sigma, and
sgn.  A visit at label j is an overpass iff the even label of that
crossing is positive when j is odd, or the entry for j itself is
negative when j is even.

The encoder allocates 4n formals v0..v_{4n-1}, gives crossing i (the one
with odd label 2i+1) the quadruple (x0,x1,y0,y1) = (v_{4i},..,v_{4i+3})
with a restricted synchronizer u, and wires consecutive traversal visits
together: the exit port of the visit at label j meets the entry port of
the visit at label j+1 (entry x1 / exit y0 on an overpass, entry x0 /
exit y1 on an underpass).  Visiting every crossing generates each wire
twice (4n raw wires); deduplication by unordered endpoint pair leaves
the 2n wires of the diagram's 4-valent shadow.

Realizability of codes beyond the involution checks is out of scope:
codes passing them may encode no actual knot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import (
    BadParity, NotPermutation, EmptyCode, AdjacencyInconsistent, NoWireToCut,
)
from .terms import (
    Term, Name, NameUniverse, DefEnv, Abstraction, NIL,
    sum_, input_, output_, par, new, call, free_names,
)

# port offsets within a crossing quadruple
X0, X1, Y0, Y1 = 0, 1, 2, 3


# ------------------------------------------------------------------ DT codes

@dataclass(frozen=True)
class DTCode:
    """A validated DT code with its derived functions."""
    name: str
    evens: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.evens)

    def sigma(self, i: int) -> int:
        """The other label at the crossing of label i (an involution)."""
        if i % 2 == 1:
            return abs(self.evens[(i - 1) // 2])
        return self._even_to_odd()[i]

    def _even_to_odd(self) -> dict[int, int]:
        return {abs(e): 2 * k + 1 for k, e in enumerate(self.evens)}

    def tau(self, s: int) -> int:
        """Signed version of label s; odd labels are positive."""
        if s % 2 == 1:
            return s
        k = self._even_to_odd()[s]
        return self.evens[(k - 1) // 2]

    def delta(self, i: int) -> int:
        return self.tau(self.sigma(i))

    def sgn(self, i: int) -> int:
        return 1 if self.tau(i) > 0 else -1

    def over(self, j: int) -> bool:
        """Is the traversal visit at label j an overpass?"""
        j = self._norm(j)
        if j % 2 == 1:
            return self.delta(j) > 0
        return self.tau(j) < 0

    def crossing_of(self, j: int) -> int:
        """Index (0-based) of the crossing visited at label j."""
        j = self._norm(j)
        if j % 2 == 1:
            return (j - 1) // 2
        return (self.sigma(j) - 1) // 2

    def _norm(self, j: int) -> int:
        m = 2 * self.n
        return ((j - 1) % m) + 1

    def __str__(self) -> str:
        body = " ".join(str(e) for e in self.evens)
        return f"{self.name}: {body}" if self.name else body


def dt_parse(text: str, name: str = "") -> DTCode:
    """Parse whitespace-separated signed even integers into a DTCode."""
    fields = text.split()
    if not fields:
        raise EmptyCode("empty DT code")
    try:
        evens = tuple(int(f) for f in fields)
    except ValueError as exc:
        raise NotPermutation(f"not integers: {text!r}") from exc
    for e in evens:
        if e % 2 != 0 or e == 0:
            raise BadParity(f"odd or zero magnitude in DT code: {e}")
    n = len(evens)
    mags = sorted(abs(e) for e in evens)
    if mags != list(range(2, 2 * n + 1, 2)):
        raise NotPermutation(
            f"even magnitudes must be exactly 2..{2*n}: got {sorted(mags)}")
    code = DTCode(name=name, evens=evens)
    for i in range(1, 2 * n + 1):
        if code.sigma(code.sigma(i)) != i:
            raise NotPermutation("derived pairing is not an involution")
        if code.sigma(i) % 2 == i % 2:
            raise NotPermutation("derived pairing is not parity-reversing")
        if code.delta(i) != code.tau(code.sigma(i)):
            raise NotPermutation("delta != tau . sigma")
    return code


def parse_dt_file(text: str) -> list[DTCode]:
    """One knot per line: `name: e1 e2 ... en` (name optional)."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            name, _, rest = line.partition(":")
            out.append(dt_parse(rest, name=name.strip()))
        else:
            out.append(dt_parse(line, name=f"knot{lineno}"))
    if not out:
        raise EmptyCode("no DT codes in input")
    return out


# ------------------------------------------------------------------ wiring

def port_index(dt: DTCode, j: int, role: str) -> int:
    """Formal index of the entry/exit port of the visit at label j."""
    c = dt.crossing_of(j)
    if role == "entry":
        off = X1 if dt.over(j) else X0
    else:
        off = Y0 if dt.over(j) else Y1
    return 4 * c + off


def omega_wiring_raw(dt: DTCode) -> list[tuple[int, int]]:
    """The appendix-style wire list: four wires per crossing, duplicated.

    Visiting crossing i (odd label o, even label e) emits the wires of
    both its visits: entry from the previous label's exit and exit to the
    next label's entry, for o and for e.  Every wire is generated once
    from each of its two endpoints, so the raw list has 4n entries.
    """
    out = []
    for i in range(dt.n):
        o = 2 * i + 1
        e = dt.sigma(o)
        for j in (o, e):
            out.append((port_index(dt, j, "entry"), port_index(dt, j - 1, "exit")))
            out.append((port_index(dt, j, "exit"), port_index(dt, j + 1, "entry")))
    return out


def omega_wiring(dt: DTCode) -> list[tuple[int, int]]:
    """Deduplicated wiring: 2n wires forming a perfect matching on ports."""
    raw = omega_wiring_raw(dt)
    counts: dict[tuple[int, int], int] = {}
    for a, b in raw:
        key = (a, b) if a <= b else (b, a)
        counts[key] = counts.get(key, 0) + 1
    for key, c in counts.items():
        if c != 2:
            raise AdjacencyInconsistent(
                f"wire {key} generated {c} times (expected 2)")
    wires = sorted(counts)
    seen: dict[int, int] = {}
    for a, b in wires:
        seen[a] = seen.get(a, 0) + 1
        seen[b] = seen.get(b, 0) + 1
    if len(seen) != 4 * dt.n or any(c != 1 for c in seen.values()):
        raise AdjacencyInconsistent("ports are not perfectly matched by wires")
    return wires


# ------------------------------------------------------------------ templates

def default_defs(universe: Optional[NameUniverse] = None
                 ) -> tuple[DefEnv, NameUniverse]:
    """The crossing / wire / relay definition family.

    C's third and fourth summands carry the received signal into C' as an
    explicit extra parameter, which C' finally emits after the
    synchronizer fires.
    """
    uni = universe if universe is not None else NameUniverse()
    x0, x1, y0, y1, u = (uni.fresh(s) for s in ("x0", "x1", "y0", "y1", "u"))
    s, t, v = uni.fresh("s"), uni.fresh("t"), uni.fresh("v")

    c_params = (x0, x1, y0, y1, u)
    cp_params = (x0, x1, y0, y1, u, v, s)

    def transit(a, b, then, var):
        # a?(var).b!(var).(then | u!.0)
        emit_u = sum_((output_(u, (), NIL),))
        return input_(a, (var,), sum_((output_(b, (var,), par([then, emit_u])),)))

    c_body = sum_((
        transit(x1, y0, call("C", c_params), s),
        transit(y0, x1, call("C", c_params), s),
        input_(x0, (s,), call("C'", (x0, x1, y0, y1, u, y1, s))),
        input_(y1, (s,), call("C'", (x0, x1, y0, y1, u, x0, s))),
    ))
    cp_body = sum_((
        transit(x1, y0, call("C'", cp_params), t),
        transit(y0, x1, call("C'", cp_params), t),
        input_(u, (), sum_((output_(v, (s,), call("C", c_params)),))),
    ))

    wx, wy, wn, wm = (uni.fresh(s2) for s2 in ("x", "y", "n", "m"))
    w_body = new((wn, wm), par([call("Waiting", (wx, wn, wm)),
                                call("Waiting", (wy, wm, wn))]))

    ax, ac, an = (uni.fresh(s2) for s2 in ("x", "c", "n"))
    av, am, aw, ac2 = (uni.fresh(s2) for s2 in ("v", "m", "w", "c2"))
    waiting_body = sum_((
        input_(ax, (av,), new((am,), par([call("Cell", (an, av, am)),
                                          call("Waiting", (ax, ac, am))]))),
        input_(ac, (aw,), sum_((input_(ac, (ac2,),
                                       call("Ready", (ax, ac2, an, aw))),))),
    ))

    rx, rc, rn, rw = (uni.fresh(s2) for s2 in ("x", "c", "n", "w"))
    rv, rm = uni.fresh("v"), uni.fresh("m")
    ready_body = sum_((
        input_(rx, (rv,), new((rm,), par([call("Cell", (rn, rv, rm)),
                                          call("Ready", (rx, rc, rm, rw))]))),
        output_(rx, (rw,), call("Waiting", (rx, rc, rn))),
    ))

    cc, cv, cn = (uni.fresh(s2) for s2 in ("c", "v", "n"))
    cell_body = sum_((output_(cc, (cv,), sum_((output_(cc, (cn,), NIL),))),))

    lx, ly, ls = (uni.fresh(s2) for s2 in ("x", "y", "s"))
    relay_body = sum_((
        input_(lx, (ls,), sum_((output_(ly, (ls,), call("Relay", (lx, ly))),))),
        input_(ly, (ls,), sum_((output_(lx, (ls,), call("Relay", (lx, ly))),))),
    ))

    env = DefEnv({
        "C": (c_params, c_body),
        "C'": (cp_params, cp_body),
        "W": ((wx, wy), w_body),
        "Waiting": ((ax, ac, an), waiting_body),
        "Ready": ((rx, rc, rn, rw), ready_body),
        "Cell": ((cc, cv, cn), cell_body),
        "Relay": ((lx, ly), relay_body),
    })
    return env, uni


_default: Optional[tuple[DefEnv, NameUniverse]] = None


def shared_defs() -> tuple[DefEnv, NameUniverse]:
    """Process-wide default definition environment (built once)."""
    global _default
    if _default is None:
        _default = default_defs()
    return _default


def crossing_process(ports: "CrossingPorts", defs: Optional[DefEnv] = None) -> Term:
    """The four-summand crossing instantiated at the given ports."""
    return call("C", (ports.x0, ports.x1, ports.y0, ports.y1, ports.u))


def wire_process(a: Name, b: Name, defs: Optional[DefEnv] = None) -> Term:
    """The two-ended lossless buffer between splice points a and b."""
    if a == b:
        raise ValueError("wire endpoints must be distinct")
    return call("W", (a, b))


# ------------------------------------------------------------------ encoding

@dataclass(frozen=True)
class CrossingPorts:
    x0: Name
    x1: Name
    y0: Name
    y1: Name
    u: Name

    def quadruple(self) -> tuple[Name, Name, Name, Name]:
        return (self.x0, self.x1, self.y0, self.y1)


@dataclass(frozen=True)
class WireSpec:
    a: Name
    b: Name


@dataclass(frozen=True)
class KnotEncoding:
    """A knot as an abstraction over its 4n ports.

    The body is the parallel composition of the crossing components (each
    under a restricted synchronizer) and the wires.  The degenerate
    0-crossing unknot loop (arity 2, one wire) is also representable; all
    other encodings satisfy arity = 4n and the 4-valence condition.
    """
    code: Optional[DTCode]
    formals: tuple[Name, ...]
    crossings: tuple[CrossingPorts, ...]
    wires: tuple[WireSpec, ...]
    defs: DefEnv
    universe: NameUniverse

    @property
    def n(self) -> int:
        return len(self.crossings)

    @property
    def arity(self) -> int:
        return len(self.formals)

    def body(self) -> Term:
        comps = [new((c.u,), crossing_process(c)) for c in self.crossings]
        comps += [wire_process(w.a, w.b) for w in self.wires]
        return par(comps)

    @property
    def abstraction(self) -> Abstraction:
        return Abstraction(self.formals, self.body())

    def validate(self) -> None:
        """4-valence: each formal in exactly one crossing and one wire."""
        if self.crossings and self.arity != 4 * self.n:
            raise AdjacencyInconsistent(
                f"arity {self.arity} != 4n = {4 * self.n}")
        in_crossing: dict[Name, int] = {}
        for c in self.crossings:
            for p in c.quadruple():
                in_crossing[p] = in_crossing.get(p, 0) + 1
        in_wire: dict[Name, int] = {}
        for w in self.wires:
            for p in (w.a, w.b):
                in_wire[p] = in_wire.get(p, 0) + 1
        for f in self.formals:
            if self.crossings and in_crossing.get(f, 0) != 1:
                raise AdjacencyInconsistent(
                    f"port {self.universe.label(f)} is in "
                    f"{in_crossing.get(f, 0)} crossings")
            if in_wire.get(f, 0) != 1:
                raise AdjacencyInconsistent(
                    f"port {self.universe.label(f)} is in "
                    f"{in_wire.get(f, 0)} wires")


def encode_knot(dt: DTCode, universe: Optional[NameUniverse] = None) -> KnotEncoding:
    """Compile a DT code into its knot encoding."""
    defs, defs_uni = shared_defs()
    uni = universe if universe is not None else NameUniverse()
    formals = tuple(uni.fresh(f"v{k}") for k in range(4 * dt.n))
    crossings = []
    for i in range(dt.n):
        q = formals[4 * i:4 * i + 4]
        crossings.append(CrossingPorts(q[X0], q[X1], q[Y0], q[Y1],
                                       uni.fresh(f"u{i}")))
    wires = tuple(WireSpec(formals[a], formals[b]) for a, b in omega_wiring(dt))
    enc = KnotEncoding(code=dt, formals=formals, crossings=tuple(crossings),
                       wires=wires, defs=defs, universe=uni)
    enc.validate()
    return enc


def unknot_loop(universe: Optional[NameUniverse] = None) -> KnotEncoding:
    """The 0-crossing unknot: a single wire loop of arity 2."""
    defs, _ = shared_defs()
    uni = universe if universe is not None else NameUniverse()
    a, b = uni.fresh("a"), uni.fresh("b")
    return KnotEncoding(code=None, formals=(a, b), crossings=(),
                        wires=(WireSpec(a, b),), defs=defs, universe=uni)


DEFAULT_SIGNAL_PORTS = (X1, Y1)


def init_signal(enc: KnotEncoding,
                ports: tuple[int, int] = DEFAULT_SIGNAL_PORTS) -> Abstraction:
    """Liveness injection: two output barbs per crossing, fresh payloads.

    `ports` selects which two quadruple offsets carry the barbs
    (default: x1 and y1 of every crossing).  Payload tokens are fresh
    names restricted at the top of the body.
    """
    if len(ports) != 2 or not all(0 <= p <= 3 for p in ports):
        raise ValueError("signal ports must be two quadruple offsets 0..3")
    tokens = []
    barbs = []
    for i in range(enc.n):
        for p in ports:
            t = enc.universe.fresh(f"t{len(tokens)}")
            tokens.append(t)
            barbs.append(sum_((output_(enc.formals[4 * i + p], (t,), NIL),)))
    body = new(tuple(tokens), par(barbs)) if tokens else NIL
    return Abstraction(enc.formals, body)


def compose_knots(e1: KnotEncoding, e2: KnotEncoding, cut1: int = 0,
                  cut2: int = 0,
                  interface: Optional[Iterable[Name]] = None) -> Term:
    """Connected sum as parallel composition plus hiding.

    Cuts one wire in each encoding and splices the four loose ends
    crosswise; every original formal is then restricted except the chosen
    external interface (default: the first crossing quadruple of e1, or
    all of e1's formals for the 0-crossing loop).
    """
    if not e1.wires or not e2.wires:
        raise NoWireToCut("both encodings need at least one wire to cut")
    w1 = e1.wires[cut1]
    w2 = e2.wires[cut2]
    wires = [w for k, w in enumerate(e1.wires) if k != cut1]
    wires += [w for k, w in enumerate(e2.wires) if k != cut2]
    wires += [WireSpec(w1.a, w2.a), WireSpec(w1.b, w2.b)]
    comps = [new((c.u,), crossing_process(c)) for c in e1.crossings + e2.crossings]
    comps += [wire_process(w.a, w.b) for w in wires]
    body = par(comps)
    if interface is None:
        interface = (e1.crossings[0].quadruple() if e1.crossings
                     else e1.formals)
    keep = set(interface)
    hidden = tuple(f for f in e1.formals + e2.formals if f not in keep)
    return new(hidden, body) if hidden else body
