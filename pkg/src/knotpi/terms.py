"""Core process-term representation.

Terms are immutable, hash-consed nodes.  Construction goes through the
factory functions below; two structurally identical terms are always the
same object, so equality is identity and terms can key dicts cheaply.

Names are plain ints.  Positive ids are allocated by a NameUniverse
(globally unique, so terms built in different universes never collide);
negative ids are reserved for canonical bound-name numbering and never
come out of a universe.

Node kinds:

  sum   a = tuple of branch nodes (empty tuple is the nil process)
  br    a = polarity 'i'/'o'/'b', b = subject, c = names, d = bound names
        (polarity 'b' only), e = continuation
  par   a = tuple of child terms (>= 2 after construction)
  new   a = tuple of bound names (nonempty, distinct), b = body
  call  a = definition / rec-variable identifier (str), b = actual names
  rec   a = variable identifier, b = formals, c = body, d = actuals
  hole  the context hole (used by the moves machinery only)
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Optional

Name = int

_global_name_counter = itertools.count(1)


class NameUniverse:
    """Allocates fresh names and remembers display labels.

    Ids are drawn from a process-wide atomic counter, so names from
    different universes never alias; a universe is just a display
    namespace plus a convenient lookup table for parsers.
    """

    def __init__(self) -> None:
        self.display: dict[Name, str] = {}
        self._by_display: dict[str, Name] = {}

    def fresh(self, display: Optional[str] = None) -> Name:
        n = next(_global_name_counter)
        if display is not None:
            self.display[n] = display
        return n

    def fresh_vector(self, count: int, prefix: str = "x") -> tuple[Name, ...]:
        return tuple(self.fresh(f"{prefix}{i}") for i in range(count))

    def named(self, display: str) -> Name:
        """Look up or create the name with the given source spelling."""
        n = self._by_display.get(display)
        if n is None:
            n = self.fresh(display)
            self._by_display[display] = n
        return n

    def label(self, n: Name) -> str:
        got = self.display.get(n)
        if got is not None:
            return got
        return f"_c{-n}" if n < 0 else f"_n{n}"


_INTERN: dict[tuple, "Term"] = {}
_serial_counter = itertools.count(1)


class Term:
    __slots__ = ("kind", "a", "b", "c", "d", "e", "serial", "_fn", "_rv", "_size")

    def __init__(self, kind, a=None, b=None, c=None, d=None, e=None):
        self.kind = kind
        self.a = a
        self.b = b
        self.c = c
        self.d = d
        self.e = e
        self._fn = None
        self._rv = None
        self._size = None

    def __repr__(self):  # debugging aid only; real output goes via syntax.py
        return f"<{self.kind}#{self.serial}>"

    def __hash__(self):
        return self.serial

    # identity equality is inherited from object; interning makes it structural

    @property
    def is_nil(self) -> bool:
        return self.kind == "sum" and not self.a

    def size(self) -> int:
        if self._size is None:
            k = self.kind
            if k == "sum":
                self._size = 1 + sum(br.size() for br in self.a)
            elif k == "br":
                self._size = 1 + self.e.size()
            elif k == "par":
                self._size = 1 + sum(t.size() for t in self.a)
            elif k == "new":
                self._size = 1 + self.b.size()
            elif k == "rec":
                self._size = 1 + self.c.size()
            else:
                self._size = 1
        return self._size


def _intern(key: tuple, build) -> Term:
    t = _INTERN.get(key)
    if t is None:
        t = build()
        t.serial = next(_serial_counter)
        t = _INTERN.setdefault(key, t)
    return t


def _check_distinct(names: Iterable[Name], what: str) -> tuple[Name, ...]:
    names = tuple(names)
    if len(set(names)) != len(names):
        raise ValueError(f"{what} must be pairwise distinct: {names}")
    return names


# ---------------------------------------------------------------- factories

def sum_(branches: Iterable[Term]) -> Term:
    branches = tuple(branches)
    for br in branches:
        if br.kind != "br":
            raise ValueError("sum children must be guarded branches")
    key = ("sum", tuple(br.serial for br in branches))
    return _intern(key, lambda: Term("sum", branches))


NIL = sum_(())


def input_(subject: Name, formals: Iterable[Name], cont: Term) -> Term:
    formals = _check_distinct(formals, "input formals")
    key = ("br", "i", subject, formals, (), cont.serial)
    return _intern(key, lambda: Term("br", "i", subject, formals, (), cont))


def output_(subject: Name, args: Iterable[Name], cont: Term) -> Term:
    args = tuple(args)
    key = ("br", "o", subject, args, (), cont.serial)
    return _intern(key, lambda: Term("br", "o", subject, args, (), cont))


def bound_output(subject: Name, bound: Iterable[Name], args: Iterable[Name],
                 cont: Term) -> Term:
    bound = _check_distinct(bound, "bound-output binders")
    args = tuple(args)
    if not set(bound) <= set(args):
        raise ValueError("bound-output binders must appear among emitted names")
    key = ("br", "b", subject, args, bound, cont.serial)
    return _intern(key, lambda: Term("br", "b", subject, args, bound, cont))


def prefix(branch: Term) -> Term:
    """A single guarded branch as a process (one-summand sum)."""
    return sum_((branch,))


def in_proc(subject: Name, formals: Iterable[Name], cont: Term) -> Term:
    return prefix(input_(subject, formals, cont))


def out_proc(subject: Name, args: Iterable[Name], cont: Term) -> Term:
    return prefix(output_(subject, args, cont))


def par(children: Iterable[Term]) -> Term:
    kids = tuple(children)
    if not kids:
        return NIL
    if len(kids) == 1:
        return kids[0]
    key = ("par", tuple(t.serial for t in kids))
    return _intern(key, lambda: Term("par", kids))


def new(names: Iterable[Name], body: Term) -> Term:
    names = _check_distinct(names, "restriction binders")
    if not names:
        return body
    key = ("new", names, body.serial)
    return _intern(key, lambda: Term("new", names, body))


def call(var: str, args: Iterable[Name]) -> Term:
    args = tuple(args)
    key = ("call", var, args)
    return _intern(key, lambda: Term("call", var, args))


def rec(var: str, formals: Iterable[Name], body: Term,
        actuals: Iterable[Name]) -> Term:
    formals = _check_distinct(formals, "rec formals")
    actuals = tuple(actuals)
    if len(formals) != len(actuals):
        raise ValueError("rec actual vector length differs from formals")
    key = ("rec", var, formals, body.serial, actuals)
    return _intern(key, lambda: Term("rec", var, formals, body, actuals))


HOLE = _intern(("hole",), lambda: Term("hole"))


# ---------------------------------------------------------------- free names

def free_names(t: Term) -> frozenset[Name]:
    fn = t._fn
    if fn is not None:
        return fn
    k = t.kind
    if k == "sum":
        fn = frozenset().union(*(free_names(br) for br in t.a)) if t.a else frozenset()
    elif k == "br":
        body = free_names(t.e)
        if t.a == "i":
            fn = frozenset((t.b,)) | (body - frozenset(t.c))
        elif t.a == "o":
            fn = frozenset((t.b,)) | frozenset(t.c) | body
        else:  # bound output
            fn = frozenset((t.b,)) | ((frozenset(t.c) | body) - frozenset(t.d))
    elif k == "par":
        fn = frozenset().union(*(free_names(c) for c in t.a))
    elif k == "new":
        fn = free_names(t.b) - frozenset(t.a)
    elif k == "call":
        fn = frozenset(t.b)
    elif k == "rec":
        fn = frozenset(t.d) | (free_names(t.c) - frozenset(t.b))
    else:  # hole
        fn = frozenset()
    t._fn = fn
    return fn


def free_rec_vars(t: Term) -> frozenset[str]:
    rv = t._rv
    if rv is not None:
        return rv
    k = t.kind
    if k == "sum":
        rv = frozenset().union(*(free_rec_vars(br) for br in t.a)) if t.a else frozenset()
    elif k == "br":
        rv = free_rec_vars(t.e)
    elif k == "par":
        rv = frozenset().union(*(free_rec_vars(c) for c in t.a))
    elif k == "new":
        rv = free_rec_vars(t.b)
    elif k == "call":
        rv = frozenset((t.a,))
    elif k == "rec":
        rv = (free_rec_vars(t.c) - frozenset((t.a,))) | frozenset()
    else:
        rv = frozenset()
    t._rv = rv
    return rv


# -------------------------------------------------------------- substitution

def substitute(t: Term, mapping: Mapping[Name, Name],
               universe: Optional[NameUniverse] = None) -> Term:
    """Capture-avoiding substitution of names for free names.

    Binders that would capture a name in the range of the substitution are
    renamed to fresh names drawn from `universe` (a private throwaway
    universe is used when none is given; renamed binders are invisible
    after canonicalization anyway).
    """
    if universe is None:
        universe = _scratch_universe
    eff = {k: v for k, v in mapping.items() if k != v}
    if not eff:
        return t
    return _subst(t, eff, universe)


_scratch_universe = NameUniverse()


def _subst(t: Term, m: dict[Name, Name], uni: NameUniverse) -> Term:
    if not (free_names(t) & m.keys()):
        return t
    k = t.kind
    if k == "sum":
        return sum_(_subst(br, m, uni) for br in t.a)
    if k == "par":
        return par(_subst(c, m, uni) for c in t.a)
    if k == "call":
        return call(t.a, tuple(m.get(n, n) for n in t.b))
    if k == "br":
        subj = m.get(t.b, t.b)
        if t.a == "o":
            args = tuple(m.get(n, n) for n in t.c)
            return output_(subj, args, _subst(t.e, m, uni))
        if t.a == "i":
            formals, cont = _subst_under(t.c, t.e, m, uni)
            return input_(subj, formals, cont)
        # bound output: binders bind in args and continuation
        bound = t.d
        inner = {k2: v for k2, v in m.items() if k2 not in bound}
        clash = set(bound) & set(inner.values())
        if clash:
            ren = {b: uni.fresh(uni.label(b)) for b in clash}
            bound = tuple(ren.get(b, b) for b in bound)
            inner = {**{k2: v for k2, v in ren.items()}, **inner}
        args = tuple(inner.get(n, n) for n in t.c)
        cont = _subst(t.e, inner, uni) if inner else t.e
        return bound_output(subj, bound, args, cont)
    if k == "new":
        names, body = _subst_under(t.a, t.b, m, uni)
        return new(names, body)
    if k == "rec":
        actuals = tuple(m.get(n, n) for n in t.d)
        formals, body = _subst_under(t.b, t.c, m, uni)
        return rec(t.a, formals, body, actuals)
    return t  # hole


def _subst_under(binders: tuple[Name, ...], body: Term, m: dict[Name, Name],
                 uni: NameUniverse) -> tuple[tuple[Name, ...], Term]:
    inner = {k: v for k, v in m.items()
             if k not in binders and k in free_names(body)}
    clash = set(binders) & set(inner.values())
    if clash:
        ren = {b: uni.fresh(uni.label(b)) for b in clash}
        binders = tuple(ren.get(b, b) for b in binders)
        inner.update(ren)
    if not inner:
        return binders, body
    return binders, _subst(body, inner, uni)


def substitute_rec_var(t: Term, var: str, formals: tuple[Name, ...],
                       body: Term) -> Term:
    """Replace free occurrences X<args> with (rec X(formals).body)<args>."""
    if var not in free_rec_vars(t):
        return t
    k = t.kind
    if k == "sum":
        return sum_(substitute_rec_var(br, var, formals, body) for br in t.a)
    if k == "br":
        cont = substitute_rec_var(t.e, var, formals, body)
        if t.a == "i":
            return input_(t.b, t.c, cont)
        if t.a == "o":
            return output_(t.b, t.c, cont)
        return bound_output(t.b, t.d, t.c, cont)
    if k == "par":
        return par(substitute_rec_var(c, var, formals, body) for c in t.a)
    if k == "new":
        return new(t.a, substitute_rec_var(t.b, var, formals, body))
    if k == "call":
        if t.a == var:
            return rec(var, formals, body, t.b)
        return t
    if k == "rec":
        if t.a == var:  # shadowed inside its own body
            return rec(t.a, t.b, t.c, t.d)
        return rec(t.a, t.b, substitute_rec_var(t.c, var, formals, body), t.d)
    return t


# ----------------------------------------------------------- alpha equality

def alpha_equal(p: Term, q: Term) -> bool:
    """Identical up to consistent renaming of bound names / rec variables."""
    return _alpha(p, q, {}, {}, {}, {}, [0])


def _alpha(p, q, m1, m2, r1, r2, ctr) -> bool:
    if p.kind != q.kind:
        return False
    k = p.kind

    def nm(a, b):
        ta, tb = m1.get(a), m2.get(b)
        if ta is None and tb is None:
            return a == b
        return ta is not None and ta == tb

    if k == "sum":
        if len(p.a) != len(q.a):
            return False
        return all(_alpha(x, y, m1, m2, r1, r2, ctr) for x, y in zip(p.a, q.a))
    if k == "par":
        if len(p.a) != len(q.a):
            return False
        return all(_alpha(x, y, m1, m2, r1, r2, ctr) for x, y in zip(p.a, q.a))
    if k == "br":
        if p.a != q.a or not nm(p.b, q.b):
            return False
        if p.a == "o":
            if len(p.c) != len(q.c) or not all(nm(a, b) for a, b in zip(p.c, q.c)):
                return False
            return _alpha(p.e, q.e, m1, m2, r1, r2, ctr)
        if p.a == "i":
            if len(p.c) != len(q.c):
                return False
            m1n, m2n = dict(m1), dict(m2)
            for a, b in zip(p.c, q.c):
                ctr[0] += 1
                m1n[a] = ctr[0]
                m2n[b] = ctr[0]
            return _alpha(p.e, q.e, m1n, m2n, r1, r2, ctr)
        if len(p.d) != len(q.d) or len(p.c) != len(q.c):
            return False
        m1n, m2n = dict(m1), dict(m2)
        for a, b in zip(p.d, q.d):
            ctr[0] += 1
            m1n[a] = ctr[0]
            m2n[b] = ctr[0]
        if not all(_alpha_name(a, b, m1n, m2n) for a, b in zip(p.c, q.c)):
            return False
        return _alpha(p.e, q.e, m1n, m2n, r1, r2, ctr)
    if k == "new":
        if len(p.a) != len(q.a):
            return False
        m1n, m2n = dict(m1), dict(m2)
        for a, b in zip(p.a, q.a):
            ctr[0] += 1
            m1n[a] = ctr[0]
            m2n[b] = ctr[0]
        return _alpha(p.b, q.b, m1n, m2n, r1, r2, ctr)
    if k == "call":
        tv1, tv2 = r1.get(p.a), r2.get(q.a)
        if (tv1 is None) != (tv2 is None) or (tv1 is None and p.a != q.a) \
                or (tv1 is not None and tv1 != tv2):
            return False
        if len(p.b) != len(q.b):
            return False
        return all(nm(a, b) for a, b in zip(p.b, q.b))
    if k == "rec":
        if len(p.b) != len(q.b) or len(p.d) != len(q.d):
            return False
        if not all(nm(a, b) for a, b in zip(p.d, q.d)):
            return False
        r1n, r2n = dict(r1), dict(r2)
        ctr[0] += 1
        r1n[p.a] = ctr[0]
        r2n[q.a] = ctr[0]
        m1n, m2n = dict(m1), dict(m2)
        for a, b in zip(p.b, q.b):
            ctr[0] += 1
            m1n[a] = ctr[0]
            m2n[b] = ctr[0]
        return _alpha(p.c, q.c, m1n, m2n, r1n, r2n, ctr)
    return True  # hole


def _alpha_name(a, b, m1, m2):
    ta, tb = m1.get(a), m2.get(b)
    if ta is None and tb is None:
        return a == b
    return ta is not None and ta == tb


# -------------------------------------------------------------- abstractions

class Abstraction:
    """A process parameterized over a vector of pairwise distinct names."""

    __slots__ = ("formals", "body")

    def __init__(self, formals: Iterable[Name], body: Term):
        self.formals = _check_distinct(formals, "abstraction formals")
        self.body = body

    @property
    def arity(self) -> int:
        return len(self.formals)

    def apply(self, names: Iterable[Name],
              universe: Optional[NameUniverse] = None) -> Term:
        names = tuple(names)
        if len(names) != len(self.formals):
            raise ValueError(
                f"abstraction of arity {len(self.formals)} applied to "
                f"{len(names)} names")
        if len(set(names)) != len(names):
            raise ValueError("abstraction applied to non-distinct names")
        return substitute(self.body, dict(zip(self.formals, names)), universe)

    def __repr__(self):
        return f"Abstraction(arity={self.arity})"


class DefEnv:
    """Immutable family of mutually recursive parametric definitions.

    Every body must be closed under its formals: free names of the body
    are contained in the formal list (calls to sibling definitions are
    identifiers, not names, so they do not count).
    """

    def __init__(self, defs: Mapping[str, tuple[tuple[Name, ...], Term]]):
        self._defs = dict(defs)
        for name, (formals, body) in self._defs.items():
            _check_distinct(formals, f"formals of definition {name}")
            extra = free_names(body) - set(formals)
            if extra:
                raise ValueError(
                    f"definition {name} has free names outside its formals: {extra}")

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def __getitem__(self, name: str) -> tuple[tuple[Name, ...], Term]:
        return self._defs[name]

    def get(self, name: str):
        return self._defs.get(name)

    def names(self):
        return self._defs.keys()

    def extended(self, more: Mapping[str, tuple[tuple[Name, ...], Term]]) -> "DefEnv":
        merged = dict(self._defs)
        merged.update(more)
        return DefEnv(merged)


EMPTY_ENV = DefEnv({})
