"""Spatial-logic formulae and a bounded three-valued satisfaction checker.

The connective set: boolean (truth, negation, conjunction, name
equality), spatial (void, composition, revelation, universal and fresh
name quantifiers), behavioral action modalities (input, output, tau),
and parametric recursion.

Satisfaction is checked against canonical processes:

  * Compose splits the top-level parallel multiset, components that
    share a restricted name moving as one rigid group;
  * Reveal opens one top restriction (or reveals vacuously);
  * action modalities are capability tests: they match an unguarded
    prefix of the right polarity, subject, and arity, and commit it
    against an environment co-action (input modalities bind fresh
    payload names);
  * ForAll ranges over the free names of the process plus a configured
    budget of fresh names; Fresh picks one name fresh for process and
    formula;
  * recursion is read coinductively: re-encountering a (process,
    variable, arguments) triple along an unfolding path succeeds, and
    exhausting the unfold budget yields `unknown` rather than a verdict.

Verdicts are three-valued (holds / fails / unknown) with Kleene
connectives; `unknown` only ever arises from budget exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .errors import ParseError
from .terms import (
    Term, Name, DefEnv, EMPTY_ENV, NameUniverse, par, new, substitute,
    free_names,
)
from .canon import canonical_form
from .dynamics import state_split, step, reachable

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"


# ------------------------------------------------------------------ formulas

@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FNot:
    body: "Formula"


@dataclass(frozen=True)
class FAnd:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FNameEq:
    a: Name
    b: Name


@dataclass(frozen=True)
class FVoid:
    pass


@dataclass(frozen=True)
class FCompose:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class FReveal:
    name: Name
    body: "Formula"


@dataclass(frozen=True)
class FForAll:
    name: Name
    body: "Formula"


@dataclass(frozen=True)
class FFresh:
    name: Name
    body: "Formula"


@dataclass(frozen=True)
class AIn:
    subject: Name
    binders: tuple[Name, ...]


@dataclass(frozen=True)
class AOut:
    subject: Name
    args: tuple[Name, ...]


@dataclass(frozen=True)
class ATau:
    pass


Action = Union[AIn, AOut, ATau]


@dataclass(frozen=True)
class FAct:
    action: Action
    body: "Formula"


@dataclass(frozen=True)
class FVar:
    var: str
    args: tuple[Name, ...]


@dataclass(frozen=True)
class FMu:
    """Parametric recursion, evaluated at `actuals` (the formals when the
    display applies the definition to its own parameter list)."""
    var: str
    formals: tuple[Name, ...]
    body: "Formula"
    actuals: Optional[tuple[Name, ...]] = None

    def __post_init__(self):
        if not _monotone(self.body, self.var, True):
            raise ValueError(
                f"recursion variable {self.var} must occur positively")
        if self.actuals is None:
            object.__setattr__(self, "actuals", self.formals)
        elif len(self.actuals) != len(self.formals):
            raise ValueError("recursion actuals must match formals")


Formula = Union[FTrue, FNot, FAnd, FNameEq, FVoid, FCompose, FReveal,
                FForAll, FFresh, FAct, FVar, FMu]


def _monotone(f: Formula, var: str, positive: bool) -> bool:
    if isinstance(f, FVar):
        return f.var != var or positive
    if isinstance(f, FNot):
        return _monotone(f.body, var, not positive)
    if isinstance(f, (FAnd, FCompose)):
        return (_monotone(f.left, var, positive)
                and _monotone(f.right, var, positive))
    if isinstance(f, (FReveal, FForAll, FFresh, FAct)):
        return _monotone(f.body, var, positive)
    if isinstance(f, FMu):
        if f.var == var:
            return True
        return _monotone(f.body, var, positive)
    return True


def formula_names(f: Formula) -> frozenset[Name]:
    """Free names of a formula (quantifiers and input modalities bind)."""
    if isinstance(f, (FTrue, FVoid)):
        return frozenset()
    if isinstance(f, FNameEq):
        return frozenset((f.a, f.b))
    if isinstance(f, FNot):
        return formula_names(f.body)
    if isinstance(f, (FAnd, FCompose)):
        return formula_names(f.left) | formula_names(f.right)
    if isinstance(f, (FReveal, FForAll, FFresh)):
        return formula_names(f.body) - {f.name}
    if isinstance(f, FAct):
        a = f.action
        if isinstance(a, AIn):
            return (formula_names(f.body) - set(a.binders)) | {a.subject}
        if isinstance(a, AOut):
            return formula_names(f.body) | {a.subject} | set(a.args)
        return formula_names(f.body)
    if isinstance(f, FVar):
        return frozenset(f.args)
    if isinstance(f, FMu):
        return (formula_names(f.body) - set(f.formals)) | set(f.actuals)
    raise TypeError(f)


def formula_subst(f: Formula, m: dict[Name, Name]) -> Formula:
    """Substitution of names for free names in a formula.

    Quantifier and modality binders in the corpus are chosen fresh, so a
    clash with the range would indicate a construction bug; it is
    rejected rather than repaired.
    """
    eff = {k: v for k, v in m.items() if k != v}
    if not eff or not (formula_names(f) & eff.keys()):
        return f

    def sub(n: Name) -> Name:
        return eff.get(n, n)

    def guard(binders: Iterable[Name]):
        hit = set(binders) & set(eff.values())
        if hit:
            raise ValueError(f"formula binder capture on {hit}")

    if isinstance(f, FNameEq):
        return FNameEq(sub(f.a), sub(f.b))
    if isinstance(f, FNot):
        return FNot(formula_subst(f.body, eff))
    if isinstance(f, FAnd):
        return FAnd(formula_subst(f.left, eff), formula_subst(f.right, eff))
    if isinstance(f, FCompose):
        return FCompose(formula_subst(f.left, eff), formula_subst(f.right, eff))
    if isinstance(f, (FReveal, FForAll, FFresh)):
        guard((f.name,))
        inner = {k: v for k, v in eff.items() if k != f.name}
        return type(f)(f.name, formula_subst(f.body, inner))
    if isinstance(f, FAct):
        a = f.action
        if isinstance(a, AIn):
            guard(a.binders)
            inner = {k: v for k, v in eff.items() if k not in a.binders}
            return FAct(AIn(sub(a.subject), a.binders),
                        formula_subst(f.body, inner))
        if isinstance(a, AOut):
            return FAct(AOut(sub(a.subject), tuple(sub(n) for n in a.args)),
                        formula_subst(f.body, eff))
        return FAct(a, formula_subst(f.body, eff))
    if isinstance(f, FVar):
        return FVar(f.var, tuple(sub(n) for n in f.args))
    if isinstance(f, FMu):
        guard(f.formals)
        inner = {k: v for k, v in eff.items() if k not in f.formals}
        return FMu(f.var, f.formals, formula_subst(f.body, inner),
                   tuple(sub(n) for n in f.actuals))
    return f


def exists(name: Name, body: Formula) -> Formula:
    """Existential quantification as the dual of ForAll."""
    return FNot(FForAll(name, FNot(body)))


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class SatConfig:
    depth: int = 1          # reduction bound for the tau modality
    fresh_budget: int = 2   # fresh witnesses added to ForAll ranges
    unfold_budget: int = 8  # recursion unfoldings before returning unknown

    def __post_init__(self):
        if self.depth < 0 or self.fresh_budget < 0 or self.unfold_budget < 0:
            raise ValueError("SatConfig fields must be nonnegative")


# ----------------------------------------------------------------- verdicts

def _not(v: str) -> str:
    if v == HOLDS:
        return FAILS
    if v == FAILS:
        return HOLDS
    return UNKNOWN


def _and(a: str, b: str) -> str:
    if a == FAILS or b == FAILS:
        return FAILS
    if a == UNKNOWN or b == UNKNOWN:
        return UNKNOWN
    return HOLDS


def _or(a: str, b: str) -> str:
    if a == HOLDS or b == HOLDS:
        return HOLDS
    if a == UNKNOWN or b == UNKNOWN:
        return UNKNOWN
    return FAILS


# ------------------------------------------------------------------ checker

class _Sat:
    def __init__(self, env: DefEnv, cfg: SatConfig):
        self.env = env
        self.cfg = cfg
        self.uni = NameUniverse()
        self.fenv: dict[str, tuple[tuple[Name, ...], Formula]] = {}
        self.memo: dict[tuple, str] = {}
        self.fresh_pool = tuple(self.uni.fresh(f"w{k}")
                                for k in range(cfg.fresh_budget))
        self._fresh_for: dict[int, Name] = {}

    def check(self, p: Term, f: Formula, path: frozenset, budget: int) -> str:
        p = canonical_form(p)
        closed = not _free_vars(f)
        key = None
        if closed:
            key = (p, f, budget)
            got = self.memo.get(key)
            if got is not None:
                return got
        v = self._check(p, f, path, budget)
        if closed and v != UNKNOWN:
            self.memo[key] = v
        return v

    def _check(self, p: Term, f: Formula, path: frozenset, budget: int) -> str:
        if isinstance(f, FTrue):
            return HOLDS
        if isinstance(f, FNot):
            return _not(self.check(p, f.body, path, budget))
        if isinstance(f, FAnd):
            a = self.check(p, f.left, path, budget)
            if a == FAILS:
                return FAILS
            return _and(a, self.check(p, f.right, path, budget))
        if isinstance(f, FNameEq):
            return HOLDS if f.a == f.b else FAILS
        if isinstance(f, FVoid):
            return HOLDS if p.is_nil else FAILS
        if isinstance(f, FCompose):
            return self._compose(p, f, path, budget)
        if isinstance(f, FReveal):
            return self._reveal(p, f, path, budget)
        if isinstance(f, FForAll):
            out = HOLDS
            for w in self._witnesses(p, f):
                out = _and(out, self.check(
                    p, formula_subst(f.body, {f.name: w}), path, budget))
                if out == FAILS:
                    return FAILS
            return out
        if isinstance(f, FFresh):
            w = self._fresh_for.get(id(f))
            if w is None:
                w = self.uni.fresh("fr")
                self._fresh_for[id(f)] = w
            return self.check(p, formula_subst(f.body, {f.name: w}),
                              path, budget)
        if isinstance(f, FAct):
            return self._act(p, f, path, budget)
        if isinstance(f, FVar):
            d = self.fenv.get(f.var)
            if d is None:
                raise ValueError(f"unbound formula variable {f.var}")
            formals, body = d
            if len(formals) != len(f.args):
                raise ValueError(f"recursion arity mismatch on {f.var}")
            node = (p, f.var, f.args)
            if node in path:
                return HOLDS  # coinductive success on a revisited state
            if budget <= 0:
                return UNKNOWN
            inst = formula_subst(body, dict(zip(formals, f.args)))
            return self.check(p, inst, path | {node}, budget - 1)
        if isinstance(f, FMu):
            self.fenv[f.var] = (f.formals, f.body)
            return self.check(p, FVar(f.var, f.actuals), path, budget)
        raise TypeError(f)

    # -- spatial ----------------------------------------------------------

    def _groups(self, p: Term):
        """Top-level rigid groups: components tied by shared binders."""
        binders, comps = _top(p)
        if not comps:
            return binders, []
        owner = list(range(len(comps)))

        def find(i):
            while owner[i] != i:
                owner[i] = owner[owner[i]]
                i = owner[i]
            return i

        for b in binders:
            first = None
            for i, c in enumerate(comps):
                if b in free_names(c):
                    if first is None:
                        first = find(i)
                    else:
                        owner[find(i)] = first
        groups: dict[int, list[int]] = {}
        for i in range(len(comps)):
            groups.setdefault(find(i), []).append(i)
        out = []
        for root in sorted(groups):
            idxs = groups[root]
            used = set()
            for i in idxs:
                used |= free_names(comps[i])
            gb = tuple(b for b in binders if b in used)
            out.append(new(gb, par([comps[i] for i in idxs])))
        return binders, out

    def _compose(self, p: Term, f: FCompose, path: frozenset, budget: int) -> str:
        _binders, groups = self._groups(p)
        n = len(groups)
        out = FAILS
        for mask in range(1 << n):
            left = [groups[i] for i in range(n) if mask >> i & 1]
            right = [groups[i] for i in range(n) if not mask >> i & 1]
            a = self.check(par(left), f.left, path, budget)
            if a == FAILS:
                continue
            b = self.check(par(right), f.right, path, budget)
            v = _and(a, b)
            if v == HOLDS:
                return HOLDS
            out = _or(out, v)
        return out

    def _reveal(self, p: Term, f: FReveal, path: frozenset, budget: int) -> str:
        if f.name in free_names(p):
            return FAILS
        out = FAILS
        if p.kind == "new":
            for i, m in enumerate(p.a):
                rest = p.a[:i] + p.a[i + 1:]
                body = substitute(new(rest, p.b), {m: f.name}, self.uni)
                out = _or(out, self.check(body, f.body, path, budget))
                if out == HOLDS:
                    return HOLDS
        # vacuous revelation: p == (new x)p for x not free in p
        return _or(out, self.check(p, f.body, path, budget))

    def _witnesses(self, p: Term, f: FForAll):
        return sorted(free_names(p)) + list(self.fresh_pool)

    # -- behavioral -------------------------------------------------------

    def _act(self, p: Term, f: FAct, path: frozenset, budget: int) -> str:
        a = f.action
        if isinstance(a, ATau):
            out = FAILS
            horizon = max(1, self.cfg.depth)
            seen = {p}
            frontier = [p]
            for _ in range(horizon):
                nxt = []
                for s in frontier:
                    for _r, t in step(s, self.env).successors:
                        if t not in seen:
                            seen.add(t)
                            nxt.append(t)
                            out = _or(out, self.check(t, f.body, path, budget))
                            if out == HOLDS:
                                return HOLDS
                frontier = nxt
                if not frontier:
                    break
            return out
        binders, comps = state_split(p, self.env)
        bset = set(binders)
        if a.subject in bset:
            return FAILS
        out = FAILS
        for i, c in enumerate(comps):
            if c.kind != "sum":
                continue
            for br in c.a:
                if br.b != a.subject:
                    continue
                if isinstance(a, AIn):
                    if br.a != "i" or len(br.c) != len(a.binders):
                        continue
                    tokens = tuple(self.uni.fresh(f"z{k}")
                                   for k in range(len(a.binders)))
                    cont = substitute(br.e, dict(zip(br.c, tokens)), self.uni)
                    body = formula_subst(f.body, dict(zip(a.binders, tokens)))
                else:
                    if br.a == "i":
                        continue
                    if br.a == "b" or br.c != a.args:
                        continue  # bound outputs never match named args
                    cont = br.e
                    body = f.body
                rest = list(comps)
                rest[i] = cont
                succ = new(binders, par(rest))
                out = _or(out, self.check(succ, body, path, budget))
                if out == HOLDS:
                    return HOLDS
        return out


def _top(p: Term):
    if p.kind == "new":
        inner = p.b
        if inner.kind == "par":
            return p.a, inner.a
        if inner.is_nil:
            return p.a, ()
        return p.a, (inner,)
    if p.kind == "par":
        return (), p.a
    if p.is_nil:
        return (), ()
    return (), (p,)


def _free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, FVar):
        return frozenset((f.var,))
    if isinstance(f, FNot):
        return _free_vars(f.body)
    if isinstance(f, (FAnd, FCompose)):
        return _free_vars(f.left) | _free_vars(f.right)
    if isinstance(f, (FReveal, FForAll, FFresh, FAct)):
        return _free_vars(f.body)
    if isinstance(f, FMu):
        return _free_vars(f.body) - {f.var}
    return frozenset()


def sat(p: Term, f: Formula, env: Optional[DefEnv] = None,
        cfg: Optional[SatConfig] = None) -> str:
    """Bounded three-valued satisfaction: holds / fails / unknown."""
    env = env if env is not None else EMPTY_ENV
    cfg = cfg if cfg is not None else SatConfig()
    checker = _Sat(env, cfg)
    return checker.check(canonical_form(p), f, frozenset(), cfg.unfold_budget)


# ------------------------------------------------------- standard formulae

def crossing_formula(x0: Name, x1: Name, y0: Name, y1: Name, u: Name) -> Formula:
    """The recursive crossing capability formula.

    Under-strand inputs (x0/y1) must be followed by consuming the
    synchronizer's permission and emitting the payload at the partner
    port; over-strand inputs (x1/y0) emit at the partner port and then
    offer the synchronizer signal.  The recursion closes back on the
    full menu.
    """
    uni = _formula_uni
    z = uni.fresh("z")
    p = tuple(uni.fresh(s) for s in ("px0", "px1", "py0", "py1", "pu"))
    cvar = f"Cx{p[0]}"
    rec_call = FVar(cvar, p)

    def under(inp, outp):
        return FAct(AIn(inp, (z,)),
                    FAct(AIn(p[4], ()), FAct(AOut(outp, (z,)), rec_call)))

    def over(inp, outp):
        return FAct(AIn(inp, (z,)),
                    FAct(AOut(outp, (z,)), FAct(AOut(p[4], ()), rec_call)))

    body = FAnd(FAnd(under(p[0], p[3]), under(p[3], p[0])),
                FAnd(over(p[1], p[2]), over(p[2], p[1])))
    return FMu(cvar, p, body, (x0, x1, y0, y1, u))


_formula_uni = NameUniverse()


def crossing_detector() -> Formula:
    """A closed formula: some choice of four ports and a revealed
    synchronizer behaves as a crossing."""
    uni = _formula_uni
    x0, x1, y0, y1, u = (uni.fresh(s) for s in ("qx0", "qx1", "qy0", "qy1", "qu"))
    inner = FFresh(u, FReveal(u, crossing_formula(x0, x1, y0, y1, u)))
    f = inner
    for v in (y1, y0, x1, x0):
        f = exists(v, f)
    return f


def at_least_n(n: int) -> Formula:
    """The process splits into n crossing components and anything."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    f: Formula = FTrue()
    d = crossing_detector()
    for _ in range(n):
        f = FCompose(d, f)
    return f


def exactly_n(n: int) -> Formula:
    """n crossing components and a remainder free of crossings."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rest: Formula = FNot(FCompose(crossing_detector(), FTrue()))
    f = rest
    d = crossing_detector()
    for _ in range(n):
        f = FCompose(d, f)
    return f


# -------------------------------------------------------------- text syntax

def parse_formula(text: str, universe: Optional[NameUniverse] = None) -> Formula:
    """Parse the textual formula syntax.

    Grammar: `T`, `~A`, `A & B`, `0`, `A | B`, `reveal x. A`,
    `forall x. A`, `exists x. A`, `fresh x. A`, `<x?(y)>A`, `<x!(y)>A`,
    `<tau>A`, `mu X(x,y). A`, `X(a,b)`, `x = y`, parentheses; `#` starts
    a line comment.  `&` binds tighter than `|`.
    """
    uni = universe if universe is not None else NameUniverse()
    toks = _lex(text)
    pos = [0]

    def peek():
        return toks[pos[0]]

    def take(val=None):
        t = toks[pos[0]]
        if val is not None and t != val:
            raise ParseError(f"expected {val!r}, got {t!r}")
        pos[0] += 1
        return t

    def name_list():
        take("(")
        out = []
        if peek() != ")":
            while True:
                out.append(uni.named(take()))
                if peek() == ",":
                    take()
                else:
                    break
        take(")")
        return tuple(out)

    def compose_level():
        left = and_level()
        while peek() == "|":
            take()
            left = FCompose(left, and_level())
        return left

    def and_level():
        left = atom()
        while peek() == "&":
            take()
            left = FAnd(left, atom())
        return left

    def atom() -> Formula:
        t = peek()
        if t == "T":
            take()
            return FTrue()
        if t == "0":
            take()
            return FVoid()
        if t == "~":
            take()
            return FNot(atom())
        if t == "(":
            take()
            f = compose_level()
            take(")")
            return f
        if t == "<":
            take()
            if peek() == "tau":
                take()
                take(">")
                return FAct(ATau(), atom())
            subj = uni.named(take())
            pol = take()
            if pol not in ("?", "!"):
                raise ParseError(f"expected ? or ! in modality, got {pol!r}")
            names = name_list() if peek() == "(" else ()
            take(">")
            act = AIn(subj, names) if pol == "?" else AOut(subj, names)
            return FAct(act, atom())
        if t in ("reveal", "forall", "exists", "fresh"):
            take()
            x = uni.named(take())
            take(".")
            body = atom()
            if t == "reveal":
                return FReveal(x, body)
            if t == "forall":
                return FForAll(x, body)
            if t == "exists":
                return exists(x, body)
            return FFresh(x, body)
        if t == "mu":
            take()
            var = take()
            formals = name_list()
            take(".")
            return FMu(var, formals, atom())
        # identifier: recursion call or name equality
        ident = take()
        if peek() == "(":
            return FVar(ident, name_list())
        if peek() == "=":
            take()
            return FNameEq(uni.named(ident), uni.named(take()))
        raise ParseError(f"unexpected token {ident!r}")

    f = compose_level()
    if peek() != "\0":
        raise ParseError(f"trailing input at {peek()!r}")
    return f


def _lex(text: str) -> list[str]:
    import re
    out = []
    token = re.compile(r"\s*(?:#[^\n]*|([A-Za-z_][A-Za-z0-9_']*|[<>()~&|.,=!?]|0))")
    pos = 0
    while pos < len(text):
        m = token.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ParseError(f"bad formula character at {rest[:12]!r}")
        pos = m.end()
        if m.group(1):
            out.append(m.group(1))
    out.append("\0")
    return out
