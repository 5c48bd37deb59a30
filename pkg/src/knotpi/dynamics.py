"""Reduction semantics: one-step transitions, barbs, closures, liveness.

States are kept in an *expanded form*: top-level definition calls / recs
are unfolded just far enough to expose guarded sums (the rec axiom of
structural congruence, applied on demand), restrictions are hoisted, and
the result is held as a flat (binders, components) pair.  States are
deduplicated by canonical key, so everything downstream works up to
structural congruence; the renamed canonical representative is built
lazily when a state needs to be displayed or hashed.

All template definitions in the knot encoding are prefix-guarded, so
expansion terminates; unguarded cycles are cut off by a per-chain guard
set and simply expose no prefixes.

A communication fires between an unguarded input branch and an unguarded
output branch with the same subject and matching arity across distinct
parallel components (the Comm rule closed under Par, New and Equiv).
Mismatched arities on a shared subject are reported as warnings and
contribute no transition.
"""

from __future__ import annotations

from dataclasses import dataclass
from hashlib import sha1
from typing import Iterator, Optional

from .errors import StateBudgetExceeded
from .terms import (
    Term, Name, DefEnv, EMPTY_ENV, NameUniverse, par, new, substitute,
    substitute_rec_var, free_names, _scratch_universe,
)
from .canon import canonical_form, canonical_key

_known_reps: set[Term] = set()
_expansion: dict[Term, tuple] = {}
_step_memo: dict[tuple, "TransitionSet"] = {}
_hash_memo: dict[Term, str] = {}


@dataclass(frozen=True)
class Redex:
    """One Comm instance: channel plus sender/receiver branch locations.

    Locations are (component index, branch index) into the expanded
    top-level parallel composition of the source state.
    """
    channel: Name
    receiver: tuple[int, int]
    sender: tuple[int, int]


@dataclass(frozen=True)
class TransitionSet:
    source: Term
    successors: tuple[tuple[Redex, Term], ...]
    warnings: tuple[tuple[str, Name, int, int], ...] = ()

    def states(self) -> tuple[Term, ...]:
        return tuple(s for _, s in self.successors)


def top_split(t: Term) -> tuple[tuple[Name, ...], tuple[Term, ...]]:
    """Binder vector and parallel components of an expanded state."""
    if t.kind == "new":
        body = t.b
        if body.kind == "par":
            return t.a, body.a
        if body.is_nil:
            return t.a, ()
        return t.a, (body,)
    if t.kind == "par":
        return (), t.a
    if t.is_nil:
        return (), ()
    return (), (t,)


def _expand(t: Term, env: DefEnv) -> tuple[tuple[Name, ...], tuple[Term, ...]]:
    """Flatten new/par structure and unfold top-level calls/recs.

    Returns (binders, components); components are guarded sums or stuck
    heads (unknown definitions, unguarded cycles).
    """
    binders: list[Name] = []
    comps: list[Term] = []
    taken = set(free_names(t))

    def walk(x: Term, guard: frozenset):
        if x.kind == "par":
            for c in x.a:
                walk(c, guard)
            return
        if x.kind == "new":
            body = x.b
            ren = {}
            for n in x.a:
                if n in taken:
                    n2 = _scratch_universe.fresh()
                    ren[n] = n2
                    binders.append(n2)
                    taken.add(n2)
                else:
                    binders.append(n)
                    taken.add(n)
            if ren:
                body = substitute(body, ren, _scratch_universe)
            walk(body, guard)
            return
        if x.kind == "sum":
            if x.a:
                comps.append(x)
            return
        if x.kind == "call":
            d = env.get(x.a)
            if d is not None and x.a not in guard:
                formals, body = d
                walk(substitute(body, dict(zip(formals, x.b)), _scratch_universe),
                     guard | {x.a})
                return
            comps.append(x)
            return
        if x.kind == "rec":
            tag = ("rec", x.serial)
            if tag not in guard:
                body1 = substitute(x.c, dict(zip(x.b, x.d)), _scratch_universe)
                walk(substitute_rec_var(body1, x.a, x.b, x.c), guard | {tag})
                return
            comps.append(x)
            return
        comps.append(x)

    walk(t, frozenset())
    used = set()
    for c in comps:
        used |= free_names(c)
    kept = tuple(b for b in binders if b in used)
    return kept, tuple(comps)


def state_form(p: Term, env: Optional[DefEnv] = None) -> Term:
    """Expanded canonical representative, unique per congruence class."""
    env = env if env is not None else EMPTY_ENV
    if p in _known_reps:
        return p
    binders, comps = _expand(p, env)
    rep = canonical_form(new(binders, par(comps)))
    if rep not in _known_reps:
        _known_reps.add(rep)
        _expansion[rep] = top_split(rep)
    return rep


def state_split(p: Term, env: Optional[DefEnv] = None
                ) -> tuple[tuple[Name, ...], tuple[Term, ...]]:
    rep = state_form(p, env)
    return _expansion[rep]


def step(p: Term, env: Optional[DefEnv] = None,
         universe: Optional[NameUniverse] = None) -> TransitionSet:
    """All one-step reducts of p up to structural congruence."""
    env = env if env is not None else EMPTY_ENV
    src = state_form(p, env)
    mkey = (src, id(env))
    got = _step_memo.get(mkey)
    if got is not None:
        return got
    uni = universe if universe is not None else _scratch_universe
    binders, comps = _expansion[src]
    menus = tuple(c.a if c.kind == "sum" else () for c in comps)
    succs: dict[Term, Redex] = {}
    warnings = []
    for i, mi in enumerate(menus):
        for bi_idx, bi in enumerate(mi):
            if bi.a != "i":
                continue
            subj = bi.b
            for j, mj in enumerate(menus):
                if i == j:
                    continue
                for bj_idx, bj in enumerate(mj):
                    if bj.a == "i" or bj.b != subj:
                        continue
                    if len(bj.c) != len(bi.c):
                        warnings.append(("arity-mismatch", subj, len(bi.c), len(bj.c)))
                        continue
                    if bj.a == "o":
                        args = bj.c
                        send = bj.e
                        extra: tuple[Name, ...] = ()
                    else:  # bound output: open its binders fresh
                        fresh = {v: uni.fresh() for v in bj.d}
                        args = tuple(fresh.get(n, n) for n in bj.c)
                        send = substitute(bj.e, fresh, uni)
                        extra = tuple(fresh[v] for v in bj.d)
                    recv = substitute(bi.e, dict(zip(bi.c, args)), uni)
                    newcomps = list(comps)
                    newcomps[i] = recv
                    newcomps[j] = send
                    succ = state_form(new(binders + extra, par(newcomps)), env)
                    if succ not in succs:
                        succs[succ] = Redex(channel=subj, receiver=(i, bi_idx),
                                            sender=(j, bj_idx))
    ts = TransitionSet(source=src,
                       successors=tuple((r, s) for s, r in succs.items()),
                       warnings=tuple(warnings))
    _step_memo[mkey] = ts
    return ts


# ----------------------------------------------------------------- barbs

def barbs(p: Term, env: Optional[DefEnv] = None) -> frozenset[Name]:
    """Free names x such that a prefix x.A occurs unguarded in p.

    Per the reduction-semantics reading, the barb is the subject name
    alone; input and output are not distinguished.
    """
    return frozenset(n for n, _pol in barbs_polarized(p, env))


def barbs_polarized(p: Term, env: Optional[DefEnv] = None
                    ) -> frozenset[tuple[Name, str]]:
    """Barbs with their polarity ('i' input / 'o' output)."""
    binders, comps = state_split(p, env)
    bset = set(binders)
    out = set()
    for c in comps:
        if c.kind == "sum":
            for br in c.a:
                if br.b not in bset:
                    out.add((br.b, "i" if br.a == "i" else "o"))
    return frozenset(out)


def weak_barbs(p: Term, env: Optional[DefEnv] = None, depth: int = 0,
               polarized: bool = False) -> frozenset:
    """Union of barbs over all states reachable in at most `depth` steps.

    This truncates the paper-level weak closure at `depth` internal
    steps; zero steps are always included.
    """
    env = env if env is not None else EMPTY_ENV
    obs = barbs_polarized if polarized else barbs
    start = state_form(p, env)
    seen = {start}
    frontier = [start]
    acc = set(obs(start, env))
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for _r, t in step(s, env).successors:
                if t not in seen:
                    seen.add(t)
                    acc |= obs(t, env)
                    nxt.append(t)
        if not nxt:
            break
        frontier = nxt
    return frozenset(acc)


def weak_states(p: Term, env: DefEnv, tau_budget: int) -> tuple[Term, ...]:
    """States reachable within tau_budget steps (including p itself)."""
    start = state_form(p, env)
    seen = {start}
    order = [start]
    frontier = [start]
    for _ in range(tau_budget):
        nxt = []
        for s in frontier:
            for _r, t in step(s, env).successors:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    nxt.append(t)
        if not nxt:
            break
        frontier = nxt
    return tuple(order)


# ------------------------------------------------------------- exploration

def reachable(p: Term, env: Optional[DefEnv] = None, depth: int = 0,
              max_states: int = 100000) -> frozenset[Term]:
    """BFS closure of step up to `depth`, deduplicated by canonical form.

    Raises StateBudgetExceeded (carrying the partial set) when the
    max_states budget is hit.
    """
    env = env if env is not None else EMPTY_ENV
    start = state_form(p, env)
    seen = {start}
    frontier = [start]
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for _r, t in step(s, env).successors:
                if t not in seen:
                    if len(seen) >= max_states:
                        raise StateBudgetExceeded(
                            f"more than {max_states} states reachable",
                            frozenset(seen))
                    seen.add(t)
                    nxt.append(t)
        if not nxt:
            break
        frontier = nxt
    return frozenset(seen)


def transitions(p: Term, env: Optional[DefEnv] = None, depth: int = 0,
                max_states: int = 100000) -> Iterator[tuple[Term, Redex, Term]]:
    """BFS transition records (from, redex, to) up to `depth`."""
    env = env if env is not None else EMPTY_ENV
    start = state_form(p, env)
    seen = {start}
    frontier = [start]
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for r, t in step(s, env).successors:
                yield s, r, t
                if t not in seen and len(seen) < max_states:
                    seen.add(t)
                    nxt.append(t)
        if not nxt:
            break
        frontier = nxt


@dataclass(frozen=True)
class LivenessVerdict:
    kind: str  # "alive-to-depth" | "dead-state-found" | "budget-exceeded"
    witness: Optional[Term] = None
    states_explored: int = 0

    @property
    def alive(self) -> bool:
        return self.kind == "alive-to-depth"


def is_alive(p: Term, env: Optional[DefEnv] = None, depth: int = 4,
             max_states: int = 100000) -> LivenessVerdict:
    """Alive-to-depth iff every reachable state has a successor."""
    env = env if env is not None else EMPTY_ENV
    start = state_form(p, env)
    seen = {start}
    frontier = [start]
    for layer in range(depth + 1):
        nxt = []
        for s in frontier:
            succ = step(s, env).successors
            if not succ:
                return LivenessVerdict("dead-state-found", witness=s,
                                       states_explored=len(seen))
            if layer < depth:
                for _r, t in succ:
                    if t not in seen:
                        if len(seen) >= max_states:
                            return LivenessVerdict("budget-exceeded",
                                                   states_explored=len(seen))
                        seen.add(t)
                        nxt.append(t)
        frontier = nxt
        if not frontier:
            break
    return LivenessVerdict("alive-to-depth", states_explored=len(seen))


# ------------------------------------------------------------ stable hashes

def stable_hash(t: Term) -> str:
    """Content hash of a state, stable across runs for identical inputs.

    Computed over the renamed canonical representative so congruent
    states always hash alike.
    """
    got = _hash_memo.get(t)
    if got is not None:
        return got
    c = canonical_form(t)
    got = _hash_memo.get(c)
    if got is None:
        parts: list[str] = []

        def walk(x: Term):
            k = x.kind
            parts.append(k)
            if k == "sum":
                for br in x.a:
                    walk(br)
            elif k == "br":
                parts.append(x.a)
                parts.append(str(x.b))
                parts.append(",".join(map(str, x.c)))
                parts.append(",".join(map(str, x.d)))
                walk(x.e)
            elif k == "par":
                for c2 in x.a:
                    walk(c2)
            elif k == "new":
                parts.append(",".join(map(str, x.a)))
                walk(x.b)
            elif k == "call":
                parts.append(x.a)
                parts.append(",".join(map(str, x.b)))
            elif k == "rec":
                parts.append(x.a)
                parts.append(",".join(map(str, x.b)))
                walk(x.c)
                parts.append(",".join(map(str, x.d)))

        walk(c)
        got = sha1("|".join(parts).encode()).hexdigest()[:16]
        _hash_memo[c] = got
    _hash_memo[t] = got
    return got
