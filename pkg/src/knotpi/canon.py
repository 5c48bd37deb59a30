"""Canonical forms for structural congruence.

`canonical_form` rewrites a term into a normal form such that two terms in
(and around) the knot-encoding image are structurally congruent iff their
canonical forms are the same interned object.  Normalization applies:

  * alpha: bound names are renumbered canonically (negative ids);
  * monoid laws for | and +: flatten, drop nil, sort children;
  * restriction laws: (new x)0 = 0, duplicate/unused binders dropped
    (unused-binder garbage collection is derivable from extrusion plus
    (new x)0 = 0 and the monoid laws), binder vectors merged and reordered;
  * scope extrusion: restrictions not guarded by a prefix are pulled to
    the enclosing parallel composition, renaming on clashes.

Recursive definitions are never unfolded here; the rec axiom is a
dynamics-level step.  Soundness (equal canonical forms imply congruence)
holds for all terms; completeness is asserted and tested over the
encoding image and the axiom closure of random terms.

Child ordering uses structural keys computed after a locally-nameless
conversion of binders, so the result does not depend on source name
choices.  Binder-index assignment inside a restriction vector is computed
by a refinement loop: sort children with occurrence-profile markers,
assign indices by first use, re-sort, repeat to a fixpoint.  When no two
distinct siblings anywhere in a term share a key (the common case), one
rebuild pass is canonical; otherwise the rebuild/rename pass is iterated
to a fixpoint and every intermediate key registered as a class alias, so
congruent presentations converge to the same interned representative.
"""

from __future__ import annotations

from .terms import (
    Term, NIL, sum_, input_, output_, bound_output, par, new, call, rec,
    free_names, free_rec_vars, substitute, _scratch_universe,
)

_REFINE_ROUNDS = 8

_key_memo: dict[tuple, tuple] = {}
_tie_memo: dict[tuple, bool] = {}
_group_memo: dict[tuple, tuple] = {}
_decompose_memo: dict[Term, tuple] = {}
_canon_memo: dict[Term, Term] = {}
_class_memo: dict[tuple, Term] = {}
_fnsorted: dict[Term, tuple] = {}
_rvsorted: dict[Term, tuple] = {}
_first_use_memo: dict[tuple, tuple] = {}
_role_memo: dict[Term, dict] = {}
_small_intern: dict = {}


def canonical_form(t: Term, env=None) -> Term:
    """Canonical representative of t's structural-congruence class.

    `env` is accepted for signature compatibility; definitions are never
    unfolded during normalization.
    """
    r = _canon_memo.get(t)
    if r is not None:
        return r
    k0 = _key(t, {}, {}, 0)
    r = _class_memo.get(k0)
    if r is None:
        if not _tied(t, {}, {}, 0):
            # no distinct siblings share a key anywhere: one pass suffices
            r = _rename(_rebuild(t, {}, {}, 0))
            _class_memo[k0] = r
            _canon_memo[r] = r
        else:
            r = _canon_fixpoint(t, k0)
    _canon_memo[t] = r
    return r


def _canon_fixpoint(t: Term, k0) -> Term:
    keys = [k0]
    cur = t
    chain = [cur]
    r = None
    for _ in range(6):
        nxt = _rename(_rebuild(cur, {}, {}, 0))
        if nxt is cur:
            r = cur
            break
        k = _key(nxt, {}, {}, 0)
        known = _class_memo.get(k)
        if known is not None:
            r = known
            break
        if nxt in chain:
            cycle = chain[chain.index(nxt):]
            r = min(cycle, key=lambda x: _key(x, {}, {}, 0))
            break
        keys.append(k)
        chain.append(nxt)
        cur = nxt
    if r is None:
        r = cur
    for k in keys:
        if k not in _class_memo:
            _class_memo[k] = r
    _class_memo[_key(r, {}, {}, 0)] = r
    _canon_memo[r] = r
    return r


def canonical_key(t: Term):
    """Class key deciding congruence: equal keys iff congruent."""
    return _key(canonical_form(t), {}, {}, 0)


def struct_congruent(p: Term, q: Term, env=None) -> bool:
    """Decide congruence by syntactic equality of canonical forms.

    Sound always; complete over the encoding image (see module docstring).
    """
    return p is q or canonical_form(p) is canonical_form(q)


# ----------------------------------------------------------------- slices

def _fns(t: Term) -> tuple:
    got = _fnsorted.get(t)
    if got is None:
        got = tuple(sorted(free_names(t)))
        _fnsorted[t] = got
    return got


def _rvs(t: Term) -> tuple:
    got = _rvsorted.get(t)
    if got is None:
        got = tuple(sorted(free_rec_vars(t)))
        _rvsorted[t] = got
    return got


def _slice(t: Term, benv: dict, renv: dict) -> tuple:
    ns = tuple(benv.get(n) for n in _fns(t)) if benv else ()
    vs = tuple(renv.get(v) for v in _rvs(t)) if renv else ()
    return ns, vs


def _kname(n, benv):
    got = benv.get(n)
    if got is not None:
        return ("b",) + got
    return ("f", n)


def _intern_small(x):
    got = _small_intern.get(x)
    if got is None:
        got = len(_small_intern)
        _small_intern[x] = got
    return got


def _bind_markers(benv: dict, names, depth: int):
    saved = []
    for i, f in enumerate(names):
        saved.append((f, benv.get(f)))
        benv[f] = ("a", depth, i)
    return saved


def _restore(env: dict, saved):
    for n, old in reversed(saved):
        if old is None:
            env.pop(n, None)
        else:
            env[n] = old


# -------------------------------------------------------------------- keys

def _key(t: Term, benv: dict, renv: dict, depth: int):
    """Structural key; also records whether any two distinct siblings
    below t share a key (which makes one-pass rebuilds order-dependent)."""
    mkey = (t.serial, depth) + _slice(t, benv, renv)
    got = _key_memo.get(mkey)
    if got is not None:
        return got
    k = t.kind
    tied = False
    if k == "par" or k == "new":
        res, tied, _a, _o = _group(t, benv, renv, depth)
    elif k == "sum":
        items = []
        for br in t.a:
            items.append((_key(br, benv, renv, depth), br))
            tied = tied or _tie_memo[(br.serial, depth) + _slice(br, benv, renv)]
        items.sort(key=lambda kv: kv[0])
        for (k1, b1), (k2, b2) in zip(items, items[1:]):
            if k1 == k2 and b1 is not b2:
                tied = True
        res = ("S", tuple(kv[0] for kv in items))
    elif k == "br":
        pol = t.a
        skey = _kname(t.b, benv)
        if pol == "o":
            ck = _key(t.e, benv, renv, depth + 1)
            tied = _tie_memo[(t.e.serial, depth + 1) + _slice(t.e, benv, renv)]
            res = ("B", "o", skey, tuple(_kname(n, benv) for n in t.c), ck)
        elif pol == "i":
            saved = _bind_markers(benv, t.c, depth + 1)
            ck = _key(t.e, benv, renv, depth + 1)
            tied = _tie_memo[(t.e.serial, depth + 1) + _slice(t.e, benv, renv)]
            _restore(benv, saved)
            res = ("B", "i", skey, len(t.c), ck)
        else:
            saved = _bind_markers(benv, t.d, depth + 1)
            ck = _key(t.e, benv, renv, depth + 1)
            tied = _tie_memo[(t.e.serial, depth + 1) + _slice(t.e, benv, renv)]
            args = tuple(_kname(n, benv) for n in t.c)
            _restore(benv, saved)
            res = ("B", "b", skey, len(t.d), args, ck)
    elif k == "call":
        head = renv.get(t.a, ("d", t.a))
        res = ("C", head, tuple(_kname(n, benv) for n in t.b))
    elif k == "rec":
        old_r = renv.get(t.a)
        renv[t.a] = ("rv", depth + 1)
        saved = _bind_markers(benv, t.b, depth + 1)
        ck = _key(t.c, benv, renv, depth + 1)
        tied = _tie_memo[(t.c.serial, depth + 1) + _slice(t.c, benv, renv)]
        _restore(benv, saved)
        if old_r is None:
            del renv[t.a]
        else:
            renv[t.a] = old_r
        res = ("R", len(t.b), ck, tuple(_kname(n, benv) for n in t.d))
    else:  # hole
        res = ("H",)
    _key_memo[mkey] = res
    _tie_memo[mkey] = tied
    return res


def _tied(t: Term, benv: dict, renv: dict, depth: int) -> bool:
    mkey = (t.serial, depth) + _slice(t, benv, renv)
    got = _tie_memo.get(mkey)
    if got is None:
        _key(t, benv, renv, depth)
        got = _tie_memo[mkey]
    return got


# ------------------------------------------------------------------- groups

def _decompose(t: Term):
    """Split nested new/par structure into (binders, flat component list).

    Extruded binders are renamed when they would clash with anything else
    in sight; nil components are dropped.  Memoized per term so the
    scratch renaming is stable.
    """
    got = _decompose_memo.get(t)
    if got is not None:
        return got
    binders: list = []
    comps: list[Term] = []
    taken = set(free_names(t))

    def dec(x: Term):
        if x.kind == "par":
            for c in x.a:
                dec(c)
        elif x.kind == "new":
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
            dec(body)
        elif x.is_nil:
            pass
        else:
            comps.append(x)

    dec(t)
    used = set()
    for c in comps:
        used |= free_names(c)
    kept = tuple(b for b in binders if b in used)
    got = (kept, tuple(comps))
    _decompose_memo[t] = got
    return got


def _group(t: Term, benv: dict, renv: dict, depth: int):
    """(key, tied, final binder assignment, sorted component order)."""
    mkey = (t.serial, depth) + _slice(t, benv, renv)
    got = _group_memo.get(mkey)
    if got is not None:
        return got
    binders, comps = _decompose(t)
    if not comps:
        res = (("S", ()), False, {}, ())
        _group_memo[mkey] = res
        return res
    if not binders and len(comps) == 1:
        res = (_key(comps[0], benv, renv, depth),
               _tied(comps[0], benv, renv, depth), {}, (0,))
        _group_memo[mkey] = res
        return res

    d2 = depth + 1
    bset = frozenset(binders)
    profiles: dict = {b: [] for b in binders}
    for c in comps:
        for n, roles in _role_profile(c).items():
            if n in bset:
                profiles[n].append(roles)
    assignment = {b: ("n?", d2, _intern_small(tuple(sorted(profiles[b]))))
                  for b in binders}
    keys: list = []
    order: tuple = ()
    tied = False
    for _round in range(_REFINE_ROUNDS):
        saved = [(b, benv.get(b)) for b in binders]
        benv.update(assignment)
        keys = [_key(c, benv, renv, d2) for c in comps]
        _restore(benv, saved)
        order = tuple(sorted(range(len(comps)), key=lambda i: keys[i]))
        # a tie at any round can steer the index assignment
        for a, b in zip(order, order[1:]):
            if keys[a] == keys[b] and comps[a] is not comps[b]:
                tied = True
        seen: dict = {}
        for i in order:
            for b in _first_use_order(comps[i], bset):
                if b not in seen:
                    seen[b] = len(seen)
        new_assignment = {b: ("n", d2, seen.get(b, len(seen))) for b in binders}
        if new_assignment == assignment:
            break
        assignment = new_assignment

    saved = [(b, benv.get(b)) for b in binders]
    benv.update(assignment)
    keys = [_key(c, benv, renv, d2) for c in comps]
    tied = tied or any(_tied(c, benv, renv, d2) for c in comps)
    _restore(benv, saved)
    order = tuple(sorted(range(len(comps)), key=lambda i: keys[i]))
    for a, b in zip(order, order[1:]):
        if keys[a] == keys[b] and comps[a] is not comps[b]:
            tied = True
    gkey = ("N", len(binders), tuple(keys[i] for i in order))
    res = (gkey, tied, assignment, order)
    _group_memo[mkey] = res
    return res


def _role_profile(t: Term) -> dict:
    """Presentation-invariant occurrence roles of each free name of t."""
    got = _role_memo.get(t)
    if got is not None:
        return got
    acc: dict = {}

    def add(n, role):
        acc.setdefault(n, []).append(role)

    def walk(x: Term, d: int):
        k = x.kind
        if k == "sum":
            for br in x.a:
                walk(br, d)
        elif k == "br":
            add(x.b, ("subj", x.a, d))
            for i, n in enumerate(x.c):
                add(n, ("arg", x.a, d, i))
            walk(x.e, d + 1)
        elif k == "par":
            for c in x.a:
                walk(c, d)
        elif k == "new":
            walk(x.b, d)
        elif k == "call":
            for i, n in enumerate(x.b):
                add(n, ("call", x.a, i))
        elif k == "rec":
            for i, n in enumerate(x.d):
                add(n, ("ract", i))
            walk(x.c, d + 1)

    walk(t, 0)
    fn = free_names(t)
    got = {n: _intern_small(tuple(sorted(rs)))
           for n, rs in acc.items() if n in fn}
    _role_memo[t] = got
    return got


def _first_use_order(t: Term, names: frozenset) -> tuple:
    """First-occurrence order of `names` in a preorder walk (memoized)."""
    rel = frozenset(free_names(t) & names)
    if not rel:
        return ()
    mkey = (t.serial, rel)
    got = _first_use_memo.get(mkey)
    if got is not None:
        return got
    seen: dict = {}
    _first_use(t, rel, seen)
    got = tuple(sorted(seen, key=seen.get))
    _first_use_memo[mkey] = got
    return got


def _first_use(t: Term, names: frozenset, seen: dict):
    k = t.kind
    if k == "sum":
        for br in t.a:
            _first_use(br, names, seen)
    elif k == "br":
        if t.b in names and t.b not in seen:
            seen[t.b] = len(seen)
        for n in t.c:
            if n in names and n not in seen:
                seen[n] = len(seen)
        _first_use(t.e, names, seen)
    elif k == "par":
        for c in t.a:
            _first_use(c, names, seen)
    elif k == "new":
        _first_use(t.b, names, seen)
    elif k == "call":
        for n in t.b:
            if n in names and n not in seen:
                seen[n] = len(seen)
    elif k == "rec":
        for n in t.d:
            if n in names and n not in seen:
                seen[n] = len(seen)
        _first_use(t.c, names, seen)


# ------------------------------------------------------------------ rebuild

def _rebuild(t: Term, benv: dict, renv: dict, depth: int) -> Term:
    """Rebuild with children sorted per the key order (names unchanged)."""
    k = t.kind
    if k == "par" or k == "new":
        _gkey, _tied2, assignment, order = _group(t, benv, renv, depth)
        binders, comps = _decompose(t)
        if not comps:
            return NIL
        saved = [(b, benv.get(b)) for b in binders]
        benv.update(assignment)
        d2 = depth + 1
        rebuilt = [_rebuild(comps[i], benv, renv, d2) for i in order]
        _restore(benv, saved)
        if not binders:
            return par(rebuilt)
        bset = frozenset(binders)
        seen: dict = {}
        for c in rebuilt:
            for b in _first_use_order(c, bset):
                if b not in seen:
                    seen[b] = len(seen)
        ordered = sorted(binders, key=lambda b: seen.get(b, len(seen)))
        return new(tuple(ordered), par(rebuilt))
    if k == "sum":
        items = sorted(
            ((_key(br, benv, renv, depth), br) for br in t.a),
            key=lambda kv: kv[0])
        return sum_(_rebuild(br, benv, renv, depth) for _k2, br in items)
    if k == "br":
        pol = t.a
        if pol == "o":
            return output_(t.b, t.c, _rebuild(t.e, benv, renv, depth + 1))
        if pol == "i":
            saved = _bind_markers(benv, t.c, depth + 1)
            cont = _rebuild(t.e, benv, renv, depth + 1)
            _restore(benv, saved)
            return input_(t.b, t.c, cont)
        saved = _bind_markers(benv, t.d, depth + 1)
        cont = _rebuild(t.e, benv, renv, depth + 1)
        _restore(benv, saved)
        return bound_output(t.b, t.d, t.c, cont)
    if k == "rec":
        old_r = renv.get(t.a)
        renv[t.a] = ("rv", depth + 1)
        saved = _bind_markers(benv, t.b, depth + 1)
        body = _rebuild(t.c, benv, renv, depth + 1)
        _restore(benv, saved)
        if old_r is None:
            del renv[t.a]
        else:
            renv[t.a] = old_r
        return rec(t.a, t.b, body, t.d)
    return t  # call, hole


# --------------------------------------------------------------- renaming

def _rename(t: Term) -> Term:
    ctr = [0]
    rctr = [0]

    def fresh_bind(names, m):
        saved = []
        out = []
        for n in names:
            ctr[0] += 1
            saved.append((n, m.get(n)))
            m[n] = -ctr[0]
            out.append(-ctr[0])
        return tuple(out), saved

    def walk(x: Term, m: dict, rm: dict) -> Term:
        k = x.kind
        if k == "sum":
            return sum_(walk(br, m, rm) for br in x.a)
        if k == "br":
            subj = m.get(x.b, x.b)
            if x.a == "o":
                return output_(subj, tuple(m.get(n, n) for n in x.c),
                               walk(x.e, m, rm))
            if x.a == "i":
                formals, saved = fresh_bind(x.c, m)
                cont = walk(x.e, m, rm)
                _restore(m, saved)
                return input_(subj, formals, cont)
            bound, saved = fresh_bind(x.d, m)
            args = tuple(m.get(n, n) for n in x.c)
            cont = walk(x.e, m, rm)
            _restore(m, saved)
            return bound_output(subj, bound, args, cont)
        if k == "par":
            return par(walk(c, m, rm) for c in x.a)
        if k == "new":
            names, saved = fresh_bind(x.a, m)
            body = walk(x.b, m, rm)
            _restore(m, saved)
            return new(names, body)
        if k == "call":
            v = rm.get(x.a, x.a)
            return call(v, tuple(m.get(n, n) for n in x.b))
        if k == "rec":
            rctr[0] += 1
            old_r = rm.get(x.a)
            rm[x.a] = f"%R{rctr[0]}"
            name = rm[x.a]
            formals, saved = fresh_bind(x.b, m)
            actuals = tuple(m.get(n, n) for n in x.d)
            body = walk(x.c, m, rm)
            _restore(m, saved)
            if old_r is None:
                del rm[x.a]
            else:
                rm[x.a] = old_r
            return rec(name, formals, body, actuals)
        return x  # hole

    return walk(t, {}, {})
