"""Bounded weak barbed bisimulation with up-to-congruence caching.

The checker computes the stratified approximants of weak barbed
bisimilarity.  A pair (P, Q) survives stratum k+1 iff

  * every strong barb of one side is weakly matched (within tau_budget
    internal steps) by the other, and
  * every one-step reduct of one side is matched by some state the other
    side reaches within tau_budget steps, the resulting pair surviving
    stratum k,

symmetrically.  Surviving the configured depth yields BisimilarToDepth,
an explicitly bounded approximation; a failed challenge yields a
Distinguished verdict that is conclusive at the configured weakness
bound and carries a replayable experiment.  States are canonicalized and
cached, so the whole game runs up to structural congruence.

Barb matching is polarized by default (input and output capabilities on
a channel are distinct observables, following the barbed-bisimulation
tradition the paper builds on); `barb_mode="subject"` restores the
subject-only observation of the reduction-semantics presentation.  With
subject-only barbs the wire templates keep every port of an encoding
perpetually lit, which makes encodings with equal interfaces universally
equivalent; polarized observation is what gives the checker its
distinguishing power.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import InterfaceTooLarge
from .terms import Term, Name, DefEnv, EMPTY_ENV, NameUniverse, Abstraction, new
from .dynamics import (
    state_form, step, barbs, barbs_polarized, weak_barbs, weak_states,
    stable_hash,
)


@dataclass(frozen=True)
class BisimConfig:
    depth: int = 6
    tau_budget: int = 8
    max_pairs: int = 500_000
    barb_mode: str = "polarized"  # or "subject"
    use_cache: bool = True

    def __post_init__(self):
        if self.depth < 0 or self.tau_budget < 1:
            raise ValueError("depth must be >= 0 and tau_budget >= 1")
        if self.barb_mode not in ("polarized", "subject"):
            raise ValueError("barb_mode must be 'polarized' or 'subject'")


@dataclass(frozen=True)
class Challenge:
    side: str  # "left" | "right": which root the challenger descends from
    channel: Name
    source: Term
    target: Term
    reply: Term  # defender's longest-surviving reply


@dataclass(frozen=True)
class BarbClaim:
    side: str  # side holding the barb
    name: Name
    polarity: Optional[str]


@dataclass(frozen=True)
class BisimilarToDepth:
    depth: int
    relation_size: int
    kind: str = "bisimilar-to-depth"


@dataclass(frozen=True)
class Distinguished:
    experiment: tuple[Challenge, ...]
    claim: BarbClaim
    replay_ok: bool
    kind: str = "distinguished"


@dataclass(frozen=True)
class BudgetExceeded:
    pairs: int
    kind: str = "budget-exceeded"


BisimVerdict = BisimilarToDepth | Distinguished | BudgetExceeded


class _Budget(Exception):
    pass


class _Checker:
    def __init__(self, env: DefEnv, cfg: BisimConfig):
        self.env = env
        self.cfg = cfg
        self.ok: dict[tuple[Term, Term], int] = {}
        self.fail: dict[tuple[Term, Term], tuple[int, tuple]] = {}
        self.touched: set[tuple[Term, Term]] = set()
        self._sb: dict[Term, frozenset] = {}

    def strong_obs(self, s: Term) -> frozenset:
        got = self._sb.get(s)
        if got is None:
            if self.cfg.barb_mode == "polarized":
                got = barbs_polarized(s, self.env)
            else:
                got = barbs(s, self.env)
            self._sb[s] = got
        return got

    def _missing_weakly(self, want: frozenset, b: Term):
        """Subset of `want` not weakly observable from b within tau_budget.

        Expands b's tau closure lazily and stops as soon as everything is
        covered, so the full closure is only built on failure.
        """
        missing = set(want - self.strong_obs(b))
        if not missing:
            return missing
        seen = {b}
        frontier = [b]
        for _ in range(self.cfg.tau_budget):
            nxt = []
            for s in frontier:
                for _r, t in step(s, self.env).successors:
                    if t not in seen:
                        seen.add(t)
                        missing -= self.strong_obs(t)
                        if not missing:
                            return missing
                        nxt.append(t)
            if not nxt:
                break
            frontier = nxt
        return missing

    def _lazy_replies(self, target: Term, b: Term):
        """Defender states within tau_budget, likely matches first.

        Yields BFS layers; inside a layer the exact canonical match and
        states with the challenger-successor's observables come first.
        """
        tb = self.strong_obs(target)
        seen = {b}
        frontier = [b]
        yield from self._rank_layer(target, tb, [b])
        for _ in range(self.cfg.tau_budget):
            nxt = []
            for s in frontier:
                for _r, t in step(s, self.env).successors:
                    if t not in seen:
                        seen.add(t)
                        nxt.append(t)
            if not nxt:
                return
            yield from self._rank_layer(target, tb, nxt)
            frontier = nxt

    def _rank_layer(self, target: Term, tb: frozenset, layer: list):
        rest = []
        same = []
        for t in layer:
            if t is target:
                yield t
            elif self.strong_obs(t) == tb:
                same.append(t)
            else:
                rest.append(t)
        yield from same
        yield from rest

    def survive(self, left: Term, right: Term, k: int):
        """True, or (failing stratum, failure info)."""
        if left is right or k <= 0:
            return True
        pair = (left, right)
        if self.cfg.use_cache:
            got = self.ok.get(pair)
            if got is not None and got >= k:
                return True
            f = self.fail.get(pair)
            if f is not None and f[0] <= k:
                return f
        if pair not in self.touched:
            self.touched.add(pair)
            if len(self.touched) > self.cfg.max_pairs:
                raise _Budget()

        # barb condition (fails from stratum 1 up)
        for side in ("left", "right"):
            a, b = (left, right) if side == "left" else (right, left)
            missing = self._missing_weakly(self.strong_obs(a), b)
            if missing:
                x = min(missing, key=repr)
                res = (1, ("barb", side, x))
                if self.cfg.use_cache:
                    self.fail[pair] = res
                return res

        # transition condition; challengers that lose observables first
        for side in ("left", "right"):
            a, b = (left, right) if side == "left" else (right, left)
            succ = sorted(step(a, self.env).successors,
                          key=lambda rt: len(self.strong_obs(rt[1])))
            for redex, a2 in succ:
                best_kf = -1
                best_reply = None
                best_info = None
                matched = False
                for b2 in self._lazy_replies(a2, b):
                    r = (self.survive(a2, b2, k - 1) if side == "left"
                         else self.survive(b2, a2, k - 1))
                    if r is True:
                        matched = True
                        break
                    kf, info = r
                    if kf > best_kf:
                        best_kf, best_reply, best_info = kf, b2, info
                if not matched:
                    res = (best_kf + 1,
                           ("tau", side, redex.channel, a, a2, best_reply,
                            best_info))
                    if self.cfg.use_cache:
                        old = self.fail.get(pair)
                        if old is None or res[0] < old[0]:
                            self.fail[pair] = res
                    return res

        if self.cfg.use_cache:
            old = self.ok.get(pair, -1)
            if k > old:
                self.ok[pair] = k
        return True


def _extract_experiment(info: tuple) -> tuple[tuple[Challenge, ...], BarbClaim]:
    challenges: list[Challenge] = []
    while info[0] == "tau":
        _tag, side, channel, src, tgt, reply, nested = info
        challenges.append(Challenge(side=side, channel=channel, source=src,
                                    target=tgt, reply=reply))
        info = nested
    _tag, side, x = info
    if isinstance(x, tuple):
        name, pol = x
    else:
        name, pol = x, None
    return tuple(challenges), BarbClaim(side=side, name=name, polarity=pol)


def replay_experiment(p: Term, q: Term, experiment: tuple[Challenge, ...],
                      claim: BarbClaim, env: DefEnv, cfg: BisimConfig) -> bool:
    """Re-execute a distinguishing experiment from the two roots.

    Each challenge's transition must exist on the challenger side and the
    recorded defender reply must be weakly reachable; the final states
    must disagree on the claimed (weak) barb.
    """
    left, right = state_form(p, env), state_form(q, env)
    for ch in experiment:
        a, b = (left, right) if ch.side == "left" else (right, left)
        succ = {t for _r, t in step(a, env).successors}
        if ch.target not in succ:
            return False
        if ch.reply not in weak_states(b, env, cfg.tau_budget):
            return False
        if ch.side == "left":
            left, right = ch.target, ch.reply
        else:
            left, right = ch.reply, ch.target
    holder, other = (left, right) if claim.side == "left" else (right, left)
    polar = claim.polarity is not None
    obs = (lambda s: barbs_polarized(s, env)) if polar else (lambda s: barbs(s, env))
    x = (claim.name, claim.polarity) if polar else claim.name
    if x not in obs(holder):
        return False
    return x not in weak_barbs(other, env, cfg.tau_budget, polarized=polar)


def bounded_bisim(p: Term, q: Term, env: Optional[DefEnv] = None,
                  cfg: Optional[BisimConfig] = None) -> BisimVerdict:
    """Decide bounded weak barbed bisimilarity of two processes."""
    env = env if env is not None else EMPTY_ENV
    cfg = cfg if cfg is not None else BisimConfig()
    chk = _Checker(env, cfg)
    left, right = state_form(p, env), state_form(q, env)
    try:
        r = chk.survive(left, right, cfg.depth)
    except _Budget:
        return BudgetExceeded(pairs=len(chk.touched))
    if r is True:
        return BisimilarToDepth(depth=cfg.depth, relation_size=len(chk.ok) + 1)
    _kf, info = r
    experiment, claim = _extract_experiment(info)
    ok = replay_experiment(p, q, experiment, claim, env, cfg)
    return Distinguished(experiment=experiment, claim=claim, replay_ok=ok)


# ------------------------------------------------------------ abstractions

@dataclass(frozen=True)
class ArityRationale:
    """Conclusive inequivalence: abstraction interfaces differ in size."""
    arity1: int
    arity2: int

    def __str__(self):
        return (f"abstractions of arity {self.arity1} and {self.arity2} "
                "cannot be compared without interface normalization")


def distinguish_by_arity(a1: Abstraction, a2: Abstraction
                         ) -> Optional[ArityRationale]:
    if a1.arity != a2.arity:
        return ArityRationale(a1.arity, a2.arity)
    return None


def bisim_with_interface(a1: Abstraction, a2: Abstraction, shared: int,
                         env: Optional[DefEnv] = None,
                         cfg: Optional[BisimConfig] = None,
                         universe: Optional[NameUniverse] = None,
                         extra1: Term | None = None,
                         extra2: Term | None = None) -> BisimVerdict:
    """Compare abstractions over a shared fresh interface of size `shared`.

    Each side is applied to the shared vector extended by its own fresh
    tail, which is then restricted.  `extra1`/`extra2` optionally compose
    a side with a companion abstraction applied to the same arguments
    (e.g. a liveness signal); they must be Abstractions of matching arity
    when given.
    """
    from .terms import par as _par
    if shared > a1.arity or shared > a2.arity:
        raise InterfaceTooLarge(
            f"shared interface {shared} exceeds arity "
            f"{min(a1.arity, a2.arity)}")
    uni = universe if universe is not None else NameUniverse()
    v = tuple(uni.fresh(f"i{k}") for k in range(shared))
    w1 = tuple(uni.fresh(f"h{k}") for k in range(a1.arity - shared))
    w2 = tuple(uni.fresh(f"k{k}") for k in range(a2.arity - shared))
    b1 = a1.apply(v + w1, uni)
    b2 = a2.apply(v + w2, uni)
    if extra1 is not None:
        b1 = _par([b1, extra1.apply(v + w1, uni)])
    if extra2 is not None:
        b2 = _par([b2, extra2.apply(v + w2, uni)])
    return bounded_bisim(new(w1, b1), new(w2, b2), env, cfg)
