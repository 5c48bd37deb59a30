"""Textual process syntax: parser and pretty-printer.

Grammar (whitespace-insensitive, `#` starts a line comment):

    process  := sum ('|' sum)*
    sum      := atom ('+' atom)*
    atom     := '0'
              | name '?' ['(' names ')'] '.' atom
              | name '!' ['(' names ')'] '.' atom
              | name '!' '{' names '}' '(' names ')' '.' atom   # bound output
              | 'new' '(' names ')' atom
              | 'rec' ident '(' names ')' '.' atom '@' '(' names ')'
              | ident '(' names ')'                              # definition call
              | '(' process ')'

Identifiers may contain letters, digits, `_` and `'`.  `x?.P` / `x!.P`
are the nullary prefixes.  Round-trips with `pretty`: parsing the printed
form of a term yields an alpha-equivalent term.
"""

from __future__ import annotations

import re
from typing import Optional

from .errors import ParseError
from .terms import (
    Term, NameUniverse, NIL, sum_, input_, output_, bound_output, par, new,
    call, rec, free_names,
)

_TOKEN_RE = re.compile(
    r"\s*(?:#[^\n]*|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<punct>[?!().,+|@{}])|(?P<zero>0))"
)

_KEYWORDS = {"new", "rec"}


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ParseError(f"unexpected character at: {rest[:20]!r}")
        pos = m.end()
        if m.group("id"):
            out.append(("id", m.group("id")))
        elif m.group("punct"):
            out.append(("p", m.group("punct")))
        elif m.group("zero"):
            out.append(("0", "0"))
    out.append(("eof", ""))
    return out


class _Parser:
    def __init__(self, text: str, universe: NameUniverse):
        self.toks = _tokenize(text)
        self.i = 0
        self.uni = universe

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        t = self.toks[self.i]
        if kind is not None and t[0] != kind:
            raise ParseError(f"expected {value or kind}, got {t[1]!r}")
        if value is not None and t[1] != value:
            raise ParseError(f"expected {value!r}, got {t[1]!r}")
        self.i += 1
        return t

    def at(self, value):
        t = self.toks[self.i]
        return t[1] == value and t[0] in ("p", "id", "0")

    def name_list(self):
        self.take("p", "(")
        names = []
        if not self.at(")"):
            while True:
                names.append(self.uni.named(self.take("id")[1]))
                if self.at(","):
                    self.take()
                else:
                    break
        self.take("p", ")")
        return tuple(names)

    def process(self) -> Term:
        parts = [self.sum()]
        while self.at("|"):
            self.take()
            parts.append(self.sum())
        return par(parts)

    def sum(self) -> Term:
        first = self.atom()
        if not self.at("+"):
            return first
        branches = list(self._branches_of(first))
        while self.at("+"):
            self.take()
            branches.extend(self._branches_of(self.atom()))
        return sum_(branches)

    @staticmethod
    def _branches_of(t: Term):
        if t.kind == "sum":
            return t.a  # nil contributes no summands (0 is the + identity)
        raise ParseError("only prefixes and 0 may be summed")

    def atom(self) -> Term:
        tok = self.peek()
        if tok[0] == "0":
            self.take()
            return NIL
        if tok[1] == "(":
            self.take()
            p = self.process()
            self.take("p", ")")
            return p
        if tok[0] != "id":
            raise ParseError(f"unexpected token {tok[1]!r}")
        word = tok[1]
        if word == "new":
            self.take()
            names = self.name_list()
            body = self.atom()
            return new(names, body)
        if word == "rec":
            self.take()
            var = self.take("id")[1]
            formals = self.name_list()
            self.take("p", ".")
            body = self.atom()
            self.take("p", "@")
            actuals = self.name_list()
            return rec(var, formals, body, actuals)
        # name-led: prefix or call
        self.take()
        if self.at("?"):
            self.take()
            formals = self.name_list() if self.at("(") else ()
            self.take("p", ".")
            cont = self.atom()
            return sum_((input_(self.uni.named(word), formals, cont),))
        if self.at("!"):
            self.take()
            bound = ()
            if self.at("{"):
                self.take()
                bs = []
                while not self.at("}"):
                    bs.append(self.uni.named(self.take("id")[1]))
                    if self.at(","):
                        self.take()
                self.take("p", "}")
                bound = tuple(bs)
            args = self.name_list() if self.at("(") else ()
            self.take("p", ".")
            cont = self.atom()
            subj = self.uni.named(word)
            if bound:
                return sum_((bound_output(subj, bound, args, cont),))
            return sum_((output_(subj, args, cont),))
        if self.at("("):
            return call(word, self.name_list())
        raise ParseError(f"expected prefix or call after {word!r}")


def parse_process(text: str, universe: Optional[NameUniverse] = None) -> Term:
    uni = universe if universe is not None else NameUniverse()
    p = _Parser(text, uni)
    t = p.process()
    p.take("eof")
    return t


# ------------------------------------------------------------------ printer

def pretty(t: Term, universe: Optional[NameUniverse] = None) -> str:
    """Round-trippable rendering; binder labels are made unambiguous."""
    uni = universe if universe is not None else NameUniverse()
    taken = {uni.label(n) for n in free_names(t)}

    def bind(names, env):
        env = dict(env)
        out = []
        for n in names:
            base = uni.label(n)
            cand = base
            k = 0
            while cand in taken:
                k += 1
                cand = f"{base}_{k}"
            taken.add(cand)
            env[n] = cand
            out.append(cand)
        return out, env

    def label(n, env):
        return env.get(n) or uni.label(n)

    def render(x: Term, ctx: str, env: dict) -> str:
        k = x.kind
        if k == "sum":
            if not x.a:
                return "0"
            s = " + ".join(render_branch(br, env) for br in x.a)
            if len(x.a) > 1 and ctx == "atom":
                return f"({s})"
            return s
        if k == "par":
            s = " | ".join(render(c, "atom", env) for c in x.a)
            if ctx == "atom":
                return f"({s})"
            return s
        if k == "new":
            names, env2 = bind(x.a, env)
            return f"new({', '.join(names)}) {render(x.b, 'atom', env2)}"
        if k == "call":
            return f"{x.a}({', '.join(label(n, env) for n in x.b)})"
        if k == "rec":
            actuals = ", ".join(label(n, env) for n in x.d)
            formals, env2 = bind(x.b, env)
            body = render(x.c, "atom", env2)
            return f"rec {x.a}({', '.join(formals)}).{body} @ ({actuals})"
        if k == "hole":
            return "[]"
        raise ValueError(f"cannot render {x.kind}")

    def render_branch(br: Term, env: dict) -> str:
        subj = label(br.b, env)
        if br.a == "i":
            formals, env2 = bind(br.c, env)
            args = f"({', '.join(formals)})" if formals else ""
            return f"{subj}?{args}.{render(br.e, 'atom', env2)}"
        if br.a == "o":
            args = f"({', '.join(label(n, env) for n in br.c)})" if br.c else ""
            return f"{subj}!{args}.{render(br.e, 'atom', env)}"
        bound, env2 = bind(br.d, env)
        args = ", ".join(label(n, env2) for n in br.c)
        return f"{subj}!{{{', '.join(bound)}}}({args}).{render(br.e, 'atom', env2)}"

    return render(t, "top", {})
