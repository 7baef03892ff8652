"""Attribute values, expression terms, substitutions and evaluation.

Values are plain Python data:

* numbers      -> float (finite)
* tags         -> str (non-empty interned symbols such as "+", "-", "n", "se")
* 2d vectors   -> (float, float) tuples

Terms are tagged tuples, e.g. ``("add", t1, t2)`` or ``("var", "x")``.
Ground constants are always wrapped as ``("const", value)``.  The JSON
surface syntax is an s-expression array, e.g.
``["add", ["scale", "2/3", ["var", "a"]], ["scale", "1/3", ["var", "b"]]]``.

Numeric comparisons are tolerant within ``EPS`` (1e-9); tags compare
exactly.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

EPS = 1e-9

Value = object  # float | str | tuple[float, float]
Term = tuple
Substitution = dict  # var name -> Value


class AttrError(Exception):
    """Base class for attribute evaluation failures."""


class UnboundVariable(AttrError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class TypeMismatch(AttrError):
    pass


class DivisionByZero(AttrError):
    pass


# ---------------------------------------------------------------------------
# values

def is_number(v) -> bool:
    return isinstance(v, float)


def is_tag(v) -> bool:
    return isinstance(v, str)


def is_vector(v) -> bool:
    return isinstance(v, tuple) and len(v) == 2 and all(isinstance(c, float) for c in v)


def as_value(v) -> Value:
    """Normalize a raw Python object into an attribute value."""
    if isinstance(v, bool):
        raise TypeMismatch(f"booleans are not attribute values: {v!r}")
    if isinstance(v, (int, float)):
        f = float(v)
        if not math.isfinite(f):
            raise TypeMismatch(f"numbers must be finite, got {v!r}")
        return f
    if isinstance(v, str):
        if not v:
            raise TypeMismatch("tags must be non-empty strings")
        return v
    if isinstance(v, (tuple, list)) and len(v) == 2:
        return (as_value(v[0]), as_value(v[1]))
    raise TypeMismatch(f"not an attribute value: {v!r}")


def values_equal(a, b) -> bool:
    if is_number(a) and is_number(b):
        return abs(a - b) <= EPS
    if is_tag(a) and is_tag(b):
        return a == b
    if is_vector(a) and is_vector(b):
        return abs(a[0] - b[0]) <= EPS and abs(a[1] - b[1]) <= EPS
    return False


def value_in(v, values: Iterable) -> bool:
    return any(values_equal(v, w) for w in values)


def value_sets_equal(xs: Iterable, ys: Iterable) -> bool:
    """Set equality up to EPS on numeric components."""
    xs, ys = list(xs), list(ys)
    return all(value_in(x, ys) for x in xs) and all(value_in(y, xs) for y in ys)


def value_key(v):
    """Deterministic sort key; numbers rounded well below EPS scale."""
    if is_number(v):
        return (0, round(v, 9))
    if is_tag(v):
        return (1, v)
    if is_vector(v):
        return (2, round(v[0], 9), round(v[1], 9))
    raise TypeMismatch(f"not an attribute value: {v!r}")


def attr_set_key(values: Iterable):
    return tuple(sorted(value_key(v) for v in values))


# ---------------------------------------------------------------------------
# terms

_BINOPS = {"add", "sub", "mul", "div", "eq", "vec"}
_COMMUTATIVE = {"add", "mul", "eq"}


def const(v) -> Term:
    return ("const", as_value(v))


def var(name: str) -> Term:
    return ("var", name)


def is_term(t) -> bool:
    return isinstance(t, tuple) and len(t) >= 1 and isinstance(t[0], str) and t[0] in (
        _BINOPS | {"const", "var", "scale", "perp", "sqrt"}
    )


def term_vars(t: Term) -> set[str]:
    op = t[0]
    if op == "var":
        return {t[1]}
    if op in ("const", "sqrt"):
        return set()
    if op == "scale":
        return term_vars(t[2])
    if op == "perp":
        return term_vars(t[1])
    return term_vars(t[1]) | term_vars(t[2])


def rename_vars(t: Term, suffix: str) -> Term:
    """Append ``suffix`` to every variable name; structure is unchanged."""
    op = t[0]
    if op == "var":
        return ("var", t[1] + suffix)
    if op in ("const", "sqrt"):
        return t
    if op == "scale":
        return ("scale", t[1], rename_vars(t[2], suffix))
    if op == "perp":
        return ("perp", rename_vars(t[1], suffix))
    return (op, rename_vars(t[1], suffix), rename_vars(t[2], suffix))


def map_vars(t: Term, mapping: dict) -> Term:
    op = t[0]
    if op == "var":
        return ("var", mapping.get(t[1], t[1]))
    if op in ("const", "sqrt"):
        return t
    if op == "scale":
        return ("scale", t[1], map_vars(t[2], mapping))
    if op == "perp":
        return ("perp", map_vars(t[1], mapping))
    return (op, map_vars(t[1], mapping), map_vars(t[2], mapping))


def evaluate(t: Term, s: Substitution) -> Value:
    op = t[0]
    if op == "const":
        return t[1]
    if op == "var":
        if t[1] not in s:
            raise UnboundVariable(t[1])
        return s[t[1]]
    if op == "sqrt":
        c = t[1]
        if not isinstance(c, float) or c < 0:
            raise TypeMismatch(f"sqrt needs a non-negative numeric constant, got {c!r}")
        return math.sqrt(c)
    if op == "scale":
        q: Fraction = t[1]
        v = evaluate(t[2], s)
        f = q.numerator / q.denominator
        if is_number(v):
            return f * v
        if is_vector(v):
            return (f * v[0], f * v[1])
        raise TypeMismatch(f"cannot scale {v!r}")
    if op == "perp":
        v = evaluate(t[1], s)
        if not is_vector(v):
            raise TypeMismatch(f"perp needs a vector, got {v!r}")
        return (-v[1], v[0])

    a = evaluate(t[1], s)
    b = evaluate(t[2], s)
    if op == "add" or op == "sub":
        sign = 1.0 if op == "add" else -1.0
        if is_number(a) and is_number(b):
            return a + sign * b
        if is_vector(a) and is_vector(b):
            return (a[0] + sign * b[0], a[1] + sign * b[1])
        raise TypeMismatch(f"{op} needs matching shapes, got {a!r}, {b!r}")
    if op == "mul":
        if is_number(a) and is_number(b):
            return a * b
        if is_number(a) and is_vector(b):
            return (a * b[0], a * b[1])
        if is_vector(a) and is_number(b):
            return (a[0] * b, a[1] * b)
        raise TypeMismatch(f"mul needs a scalar operand, got {a!r}, {b!r}")
    if op == "div":
        if not is_number(b):
            raise TypeMismatch(f"division by non-number {b!r}")
        if abs(b) == 0.0:
            raise DivisionByZero(f"{a!r} / 0")
        if is_number(a):
            return a / b
        if is_vector(a):
            return (a[0] / b, a[1] / b)
        raise TypeMismatch(f"cannot divide {a!r}")
    if op == "eq":
        return 1.0 if values_equal(a, b) else 0.0
    if op == "vec":
        if is_number(a) and is_number(b):
            return (a, b)
        raise TypeMismatch(f"vec needs two numbers, got {a!r}, {b!r}")
    raise TypeMismatch(f"unknown term {t!r}")


def term_render(t: Term) -> str:
    """Deterministic textual rendering, used for sort keys and reports."""
    op = t[0]
    if op == "const":
        v = t[1]
        if is_vector(v):
            return f"(vec {v[0]!r} {v[1]!r})"
        return repr(v)
    if op == "var":
        return f"?{t[1]}"
    if op == "sqrt":
        return f"(sqrt {t[1]!r})"
    if op == "scale":
        return f"(scale {t[1]} {term_render(t[2])})"
    if op == "perp":
        return f"(perp {term_render(t[1])})"
    return f"({op} {term_render(t[1])} {term_render(t[2])})"


@lru_cache(maxsize=None)
def canonical_term(t: Term):
    """AC-normal form: flatten and sort commutative add/mul/eq chains.

    Used for comparing terms under variable renamings (e.g. a pattern
    whose automorphisms permute the summed neighbor variables).
    """
    op = t[0]
    if op in ("const", "var", "sqrt"):
        return t
    if op == "scale":
        return ("scale", t[1], canonical_term(t[2]))
    if op == "perp":
        return ("perp", canonical_term(t[1]))
    if op in _COMMUTATIVE:
        args = []
        stack = [t[1], t[2]]
        while stack:
            u = stack.pop()
            if u[0] == op and op != "eq":  # eq is binary, only order-normalized
                stack.extend([u[1], u[2]])
            else:
                args.append(canonical_term(u))
        args.sort(key=repr)
        return (op, tuple(args))
    return (op, canonical_term(t[1]), canonical_term(t[2]))


def terms_equal_canonical(t1: Term, t2: Term) -> bool:
    return canonical_term(t1) == canonical_term(t2)


def term_is_ground(t: Term) -> bool:
    return not term_vars(t)


# ---------------------------------------------------------------------------
# set-scoped pattern matching

def _subst_key(s: Substitution):
    return tuple(sorted((k, value_key(v)) for k, v in s.items()))


def match_attr_sets(pattern: Iterable[Term], target: Iterable, s: Substitution,
                    ) -> list[Substitution]:
    """All extensions of ``s`` under which every pattern term lands in ``target``.

    Unbound variables range over the members of the target set; ground
    terms must already be present (within EPS for numbers).  Returns the
    empty list when there is no match.
    """
    target = sorted(target, key=value_key)
    out = [dict(s)]
    for term in sorted(pattern, key=term_render):
        nxt = []
        for cur in out:
            unbound = sorted(v for v in term_vars(term) if v not in cur)
            if not unbound:
                if value_in(evaluate(term, cur), target):
                    nxt.append(cur)
                continue
            for combo in itertools.product(target, repeat=len(unbound)):
                cand = dict(cur)
                cand.update(zip(unbound, combo))
                try:
                    v = evaluate(term, cand)
                except AttrError:
                    continue
                if value_in(v, target):
                    nxt.append(cand)
        seen = {}
        for cand in nxt:
            seen.setdefault(_subst_key(cand), cand)
        out = [seen[k] for k in sorted(seen)]
    return out


def substitution_injective(s: Substitution) -> bool:
    """Whether distinct variables are bound to distinct values (strict mode)."""
    vals = list(s.values())
    for i, a in enumerate(vals):
        for b in vals[i + 1:]:
            if values_equal(a, b):
                return False
    return True


# ---------------------------------------------------------------------------
# unification of term sets under a variable bijection (rule automorphisms)

def _unify_terms(t1, t2, fwd: dict, bwd: dict) -> list[tuple[dict, dict]]:
    c1, c2 = canonical_term(t1), canonical_term(t2)
    return _unify_canon(c1, c2, fwd, bwd)


def _unify_canon(c1, c2, fwd, bwd) -> list[tuple[dict, dict]]:
    if c1[0] != c2[0]:
        return []
    op = c1[0]
    if op == "var":
        a, b = c1[1], c2[1]
        if fwd.get(a, b) != b or bwd.get(b, a) != a:
            return []
        f2, b2 = dict(fwd), dict(bwd)
        f2[a], b2[b] = b, a
        return [(f2, b2)]
    if op in ("const", "sqrt"):
        if op == "const" and not values_equal(c1[1], c2[1]):
            return []
        if op == "sqrt" and c1 != c2:
            return []
        return [(fwd, bwd)]
    if op == "scale":
        if c1[1] != c2[1]:
            return []
        return _unify_canon(c1[2], c2[2], fwd, bwd)
    if op == "perp":
        return _unify_canon(c1[1], c2[1], fwd, bwd)
    if op in _COMMUTATIVE and isinstance(c1[1], tuple) and not isinstance(c1[1], str) \
            and len(c1) == 2:
        args1, args2 = list(c1[1]), list(c2[1])
        if len(args1) != len(args2):
            return []
        return _unify_multiset(args1, args2, fwd, bwd)
    # ordered binary
    out = []
    for f, b in _unify_canon(c1[1], c2[1], fwd, bwd):
        out.extend(_unify_canon(c1[2], c2[2], f, b))
    return out


def _unify_multiset(args1, args2, fwd, bwd) -> list[tuple[dict, dict]]:
    if not args1:
        return [(fwd, bwd)]
    head, rest = args1[0], args1[1:]
    out = []
    for i, cand in enumerate(args2):
        for f, b in _unify_canon(head, cand, fwd, bwd):
            out.extend(_unify_multiset(rest, args2[:i] + args2[i + 1:], f, b))
    return out


def unify_attr_sets(pat: Iterable[Term], tgt: Iterable[Term], fwd: dict, bwd: dict,
                    ) -> list[tuple[dict, dict]]:
    """Bijections between two term sets extending the var bijection (fwd, bwd)."""
    pat, tgt = list(pat), list(tgt)
    if len(pat) != len(tgt):
        return []
    if not pat:
        return [(fwd, bwd)]
    head, rest = pat[0], pat[1:]
    out = []
    for i, cand in enumerate(tgt):
        for f, b in _unify_terms(head, cand, fwd, bwd):
            out.extend(unify_attr_sets(rest, tgt[:i] + tgt[i + 1:], f, b))
    # deduplicate extensions
    seen = {}
    for f, b in out:
        seen.setdefault(tuple(sorted(f.items())), (f, b))
    return [seen[k] for k in sorted(seen)]
