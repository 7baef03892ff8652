"""Match enumeration and the two match-set quotients.

A match is an injective structure map from a rule variant's left-hand
side into a host graph together with an attribute substitution.  Matches
are enumerated against the canonical (unrenamed) rule and wrapped in
fresh variants, so two matches are ``~`` (full-parallel) equivalent iff
their canonical maps and substitutions coincide.

`auto_match_set` keeps one representative per class of matches related by
a left-hand-side automorphism.  The search breaks interchangeable-node
symmetry during enumeration (images of mutually swappable pattern nodes
must appear in increasing host order), which avoids walking automorphism
orbits such as the 8! arm permutations of a Moore-neighborhood pattern;
residual duplicates are removed by the exact equivalence check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .attrs import (match_attr_sets, substitution_injective, unify_attr_sets,
                    value_key, values_equal)
from .pregraph import GraphWitness
from .rules import (EsrRule, RuleVariant, check_symmetry_condition, fresh_variant,
                    interchangeable_node_classes)


class MatchStale(Exception):
    """A match refers to elements or links no longer present in the host."""


class SymmetryConditionFailed(Exception):
    def __init__(self, rule_name: str):
        super().__init__(f"rule {rule_name!r} does not satisfy the symmetry condition")
        self.rule_name = rule_name


@dataclass(eq=False)
class Match:
    rule: EsrRule
    variant: RuleVariant
    node_map: dict        # canonical lhs node -> host node
    port_map: dict        # canonical lhs port -> host port
    subst: dict           # canonical variable -> value

    def image_nodes(self) -> frozenset:
        return frozenset(self.node_map.values())

    def image_ports(self) -> frozenset:
        return frozenset(self.port_map.values())

    def host_image(self, x):
        """Host element for a canonical lhs element id."""
        return self.node_map[x] if x in self.node_map else self.port_map[x]

    def sort_key(self):
        return (self.rule.name,
                tuple(sorted(self.node_map.values())) + tuple(sorted(self.port_map.values())),
                tuple(sorted((v, value_key(val)) for v, val in self.subst.items())))

    def to_json(self) -> dict:
        from .documents import value_to_json
        return {
            "rule": self.rule.name,
            "variant": self.variant.tag,
            "nodes": dict(sorted(self.node_map.items())),
            "ports": dict(sorted(self.port_map.items())),
            "subst": {v: value_to_json(val) for v, val in sorted(self.subst.items())},
        }


def _search_order(rule: EsrRule) -> list:
    """Connectivity-driven static order over lhs elements, anchors first."""
    lw = rule.lhs_witness()
    l = rule.lhs
    order: list = []
    seen: set = set()

    def push(x):
        if x not in seen:
            order.append(x)
            seen.add(x)

    roots = sorted(l.nodes, key=lambda n: (-len(lw.node_ports.get(n, ())), n))
    for root in roots:
        if root in seen:
            continue
        push(root)
        queue = [root]
        while queue:
            n = queue.pop(0)
            for p in lw.node_ports.get(n, ()):
                push(p)
                q = lw.pp_partner.get(p)
                if q is not None:
                    push(q)
                    qn = lw.port_node.get(q)
                    if qn is not None and qn not in seen:
                        push(qn)
                        queue.append(qn)
    for p in sorted(l.ports):
        push(p)
    return order


def _raw_matches(rule: EsrRule, host: GraphWitness, *, interchange: bool,
                 strict: bool) -> list[tuple[dict, dict, dict]]:
    l = rule.lhs
    lw = rule.lhs_witness()
    g = host.pregraph
    order = _search_order(rule)

    classes = interchangeable_node_classes(rule) if interchange else []
    class_of = {}
    if interchange:
        pos = {x: i for i, x in enumerate(order)}
        for cls in classes:
            members = sorted(cls, key=lambda n: pos[n])
            for i, n in enumerate(members):
                class_of[n] = members[:i]   # members that must take smaller images

    node_map: dict = {}
    port_map: dict = {}
    used_nodes: set = set()
    used_ports: set = set()
    results: list = []

    host_nodes = sorted(g.nodes)
    host_ports = sorted(g.ports)

    def candidates(x):
        if x in l.nodes:
            for p in lw.node_ports.get(x, ()):
                if p in port_map:
                    y = host.port_node.get(port_map[p])
                    return [] if y is None else [y]
            return host_nodes
        n = lw.port_node.get(x)
        if n is not None and n in node_map:
            base = host.node_ports.get(node_map[n], ())
        else:
            q = lw.pp_partner.get(x)
            if q is not None and q in port_map:
                y = host.pp_partner.get(port_map[q])
                return [] if y is None else [y]
            base = host_ports
        return base

    def consistent(x, y):
        if x in l.nodes:
            if y in used_nodes:
                return False
            for earlier in class_of.get(x, ()):
                if earlier in node_map and not node_map[earlier] < y:
                    return False
            for p in lw.node_ports.get(x, ()):
                if p in port_map and host.port_node.get(port_map[p]) != y:
                    return False
            return True
        if y in used_ports:
            return False
        n = lw.port_node.get(x)
        if n is not None:
            hy = host.port_node.get(y)
            if hy is None or (n in node_map and hy != node_map[n]):
                return False
        q = lw.pp_partner.get(x)
        if q is not None:
            hq = host.pp_partner.get(y)
            if hq is None or (q in port_map and hq != port_map[q]):
                return False
        return True

    def assign(x, y):
        if x in l.nodes:
            node_map[x] = y
            used_nodes.add(y)
        else:
            port_map[x] = y
            used_ports.add(y)

    def unassign(x, y):
        if x in l.nodes:
            del node_map[x]
            used_nodes.discard(y)
        else:
            del port_map[x]
            used_ports.discard(y)

    def search(i, subst):
        if i == len(order):
            if strict and not substitution_injective(subst):
                return
            results.append((dict(node_map), dict(port_map), dict(subst)))
            return
        x = order[i]
        for y in candidates(x):
            if not consistent(x, y):
                continue
            for s2 in match_attr_sets(l.attrs[x], g.attrs[y], subst):
                assign(x, y)
                search(i + 1, s2)
                unassign(x, y)

    search(0, {})
    return results


def _make_matches(rule: EsrRule, raw) -> list[Match]:
    matches = [Match(rule=rule, variant=None, node_map=nm, port_map=pm, subst=s)
               for nm, pm, s in raw]
    matches.sort(key=Match.sort_key)
    return matches


def _assign_variants(matches: list[Match], tags: Optional[Iterable[str]]) -> list[Match]:
    it = iter(tags) if tags is not None else (f"v{i}" for i in itertools.count())
    for m in matches:
        m.variant = fresh_variant(m.rule, next(it))
    return matches


def enumerate_matches(rule: EsrRule, host: GraphWitness, *, strict: bool = False,
                      tags: Optional[Iterable[str]] = None) -> list[Match]:
    """One match per equivalence class of variant-wrapped matches, i.e. one
    per injective homomorphism of the canonical lhs, in deterministic order."""
    raw = _raw_matches(rule, host, interchange=False, strict=strict)
    return _assign_variants(_make_matches(rule, raw), tags)


def matches_equivalent(m1: Match, m2: Match) -> bool:
    """Full-parallel equivalence: agreement on every canonical lhs element
    and on every attribute image, regardless of variant wrapping."""
    if m1.rule is not m2.rule and m1.rule.name != m2.rule.name:
        return False
    if m1.node_map != m2.node_map or m1.port_map != m2.port_map:
        return False
    if m1.subst.keys() != m2.subst.keys():
        return False
    return all(values_equal(m1.subst[v], m2.subst[v]) for v in m1.subst)


def matches_auto_equivalent(m1: Match, m2: Match) -> bool:
    """Equality up to a lhs automorphism.

    Requires equal images; the candidate automorphism is then uniquely
    determined as the composite of one match with the inverse of the
    other, so no orbit enumeration is needed.
    """
    if m1.rule is not m2.rule and m1.rule.name != m2.rule.name:
        return False
    if m1.image_nodes() != m2.image_nodes() or m1.image_ports() != m2.image_ports():
        return False
    rule = m1.rule
    inv2_n = {y: x for x, y in m2.node_map.items()}
    inv2_p = {y: x for x, y in m2.port_map.items()}
    h_n = {x: inv2_n[y] for x, y in m1.node_map.items()}
    h_p = {x: inv2_p[y] for x, y in m1.port_map.items()}
    l = rule.lhs
    if any((h_p[p], h_n[n]) not in l.pn for p, n in l.pn):
        return False
    norm = lambda p, q: (p, q) if p <= q else (q, p)
    if any(norm(h_p[p], h_p[q]) not in l.pp for p, q in l.pp):
        return False
    # variable renaming compatible with the element permutation
    bijections = [({}, {})]
    for x, hx in itertools.chain(h_n.items(), h_p.items()):
        nxt = []
        for fwd, bwd in bijections:
            nxt.extend(unify_attr_sets(l.attrs[x], l.attrs[hx], fwd, bwd))
        if not nxt:
            return False
        bijections = nxt
    for fwd, _ in bijections:
        if all(values_equal(m1.subst[v], m2.subst[fwd.get(v, v)])
               for v in m1.subst):
            return True
    return False


def auto_match_set(rules: Iterable[EsrRule], host: GraphWitness, *,
                   strict: bool = False, tags: Optional[Iterable[str]] = None,
                   pick: Optional[Callable[[list], int]] = None) -> list[Match]:
    """One representative per class of matches up to lhs automorphism.

    Every rule must satisfy the symmetry condition.  ``pick`` (class
    member chooser, used by determinism tests) forces the slow path that
    materializes whole classes; the default path breaks symmetry during
    the search.
    """
    out = []
    for rule in sorted(rules, key=lambda r: r.name):
        if not check_symmetry_condition(rule):
            raise SymmetryConditionFailed(rule.name)
        if pick is None:
            ms = _make_matches(rule, _raw_matches(rule, host, interchange=True,
                                                  strict=strict))
            reps = _dedup_auto(ms)
        else:
            ms = _make_matches(rule, _raw_matches(rule, host, interchange=False,
                                                  strict=strict))
            reps = [cls[pick(cls)] for cls in _auto_classes(ms)]
        out.extend(reps)
    out.sort(key=Match.sort_key)
    return _assign_variants(out, tags)


def _dedup_auto(ms: list[Match]) -> list[Match]:
    by_image: dict = {}
    for m in ms:
        by_image.setdefault((m.image_nodes(), m.image_ports()), []).append(m)
    reps = []
    for group in by_image.values():
        kept: list[Match] = []
        for m in group:
            if not any(matches_auto_equivalent(m, k) for k in kept):
                kept.append(m)
        reps.extend(kept)
    reps.sort(key=Match.sort_key)
    return reps


def _auto_classes(ms: list[Match]) -> list[list[Match]]:
    classes: list[list[Match]] = []
    for m in ms:
        for cls in classes:
            if matches_auto_equivalent(m, cls[0]):
                cls.append(m)
                break
        else:
            classes.append([m])
    return classes


def all_matches(rules: Iterable[EsrRule], host: GraphWitness, *,
                strict: bool = False, tags: Optional[Iterable[str]] = None,
                ) -> list[Match]:
    """Full parallel match set for a rule set, deterministically ordered."""
    out = []
    for rule in sorted(rules, key=lambda r: r.name):
        out.extend(_make_matches(rule, _raw_matches(rule, host, interchange=False,
                                                    strict=strict)))
    out.sort(key=Match.sort_key)
    return _assign_variants(out, tags)


def is_well_behaved(m: Match, host: GraphWitness) -> tuple[bool, list]:
    """Single-match closure conditions: an environment port that gains a new
    link without losing a cut link must be free in the host."""
    rule = m.rule
    offenders = []
    cut_pp_ports = {p for pair in rule.cut_pp for p in pair}
    cut_pn_ports = {p for p, _ in rule.cut_pn}
    env_ports = rule.env_ports_l
    for p, q in sorted(rule.new_pp):
        for side in (p, q):
            if side in env_ports and side not in cut_pp_ports:
                img = m.port_map[side]
                if img in host.pp_partner:
                    offenders.append(("pp", side, img, host.pp_partner[img]))
    for p, n in sorted(rule.new_pn):
        if p in env_ports and p not in cut_pn_ports:
            img = m.port_map[p]
            if img in host.port_node:
                offenders.append(("pn", p, img, host.port_node[img]))
    return (not offenders, offenders)
