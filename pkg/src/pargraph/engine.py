"""Rewrite steps and the two deterministic parallel rewrite relations.

A parallel step first assembles an intermediate pregraph H from the host
and all matches (host minus the union of cut images, plus the variants'
new material), then quotients H by the port/node equivalence closures.
Sequential steps skip the quotient and return the raw pregraph.

Determinism engineering: fresh-variant identifiers are derived from
(step index, match index), so identical invocations are bit-identical;
the formal guarantee of the two relations remains "up to isomorphism".
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .attrs import evaluate, value_in
from .matching import (Match, MatchStale, all_matches, auto_match_set,
                       is_well_behaved)
from .pregraph import (GraphWitness, Pregraph, QuotientMap, Violation,
                       graph_witness, pregraph, pregraphs_equivalent,
                       quotient, validate_graph)
from .rules import EsrRule, check_conflict_free, check_symmetry_condition


class PreconditionError(Exception):
    """A step precondition (conflict-freedom or symmetry) is not established."""


class ConflictFreedomUnverified(PreconditionError):
    pass


class ConflictFreedomFailed(PreconditionError):
    def __init__(self, pair, detail):
        super().__init__(f"rule set is not conflict free: {pair} ({detail.reason})")
        self.pair = pair
        self.detail = detail


@dataclass
class StepResult:
    result: Pregraph
    intermediate: Pregraph
    quotient_map: Optional[QuotientMap]
    is_graph: bool
    matches_used: list
    violations: Optional[list] = None

    def witness(self) -> GraphWitness:
        return graph_witness(self.result)


@dataclass
class RunReport:
    steps: list = field(default_factory=list)       # StepResult per step
    timings: list = field(default_factory=list)     # seconds per step
    stop_reason: str = ""                           # budget | fixpoint | non-graph

    @property
    def final(self) -> Optional[Pregraph]:
        return self.steps[-1].result if self.steps else None


def _check_stale(g: Pregraph, m: Match):
    for x, y in m.node_map.items():
        if y not in g.nodes:
            raise MatchStale(f"node image {y!r} of {x!r} is not in the host")
    for x, y in m.port_map.items():
        if y not in g.ports:
            raise MatchStale(f"port image {y!r} of {x!r} is not in the host")
    for p, n in m.rule.lhs.pn:
        if (m.port_map[p], m.node_map[n]) not in g.pn:
            raise MatchStale(f"pn image of ({p!r}, {n!r}) is missing from the host")
    for p, q in m.rule.lhs.pp:
        a, b = m.port_map[p], m.port_map[q]
        if not g.has_pp(a, b):
            raise MatchStale(f"pp image of ({p!r}, {q!r}) is missing from the host")


def _norm_pair(p, q):
    return (p, q) if p <= q else (q, p)


def _build_intermediate(g: Pregraph, matches: list[Match]) -> Pregraph:
    """The five set equations: remove cut images, adjoin variant-new material.

    Links of the host incident to a removed element disappear with it;
    attribute arithmetic is element-wise over value sets (a match removes
    the values its cut entries matched, new entries contribute unions).
    """
    cut_nodes, cut_ports = set(), set()
    cut_pn, cut_pp = set(), set()
    cut_vals = defaultdict(set)
    for m in matches:
        r = m.rule
        cut_nodes.update(m.node_map[n] for n in r.cut_nodes)
        cut_ports.update(m.port_map[p] for p in r.cut_ports)
        cut_pn.update((m.port_map[p], m.node_map[n]) for p, n in r.cut_pn)
        cut_pp.update(_norm_pair(m.port_map[p], m.port_map[q]) for p, q in r.cut_pp)
        for x in r.cut_attr_elems:
            img = m.host_image(x)
            for t in r.lhs.attrs[x]:
                cut_vals[img].add(evaluate(t, m.subst))

    nodes = set(g.nodes) - cut_nodes
    ports = set(g.ports) - cut_ports
    pn = {(p, n) for p, n in g.pn
          if (p, n) not in cut_pn and p in ports and n in nodes}
    pp = {pair for pair in g.pp
          if pair not in cut_pp and pair[0] in ports and pair[1] in ports}
    attrs = {}
    for x in nodes | ports:
        vals = set(g.attrs[x])
        if x in cut_vals:
            vals = {v for v in vals if not value_in(v, cut_vals[x])}
        attrs[x] = vals

    for m in matches:
        r, variant = m.rule, m.variant
        vr = variant.rule

        def img(x):
            # variant rhs id -> host id for env elements, itself for new ones
            if x in vr.new_nodes or x in vr.new_ports:
                return x
            return m.host_image(variant.inv_id(x))

        new_nodes = set(vr.new_nodes)
        new_ports = set(vr.new_ports)
        clash = (new_nodes | new_ports) & (nodes | ports)
        if clash:
            raise ValueError(f"fresh identifiers collide with the host: {sorted(clash)}")
        nodes |= new_nodes
        ports |= new_ports
        for p, n in vr.new_pn:
            pn.add((img(p), img(n)))
        for p, q in vr.new_pp:
            pp.add(_norm_pair(img(p), img(q)))
        for x in new_nodes | new_ports:
            attrs.setdefault(x, set())
        for x in vr.new_attr_elems:
            target = img(x)
            vals = {evaluate(t, {variant.var_map[v]: val for v, val in m.subst.items()})
                    for t in vr.rhs.attrs[x]}
            attrs.setdefault(target, set()).update(vals)

    return pregraph(nodes=nodes, ports=ports, pn=pn, pp=pp, attrs=attrs)


def sequential_step(host: GraphWitness, m: Match) -> StepResult:
    """Apply one match; the result is the raw pregraph, not quotiented.

    Well-behaved matches (see `matching.is_well_behaved`) are exactly the
    ones whose raw result is again a graph.
    """
    _check_stale(host.pregraph, m)
    h = _build_intermediate(host.pregraph, [m])
    violations = validate_graph(h)
    return StepResult(result=h, intermediate=h, quotient_map=None,
                      is_graph=not violations, matches_used=[m],
                      violations=violations or None)


def parallel_step(host: GraphWitness, matches: list[Match], *,
                  conflict_free_verified: bool = False,
                  override: bool = False) -> StepResult:
    """Assemble H from all matches, then quotient.

    Refuses to run unless the originating rule set's conflict-freedom has
    been verified by the caller or ``override`` is set.
    """
    if not conflict_free_verified and not override:
        raise ConflictFreedomUnverified(
            "conflict-freedom of the rule set is unverified; "
            "verify with check_conflict_free or pass override=True")
    tags = [m.variant.tag for m in matches]
    if len(set(tags)) != len(tags):
        raise ValueError(f"matches must use pairwise distinct variants: {tags}")
    for m in matches:
        _check_stale(host.pregraph, m)
    h = _build_intermediate(host.pregraph, matches)
    g2, qmap = quotient(h)
    violations = validate_graph(g2)
    return StepResult(result=g2, intermediate=h, quotient_map=qmap,
                      is_graph=not violations, matches_used=list(matches),
                      violations=violations or None)


def _verify_conflict_free(rules: list[EsrRule], override: bool) -> bool:
    cf = check_conflict_free(rules)
    if not cf.ok and not override:
        raise ConflictFreedomFailed(cf.failing_pair, cf.detail)
    return cf.ok


def full_parallel_step(rules: Iterable[EsrRule], host: GraphWitness, *,
                       strict: bool = False, override: bool = False,
                       step_tag: str = "s0") -> StepResult:
    """Fire one representative of every match equivalence class at once."""
    rules = list(rules)
    verified = _verify_conflict_free(rules, override)
    ms = all_matches(rules, host, strict=strict,
                     tags=(f"{step_tag}m{i}" for i in range(10 ** 9)))
    return parallel_step(host, ms, conflict_free_verified=verified,
                         override=override)


def auto_parallel_step(rules: Iterable[EsrRule], host: GraphWitness, *,
                       strict: bool = False, override: bool = False,
                       step_tag: str = "s0", pick=None) -> StepResult:
    """Fire one representative per class of matches up to lhs automorphism."""
    rules = list(rules)
    verified = _verify_conflict_free(rules, override)
    for r in rules:
        check_symmetry_condition(r)  # cached; auto_match_set raises if violated
    ms = auto_match_set(rules, host, strict=strict, pick=pick,
                        tags=(f"{step_tag}m{i}" for i in range(10 ** 9)))
    return parallel_step(host, ms, conflict_free_verified=verified,
                         override=override)


def run(rules: Iterable[EsrRule], start: GraphWitness, mode: str = "full", *,
        max_steps: int = 1, stop_on_fixpoint: bool = False,
        strict: bool = False, override: bool = False,
        snapshot=None) -> RunReport:
    """Iterate the chosen step relation.

    Stops at the step budget, at a pregraph-equivalence fixpoint (when
    requested), or on a non-graph result (recorded, not fatal).
    """
    if mode not in ("full", "auto"):
        raise ValueError(f"mode must be 'full' or 'auto', got {mode!r}")
    step_fn = full_parallel_step if mode == "full" else auto_parallel_step
    rules = list(rules)
    report = RunReport()
    current = start
    for k in range(max_steps):
        t0 = time.perf_counter()
        res = step_fn(rules, current, strict=strict, override=override,
                      step_tag=f"s{k}")
        report.timings.append(time.perf_counter() - t0)
        report.steps.append(res)
        if snapshot is not None:
            snapshot(k, res)
        if not res.is_graph:
            report.stop_reason = "non-graph"
            return report
        if stop_on_fixpoint and pregraphs_equivalent(current.pregraph, res.result):
            report.stop_reason = "fixpoint"
            return report
        current = res.witness()
    report.stop_reason = "budget"
    return report
