"""Environment-sensitive rewrite rules and their static analyses.

A rule's left-hand side is partitioned into a *cut* part (removed by the
rewrite) and an *environment* part (preserved context); the right-hand
side into a *new* part (added material) and an environment part that
specifies how new material reconnects.  Rule sides are graphs whose
attribute sets hold expression terms (see `attrs`), so patterns may carry
variables.

Analyses provided here:

* `validate_rule`       -- the six labeling constraints plus the derived
                           new-component characterization
* `fresh_variant`       -- globally renamed copies used by parallel steps
* `enumerate_automorphisms` / `check_symmetry_condition`
* `check_parallel_safety` -- no new port link joins two environment ports
* `check_compatibility` / `check_conflict_free`
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .attrs import Term, map_vars, term_vars, unify_attr_sets, value_key
from .pregraph import GraphWitness, Pregraph, graph_witness, pregraph, validate_graph

SYMMETRY_WITNESS_CAP = 64


def _norm_pair(p, q):
    return (p, q) if p <= q else (q, p)


@dataclass(eq=False)
class EsrRule:
    name: str
    lhs: Pregraph
    rhs: Pregraph
    cut_nodes: frozenset = frozenset()
    cut_ports: frozenset = frozenset()
    cut_pn: frozenset = frozenset()
    cut_pp: frozenset = frozenset()
    cut_attr_elems: frozenset = frozenset()   # lhs elements whose attr entry is cut
    new_nodes: frozenset = frozenset()
    new_ports: frozenset = frozenset()
    new_pn: frozenset = frozenset()
    new_pp: frozenset = frozenset()
    new_attr_elems: frozenset = frozenset()   # rhs elements whose attr entry is new
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.cut_pp = frozenset(_norm_pair(p, q) for p, q in self.cut_pp)
        self.new_pp = frozenset(_norm_pair(p, q) for p, q in self.new_pp)

    # -- environment views ---------------------------------------------------
    @property
    def env_nodes_l(self):
        return self.lhs.nodes - self.cut_nodes

    @property
    def env_ports_l(self):
        return self.lhs.ports - self.cut_ports

    @property
    def env_nodes_r(self):
        return self.rhs.nodes - self.new_nodes

    @property
    def env_ports_r(self):
        return self.rhs.ports - self.new_ports

    @property
    def env_pn_l(self):
        return self.lhs.pn - self.cut_pn

    @property
    def env_pp_l(self):
        return self.lhs.pp - self.cut_pp

    @property
    def env_pn_r(self):
        return self.rhs.pn - self.new_pn

    @property
    def env_pp_r(self):
        return self.rhs.pp - self.new_pp

    def lhs_vars(self) -> set:
        out = set()
        for vals in self.lhs.attrs.values():
            for t in vals:
                out |= term_vars(t)
        return out

    def rhs_vars(self) -> set:
        out = set()
        for vals in self.rhs.attrs.values():
            for t in vals:
                out |= term_vars(t)
        return out

    def lhs_witness(self) -> GraphWitness:
        if "lw" not in self._cache:
            self._cache["lw"] = graph_witness(self.lhs)
        return self._cache["lw"]

    def rhs_witness(self) -> GraphWitness:
        if "rw" not in self._cache:
            self._cache["rw"] = graph_witness(self.rhs)
        return self._cache["rw"]


@dataclass(frozen=True)
class RuleVariant:
    """A rule copy under fresh names, with the renaming mapping back to it."""
    rule: EsrRule
    tag: str
    node_map: dict   # original id -> variant id
    port_map: dict
    var_map: dict    # original var -> variant var

    def inv_id(self, variant_id: str) -> str:
        return variant_id[: -len("#" + self.tag)]

    def host_ids(self):
        return set(self.node_map.values()) | set(self.port_map.values())


def _rename_side(g: Pregraph, idmap: dict, varmap: dict) -> Pregraph:
    def rn_terms(vals):
        return frozenset(map_vars(t, varmap) for t in vals)

    return pregraph(
        nodes={idmap[n] for n in g.nodes},
        ports={idmap[p] for p in g.ports},
        pn={(idmap[p], idmap[n]) for p, n in g.pn},
        pp={(idmap[p], idmap[q]) for p, q in g.pp},
        attrs={idmap[x]: rn_terms(v) for x, v in g.attrs.items()},
    )


def fresh_variant(rule: EsrRule, tag: str) -> RuleVariant:
    """Rename every node, port and variable of the rule with ``#tag``."""
    suffix = "#" + tag
    ids = rule.lhs.elements() | rule.rhs.elements()
    idmap = {x: x + suffix for x in ids}
    varmap = {v: v + suffix for v in rule.lhs_vars() | rule.rhs_vars()}
    renamed = EsrRule(
        name=rule.name,
        lhs=_rename_side(rule.lhs, idmap, varmap),
        rhs=_rename_side(rule.rhs, idmap, varmap),
        cut_nodes=frozenset(idmap[x] for x in rule.cut_nodes),
        cut_ports=frozenset(idmap[x] for x in rule.cut_ports),
        cut_pn=frozenset((idmap[p], idmap[n]) for p, n in rule.cut_pn),
        cut_pp=frozenset((idmap[p], idmap[q]) for p, q in rule.cut_pp),
        cut_attr_elems=frozenset(idmap[x] for x in rule.cut_attr_elems),
        new_nodes=frozenset(idmap[x] for x in rule.new_nodes),
        new_ports=frozenset(idmap[x] for x in rule.new_ports),
        new_pn=frozenset((idmap[p], idmap[n]) for p, n in rule.new_pn),
        new_pp=frozenset((idmap[p], idmap[q]) for p, q in rule.new_pp),
        new_attr_elems=frozenset(idmap[x] for x in rule.new_attr_elems),
    )
    node_map = {n: idmap[n] for n in rule.lhs.nodes | rule.rhs.nodes}
    port_map = {p: idmap[p] for p in rule.lhs.ports | rule.rhs.ports}
    return RuleVariant(rule=renamed, tag=tag, node_map=node_map,
                       port_map=port_map, var_map=varmap)


# ---------------------------------------------------------------------------
# validity

def validate_rule(rule: EsrRule) -> list[str]:
    """Check the labeling constraints; returns human-readable violations."""
    out = []
    for v in validate_graph(rule.lhs):
        out.append(f"lhs is not a graph: {v}")
    for v in validate_graph(rule.rhs):
        out.append(f"rhs is not a graph: {v}")

    l, r = rule.lhs, rule.rhs
    if not rule.cut_nodes <= l.nodes or not rule.cut_ports <= l.ports:
        out.append("cut labels mention unknown lhs elements")
    if not rule.cut_pn <= l.pn or not rule.cut_pp <= l.pp:
        out.append("cut pair labels mention unknown lhs pairs")
    if not rule.cut_attr_elems <= l.elements():
        out.append("cut attr labels mention unknown lhs elements")
    if not rule.new_nodes <= r.nodes or not rule.new_ports <= r.ports:
        out.append("new labels mention unknown rhs elements")
    if not rule.new_pn <= r.pn or not rule.new_pp <= r.pp:
        out.append("new pair labels mention unknown rhs pairs")
    if not rule.new_attr_elems <= r.elements():
        out.append("new attr labels mention unknown rhs elements")
    if out:
        return out

    for p, n in l.pn:
        if (n in rule.cut_nodes or p in rule.cut_ports) and (p, n) not in rule.cut_pn:
            out.append(f"(1) pn pair ({p}, {n}) touches a cut element but is labeled env")
    for p, q in l.pp:
        if (p in rule.cut_ports or q in rule.cut_ports) and _norm_pair(p, q) not in rule.cut_pp:
            out.append(f"(2) pp pair ({p}, {q}) touches a cut port but is labeled env")
    for x in sorted(rule.cut_nodes | rule.cut_ports):
        if x not in rule.cut_attr_elems:
            out.append(f"(3) attr entry of cut element {x} is not labeled cut")

    if not rule.env_nodes_r <= rule.env_nodes_l:
        out.append("rhs env nodes are not a subset of lhs env nodes")
    if not rule.env_ports_r <= rule.env_ports_l:
        out.append("rhs env ports are not a subset of lhs env ports")
    clash = (rule.new_nodes | rule.new_ports) & l.elements()
    if clash:
        out.append(f"new rhs identifiers reuse lhs identifiers: {sorted(clash)}")

    env_pn_l, env_pp_l = rule.env_pn_l, rule.env_pp_l
    for p, n in r.pn:
        is_env = (p, n) in rule.env_pn_r
        should = p in rule.env_ports_r and n in rule.env_nodes_r and (p, n) in env_pn_l
        if is_env != should:
            out.append(f"(4) pn pair ({p}, {n}) has the wrong env/new label")
    for p, q in r.pp:
        is_env = _norm_pair(p, q) in rule.env_pp_r
        should = (p in rule.env_ports_r and q in rule.env_ports_r
                  and _norm_pair(p, q) in env_pp_l)
        if is_env != should:
            out.append(f"(5) pp pair ({p}, {q}) has the wrong env/new label")

    # (6) together with the derived characterization: an rhs entry is new
    # iff the element is new or its lhs entry was cut; env entries must
    # equal the lhs env entry.
    for x in sorted(r.elements()):
        is_new_elem = x in rule.new_nodes or x in rule.new_ports
        entry_new = x in rule.new_attr_elems
        if is_new_elem:
            if not entry_new:
                out.append(f"(6) new element {x} must carry a new attr entry")
            continue
        lhs_cut_entry = x in rule.cut_attr_elems
        if entry_new != lhs_cut_entry:
            out.append(f"(6) env element {x}: rhs entry must be new iff lhs entry is cut")
        if not entry_new and r.attrs[x] != l.attrs[x]:
            out.append(f"(6) env attr entry of {x} differs from its lhs env entry")

    missing = rule.rhs_vars() - rule.lhs_vars()
    if missing:
        out.append(f"rhs variables not bound by the lhs: {sorted(missing)}")
    return out


# ---------------------------------------------------------------------------
# automorphisms (variables are renameable; ground values must match)

@dataclass(frozen=True)
class Automorphism:
    node_map: dict
    port_map: dict
    var_map: dict

    def image(self, x, *, is_node: bool):
        return self.node_map[x] if is_node else self.port_map[x]

    def key(self):
        return (tuple(sorted(self.node_map.items())),
                tuple(sorted(self.port_map.items())),
                tuple(sorted(self.var_map.items())))


def _side_index(g: Pregraph):
    port_node = {}
    node_ports = {n: [] for n in g.nodes}
    for p, n in g.pn:
        port_node[p] = n
        node_ports[n].append(p)
    partner = {}
    for p, q in g.pp:
        partner[p] = q
        partner[q] = p
    return port_node, {n: sorted(ps) for n, ps in node_ports.items()}, partner


def iter_automorphisms(g: Pregraph, forced: Optional[dict] = None,
                       seed_vars: Optional[dict] = None,
                       ) -> Iterator[Automorphism]:
    """All structure automorphisms of a rule side.

    Attribute term sets must correspond under a consistent variable
    renaming; ground constants must match exactly.  ``forced`` pins chosen
    element images beforehand (used for interchangeability probes) and
    ``seed_vars`` pre-commits part of the variable renaming.
    """
    port_node, node_ports, partner = _side_index(g)
    elems = sorted(g.nodes) + sorted(g.ports)
    deg = {}
    for x in g.nodes:
        deg[x] = ("n", len(node_ports[x]), len(g.attrs[x]))
    for p in g.ports:
        deg[p] = ("p", p in port_node, p in partner, len(g.attrs[p]))

    order = sorted(g.nodes, key=lambda n: (-len(node_ports[n]), n))
    seen_o = set(order)
    queue = list(order)
    while queue:
        n = queue.pop(0)
        for p in node_ports.get(n, []):
            if p not in seen_o:
                order.append(p)
                seen_o.add(p)
                q = partner.get(p)
                if q is not None and q not in seen_o:
                    order.append(q)
                    seen_o.add(q)
                    qn = port_node.get(q)
                    if qn is not None and qn not in seen_o:
                        order.append(qn)
                        seen_o.add(qn)
                        queue.append(qn)
    for x in elems:
        if x not in seen_o:
            order.append(x)
            seen_o.add(x)

    assigned = {}
    used = set()

    def candidates(x):
        if forced and x in forced:
            return [forced[x]]
        if x in g.nodes:
            for p in node_ports[x]:
                if p in assigned:
                    img = port_node.get(assigned[p])
                    return [] if img is None else [img]
            return sorted(g.nodes)
        n = port_node.get(x)
        if n is not None and n in assigned:
            return node_ports[assigned[n]]
        q = partner.get(x)
        if q is not None and q in assigned:
            img = partner.get(assigned[q])
            return [] if img is None else [img]
        return sorted(g.ports)

    def consistent(x, y):
        if deg[x] != deg[y]:
            return False
        if x in g.nodes:
            for p in node_ports[x]:
                if p in assigned and port_node.get(assigned[p]) != y:
                    return False
        else:
            n = port_node.get(x)
            if n is not None and n in assigned and port_node.get(y) != assigned[n]:
                return False
            if n is None and y in port_node:
                return False
            q = partner.get(x)
            if q is not None and q in assigned and partner.get(y) != assigned[q]:
                return False
            if q is None and y in partner:
                return False
        return True

    def search(i, fwd, bwd):
        if i == len(order):
            yield Automorphism(
                node_map={n: assigned[n] for n in g.nodes},
                port_map={p: assigned[p] for p in g.ports},
                var_map=dict(fwd),
            )
            return
        x = order[i]
        for y in candidates(x):
            if y in used or not consistent(x, y):
                continue
            for f2, b2 in unify_attr_sets(g.attrs[x], g.attrs[y], fwd, bwd):
                assigned[x] = y
                used.add(y)
                yield from search(i + 1, f2, b2)
                del assigned[x]
                used.discard(y)
        return

    fwd0 = dict(seed_vars or {})
    bwd0 = {v: k for k, v in fwd0.items()}
    yield from search(0, fwd0, bwd0)


def enumerate_automorphisms(g: Pregraph | GraphWitness) -> list[Automorphism]:
    if isinstance(g, GraphWitness):
        g = g.pregraph
    return list(iter_automorphisms(g))


# ---------------------------------------------------------------------------
# symmetry condition

@dataclass
class SymmetryResult:
    ok: bool
    total: int                      # number of lhs automorphisms inspected
    pairs: list                     # capped list of (lhs auto, rhs auto) pairs
    failed: Optional[Automorphism]  # lhs automorphism with no rhs partner

    def __bool__(self):
        return self.ok


def check_symmetry_condition(rule: EsrRule) -> SymmetryResult:
    """Every lhs automorphism extends to an rhs automorphism agreeing on
    the rhs environment and sharing the attribute renaming."""
    if "symmetry" in rule._cache:
        return rule._cache["symmetry"]
    env_nodes = rule.env_nodes_r
    env_ports = rule.env_ports_r
    pairs = []
    total = 0
    result = None
    for h in iter_automorphisms(rule.lhs):
        total += 1
        forced = {x: h.node_map[x] for x in env_nodes}
        forced.update({x: h.port_map[x] for x in env_ports})
        partner = next(iter_automorphisms(rule.rhs, forced=forced,
                                          seed_vars=h.var_map), None)
        if partner is None:
            result = SymmetryResult(ok=False, total=total, pairs=pairs, failed=h)
            break
        if len(pairs) < SYMMETRY_WITNESS_CAP:
            pairs.append((h, partner))
    if result is None:
        result = SymmetryResult(ok=True, total=total, pairs=pairs, failed=None)
    rule._cache["symmetry"] = result
    return result


def interchangeable_node_classes(rule: EsrRule) -> list[frozenset]:
    """Partition of lhs nodes where u, v share a class iff some automorphism
    swaps u and v while fixing every other node (ports may move).

    Used by the matcher to enumerate matches up to automorphism without
    walking whole automorphism orbits.
    """
    if "interchange" in rule._cache:
        return rule._cache["interchange"]
    nodes = sorted(rule.lhs.nodes)
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, u in enumerate(nodes):
        for v in nodes[i + 1:]:
            if find(u) == find(v):
                continue
            forced = {w: w for w in nodes if w not in (u, v)}
            forced[u], forced[v] = v, u
            if next(iter_automorphisms(rule.lhs, forced=forced), None) is not None:
                parent[max(find(u), find(v))] = min(find(u), find(v))
    groups = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    classes = sorted((frozenset(v) for v in groups.values()), key=min)
    rule._cache["interchange"] = classes
    return classes


# ---------------------------------------------------------------------------
# parallel safety, compatibility, conflict freedom

def check_parallel_safety(rule: EsrRule) -> bool:
    """No new rhs pp pair may join two environment ports."""
    env = rule.env_ports_l
    return not any(p in env and q in env for p, q in rule.new_pp)


@dataclass
class CompatResult:
    ok: bool
    overlap: Optional[dict]     # lhs1 element -> lhs2 element gluing
    reason: str = ""

    def __bool__(self):
        return self.ok


def _glue_closure(r1: EsrRule, r2: EsrRule, seed: tuple) -> Optional[dict]:
    """Close a single gluing under the correspondences forced by the graph
    conditions (shared pp partners and pn nodes must glue too).

    Returns the gluing as a partial injective map lhs1 -> lhs2, or None
    when the closure is inconsistent (no host graph realizes it).
    """
    pn1, _, partner1 = _side_index(r1.lhs)
    pn2, _, partner2 = _side_index(r2.lhs)
    fwd, bwd = {}, {}
    work = [seed]
    while work:
        a, b = work.pop()
        if fwd.get(a, b) != b or bwd.get(b, a) != a:
            return None
        if a in fwd:
            continue
        a_is_node = a in r1.lhs.nodes
        b_is_node = b in r2.lhs.nodes
        if a_is_node != b_is_node:
            return None
        fwd[a], bwd[b] = b, a
        if not a_is_node:
            qa, qb = partner1.get(a), partner2.get(b)
            if qa is not None and qb is not None:
                work.append((qa, qb))
            na, nb = pn1.get(a), pn2.get(b)
            if na is not None and nb is not None:
                work.append((na, nb))
    return fwd


def check_compatibility(r1: EsrRule, r2: EsrRule) -> CompatResult:
    """Bounded overlap search for environment/cut conflicts.

    Incompatibility needs a host in which one match retains an element
    (rhs environment) that the other match cuts.  Every such host contains
    the closure of a single element gluing, so it suffices to seed the
    overlap search with each (retained, cut) element pair; attribute
    patterns never block a gluing because a host element may carry the
    union of both attribute sets.
    """
    def conflicts(ra: EsrRule, rb: EsrRule, swapped: bool):
        seeds = [(x, y) for x in sorted(ra.env_nodes_r) for y in sorted(rb.cut_nodes)]
        seeds += [(x, y) for x in sorted(ra.env_ports_r) for y in sorted(rb.cut_ports)]
        for x, y in seeds:
            glue = _glue_closure(ra, rb, (x, y))
            if glue is not None:
                if swapped:
                    glue = {v: k for k, v in glue.items()}
                return CompatResult(
                    ok=False, overlap=glue,
                    reason=f"{x} is kept by {ra.name} but cut by {rb.name}")
        return None

    hit = conflicts(r1, r2, swapped=False) or conflicts(r2, r1, swapped=True)
    return hit if hit is not None else CompatResult(ok=True, overlap=None)


@dataclass
class ConflictFreeResult:
    ok: bool
    failing_pair: Optional[tuple]   # (name1, name2)
    detail: Optional[CompatResult]

    def __bool__(self):
        return self.ok


def check_conflict_free(rules: Iterable[EsrRule]) -> ConflictFreeResult:
    """Pairwise compatibility, including each rule against its own variants
    (overlapping self-application is the primary use case)."""
    rules = list(rules)
    for i, r1 in enumerate(rules):
        for r2 in rules[i:]:
            res = check_compatibility(r1, r2)
            if not res.ok:
                return ConflictFreeResult(False, (r1.name, r2.name), res)
    return ConflictFreeResult(True, None, None)


def analysis_report(rules: Iterable[EsrRule]) -> dict:
    """JSON-ready summary used by the CLI `analyze` subcommand."""
    rules = list(rules)
    per_rule = {}
    for r in rules:
        violations = validate_rule(r)
        entry = {"valid": not violations}
        if violations:
            entry["violations"] = violations
            entry["symmetry"] = None
            entry["parallel_safe"] = None
        else:
            entry["symmetry"] = bool(check_symmetry_condition(r))
            entry["parallel_safe"] = check_parallel_safety(r)
        per_rule[r.name] = entry
    cf = check_conflict_free([r for r in rules if not validate_rule(r)])
    return {
        "rules": per_rule,
        "conflict_free": cf.ok,
        "failing_pair": list(cf.failing_pair) if cf.failing_pair else None,
    }
