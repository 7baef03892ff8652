"""JSON documents for graphs, rules, matches and step reports.

Graph documents carry ground attribute values; rule documents carry
attribute *terms* in an s-expression array syntax plus a part label per
element ("cut"/"env" on the lhs, "new"/"env" on the rhs) and per pn/pp
pair.  Emission is canonical (sorted, two-space indent), so
``emit(parse(text))`` is a normal form and repeated emission is
byte-stable.  Unknown fields are rejected; errors carry the JSON path of
the offending value.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional

from .attrs import Term, is_number, is_tag, is_vector, value_key
from .engine import RunReport, StepResult
from .pregraph import Pregraph, pregraph
from .rules import EsrRule


class ParseError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _expect_keys(obj: dict, path: str, required: tuple, optional: tuple = ()):
    if not isinstance(obj, dict):
        raise ParseError(path, f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ParseError(path, f"unknown fields {sorted(unknown)}")
    for key in required:
        if key not in obj:
            raise ParseError(path, f"missing field {key!r}")


# ---------------------------------------------------------------------------
# values and terms

def value_from_json(obj, path: str):
    if isinstance(obj, bool):
        raise ParseError(path, "booleans are not attribute values")
    if isinstance(obj, (int, float)):
        return float(obj)
    if isinstance(obj, str):
        if not obj:
            raise ParseError(path, "tags must be non-empty")
        return obj
    if isinstance(obj, list) and obj[:1] == ["vec"]:
        if len(obj) != 3 or not all(isinstance(c, (int, float)) and not isinstance(c, bool)
                                    for c in obj[1:]):
            raise ParseError(path, 'vector values look like ["vec", x, y]')
        return (float(obj[1]), float(obj[2]))
    raise ParseError(path, f"not an attribute value: {obj!r}")


def value_to_json(v):
    if is_number(v):
        return int(v) if float(v).is_integer() else v
    if is_tag(v):
        return v
    if is_vector(v):
        return ["vec", value_to_json(v[0]), value_to_json(v[1])]
    raise ValueError(f"not an attribute value: {v!r}")


_TERM_ARITIES = {"add": 2, "sub": 2, "mul": 2, "div": 2, "eq": 2, "vec": 2}


def term_from_json(obj, path: str) -> Term:
    if isinstance(obj, bool):
        raise ParseError(path, "booleans are not terms")
    if isinstance(obj, (int, float)):
        return ("const", float(obj))
    if isinstance(obj, str):
        if not obj:
            raise ParseError(path, "tags must be non-empty")
        return ("const", obj)
    if not isinstance(obj, list) or not obj or not isinstance(obj[0], str):
        raise ParseError(path, f"terms are [op, ...] arrays, got {obj!r}")
    op = obj[0]
    if op == "var":
        if len(obj) != 2 or not isinstance(obj[1], str) or not obj[1]:
            raise ParseError(path, '["var", name] needs a non-empty name')
        return ("var", obj[1])
    if op == "sqrt":
        if len(obj) != 2 or isinstance(obj[1], bool) or not isinstance(obj[1], (int, float)):
            raise ParseError(path, '["sqrt", c] needs a numeric constant')
        return ("sqrt", float(obj[1]))
    if op == "scale":
        if len(obj) != 3 or not isinstance(obj[1], str):
            raise ParseError(path, '["scale", "p/q", term] needs a rational string')
        try:
            q = Fraction(obj[1])
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(path + "[1]", f"bad rational {obj[1]!r}: {exc}") from None
        return ("scale", q, term_from_json(obj[2], f"{path}[2]"))
    if op == "perp":
        if len(obj) != 2:
            raise ParseError(path, '["perp", term] takes one argument')
        return ("perp", term_from_json(obj[1], f"{path}[1]"))
    if op == "vec" and len(obj) == 3 and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in obj[1:]):
        return ("const", (float(obj[1]), float(obj[2])))
    arity = _TERM_ARITIES.get(op)
    if arity is None:
        raise ParseError(path, f"unknown term operator {op!r}")
    if len(obj) != arity + 1:
        raise ParseError(path, f"{op!r} takes {arity} arguments")
    return (op,) + tuple(term_from_json(a, f"{path}[{i + 1}]")
                         for i, a in enumerate(obj[1:]))


def term_to_json(t: Term):
    op = t[0]
    if op == "const":
        v = t[1]
        if is_vector(v):
            return ["vec", value_to_json(v[0]), value_to_json(v[1])]
        return value_to_json(v)
    if op == "var":
        return ["var", t[1]]
    if op == "sqrt":
        return ["sqrt", value_to_json(t[1])]
    if op == "scale":
        return ["scale", str(t[1]), term_to_json(t[2])]
    if op == "perp":
        return ["perp", term_to_json(t[1])]
    return [op, term_to_json(t[1]), term_to_json(t[2])]


# ---------------------------------------------------------------------------
# graph documents

def graph_from_json(obj, path: str = "$") -> Pregraph:
    _expect_keys(obj, path, ("nodes", "ports", "pn", "pp"))
    ids = set()
    attrs = {}
    nodes, ports = [], []
    for kind, sink in (("nodes", nodes), ("ports", ports)):
        arr = obj[kind]
        if not isinstance(arr, list):
            raise ParseError(f"{path}.{kind}", "expected an array")
        for i, entry in enumerate(arr):
            epath = f"{path}.{kind}[{i}]"
            _expect_keys(entry, epath, ("id",), ("attrs",))
            eid = entry["id"]
            if not isinstance(eid, str) or not eid:
                raise ParseError(f"{epath}.id", "identifiers are non-empty strings")
            if eid in ids:
                raise ParseError(f"{epath}.id", f"duplicate identifier {eid!r}")
            ids.add(eid)
            sink.append(eid)
            raw = entry.get("attrs", [])
            if not isinstance(raw, list):
                raise ParseError(f"{epath}.attrs", "expected an array")
            attrs[eid] = frozenset(value_from_json(v, f"{epath}.attrs[{j}]")
                                   for j, v in enumerate(raw))
    pn = _pairs(obj["pn"], f"{path}.pn")
    pp = _pairs(obj["pp"], f"{path}.pp")
    try:
        return pregraph(nodes=nodes, ports=ports, pn=pn, pp=pp, attrs=attrs)
    except ValueError as exc:
        raise ParseError(path, str(exc)) from None


def _pairs(arr, path: str) -> list[tuple[str, str]]:
    if not isinstance(arr, list):
        raise ParseError(path, "expected an array")
    out = []
    for i, pair in enumerate(arr):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(x, str) for x in pair)):
            raise ParseError(f"{path}[{i}]", "pairs look like [\"a\", \"b\"]")
        out.append((pair[0], pair[1]))
    return out


def graph_to_json(g: Pregraph) -> dict:
    def entry(x):
        vals = sorted(g.attrs[x], key=value_key)
        return {"id": x, "attrs": [value_to_json(v) for v in vals]}

    return {
        "nodes": [entry(n) for n in sorted(g.nodes)],
        "ports": [entry(p) for p in sorted(g.ports)],
        "pn": sorted([p, n] for p, n in g.pn),
        "pp": sorted(sorted(pair) for pair in g.pp),
    }


# ---------------------------------------------------------------------------
# rule documents

def _rule_side_from_json(obj, path: str, side: str):
    """Returns (pregraph, marked_nodes, marked_ports, marked_pn, marked_pp,
    marked_attr_elems); 'marked' is cut for the lhs and new for the rhs."""
    mark = "cut" if side == "lhs" else "new"
    _expect_keys(obj, path, ("nodes", "ports", "pn", "pp"))
    ids = set()
    attrs = {}
    nodes, ports = [], []
    marked = {"nodes": set(), "ports": set(), "attr": set()}
    for kind, sink in (("nodes", nodes), ("ports", ports)):
        arr = obj[kind]
        if not isinstance(arr, list):
            raise ParseError(f"{path}.{kind}", "expected an array")
        for i, entry in enumerate(arr):
            epath = f"{path}.{kind}[{i}]"
            _expect_keys(entry, epath, ("id", "part"), ("attrs", "attr_part"))
            eid = entry["id"]
            if not isinstance(eid, str) or not eid:
                raise ParseError(f"{epath}.id", "identifiers are non-empty strings")
            if eid in ids:
                raise ParseError(f"{epath}.id", f"duplicate identifier {eid!r}")
            part = entry["part"]
            if part not in (mark, "env"):
                raise ParseError(f"{epath}.part", f"part must be {mark!r} or 'env'")
            ids.add(eid)
            sink.append(eid)
            if part == mark:
                marked["nodes" if kind == "nodes" else "ports"].add(eid)
            raw = entry.get("attrs", [])
            if not isinstance(raw, list):
                raise ParseError(f"{epath}.attrs", "expected an array")
            attrs[eid] = frozenset(term_from_json(t, f"{epath}.attrs[{j}]")
                                   for j, t in enumerate(raw))
            attr_part = entry.get("attr_part", part)
            if attr_part not in (mark, "env"):
                raise ParseError(f"{epath}.attr_part",
                                 f"attr_part must be {mark!r} or 'env'")
            if attr_part == mark:
                marked["attr"].add(eid)
    pn = _labeled_pairs(obj["pn"], f"{path}.pn", mark)
    pp = _labeled_pairs(obj["pp"], f"{path}.pp", mark)
    try:
        g = pregraph(nodes=nodes, ports=ports,
                     pn=[pair for pair, _ in pn], pp=[pair for pair, _ in pp],
                     attrs=attrs)
    except ValueError as exc:
        raise ParseError(path, str(exc)) from None
    marked_pn = {pair for pair, lab in pn if lab == mark}
    marked_pp = {tuple(sorted(pair)) for pair, lab in pp if lab == mark}
    return g, marked["nodes"], marked["ports"], marked_pn, marked_pp, marked["attr"]


def _labeled_pairs(arr, path: str, mark: str):
    if not isinstance(arr, list):
        raise ParseError(path, "expected an array")
    out = []
    for i, item in enumerate(arr):
        if (not isinstance(item, list) or len(item) != 3
                or not all(isinstance(x, str) for x in item)):
            raise ParseError(f"{path}[{i}]",
                             f'labeled pairs look like ["a", "b", "{mark}"|"env"]')
        a, b, lab = item
        if lab not in (mark, "env"):
            raise ParseError(f"{path}[{i}]", f"label must be {mark!r} or 'env'")
        out.append(((a, b), lab))
    return out


def rule_from_json(obj, path: str = "$") -> EsrRule:
    _expect_keys(obj, path, ("name", "lhs", "rhs"))
    name = obj["name"]
    if not isinstance(name, str) or not name:
        raise ParseError(f"{path}.name", "rule names are non-empty strings")
    lhs, cut_nodes, cut_ports, cut_pn, cut_pp, cut_attr = \
        _rule_side_from_json(obj["lhs"], f"{path}.lhs", "lhs")
    rhs, new_nodes, new_ports, new_pn, new_pp, new_attr = \
        _rule_side_from_json(obj["rhs"], f"{path}.rhs", "rhs")
    return EsrRule(name=name, lhs=lhs, rhs=rhs,
                   cut_nodes=frozenset(cut_nodes), cut_ports=frozenset(cut_ports),
                   cut_pn=frozenset(cut_pn), cut_pp=frozenset(cut_pp),
                   cut_attr_elems=frozenset(cut_attr),
                   new_nodes=frozenset(new_nodes), new_ports=frozenset(new_ports),
                   new_pn=frozenset(new_pn), new_pp=frozenset(new_pp),
                   new_attr_elems=frozenset(new_attr))


def _rule_side_to_json(rule: EsrRule, side: str) -> dict:
    g = rule.lhs if side == "lhs" else rule.rhs
    mark = "cut" if side == "lhs" else "new"
    marked_nodes = rule.cut_nodes if side == "lhs" else rule.new_nodes
    marked_ports = rule.cut_ports if side == "lhs" else rule.new_ports
    marked_pn = rule.cut_pn if side == "lhs" else rule.new_pn
    marked_pp = rule.cut_pp if side == "lhs" else rule.new_pp
    marked_attr = rule.cut_attr_elems if side == "lhs" else rule.new_attr_elems

    def entry(x, marked):
        part = mark if marked else "env"
        attr_part = mark if x in marked_attr else "env"
        out = {"id": x, "part": part,
               "attrs": [term_to_json(t) for t in
                         sorted(g.attrs[x], key=lambda t: repr(t))]}
        if attr_part != part:
            out["attr_part"] = attr_part
        return out

    return {
        "nodes": [entry(n, n in marked_nodes) for n in sorted(g.nodes)],
        "ports": [entry(p, p in marked_ports) for p in sorted(g.ports)],
        "pn": sorted([p, n, mark if (p, n) in marked_pn else "env"]
                     for p, n in g.pn),
        "pp": sorted([pair[0], pair[1], mark if pair in marked_pp else "env"]
                     for pair in g.pp),
    }


def rule_to_json(rule: EsrRule) -> dict:
    return {"name": rule.name,
            "lhs": _rule_side_to_json(rule, "lhs"),
            "rhs": _rule_side_to_json(rule, "rhs")}


def rules_from_json(obj, path: str = "$") -> list[EsrRule]:
    """A rule file is either one rule object or {"rules": [...]}."""
    if isinstance(obj, dict) and "rules" in obj:
        _expect_keys(obj, path, ("rules",))
        if not isinstance(obj["rules"], list):
            raise ParseError(f"{path}.rules", "expected an array")
        out = [rule_from_json(r, f"{path}.rules[{i}]")
               for i, r in enumerate(obj["rules"])]
        names = [r.name for r in out]
        if len(set(names)) != len(names):
            raise ParseError(f"{path}.rules", f"duplicate rule names in {names}")
        return out
    return [rule_from_json(obj, path)]


def rules_to_json(rules: list[EsrRule]) -> dict:
    return {"rules": [rule_to_json(r) for r in rules]}


# ---------------------------------------------------------------------------
# step / run reports

def step_result_to_json(res: StepResult) -> dict:
    out = {
        "is_graph": res.is_graph,
        "result": graph_to_json(res.result),
        "matches": [m.to_json() for m in res.matches_used],
    }
    if res.quotient_map is not None:
        merged = res.quotient_map.merged_classes()
        out["merged"] = {cid: sorted(members) for cid, members in sorted(merged.items())}
    if res.violations:
        out["violations"] = [str(v) for v in res.violations]
    return out


def run_report_to_json(report: RunReport) -> dict:
    return {
        "stop_reason": report.stop_reason,
        "steps": [step_result_to_json(s) for s in report.steps],
        "timings": [round(t, 6) for t in report.timings],
    }


# ---------------------------------------------------------------------------
# text-level helpers

def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def loads(text: str, what: str = "document"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"$ (line {exc.lineno}, column {exc.colno})",
                         f"invalid JSON in {what}: {exc.msg}") from None


def load_graph(text: str) -> Pregraph:
    return graph_from_json(loads(text, "graph document"))


def emit_graph(g: Pregraph) -> str:
    return dumps(graph_to_json(g))


def load_rules(text: str) -> list[EsrRule]:
    return rules_from_json(loads(text, "rule document"))


def emit_rules(rules: list[EsrRule]) -> str:
    return dumps(rules_to_json(rules))
