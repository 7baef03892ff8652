"""Built-in rules and example graphs: triangle subdivision, the Koch
snowflake, a Moore-neighborhood game-of-life system, a class-tagged mesh
refinement trio, plus the small hosts used throughout the test suite.

Figure-only structures that cannot be recovered from the sources are
reconstructed and documented as interpretive where they appear.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .attrs import Term
from .pregraph import Pregraph, pregraph
from .rules import EsrRule

F = Fraction


def _v(name: str) -> Term:
    return ("var", name)


def _c(value) -> Term:
    if isinstance(value, (int, float)):
        return ("const", float(value))
    return ("const", value)


def _half_sum(a: str, b: str) -> Term:
    return ("scale", F(1, 2), ("add", _v(a), _v(b)))


# ---------------------------------------------------------------------------
# triangle subdivision (one triangle becomes four)

_TRIANGLE_PN = [("a1", "alpha"), ("a2", "alpha"), ("b1", "beta"), ("b2", "beta"),
                ("g1", "gamma"), ("g2", "gamma")]
_TRIANGLE_CUT_PP = [("a2", "b1"), ("b2", "g1"), ("g2", "a1")]
_SUBDIV_NEW_PN = [("u1", "U"), ("u2", "U"), ("u3", "U"), ("u4", "U"),
                  ("v1", "V"), ("v2", "V"), ("v3", "V"), ("v4", "V"),
                  ("w1", "W"), ("w2", "W"), ("w3", "W"), ("w4", "W")]
_SUBDIV_NEW_PP = [("a1", "w2"), ("a2", "u1"), ("b1", "u2"), ("b2", "v1"),
                  ("g1", "v2"), ("g2", "w1"),
                  ("u3", "w3"), ("u4", "v4"), ("w4", "v3")]
_LHS_PORTS = ["a1", "a2", "b1", "b2", "g1", "g2"]
_NEW_PORTS = ["u1", "u2", "u3", "u4", "v1", "v2", "v3", "v4", "w1", "w2", "w3", "w4"]

# edge labels that kill all six triangle automorphisms, arranged so each
# subdivided triangle carries the same labeling pattern again
_DISTINGUISHING = {"a1": 3.0, "a2": 1.0, "b1": 1.0, "b2": 2.0, "g1": 2.0, "g2": 3.0,
                   "u1": 1.0, "u2": 1.0, "v1": 2.0, "v2": 2.0, "w1": 3.0, "w2": 3.0,
                   "u3": 2.0, "w3": 2.0, "u4": 3.0, "v4": 3.0, "w4": 1.0, "v3": 1.0}


def _subdivision_rule(name: str, port_attrs: dict, node_attrs: dict,
                      mid_attrs: dict) -> EsrRule:
    lhs = pregraph(
        nodes=["alpha", "beta", "gamma"], ports=_LHS_PORTS,
        pn=_TRIANGLE_PN, pp=_TRIANGLE_CUT_PP,
        attrs={**{p: port_attrs.get(p, ()) for p in _LHS_PORTS}, **node_attrs},
    )
    rhs = pregraph(
        nodes=["U", "V", "W"], ports=_LHS_PORTS + _NEW_PORTS,
        pn=_SUBDIV_NEW_PN, pp=_SUBDIV_NEW_PP,
        attrs={**{p: port_attrs.get(p, ()) for p in _LHS_PORTS + _NEW_PORTS},
               **mid_attrs},
    )
    return EsrRule(
        name=name, lhs=lhs, rhs=rhs,
        cut_pp=frozenset(_TRIANGLE_CUT_PP),
        new_nodes=frozenset(["U", "V", "W"]),
        new_ports=frozenset(_NEW_PORTS),
        new_pn=frozenset(_SUBDIV_NEW_PN),
        new_pp=frozenset(_SUBDIV_NEW_PP),
        new_attr_elems=frozenset(["U", "V", "W"] + _NEW_PORTS),
    )


def rule_rt() -> EsrRule:
    """Unattributed triangle-to-four-triangles rule."""
    return _subdivision_rule("R_T", {}, {}, {"U": (), "V": (), "W": ()})


def rule_rt_attributed() -> EsrRule:
    """Triangle subdivision with distinguishing edge labels 1, 2, 3."""
    tags = {p: frozenset([_c(v)]) for p, v in _DISTINGUISHING.items()}
    return _subdivision_rule("R_T_attr", tags, {}, {"U": (), "V": (), "W": ()})


def rule_rt_symmetry_broken() -> EsrRule:
    """R_T with one new node singled out by an attribute; the left-hand
    side keeps its six automorphisms but the right-hand side cannot follow
    them, so the symmetry condition fails (synthetic)."""
    r = _subdivision_rule("R_T_broken", {}, {},
                          {"U": frozenset([_c("special")]), "V": (), "W": ()})
    return r


def _mesh_rule(name: str, tag: str) -> EsrRule:
    tags = {p: frozenset([_c(tag)]) for p in _LHS_PORTS + _NEW_PORTS}
    node_attrs = {"alpha": frozenset([_v("a")]), "beta": frozenset([_v("b")]),
                  "gamma": frozenset([_v("c")])}
    mids = {"U": frozenset([_half_sum("a", "b")]),
            "V": frozenset([_half_sum("b", "c")]),
            "W": frozenset([_half_sum("c", "a")])}
    return _subdivision_rule(name, tags, node_attrs, mids)


def rules_mesh() -> list[EsrRule]:
    """Refinement trio: one subdivision rule per triangle class tag.

    The published mesh figure is image-only; this reconstruction tags the
    six ports of every triangle with the triangle's class and lets the
    quotient merge the duplicated edge midpoints of neighboring triangles.
    New nodes receive averaged coordinates.
    """
    return [_mesh_rule("R'_T", "t"), _mesh_rule("R_U", "u"), _mesh_rule("R_V", "v")]


# ---------------------------------------------------------------------------
# triangle hosts

def gen_triangle_s() -> Pregraph:
    """The 3-node triangle that admits six subdivision matches."""
    return pregraph(
        nodes=["B", "C", "E"],
        ports=["b1", "b2", "c1", "c2", "e1", "e2"],
        pn=[("b1", "B"), ("b2", "B"), ("c1", "C"), ("c2", "C"),
            ("e1", "E"), ("e2", "E")],
        pp=[("e2", "b1"), ("b2", "c1"), ("c2", "e1")],
    )


_S_TAGS = {"e1": 3.0, "e2": 1.0, "b1": 1.0, "b2": 2.0, "c1": 2.0, "c2": 3.0}


def gen_triangle_s_attributed() -> Pregraph:
    """Triangle s with the distinguishing port attributes 1, 2, 3."""
    g = gen_triangle_s()
    attrs = dict(g.attrs)
    for p, tag in _S_TAGS.items():
        attrs[p] = frozenset([float(tag)])
    return pregraph(nodes=g.nodes, ports=g.ports, pn=g.pn, pp=g.pp, attrs=attrs)


def two_triangle_host() -> Pregraph:
    """Two triangles sharing the edge between B and C (ports b2, c1)."""
    return pregraph(
        nodes=["B", "C", "D", "E"],
        ports=["b1", "b2", "b3", "c1", "c2", "c3", "d1", "d2", "e1", "e2"],
        pn=[("b1", "B"), ("b2", "B"), ("b3", "B"),
            ("c1", "C"), ("c2", "C"), ("c3", "C"),
            ("d1", "D"), ("d2", "D"), ("e1", "E"), ("e2", "E")],
        pp=[("e2", "b1"), ("b2", "c1"), ("c2", "e1"), ("b3", "d2"), ("d1", "c3")],
    )


def match1_host() -> Pregraph:
    """Two edge-labeled triangles overlapping on node C only, into which
    the attributed subdivision pattern matches exactly twice
    (reconstruction of an image-only figure)."""
    tags = {"e1": 3.0, "e2": 1.0, "b1": 1.0, "b2": 2.0, "c1": 2.0, "c2": 3.0,
            "c3": 3.0, "c4": 1.0, "d1": 1.0, "d2": 2.0, "f1": 2.0, "f2": 3.0}
    return pregraph(
        nodes=["B", "C", "D", "E", "F"],
        ports=sorted(tags),
        pn=[("b1", "B"), ("b2", "B"), ("c1", "C"), ("c2", "C"), ("c3", "C"),
            ("c4", "C"), ("d1", "D"), ("d2", "D"), ("e1", "E"), ("e2", "E"),
            ("f1", "F"), ("f2", "F")],
        pp=[("e2", "b1"), ("b2", "c1"), ("c2", "e1"),
            ("c4", "d1"), ("d2", "f1"), ("f2", "c3")],
        attrs={p: frozenset([v]) for p, v in tags.items()},
    )


# ---------------------------------------------------------------------------
# Koch snowflake

def rule_koch() -> EsrRule:
    """Segment division rule: a-[+]--[-]-b becomes a path a-i-j-k-b with
    i = 2/3 a + 1/3 b,  j = (a+b)/2 + sqrt(3)/6 * perp(b-a),  k = 1/3 a + 2/3 b.
    """
    lhs = pregraph(
        nodes=["a", "b"], ports=["pa", "pb"],
        pn=[("pa", "a"), ("pb", "b")], pp=[("pa", "pb")],
        attrs={"a": [_v("a")], "b": [_v("b")],
               "pa": [_c("+")], "pb": [_c("-")]},
    )
    term_i = ("add", ("scale", F(2, 3), _v("a")), ("scale", F(1, 3), _v("b")))
    term_j = ("add", _half_sum("a", "b"),
              ("scale", F(1, 6), ("mul", ("sqrt", 3.0),
                                  ("perp", ("sub", _v("b"), _v("a"))))))
    term_k = ("add", ("scale", F(1, 3), _v("a")), ("scale", F(2, 3), _v("b")))
    new_pn = [("i1", "i"), ("i2", "i"), ("j1", "j"), ("j2", "j"),
              ("k1", "k"), ("k2", "k")]
    new_pp = [("pa", "i1"), ("i2", "j1"), ("j2", "k1"), ("k2", "pb")]
    rhs = pregraph(
        nodes=["i", "j", "k"], ports=["pa", "pb", "i1", "i2", "j1", "j2", "k1", "k2"],
        pn=new_pn, pp=new_pp,
        attrs={"i": [term_i], "j": [term_j], "k": [term_k],
               "pa": [_c("+")], "pb": [_c("-")],
               "i1": [_c("-")], "i2": [_c("+")], "j1": [_c("-")], "j2": [_c("+")],
               "k1": [_c("-")], "k2": [_c("+")]},
    )
    return EsrRule(
        name="koch", lhs=lhs, rhs=rhs,
        cut_pp=frozenset([("pa", "pb")]),
        new_nodes=frozenset(["i", "j", "k"]),
        new_ports=frozenset(["i1", "i2", "j1", "j2", "k1", "k2"]),
        new_pn=frozenset(new_pn), new_pp=frozenset(new_pp),
        new_attr_elems=frozenset(["i", "j", "k", "i1", "i2", "j1", "j2", "k1", "k2"]),
    )


def gen_koch_init() -> Pregraph:
    """Initial triangle with vertices (-1,0), (0,sqrt 2), (1,0); every port
    pair alternates the +/- distinguishing tags."""
    return pregraph(
        nodes=["1", "2", "3"],
        ports=["p1", "q1", "p2", "q2", "p3", "q3"],
        pn=[("p1", "1"), ("q1", "1"), ("p2", "2"), ("q2", "2"),
            ("p3", "3"), ("q3", "3")],
        pp=[("p1", "q2"), ("p2", "q3"), ("p3", "q1")],
        attrs={"1": [(-1.0, 0.0)], "2": [(0.0, math.sqrt(2.0))], "3": [(1.0, 0.0)],
               "p1": ["-"], "p2": ["-"], "p3": ["-"],
               "q1": ["+"], "q2": ["+"], "q3": ["+"]},
    )


# ---------------------------------------------------------------------------
# game of life on a Moore-neighborhood grid

_NEIGHBORS = "abcdefgh"
_DIRECTIONS = ("e", "w", "n", "s", "ne", "nw", "se", "sw")


def rule_gol() -> EsrRule:
    """Synchronous game-of-life update: the star pattern reads the eight
    neighbor states and recomputes the center state
    (sum =?= 3) + (x =?= 1) * (sum =?= 2)."""
    nodes = ["i"] + list(_NEIGHBORS)
    center_ports = [f"i{k}" for k in range(1, 9)]
    arm_ports = [q + "1" for q in _NEIGHBORS]
    pn = [(f"i{k}", "i") for k in range(1, 9)] + [(q + "1", q) for q in _NEIGHBORS]
    pp = [(f"i{k}", q + "1") for k, q in zip(range(1, 9), _NEIGHBORS)]
    attrs = {"i": [_v("xi")]}
    attrs.update({q: [_v("y" + q)] for q in _NEIGHBORS})
    lhs = pregraph(nodes=nodes, ports=center_ports + arm_ports, pn=pn, pp=pp,
                   attrs=attrs)
    total = _v("ya")
    for q in _NEIGHBORS[1:]:
        total = ("add", total, _v("y" + q))
    formula = ("add", ("eq", total, _c(3)),
               ("mul", ("eq", _v("xi"), _c(1)), ("eq", total, _c(2))))
    rhs = pregraph(nodes=["i"], attrs={"i": [formula]})
    return EsrRule(
        name="game_of_life", lhs=lhs, rhs=rhs,
        cut_attr_elems=frozenset(["i"]),
        new_attr_elems=frozenset(["i"]),
    )


def gen_moore_grid(rows: int, cols: int, fill=(0.0,), *, torus: bool = False,
                   values: dict | None = None) -> Pregraph:
    """Bounded grid of cells with eight direction-tagged ports each.

    Boundary cells simply lack outward links; ``torus`` wraps the indices
    instead (an extension, not part of the source systems).  ``values``
    overrides the fill state per (row, col) cell.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be at least 1")
    values = values or {}

    def node(r, c):
        return f"m{r:02d}_{c:02d}"

    def port(d, r, c):
        return f"{d}_{r:02d}_{c:02d}"

    nodes, ports, pn, pp = [], [], [], []
    attrs = {}
    for r in range(rows):
        for c in range(cols):
            n = node(r, c)
            nodes.append(n)
            cell = values.get((r, c), fill)
            attrs[n] = frozenset(float(x) for x in cell)
            for d in _DIRECTIONS:
                p = port(d, r, c)
                ports.append(p)
                pn.append((p, n))
                attrs[p] = frozenset([d])

    def link(d1, r1, c1, d2, r2, c2):
        if torus:
            r2, c2 = r2 % rows, c2 % cols
        elif not (0 <= r2 < rows and 0 <= c2 < cols):
            return
        pp.append((port(d1, r1, c1), port(d2, r2, c2)))

    for r in range(rows):
        for c in range(cols):
            link("e", r, c, "w", r, c + 1)
            link("s", r, c, "n", r + 1, c)
            link("se", r, c, "nw", r + 1, c + 1)
            link("sw", r, c, "ne", r + 1, c - 1)
    return pregraph(nodes=nodes, ports=ports, pn=pn, pp=pp, attrs=attrs)


def gol_grid1() -> Pregraph:
    """8x8 grid whose centre holds the three-cells-plus-indeterminate
    configuration that settles into an all-determinate block."""
    alive = {(3, 3): (1.0,), (3, 4): (1.0,), (4, 4): (1.0,), (4, 3): (0.0, 1.0)}
    return gen_moore_grid(8, 8, values=alive)


def gol_grid2() -> Pregraph:
    """8x8 grid whose centre holds the configuration whose fixed point
    keeps exactly four indeterminate cells."""
    alive = {(3, 3): (1.0,), (4, 3): (0.0, 1.0), (4, 4): (1.0,)}
    return gen_moore_grid(8, 8, values=alive)


# ---------------------------------------------------------------------------
# mesh refinement host

def gen_mesh_init() -> Pregraph:
    """Small triangulated patch: a triangle split into four, with class
    tags t/u/v on the triangles and coordinates on the nodes
    (reconstruction of an image-only figure)."""
    s3 = math.sqrt(3.0)
    coords = {"A": (0.0, 0.0), "B": (4.0, 0.0), "C": (2.0, 2.0 * s3),
              "D": (2.0, 0.0), "E": (3.0, s3), "F": (1.0, s3)}
    # triangle -> class: ADF: t, DBE: u, FEC: v, DEF: t
    edges = {
        ("A", "D"): {"t"}, ("D", "F"): {"t"}, ("F", "A"): {"t"},
        ("D", "B"): {"u"}, ("B", "E"): {"u"}, ("E", "D"): {"u", "t"},
        ("F", "E"): {"v", "t"}, ("E", "C"): {"v"}, ("C", "F"): {"v"},
    }
    nodes = sorted(coords)
    ports, pn, pp = [], [], []
    attrs: dict = {n: frozenset([coords[n]]) for n in nodes}
    for (x, y), tags in sorted(edges.items()):
        px, py = f"{x}_{x.lower()}{y.lower()}", f"{y}_{x.lower()}{y.lower()}"
        ports += [px, py]
        pn += [(px, x), (py, y)]
        pp.append((px, py))
        attrs[px] = frozenset(tags)
        attrs[py] = frozenset(tags)
    return pregraph(nodes=nodes, ports=ports, pn=pn, pp=pp, attrs=attrs)


# ---------------------------------------------------------------------------
# toy rule and hosts for well-behavedness

def rule_toy() -> EsrRule:
    """Two tagged free ports get linked by the rewrite.  Applying it where
    the image of the a-port is already linked yields a non-graph
    (reconstruction of an image-only figure)."""
    lhs = pregraph(
        nodes=["alpha", "beta"], ports=["t1", "t2"],
        pn=[("t1", "alpha"), ("t2", "beta")],
        attrs={"t1": [_c("a")], "t2": [_c("b")]},
    )
    rhs = pregraph(
        ports=["t1", "t2"], pp=[("t1", "t2")],
        attrs={"t1": [_c("a")], "t2": [_c("b")]},
    )
    return EsrRule(name="toy", lhs=lhs, rhs=rhs,
                   new_pp=frozenset([("t1", "t2")]))


def toy_host() -> Pregraph:
    """Nodes A, B, C; the port of C is already linked to a second port of B."""
    return pregraph(
        nodes=["A", "B", "C"],
        ports=["pa1", "pb1", "pb2", "pc1"],
        pn=[("pa1", "A"), ("pb1", "B"), ("pb2", "B"), ("pc1", "C")],
        pp=[("pc1", "pb2")],
        attrs={"pa1": ["a"], "pb1": ["b"], "pc1": ["a"]},
    )


# ---------------------------------------------------------------------------
# synthetic incompatible pair

def rules_incompatible_pair() -> list[EsrRule]:
    """Rule A retains a node its pattern shares with rule B's cut node, so
    firing both on one host element is impossible (synthetic analog of an
    image-only example)."""
    keep_lhs = pregraph(nodes=["x"], attrs={"x": [_c("m")]})
    keep_rhs = pregraph(nodes=["x", "yA"], attrs={"x": [_c("m")], "yA": ()})
    rule_keep = EsrRule(name="keep_node", lhs=keep_lhs, rhs=keep_rhs,
                        new_nodes=frozenset(["yA"]),
                        new_attr_elems=frozenset(["yA"]))
    cut_lhs = pregraph(nodes=["z"], attrs={"z": [_c("m")]})
    cut_rhs = pregraph()
    rule_cut = EsrRule(name="cut_node", lhs=cut_lhs, rhs=cut_rhs,
                       cut_nodes=frozenset(["z"]),
                       cut_attr_elems=frozenset(["z"]))
    return [rule_keep, rule_cut]


BUILTIN_RULES = {
    "rt": lambda: [rule_rt()],
    "rt_attributed": lambda: [rule_rt_attributed()],
    "rt_broken": lambda: [rule_rt_symmetry_broken()],
    "koch": lambda: [rule_koch()],
    "gol": lambda: [rule_gol()],
    "mesh": rules_mesh,
    "toy": lambda: [rule_toy()],
    "incompatible": rules_incompatible_pair,
}

BUILTIN_GRAPHS = {
    "triangle-s": gen_triangle_s,
    "triangle-s-attributed": gen_triangle_s_attributed,
    "two-triangles": two_triangle_host,
    "match1": match1_host,
    "koch": gen_koch_init,
    "mesh": gen_mesh_init,
    "toy": toy_host,
    "gol-grid1": gol_grid1,
    "gol-grid2": gol_grid2,
}
