"""DOT and SVG exporters.

DOT renders nodes as record shapes whose fields are their ports; ports
not associated to any node become standalone boxes; pp links become
edges.  SVG draws one line segment per pp pair whose two ports are
associated to coordinate-carrying nodes, which is sufficient for the
snowflake and mesh pictures.
"""

from __future__ import annotations

from .attrs import is_number, is_tag, is_vector, value_key
from .pregraph import Pregraph


class MissingCoordinates(ValueError):
    def __init__(self, node: str):
        super().__init__(f"node {node!r} does not carry exactly one vector attribute")
        self.node = node


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _record_escape(s: str) -> str:
    out = s
    for ch in "\\{}|<> ":
        out = out.replace(ch, "\\" + ch)
    return out


def _attr_text(values) -> str:
    parts = []
    for v in sorted(values, key=value_key):
        if is_number(v):
            parts.append(f"{v:g}")
        elif is_tag(v):
            parts.append(v)
        else:
            parts.append(f"({v[0]:g},{v[1]:g})")
    return "{" + ",".join(parts) + "}"


def export_dot(g: Pregraph, name: str = "G") -> str:
    by_node: dict[str, list[str]] = {n: [] for n in sorted(g.nodes)}
    free_ports = []
    seen = set()
    for p, n in sorted(g.pn):
        by_node[n].append(p)
        seen.add(p)
    for p in sorted(g.ports):
        if p not in seen:
            free_ports.append(p)

    lines = [f"graph {_dot_quote(name)} {{", "  node [shape=record];"]
    for n in sorted(g.nodes):
        label = _record_escape(n)
        if g.attrs[n]:
            label += "\\n" + _record_escape(_attr_text(g.attrs[n]))
        fields = "|".join(
            f"<{_record_escape(p)}> {_record_escape(p)}"
            + ("\\n" + _record_escape(_attr_text(g.attrs[p])) if g.attrs[p] else "")
            for p in by_node[n])
        body = f"{{{label}|{{{fields}}}}}" if fields else f"{{{label}}}"
        lines.append(f"  {_dot_quote(n)} [label={_dot_quote(body)}];")
    for p in free_ports:
        label = _record_escape(p)
        if g.attrs[p]:
            label += "\\n" + _record_escape(_attr_text(g.attrs[p]))
        lines.append(f"  {_dot_quote(p)} [shape=box, label={_dot_quote(label)}];")

    anchor = {p: n for p, n in g.pn}
    for a, b in sorted(g.pp):
        ends = []
        for p in (a, b):
            if p in anchor:
                ends.append(f"{_dot_quote(anchor[p])}:{_dot_quote(p)}")
            else:
                ends.append(_dot_quote(p))
        lines.append(f"  {ends[0]} -- {ends[1]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def node_coordinates(g: Pregraph) -> dict:
    coords = {}
    for n in sorted(g.nodes):
        vecs = [v for v in g.attrs[n] if is_vector(v)]
        if len(vecs) != 1:
            raise MissingCoordinates(n)
        coords[n] = vecs[0]
    return coords


def export_svg(g: Pregraph, size: int = 512, margin: float = 0.05) -> str:
    """Line segments between the coordinates of pn-pp-pn connected nodes."""
    coords = node_coordinates(g)
    anchor = {p: n for p, n in g.pn}
    segments = []
    for a, b in sorted(g.pp):
        na, nb = anchor.get(a), anchor.get(b)
        if na is None or nb is None:
            continue
        segments.append((coords[na], coords[nb]))

    xs = [c[0] for c in coords.values()] or [0.0]
    ys = [c[1] for c in coords.values()] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    pad = span * margin
    x0, y0, span = x0 - pad, y0 - pad, span + 2 * pad

    def sx(x):
        return (x - x0) / span * size

    def sy(y):
        # SVG y grows downward
        return size - (y - y0) / span * size

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    for (xa, ya), (xb, yb) in segments:
        lines.append(f'  <line x1="{sx(xa):.3f}" y1="{sy(ya):.3f}" '
                     f'x2="{sx(xb):.3f}" y2="{sy(yb):.3f}" '
                     'stroke="black" stroke-width="1.5"/>')
    for n in sorted(coords):
        x, y = coords[n]
        lines.append(f'  <circle cx="{sx(x):.3f}" cy="{sy(y):.3f}" r="2" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
