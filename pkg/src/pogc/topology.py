"""Series-parallel decomposition of a netlist into an ordered chain of power sections.

Each domain segment is reduced, by repeated series/parallel edge merging, to a
single two-terminal tree between the port that drives it and the reference.
The port at the far end of the segment (a source, a coupling port, or an open
end) is kept inside the tree as a terminal leaf, so the canonical tree reads
as a ladder: every composite node lists its "head" children first and the
child that continues towards the far end last.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace

from .errors import DisconnectedSegment, MultiPortSegment, NonSeriesParallel, TopologyError
from .netlist import GND, Coupling, Domain, Element, Kind, Netlist, Source

CIRCLED = "①②③④⑤⑥⑦⑧⑨⑩⑪⑫⑬⑭⑮⑯⑰⑱⑲⑳"


def circled(n: int) -> str:
    return CIRCLED[n - 1] if 1 <= n <= len(CIRCLED) else f"({n})"


@dataclass(frozen=True)
class Leaf:
    """Element, source, coupling port or open end, oriented start -> end along the tree."""

    name: str
    role: str  # element | source | coupling | open
    start: str = ""
    end: str = ""
    geom: int = 1  # +1 when (node_plus, node_minus) == (start, end)
    side: str = ""  # coupling port side ('a' or 'b')

    @property
    def key(self) -> str:
        return f"{self.name}.{self.side}" if self.role == "coupling" else self.name

    def reverse(self) -> "Leaf":
        return replace(self, start=self.end, end=self.start, geom=-self.geom)


@dataclass(frozen=True)
class Series:
    children: tuple

    def reverse(self) -> "Series":
        return Series(tuple(c.reverse() for c in reversed(self.children)))


@dataclass(frozen=True)
class Parallel:
    children: tuple

    def reverse(self) -> "Parallel":
        return Parallel(tuple(c.reverse() for c in self.children))


SPNode = Leaf | Series | Parallel


def leaves(node: SPNode):
    if isinstance(node, Leaf):
        yield node
    else:
        for child in node.children:
            yield from leaves(child)


def describe(node: SPNode) -> str:
    """Compact text form, e.g. ``(L3||R5)`` or ``(R9+C9)``."""
    if isinstance(node, Leaf):
        return node.key if node.role != "open" else "open"
    sep = "+" if isinstance(node, Series) else "||"
    return "(" + sep.join(describe(c) for c in node.children) + ")"


@dataclass(frozen=True)
class Terminal:
    role: str  # source | coupling | open
    name: str = ""
    side: str = ""
    node_plus: str = ""
    node_minus: str = ""

    @property
    def key(self) -> str:
        return f"{self.name}.{self.side}" if self.role == "coupling" else (self.name or "open")


@dataclass(frozen=True)
class Segment:
    index: int
    domain: Domain
    left: Terminal
    right: Terminal
    tree: SPNode


@dataclass(frozen=True)
class Link:
    """Coupling between segment ``upstream`` and ``upstream + 1`` as traversed by the chain.

    The effective ratio seen from the upstream side is ``sign * K**power``:
    forward traversal keeps K, a reversed transformer acts with 1/K and a
    reversed gyrator with -K.
    """

    coupling: str
    kind: str
    upstream: int
    reversed: bool
    sign: int
    power: int


@dataclass(frozen=True)
class PowerSection:
    index: int
    segment: int
    left_block: str
    right_block: str
    across_var: str
    through_var: str


@dataclass(frozen=True)
class ChainItem:
    segment: int
    position: str  # series | parallel
    node: SPNode
    section: int  # index of the section on its left

    @property
    def nested(self) -> bool:
        return not isinstance(self.node, Leaf)

    @property
    def label(self) -> str:
        return describe(self.node)


@dataclass(frozen=True)
class SPChain:
    net: Netlist = field(compare=False, repr=False)
    segments: tuple[Segment, ...]
    links: tuple[Link, ...]
    sections: tuple[PowerSection, ...]
    line_assignment: tuple[str, ...]
    notes: tuple[str, ...] = ()

    def items(self) -> list[ChainItem]:
        out = []
        for seg in self.segments:
            out.extend(segment_items(seg, self._first_section(seg.index)))
        return out

    def _first_section(self, seg_index: int) -> int:
        return min(s.index for s in self.sections if s.segment == seg_index)

    def element_leaves(self) -> list[Leaf]:
        return [lf for seg in self.segments for lf in leaves(seg.tree) if lf.role == "element"]

    def signature(self) -> str:
        """Canonical text used to compare decompositions structurally."""
        parts = []
        for seg in self.segments:
            parts.append(f"[{seg.domain.value}:{seg.left.key}>{describe(seg.tree)}]")
        for link in self.links:
            parts.append(f"<{link.coupling}:{link.kind}:{int(link.reversed)}>")
        return "".join(parts)


def spine(tree: SPNode) -> tuple[list[tuple[str, SPNode]], SPNode]:
    """Head items along the ladder spine and the final leaf."""
    items = []
    node = tree
    while not isinstance(node, Leaf):
        position = "series" if isinstance(node, Series) else "parallel"
        *heads, node = node.children
        items.extend((position, h) for h in heads)
    return items, node


def segment_items(seg: Segment, first_section: int) -> list[ChainItem]:
    heads, _ = spine(seg.tree)
    return [ChainItem(seg.index, pos, node, first_section + k) for k, (pos, node) in enumerate(heads)]


# --------------------------------------------------------------------- reduction

@dataclass
class _Edge:
    u: str
    v: str
    tree: SPNode

    def oriented(self, start: str) -> SPNode:
        return self.tree if self.u == start else self.tree.reverse()


def _flatten(kind, children):
    out = []
    for c in children:
        if isinstance(c, kind):
            out.extend(c.children)
        else:
            out.append(c)
    return kind(tuple(out))


def sp_reduce(edges: list[_Edge], s: str, t: str) -> SPNode:
    """Reduce a two-terminal multigraph to one series-parallel tree oriented s -> t."""
    live = {i: e for i, e in enumerate(edges)}
    next_id = len(edges)
    changed = True
    while changed:
        changed = False
        groups: dict[frozenset, list[int]] = defaultdict(list)
        for i, e in live.items():
            groups[frozenset((e.u, e.v))].append(i)
        for ids in groups.values():
            if len(ids) < 2:
                continue
            first = live[ids[0]]
            merged = _flatten(Parallel, [live[i].oriented(first.u) for i in ids])
            for i in ids:
                del live[i]
            live[next_id] = _Edge(first.u, first.v, merged)
            next_id += 1
            changed = True
        incident: dict[str, list[int]] = defaultdict(list)
        for i, e in live.items():
            incident[e.u].append(i)
            incident[e.v].append(i)
        for w in sorted(incident):
            ids = incident[w]
            if w in (s, t) or len(ids) != 2 or any(i not in live for i in ids):
                continue
            e1, e2 = live[ids[0]], live[ids[1]]
            x = e1.v if e1.u == w else e1.u
            y = e2.v if e2.u == w else e2.u
            if x == y:
                names = ", ".join(describe(e.tree) for e in (e1, e2))
                raise DisconnectedSegment(f"{names} form a loop hanging from node {x!r}")
            merged = _flatten(Series, [e1.oriented(x), e2.oriented(w)])
            del live[ids[0]], live[ids[1]]
            live[next_id] = _Edge(x, y, merged)
            next_id += 1
            changed = True
    if len(live) == 1:
        (edge,) = live.values()
        if {edge.u, edge.v} == {s, t}:
            return edge.oriented(s)
    rest = sorted(lf.key for e in live.values() for lf in leaves(e.tree))
    degree: dict[str, int] = defaultdict(int)
    for e in live.values():
        degree[e.u] += 1
        degree[e.v] += 1
    hanging = [w for w, d in degree.items() if d == 1 and w not in (s, t)]
    if hanging:
        raise DisconnectedSegment(f"node {hanging[0]!r} leaves part of the network without a return path",
                                  names=tuple(rest))
    touching = [e for e in live.values() if s in (e.u, e.v) or t in (e.u, e.v)]
    if not touching:
        raise DisconnectedSegment("no element connects the segment ports")
    raise NonSeriesParallel("bridge structure: " + ", ".join(rest), names=tuple(rest))


# ------------------------------------------------------------------ canonical form

def _has_terminal(node: SPNode) -> bool:
    return any(lf.role != "element" for lf in leaves(node))


def _sort_key(net: Netlist):
    def key(node):
        if isinstance(node, Leaf):
            item = net.lookup(node.name)
            rank = 0 if isinstance(item, Element) and item.kind.dynamic else 1
            return (rank, node.key)
        return (2, min(lf.key for lf in leaves(node)))
    return key


def _canonical(node: SPNode, net: Netlist) -> SPNode:
    if isinstance(node, Leaf):
        return node
    kids = [_canonical(c, net) for c in node.children]
    rest = [c for c in kids if _has_terminal(c)]
    heads = [c for c in kids if not _has_terminal(c)]
    if isinstance(node, Parallel):
        heads.sort(key=_sort_key(net))
        if not rest:
            # nested parallel group: its last child closes the sub-ladder
            return Parallel(tuple(heads))
    return type(node)(tuple(heads + rest))


def _close_open_end(tree: SPNode) -> SPNode:
    """Attach an open-end leaf so the ladder always ends in a terminal."""
    open_leaf = Leaf("open", "open")
    if isinstance(tree, Leaf):
        return Parallel((tree, open_leaf))
    if isinstance(tree, Parallel):
        return Parallel(tree.children + (open_leaf,))
    kids = list(tree.children)
    par_idx = [i for i, c in enumerate(kids) if isinstance(c, Parallel)]
    idx = par_idx[-1] if par_idx else len(kids) - 1
    last = kids.pop(idx)
    if isinstance(last, Parallel):
        last = Parallel(last.children + (open_leaf,))
    else:
        last = Parallel((last, open_leaf))
    return Series(tuple(kids) + (last,))


# -------------------------------------------------------------------- chain build

class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _node_id(domain: Domain, node: str) -> str:
    return f"{domain.value}:{node}"


def _segments_of(net: Netlist):
    """Group items by connected component, ignoring the reference nodes."""
    uf = _UnionFind()
    members: list[tuple[str, object, Domain, str, str]] = []
    for e in net.elements:
        members.append(("element", e, e.domain, e.node_plus, e.node_minus))
    for s in net.sources:
        members.append(("source", s, s.domain, s.node_plus, s.node_minus))
    for c in net.couplings:
        members.append(("port", (c, "a"), c.port_a.domain, c.port_a.node_plus, c.port_a.node_minus))
        members.append(("port", (c, "b"), c.port_b.domain, c.port_b.node_plus, c.port_b.node_minus))
    anchor = {}
    for idx, (_, _, dom, n_plus, n_minus) in enumerate(members):
        ends = [_node_id(dom, n) for n in (n_plus, n_minus) if n != GND]
        if not ends:
            raise TopologyError(f"item {idx} connects the reference to itself")
        for node in ends:
            uf.union(ends[0], node)
        anchor[idx] = ends[0]
    groups: dict[str, list] = defaultdict(list)
    for idx, m in enumerate(members):
        groups[uf.find(anchor[idx])].append(m)
    return list(groups.values())


def build_sp_chain(net: Netlist) -> SPChain:
    if not net.elements and not net.sources and not net.couplings:
        return SPChain(net, (), (), (), ())
    if not net.sources:
        raise TopologyError("the netlist has no source to drive the chain")
    groups = _segments_of(net)
    where: dict[str, int] = {}
    for gi, group in enumerate(groups):
        ports = []
        for role, item, *_ in group:
            if role == "source":
                where[item.name] = gi
                ports.append(item.name)
            elif role == "port":
                c, side = item
                where[f"{c.name}.{side}"] = gi
                ports.append(f"{c.name}.{side}")
        if len(ports) > 2:
            raise MultiPortSegment(f"segment has ports {', '.join(ports)}", names=tuple(ports))
        if not ports:
            names = tuple(sorted(item.name for _, item, *_ in group))
            raise DisconnectedSegment(f"{', '.join(names)} not reachable from any port", names=names)

    root = net.sources[0]
    couplings = {c.name: c for c in net.couplings}
    order: list[tuple[int, Terminal]] = []
    links: list[Link] = []
    gi = where[root.name]
    left = Terminal("source", root.name, "", root.node_plus, root.node_minus)
    visited = set()
    while True:
        if gi in visited:
            raise TopologyError("couplings close a loop between segments")
        visited.add(gi)
        order.append((gi, left))
        others = [m for m in groups[gi] if m[0] in ("source", "port")
                  and _terminal_key(m) != left.key]
        if not others:
            break
        role, item, *_ = others[0]
        if role == "source":
            break
        c, side = item
        other_side = "b" if side == "a" else "a"
        port = c.port_b if other_side == "b" else c.port_a
        links.append(Link(c.name, c.kind, len(order) - 1, reversed=(side == "b"),
                          sign=-1 if (side == "b" and c.kind == "gyrator") else 1,
                          power=-1 if (side == "b" and c.kind == "transformer") else 1))
        gi = where[f"{c.name}.{other_side}"]
        left = Terminal("coupling", c.name, other_side, port.node_plus, port.node_minus)
    unvisited = [g for g in range(len(groups)) if g not in visited]
    if unvisited:
        names = tuple(sorted(item.name if not isinstance(item, tuple) else item[0].name
                             for g in unvisited for _, item, *_ in groups[g]))
        raise DisconnectedSegment(f"{', '.join(names)} not connected to the driven chain", names=names)

    segments = []
    for seg_idx, (gi, left) in enumerate(order):
        segments.append(_build_segment(net, groups[gi], seg_idx, left, couplings))
    segments = tuple(segments)
    sections = _sections(segments, tuple(links))
    chain = SPChain(net, segments, tuple(links), sections, ())
    return assign_power_lines(chain)


def _terminal_key(member) -> str:
    role, item, *_ = member
    if role == "source":
        return item.name
    c, side = item
    return f"{c.name}.{side}"


def _build_segment(net, group, seg_idx, left: Terminal, couplings) -> Segment:
    domain = group[0][2]
    edges = []
    right = Terminal("open")
    for role, item, dom, n_plus, n_minus in group:
        if role == "element":
            leaf = Leaf(item.name, "element", n_plus, n_minus, 1)
        else:
            key = _terminal_key((role, item))
            if key == left.key:
                continue
            if role == "source":
                leaf = Leaf(item.name, "source", n_plus, n_minus, 1)
                right = Terminal("source", item.name, "", n_plus, n_minus)
            else:
                c, side = item
                leaf = Leaf(c.name, "coupling", n_plus, n_minus, 1, side)
                right = Terminal("coupling", c.name, side, n_plus, n_minus)
        edges.append(_Edge(n_plus, n_minus, leaf))
    if not edges:
        tree: SPNode = Leaf("open", "open")
    else:
        tree = sp_reduce(edges, left.node_plus, left.node_minus)
        tree = _canonical(tree, net)
        if right.role == "open":
            tree = _canonical(_close_open_end(tree), net)
    return Segment(seg_idx, domain, left, right, tree)


def _sections(segments, links) -> tuple[PowerSection, ...]:
    out = []
    idx = 1
    for seg in segments:
        heads, terminal = spine(seg.tree)
        names = [seg.left.key] + [describe(h) for _, h in heads] + [seg.right.key]
        sym_e, sym_f = seg.domain.across_symbol, seg.domain.through_symbol
        for k in range(len(heads) + 1):
            out.append(PowerSection(idx, seg.index, names[k], names[k + 1],
                                    f"{sym_e}_s{idx}", f"{sym_f}_s{idx}"))
            idx += 1
    return tuple(out)


def summation_node_plan(chain: SPChain) -> list[tuple[int, str, str]]:
    """One (section, line, kind) per element: VKL on the across line for series
    positions, CKL on the through line for parallel ones."""
    plan = []
    for item in chain.items():
        _plan_item(item.position, item.node, item.section, plan)
    return plan


def _plan_item(position, node, section, plan):
    line, kind = ("across", "VKL") if position == "series" else ("through", "CKL")
    plan.append((section, line, kind))
    if isinstance(node, Leaf):
        return
    # inside a nested group the composite's last child needs no node of its own
    inner = node
    while not isinstance(inner, Leaf):
        pos = "series" if isinstance(inner, Series) else "parallel"
        *heads, inner = inner.children
        for h in heads:
            _plan_item(pos, h, section, plan)
    return


def assign_power_lines(chain: SPChain) -> SPChain:
    """Across line on the upper rail in the first segment, swapped after every gyrator."""
    if not chain.segments:
        return chain
    net = chain.net
    notes = list(chain.notes)
    first, last = chain.segments[0], chain.segments[-1]
    start = "upper"
    left_src = net.lookup(first.left.name)
    right_src = net.lookup(last.right.name) if last.right.role == "source" else None
    if (isinstance(left_src, Source) and left_src.kind is Kind.GF
            and isinstance(right_src, Source) and right_src.kind is Kind.GF):
        start = "lower"
        notes.append("input and output generators are both through-type: across line starts on the lower rail")
    lines = [start]
    for link in chain.links:
        prev = lines[-1]
        lines.append(("lower" if prev == "upper" else "upper") if link.kind == "gyrator" else prev)
    return replace(chain, line_assignment=tuple(lines), notes=tuple(dict.fromkeys(notes)))


def coupling_of(chain: SPChain, name: str) -> Coupling:
    return next(c for c in chain.net.couplings if c.name == name)
