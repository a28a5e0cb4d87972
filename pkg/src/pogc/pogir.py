"""POG block scheme construction from an SPChain.

Every two-terminal subtree of a segment is driven in one of two ways:

* ``Y`` (admittance causality): it receives its across variable and returns
  its through variable;
* ``Z`` (impedance causality): it receives its through variable and returns
  its across variable.

Integral causality fixes the capacitive-type elements (De) to ``Z`` and the
inductive-type elements (Df) to ``Y``; statics accept both.  A series node in
``Y`` needs exactly one ``Y`` child, a parallel node in ``Z`` exactly one ``Z``
child, and the other two cases need all children alike.  Counting the
admissible assignments bottom-up gives conflicts (zero) and ambiguities (more
than one, which only happens around integrator-free loops) before any block is
drawn.  The chosen assignment then fixes the block configurations of the
series (S-a/S-b/S-c) and parallel (P-a/P-b/P-c) tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import networkx as nx
import sympy as sp

from .errors import CausalityConflict, SignInconsistency
from .netlist import IMPEDANCE_FORM, Element, Kind, Netlist, Source
from .topology import Leaf, Parallel, Series, SPChain, SPNode, describe, leaves, spine, summation_node_plan


# ------------------------------------------------------------------ coefficients

@dataclass(frozen=True)
class Coef:
    """Signed monomial ``sign * symbol**power`` (symbol None means the constant 1)."""

    symbol: str | None
    power: int = 1
    sign: int = 1

    def inverse(self) -> "Coef":
        return Coef(self.symbol, -self.power, self.sign)

    def expr(self):
        base = sp.Integer(1) if self.symbol is None else sp.Symbol(self.symbol) ** self.power
        return self.sign * base

    def evaluate(self, values, scalar=float):
        if self.symbol is None:
            return scalar(self.sign)
        v = scalar(values[self.symbol])
        return (v if self.power == 1 else 1 / v) * self.sign

    def text(self) -> str:
        if self.symbol is None:
            return "-1" if self.sign < 0 else "1"
        core = self.symbol if self.power == 1 else f"1/{self.symbol}"
        return f"-{core}" if self.sign < 0 else core


def element_coef(e: Element) -> Coef:
    """Table coefficient of the element (the L entry for dynamics)."""
    return Coef(e.name, -1 if e.inverse else 1)


def impedance_coef(e: Element) -> Coef:
    """z such that across = z * through for a static element."""
    c = element_coef(e)
    return c if e.etype in IMPEDANCE_FORM else c.inverse()


# ------------------------------------------------------------------ scheme types

@dataclass
class Term:
    """Signed reference to a signal; ``sign`` is filled by assign_signs."""

    signal: str | None
    base: int = 1
    factors: frozenset = frozenset()
    sign: int | None = None

    def flip(self, key: str | None) -> "Term":
        if key is None:
            return Term(self.signal, self.base, self.factors)
        return Term(self.signal, self.base, self.factors ^ {key})

    def neg(self) -> "Term":
        return Term(self.signal, -self.base, self.factors)


ZERO = Term(None)


@dataclass
class Signal:
    id: str
    label: str
    kind: str  # input | state | static | sum | coupling
    segment: int
    line: str  # across | through


@dataclass
class Path:
    gain: Coef
    input: Term
    output: str
    integral: bool = False


@dataclass
class Block:
    id: str
    variant: str  # elaboration | connection
    element: str
    config: str
    paths: list[Path]
    segment: int
    section_left: int
    section_right: int
    step: int
    group: str = ""  # nested composite label, if any

    @property
    def integral(self) -> bool:
        return any(p.integral for p in self.paths)

    def gain_text(self) -> str:
        p = self.paths[0]
        if p.integral:
            return f"1/({p.gain.text()} s)" if p.gain.power == 1 else f"{p.gain.symbol}/s"
        return p.gain.text()


@dataclass
class SummationNode:
    id: str
    line: str
    kind: str
    owner: str
    segment: int
    section: int
    output: str
    inputs: list[Term] = field(default_factory=list)
    group: str = ""


@dataclass
class PogScheme:
    chain: SPChain
    signals: dict[str, Signal] = field(default_factory=dict)
    blocks: list[Block] = field(default_factory=list)
    nodes: list[SummationNode] = field(default_factory=list)
    causality: dict[str, str] = field(default_factory=dict)
    configs: dict[str, str] = field(default_factory=dict)
    state_order: list[str] = field(default_factory=list)
    input_order: list[str] = field(default_factory=list)
    output_order: list[str] = field(default_factory=list)
    variables: dict[tuple[str, str], Term] = field(default_factory=dict)
    outputs: list[Term] = field(default_factory=list)
    orientation: dict[str, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    trace: list[tuple[int, str]] = field(default_factory=list)
    stage: int = 0
    ambiguous: bool = False

    @property
    def net(self) -> Netlist:
        return self.chain.net

    @property
    def sections(self):
        return self.chain.sections

    @property
    def state_labels(self) -> list[str]:
        return [self.net.element(n).label(self.net.element(n).state_var) for n in self.state_order]

    @property
    def input_labels(self) -> list[str]:
        out = []
        for name in self.input_order:
            s = self.net.lookup(name)
            out.append(s.label(s.imposed))
        return out

    @property
    def output_labels(self) -> list[str]:
        return list(self.output_order)

    def state_signal(self, name: str) -> str:
        return f"x:{name}"

    def input_signal(self, name: str) -> str:
        return f"u:{name}"

    def edges(self):
        """(src, dst, term, gain or None, integral, owner) for every signal connection."""
        out = []
        for node in self.nodes:
            for t in node.inputs:
                if t.signal is not None:
                    out.append((t.signal, node.output, t, None, False, node.id))
        for block in self.blocks:
            for p in block.paths:
                if p.input.signal is not None:
                    out.append((p.input.signal, p.output, p.input, p.gain, p.integral, block.id))
        return out


# ------------------------------------------------------------------- causality

@dataclass(frozen=True, eq=False)
class BNode:
    kind: str  # S | P
    a: object
    r: object


def binarize(node: SPNode):
    if isinstance(node, Leaf):
        return node
    kids = [binarize(c) for c in node.children]
    kind = "S" if isinstance(node, Series) else "P"
    acc = kids[-1]
    for k in reversed(kids[:-1]):
        acc = BNode(kind, k, acc)
    return acc


def _leaf_options(leaf: Leaf, net: Netlist, downstream) -> tuple[int, int]:
    if leaf.role == "element":
        kind = net.element(leaf.name).kind
        return {Kind.DE: (0, 1), Kind.DF: (1, 0)}.get(kind, (1, 1))
    if leaf.role == "source":
        return (0, 1) if net.lookup(leaf.name).kind is Kind.GE else (1, 0)
    if leaf.role == "open":
        return (1, 0)
    kind, counts = downstream[leaf.name]
    return counts if kind == "transformer" else (counts[1], counts[0])


class _Solver:
    def __init__(self, chain: SPChain):
        self.chain = chain
        self.net = chain.net
        self.trees = [binarize(seg.tree) for seg in chain.segments]
        self.counts: dict[int, tuple[int, int]] = {}
        self.downstream: dict[str, tuple[str, tuple[int, int]]] = {}
        for seg_idx in range(len(self.trees) - 1, -1, -1):
            if seg_idx < len(chain.links):
                link = chain.links[seg_idx]
                self.downstream[link.coupling] = (link.kind, self.count(self.trees[seg_idx + 1]))
            self.count(self.trees[seg_idx])

    def count(self, node) -> tuple[int, int]:
        key = id(node)
        if key in self.counts:
            return self.counts[key]
        if isinstance(node, Leaf):
            res = _leaf_options(node, self.net, self.downstream)
        else:
            ay, az = self.count(node.a)
            ry, rz = self.count(node.r)
            if node.kind == "S":
                res = (ay * rz + az * ry, az * rz)
            else:
                res = (ay * ry, az * ry + ay * rz)
        self.counts[key] = res
        return res

    def root_requirement(self) -> str:
        src = self.net.lookup(self.chain.segments[0].left.name)
        return "Y" if src.kind is Kind.GE else "Z"

    def options(self, node: BNode, c: str) -> list[tuple[str, str]]:
        if node.kind == "S":
            opts = [("Y", "Z"), ("Z", "Y")] if c == "Y" else [("Z", "Z")]
        else:
            opts = [("Z", "Y"), ("Y", "Z")] if c == "Z" else [("Y", "Y")]
        if len(opts) == 2 and self._static_leaf(node.a):
            # statics default to impedance form on the across line, admittance on the through line
            opts.reverse()
        return [o for o in opts if self.count(node.a)[o[0] == "Z"] and self.count(node.r)[o[1] == "Z"]]

    def _static_leaf(self, node) -> bool:
        if not isinstance(node, Leaf) or node.role != "element":
            return False
        return self.net.element(node.name).kind is Kind.R

    def conflict(self, root, c) -> CausalityConflict:
        dead = []

        def walk(node):
            if isinstance(node, Leaf):
                return
            walk(node.a)
            walk(node.r)
            if self.count(node) == (0, 0):
                dead.append(node)

        walk(root)
        scope = dead[0] if dead else root
        names = [lf.name for lf in _bleaves(scope) if lf.role == "element"
                 and self.net.element(lf.name).kind.dynamic]
        if not names:
            names = [lf.key for lf in _bleaves(scope)]
        msg = "no integral-causal configuration exists for " + ", ".join(names)
        if len(names) > 1:
            msg += " (dependent storage elements)"
        return CausalityConflict(msg, names=tuple(names))


def _bleaves(node):
    if isinstance(node, Leaf):
        yield node
    else:
        yield from _bleaves(node.a)
        yield from _bleaves(node.r)


def _config(parent_kind: str, side: str, parent_c: str, c: str) -> str:
    if parent_kind == "S":
        if c == "Y":
            return "S-a"
        return "S-c" if (side == "a" and parent_c == "Y") else "S-b"
    if c == "Z":
        return "P-a"
    return "P-c" if (side == "a" and parent_c == "Z") else "P-b"


# ------------------------------------------------------------------- placement

def _all_element_positions(chain: SPChain):
    """(leaf, parent kind) for every element leaf in its binarized parent."""
    out = []

    def walk(node, parent_kind):
        if isinstance(node, Leaf):
            if node.role == "element":
                out.append((node, parent_kind))
            return
        walk(node.a, node.kind)
        walk(node.r, node.kind)

    for seg in chain.segments:
        walk(binarize(seg.tree), None)
    return out


def place_forced_dynamics(chain: SPChain) -> PogScheme:
    """Step 3: series Df elements take S-a, parallel De elements take P-a."""
    scheme = PogScheme(chain)
    scheme.stage = 3
    net = chain.net
    for leaf, parent in _all_element_positions(chain):
        e = net.element(leaf.name)
        if e.kind is Kind.DF and parent == "S":
            scheme.configs[e.name] = "S-a"
        elif e.kind is Kind.DE and parent == "P":
            scheme.configs[e.name] = "P-a"
        else:
            continue
        scheme.trace.append((3, f"{e.name}: {scheme.configs[e.name]}  ({_transfer_text(e, scheme.configs[e.name])})"))
    return scheme


def place_flexible_dynamics(scheme: PogScheme, chain: SPChain) -> PogScheme:
    """Step 4: dynamic elements with two admissible configurations get the one matching their neighbours."""
    solver = _solve(scheme, chain)
    net = chain.net
    for leaf, parent in _all_element_positions(chain):
        e = net.element(leaf.name)
        if not e.kind.dynamic or e.name in scheme.configs and scheme.stage >= 4:
            continue
        cfg = scheme._assigned_configs[e.name]
        if e.name in scheme.configs and scheme.configs[e.name] != cfg:
            raise CausalityConflict(f"{e.name} cannot keep configuration {scheme.configs[e.name]}",
                                    names=(e.name,))
        if e.name not in scheme.configs:
            scheme.trace.append((4, f"{e.name}: {cfg}  ({_transfer_text(e, cfg)})"))
        scheme.configs[e.name] = cfg
    scheme.stage = 4
    del solver
    return scheme


def place_statics(scheme: PogScheme, chain: SPChain) -> PogScheme:
    """Step 5: static elements take the configuration left open by their neighbours, then wire the scheme."""
    if scheme.stage < 4:
        scheme = place_flexible_dynamics(scheme, chain)
    net = chain.net
    for leaf, _ in _all_element_positions(chain):
        e = net.element(leaf.name)
        if e.kind is Kind.R:
            cfg = scheme._assigned_configs[e.name]
            scheme.configs[e.name] = cfg
            scheme.trace.append((5, f"{e.name}: {cfg}  ({_transfer_text(e, cfg)})"))
    _Wiring(scheme, chain).run()
    scheme.stage = 5
    return scheme


def assign_signs(scheme: PogScheme, net: Netlist | None = None) -> PogScheme:
    """Step 6: resolve every connection sign from the declared positive directions."""
    net = net or scheme.net
    sigma = {}
    for seg in scheme.chain.segments:
        for lf in leaves(seg.tree):
            owner_dir = net.direction(lf.name) if lf.role in ("element", "source") else 1
            sigma[lf.key] = lf.geom * owner_dir
        if seg.left.role == "source":
            sigma[seg.left.key] = net.direction(seg.left.name)
    scheme.orientation = sigma

    def resolve(t: Term) -> Term:
        sign = t.base
        for key in t.factors:
            if key not in sigma:
                raise SignInconsistency(f"no declared direction for {key}", names=(key,))
            sign *= sigma[key]
        t.sign = sign
        return t

    for node in scheme.nodes:
        for t in node.inputs:
            resolve(t)
    for block in scheme.blocks:
        for p in block.paths:
            resolve(p.input)
    for t in scheme.variables.values():
        resolve(t)
    for t in scheme.outputs:
        resolve(t)
    for node in scheme.nodes:
        terms = " ".join(("+" if t.sign > 0 else "-") + " " + scheme.signals[t.signal].label
                         for t in node.inputs if t.signal is not None)
        terms = terms[2:] if terms.startswith("+ ") else terms
        scheme.trace.append((6, f"{node.id} ({node.kind}): {scheme.signals[node.output].label} = {terms or '0'}"))
    scheme.stage = 6
    return scheme


def build_scheme(chain: SPChain) -> PogScheme:
    """Steps 3 to 6 in sequence."""
    scheme = place_forced_dynamics(chain)
    scheme = place_flexible_dynamics(scheme, chain)
    scheme = place_statics(scheme, chain)
    return assign_signs(scheme, chain.net)


def _transfer_text(e: Element, cfg: str) -> str:
    c = element_coef(e)
    if e.kind.dynamic:
        out, inp = (e.label("f"), e.label("e")) if e.kind is Kind.DF else (e.label("e"), e.label("f"))
        return f"{out}/{inp} = 1/({c.text()} s)"
    z = impedance_coef(e)
    if cfg in ("S-a", "P-b", "P-c"):
        return f"{e.label('f')} = {z.inverse().text()} {e.label('e')}"
    return f"{e.label('e')} = {z.text()} {e.label('f')}"


def _solve(scheme: PogScheme, chain: SPChain) -> _Solver:
    solver = _Solver(chain)
    scheme._solver = solver
    scheme._assigned: dict[int, str] = {}
    scheme._assigned_configs: dict[str, str] = {}
    if not chain.segments:
        return solver
    root = solver.trees[0]
    need = solver.root_requirement()
    total = solver.count(root)[need == "Z"]
    if total == 0:
        raise solver.conflict(root, need)
    if total > 1:
        scheme.ambiguous = True
        scheme.notes.append(f"{total} admissible causal assignments: the scheme contains an algebraic loop")
    trees = solver.trees
    links = {link.coupling: (i, link) for i, link in enumerate(chain.links)}

    def assign(node, c, parent=None):
        scheme._assigned[id(node)] = c
        if isinstance(node, Leaf):
            if node.role == "element":
                pk, side, pc, pnode = parent
                cfg = _config(pk, side, pc, c)
                if cfg[-1] == "c" and _between_generators(pnode, node, root):
                    # no neighbour decides between (b) and (c); take (b)
                    cfg = cfg[:-1] + "b"
                    scheme.notes.append(f"{node.name} sits between two generators: {cfg} chosen")
                scheme._assigned_configs[node.name] = cfg
                scheme.causality[node.name] = c
            elif node.role == "coupling":
                i, link = links[node.name]
                c2 = c if link.kind == "transformer" else ("Z" if c == "Y" else "Y")
                scheme.causality[node.key] = c
                assign(trees[i + 1], c2)
            else:
                scheme.causality[node.key] = c
            return
        opts = solver.options(node, c)
        ca, cr = opts[0]
        assign(node.a, ca, (node.kind, "a", c, node))
        assign(node.r, cr, (node.kind, "r", c, node))

    assign(root, need)
    return solver


def _between_generators(parent, leaf, root) -> bool:
    """Leaf fed by the root source on one side and a generator on the other."""
    other = parent.r if parent.a is leaf else parent.a
    return parent is root and isinstance(other, Leaf) and other.role == "source"


# ---------------------------------------------------------------------- wiring

class _Wiring:
    def __init__(self, scheme: PogScheme, chain: SPChain):
        self.s = scheme
        self.chain = chain
        self.net = chain.net
        self.trees = scheme._solver.trees
        self.assigned = scheme._assigned
        self.labels_used: set[str] = set()
        self.links = {link.coupling: (i, link) for i, link in enumerate(chain.links)}
        self.first_section = {seg.index: chain._first_section(seg.index) for seg in chain.segments}
        self.n_nodes = 0

    # signals -------------------------------------------------------------
    def signal(self, sid, label, kind, segment, line) -> str:
        base = label
        while label in self.labels_used:
            label += "'"
        self.labels_used.add(label)
        if sid is None:
            sid = f"s{len(self.s.signals)}:{base}"
        self.s.signals[sid] = Signal(sid, label, kind, segment, line)
        return sid

    def run(self):
        s = self.s
        for src in self.net.sources:
            self.signal(s.input_signal(src.name), src.label(src.imposed), "input", -1,
                        "across" if src.imposed == "e" else "through")
            s.input_order.append(src.name)
        s.state_order = [lf.name for lf in self.chain.element_leaves()
                         if self.net.element(lf.name).kind.dynamic]
        if not self.chain.segments:
            self._outputs()
            return
        seg0 = self.chain.segments[0]
        root_src = self.net.lookup(seg0.left.name)
        inp = Term(s.input_signal(root_src.name), 1, frozenset({seg0.left.key}))
        out = self.gen(self.trees[0], self.assigned[id(self.trees[0])], inp, 0, self.first_section[0], True, "")
        s.nodes.sort(key=lambda n: (n.segment, n.section))
        for i, node in enumerate(s.nodes, start=1):
            node.id = f"SN{i}"
        s.variables[(root_src.name, root_src.imposed)] = Term(s.input_signal(root_src.name))
        s.variables[(root_src.name, root_src.conjugate)] = out.flip(seg0.left.key)
        self._outputs()

    def _outputs(self):
        s = self.s
        for ref in self.net.outputs:
            item = self.net.lookup(ref.owner)
            s.outputs.append(s.variables[(ref.owner, ref.which)])
            s.output_order.append(item.label(ref.which))

    # helpers -------------------------------------------------------------
    def sym(self, seg_idx, which):
        dom = self.chain.segments[seg_idx].domain
        return dom.across_symbol if which == "e" else dom.through_symbol

    def declared_key(self, node):
        if isinstance(node, Leaf) and node.role in ("element", "source", "coupling"):
            return node.key
        return None

    def node_label(self, node, seg_idx, which, section):
        sym = self.sym(seg_idx, which)
        if node is None:
            return f"{sym}_s{section}"
        if isinstance(node, Leaf):
            if node.role in ("element", "source"):
                return self.net.lookup(node.name).label(which)
            if node.role == "coupling":
                return f"{sym}_{node.name}{node.side}"
            return f"{sym}_s{section}"
        return f"{sym}[{describe_b(node)}]"

    def new_node(self, line, owner, seg_idx, section, out_label, group) -> SummationNode:
        self.n_nodes += 1
        nid = f"SN{self.n_nodes}"
        kind = "VKL" if line == "across" else "CKL"
        out = self.signal(f"n:{nid}", out_label, "sum", seg_idx, line)
        node = SummationNode(nid, line, kind, owner, seg_idx, section, out, [], group)
        self.s.nodes.append(node)
        return node

    # recursive generation ------------------------------------------------
    def gen(self, node, c, inp: Term, seg_idx, sec, spine_pos, group, parent=None) -> Term:
        if isinstance(node, Leaf):
            return self.gen_leaf(node, c, inp, seg_idx, sec, spine_pos, group, parent)
        a, r = node.a, node.r
        ca, cr = self.assigned[id(a)], self.assigned[id(r)]
        sec_r = sec + 1 if spine_pos else sec
        a_group = group or ("" if isinstance(a, Leaf) else describe_b(a))
        owner = describe_b(a)
        across = node.kind == "S"
        line = "across" if across else "through"
        which = "e" if across else "f"
        # a series node in Y and a parallel node in Z route the balance through one child
        routed = (c == "Y") if across else (c == "Z")
        if routed:
            target, other = (a, r) if (ca == ("Y" if across else "Z")) else (r, a)
            t_sec = sec if target is a else sec_r
            key = self.declared_key(target)
            if target is r and spine_pos:
                label = self.node_label(None, seg_idx, which, t_sec)
            else:
                label = self.node_label(target, seg_idx, which, t_sec)
            sn = self.new_node(line, owner, seg_idx, sec, label, group)
            target_in = Term(sn.output, 1, frozenset({key}) if key else frozenset())
            t_group = a_group if target is a else group
            o_group = a_group if other is a else group
            t_spine = spine_pos and target is r
            o_spine = spine_pos and other is r
            t_out = self.gen(target, ca if target is a else cr, target_in, seg_idx,
                             sec if target is a else sec_r, t_spine, t_group, (node, "a" if target is a else "r", c))
            o_out = self.gen(other, ca if other is a else cr, t_out, seg_idx,
                             sec if other is a else sec_r, o_spine, o_group, (node, "a" if other is a else "r", c))
            sn.inputs = [inp.flip(key), o_out.neg().flip(key)]
            return t_out
        a_out = self.gen(a, ca, inp, seg_idx, sec, False, a_group, (node, "a", c))
        r_out = self.gen(r, cr, inp, seg_idx, sec_r, spine_pos, group, (node, "r", c))
        label = self.node_label(None, seg_idx, which, sec) if not group else f"{self.sym(seg_idx, which)}[{group}]"
        sn = self.new_node(line, owner, seg_idx, sec, label, group)
        sn.inputs = [a_out, r_out]
        return Term(sn.output)

    def gen_leaf(self, leaf: Leaf, c, inp: Term, seg_idx, sec, spine_pos, group, parent) -> Term:
        s = self.s
        if leaf.role == "open":
            return ZERO
        if leaf.role == "source":
            src = self.net.lookup(leaf.name)
            s.variables[(src.name, src.imposed)] = Term(s.input_signal(src.name))
            s.variables[(src.name, src.conjugate)] = inp.flip(leaf.key)
            return Term(s.input_signal(src.name), 1, frozenset({leaf.key}))
        if leaf.role == "coupling":
            return self.gen_coupling(leaf, c, inp, seg_idx, sec)
        e = self.net.element(leaf.name)
        block_in = inp.flip(leaf.key)
        out_which = "f" if c == "Y" else "e"
        in_which = "e" if c == "Y" else "f"
        if e.kind.dynamic:
            sid = self.signal(s.state_signal(e.name), e.label(out_which), "state", seg_idx,
                              "through" if out_which == "f" else "across")
            path = Path(element_coef(e), block_in, sid, integral=True)
        else:
            sid = self.signal(None, e.label(out_which), "static", seg_idx,
                              "through" if out_which == "f" else "across")
            z = impedance_coef(e)
            path = Path(z if c == "Z" else z.inverse(), block_in, sid)
        cfg = s.configs[e.name]
        step = 5 if e.kind is Kind.R else (3 if cfg in ("S-a", "P-a") and parent[0].kind == cfg[0] else 4)
        right = sec if group else sec + 1
        s.blocks.append(Block(f"EB:{e.name}", "elaboration", e.name, cfg, [path], seg_idx, sec, right,
                              step, group))
        s.variables[(e.name, in_which)] = block_in
        s.variables[(e.name, out_which)] = Term(sid)
        return Term(sid, 1, frozenset({leaf.key}))

    def gen_coupling(self, leaf: Leaf, c, inp: Term, seg_idx, sec) -> Term:
        s = self.s
        i, link = self.links[leaf.name]
        k = Coef(link.coupling, link.power, link.sign)
        natural = (c == "Z") if link.kind == "transformer" else (c == "Y")
        gain = k if natural else k.inverse()
        down_c = c if link.kind == "transformer" else ("Z" if c == "Y" else "Y")
        down_seg = i + 1
        down_tree = self.trees[down_seg]
        down_which = "e" if down_c == "Y" else "f"
        seg = self.chain.segments[down_seg]
        fwd_out = self.signal(None, f"{self.sym(down_seg, down_which)}_{leaf.name}{seg.left.side}", "coupling",
                              down_seg, "across" if down_which == "e" else "through")
        first = self.first_section[down_seg]
        down_out = self.gen(down_tree, down_c, Term(fwd_out), down_seg, first, True, "")
        up_which = "f" if c == "Y" else "e"
        back_out = self.signal(None, f"{self.sym(seg_idx, up_which)}_{leaf.name}{leaf.side}", "coupling",
                               seg_idx, "across" if up_which == "e" else "through")
        block = Block(f"CB:{leaf.name}", "connection", leaf.name, link.kind,
                      [Path(gain, inp.flip(leaf.key), fwd_out), Path(gain, down_out, back_out)],
                      seg_idx, sec, first, 3)
        s.blocks.append(block)
        return Term(back_out, 1, frozenset({leaf.key}))


def describe_b(node) -> str:
    if isinstance(node, Leaf):
        return node.key if node.role != "open" else "open"
    flat = []

    def walk(n):
        if isinstance(n, BNode) and n.kind == node.kind:
            walk(n.a)
            walk(n.r)
        else:
            flat.append(describe_b(n))

    walk(node)
    sep = "+" if node.kind == "S" else "||"
    return "(" + sep.join(flat) + ")"


# ---------------------------------------------------------------------- checks

@dataclass
class LoopReport:
    cycles: list[list[str]] = field(default_factory=list)
    violations: list[list[str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _graph(scheme: PogScheme, static_only=False) -> nx.DiGraph:
    g = nx.DiGraph()
    for src, dst, term, gain, integral, owner in scheme.edges():
        if static_only and integral:
            continue
        sign = term.sign if term.sign is not None else term.base
        if gain is not None:
            sign *= gain.sign
        if g.has_edge(src, dst):
            g[src][dst]["signs"].append(sign)
        else:
            g.add_edge(src, dst, signs=[sign])
    return g


def _cycle_sign_variants(g, cycle):
    pairs = list(zip(cycle, cycle[1:] + cycle[:1]))
    for combo in product(*(g[u][v]["signs"] for u, v in pairs)):
        yield sum(1 for x in combo if x < 0)


def check_loop_signs(scheme: PogScheme) -> LoopReport:
    """Every directed loop must carry an odd number of minus signs."""
    g = _graph(scheme)
    report = LoopReport()
    for cycle in nx.simple_cycles(g):
        labels = [scheme.signals[n].label for n in cycle]
        report.cycles.append(labels)
        if any(m % 2 == 0 for m in _cycle_sign_variants(g, cycle)):
            report.violations.append(labels)
    report.cycles.sort()
    report.violations.sort()
    return report


def detect_algebraic_loops(scheme: PogScheme) -> list[list[str]]:
    """Integrator-free directed cycles."""
    g = _graph(scheme, static_only=True)
    found = sorted([scheme.signals[n].label for n in cyc] for cyc in nx.simple_cycles(g))
    return found


def flip_sign(scheme: PogScheme, node_id: str, index: int) -> PogScheme:
    """Negate one summation-node input sign in place (mutation testing)."""
    node = next(n for n in scheme.nodes if n.id == node_id)
    node.inputs[index].sign = -node.inputs[index].sign
    return scheme


def block_counts(scheme: PogScheme) -> dict[str, int]:
    eb = sum(1 for b in scheme.blocks if b.variant == "elaboration")
    cb = sum(1 for b in scheme.blocks if b.variant == "connection")
    return {"elaboration": eb, "connection": cb, "summation": len(scheme.nodes)}


def plan_matches(scheme: PogScheme) -> bool:
    """Summation nodes agree with the series/parallel plan of the chain (one per element)."""
    plan = summation_node_plan(scheme.chain)
    got = sorted((n.section, n.line, n.kind) for n in scheme.nodes)
    return got == sorted(plan)
