"""Line-oriented multi-domain netlist: parsing, printing and validation.

Records, one per line (``#`` starts a comment)::

    el  <name> <type> <dom> <n+> <n-> <value> [inv]
    src <name> <across|through> <dom> <n+> <n-> <signal>
    cb  <name> <xfmr|gyr> <dom>(<n+>,<n->) <dom>(<n+>,<n->) <K>
    out <variable>
    dir <variable> <+|->

``gnd`` is the reference node of every domain segment.  The optional ``inv``
flag says the declared value is the reciprocal of the element coefficient
(a spring given by its stiffness, a valve given by its conductance).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import NetlistSyntaxError
from .signals import parse_signal

GND = "gnd"


class Domain(Enum):
    ELECTRICAL = "e"
    TRANSLATIONAL = "mt"
    ROTATIONAL = "mr"
    HYDRAULIC = "hy"

    @property
    def across_symbol(self) -> str:
        return _SYMBOLS[self][0]

    @property
    def through_symbol(self) -> str:
        return _SYMBOLS[self][1]


_SYMBOLS = {
    Domain.ELECTRICAL: ("V", "I"),
    Domain.TRANSLATIONAL: ("v", "F"),
    Domain.ROTATIONAL: ("w", "tau"),
    Domain.HYDRAULIC: ("P", "Q"),
}


class Kind(Enum):
    DE = "across-dynamic"
    DF = "through-dynamic"
    R = "static"
    GE = "across-generator"
    GF = "through-generator"

    @property
    def dynamic(self) -> bool:
        return self in (Kind.DE, Kind.DF)


ELEMENT_TYPES: dict[str, tuple[Kind, Domain]] = {
    "cap": (Kind.DE, Domain.ELECTRICAL),
    "ind": (Kind.DF, Domain.ELECTRICAL),
    "res": (Kind.R, Domain.ELECTRICAL),
    "mass": (Kind.DE, Domain.TRANSLATIONAL),
    "spring": (Kind.DF, Domain.TRANSLATIONAL),
    "fric": (Kind.R, Domain.TRANSLATIONAL),
    "inertia": (Kind.DE, Domain.ROTATIONAL),
    "rspring": (Kind.DF, Domain.ROTATIONAL),
    "rfric": (Kind.R, Domain.ROTATIONAL),
    "hcap": (Kind.DE, Domain.HYDRAULIC),
    "hind": (Kind.DF, Domain.HYDRAULIC),
    "hres": (Kind.R, Domain.HYDRAULIC),
}

# Static laws: resistors relate across = R * through, frictions through = b * across.
IMPEDANCE_FORM = {"res", "hres"}


@dataclass(frozen=True)
class Element:
    name: str
    etype: str
    kind: Kind
    domain: Domain
    node_plus: str
    node_minus: str
    value: float
    inverse: bool = False
    line: int = 0

    def label(self, which: str) -> str:
        sym = self.domain.across_symbol if which == "e" else self.domain.through_symbol
        return f"{sym}_{self.name}"

    @property
    def state_var(self) -> str:
        """'e' for across-dynamic, 'f' otherwise (the variable the element stores)."""
        return "e" if self.kind is Kind.DE else "f"


@dataclass(frozen=True)
class Source:
    name: str
    kind: Kind
    domain: Domain
    node_plus: str
    node_minus: str
    signal: str
    line: int = 0

    def label(self, which: str) -> str:
        sym = self.domain.across_symbol if which == "e" else self.domain.through_symbol
        return f"{sym}_{self.name}"

    @property
    def imposed(self) -> str:
        return "e" if self.kind is Kind.GE else "f"

    @property
    def conjugate(self) -> str:
        return "f" if self.kind is Kind.GE else "e"


@dataclass(frozen=True)
class Port:
    domain: Domain
    node_plus: str
    node_minus: str

    def text(self) -> str:
        return f"{self.domain.value}({self.node_plus},{self.node_minus})"


@dataclass(frozen=True)
class Coupling:
    """Power-conserving two-port.

    transformer: f_b = K f_a and e_a = K e_b (same-type variables scale).
    gyrator:     f_b = K e_a and f_a = K e_b (across maps onto through).
    f_a enters the coupling at port a, f_b leaves it at port b.
    """

    name: str
    kind: str
    port_a: Port
    port_b: Port
    ratio: float
    line: int = 0


@dataclass(frozen=True)
class VarRef:
    owner: str
    which: str  # 'e' or 'f'


@dataclass
class Netlist:
    elements: list[Element] = field(default_factory=list)
    sources: list[Source] = field(default_factory=list)
    couplings: list[Coupling] = field(default_factory=list)
    outputs: list[VarRef] = field(default_factory=list)
    orientations: dict[str, int] = field(default_factory=dict)
    output_lines: list[int] = field(default_factory=list)
    orientation_lines: dict[str, int] = field(default_factory=dict)
    raw_outputs: list[str] = field(default_factory=list)
    raw_orientations: dict[str, str] = field(default_factory=dict)

    def element(self, name: str) -> Element:
        return self._by_name()[name]

    def lookup(self, name: str):
        return self._by_name().get(name)

    def _by_name(self) -> dict:
        table = {}
        for item in (*self.elements, *self.sources, *self.couplings):
            table[item.name] = item
        return table

    def params(self) -> dict[str, float]:
        """Declared numeric value of every named coefficient."""
        out = {e.name: e.value for e in self.elements}
        out.update({c.name: c.ratio for c in self.couplings})
        return out

    def direction(self, name: str) -> int:
        return self.orientations.get(name, 1)

    def resolve(self, text: str) -> VarRef | None:
        return resolve_variable(self, text)


def resolve_variable(net: Netlist, text: str) -> VarRef | None:
    """Map ``name``, ``name.e``/``name.f`` or a label like ``V_C1`` to a VarRef."""
    items = net._by_name()
    if text in items:
        item = items[text]
        if isinstance(item, Element):
            return VarRef(text, item.state_var if item.kind.dynamic else "f")
        if isinstance(item, Source):
            return VarRef(text, item.conjugate)
        return None
    base, dot, which = text.rpartition(".")
    if dot and which in ("e", "f") and isinstance(items.get(base), (Element, Source)):
        return VarRef(base, which)
    sym, under, name = text.partition("_")
    item = items.get(name) if under else None
    if isinstance(item, (Element, Source)):
        if sym == item.domain.across_symbol:
            return VarRef(name, "e")
        if sym == item.domain.through_symbol:
            return VarRef(name, "f")
    return None


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_NODE = re.compile(r"[A-Za-z0-9_]+\Z")
_PORT = re.compile(r"([a-z]+)\(([^,()]+),([^,()]+)\)\Z")
_TOKEN = re.compile(r"\S+")


def _tokens(line: str) -> list[tuple[str, int]]:
    squeezed = re.sub(r"\(\s*([^,()]*?)\s*,\s*([^()]*?)\s*\)", r"(\1,\2)", line)
    if squeezed != line:
        # column info is approximate once whitespace inside a port is squeezed
        return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(squeezed)]
    return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]


def _need(tokens, idx, lineno, expected):
    if idx >= len(tokens):
        col = tokens[-1][1] + len(tokens[-1][0]) if tokens else 1
        raise NetlistSyntaxError("unexpected end of record", lineno, col, expected)
    return tokens[idx]


def _name(tok, lineno, what="identifier"):
    text, col = tok
    if not _NAME.match(text):
        raise NetlistSyntaxError(f"bad {what} {text!r}", lineno, col, what)
    return text


def _node(tok, lineno):
    text, col = tok
    if not _NODE.match(text):
        raise NetlistSyntaxError(f"bad node name {text!r}", lineno, col, "node name")
    return text


def _domain(tok, lineno):
    text, col = tok
    try:
        return Domain(text)
    except ValueError:
        raise NetlistSyntaxError(f"unknown domain {text!r}", lineno, col, "one of e, mt, mr, hy") from None


def _number(tok, lineno, what="number"):
    text, col = tok
    try:
        return float(text)
    except ValueError:
        raise NetlistSyntaxError(f"bad {what} {text!r}", lineno, col, what) from None


def _check_signal(tok, lineno):
    text, col = tok
    head, _, body = text.partition(":")
    try:
        if head == "csv":
            if not body:
                raise ValueError("csv signal needs a path")
        else:
            parse_signal(text)
    except ValueError as exc:
        raise NetlistSyntaxError(str(exc), lineno, col, "signal spec") from None
    return text


def _end(tokens, idx, lineno):
    if idx < len(tokens):
        text, col = tokens[idx]
        raise NetlistSyntaxError(f"unexpected token {text!r}", lineno, col, "end of record")


def parse_netlist(text: str) -> Netlist:
    net = Netlist()
    seen: dict[str, int] = {}
    pending_out: list[tuple[str, int, int]] = []
    pending_dir: list[tuple[str, str, int, int]] = []

    def claim(name, lineno, col):
        if name in seen:
            raise NetlistSyntaxError(f"duplicate name {name!r} (first on line {seen[name]})", lineno, col)
        seen[name] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = _tokens(line)
        if not tokens:
            continue
        keyword, kcol = tokens[0]
        if keyword == "el":
            name = _name(_need(tokens, 1, lineno, "element name"), lineno)
            ttok = _need(tokens, 2, lineno, "element type")
            if ttok[0] not in ELEMENT_TYPES:
                raise NetlistSyntaxError(f"unknown element type {ttok[0]!r}", lineno, ttok[1],
                                         "one of " + ", ".join(ELEMENT_TYPES))
            kind, dom_expected = ELEMENT_TYPES[ttok[0]]
            dtok = _need(tokens, 3, lineno, "domain")
            dom = _domain(dtok, lineno)
            if dom is not dom_expected:
                raise NetlistSyntaxError(f"type {ttok[0]!r} belongs to domain {dom_expected.value!r}",
                                         lineno, dtok[1], dom_expected.value)
            n_plus = _node(_need(tokens, 4, lineno, "node"), lineno)
            n_minus = _node(_need(tokens, 5, lineno, "node"), lineno)
            vtok = _need(tokens, 6, lineno, "coefficient")
            value = _number(vtok, lineno, "coefficient")
            if not value > 0:
                raise NetlistSyntaxError(f"coefficient of {name} must be positive", lineno, vtok[1],
                                         "positive number")
            inverse = False
            idx = 7
            if idx < len(tokens) and tokens[idx][0] == "inv":
                inverse = True
                idx += 1
            _end(tokens, idx, lineno)
            claim(name, lineno, tokens[1][1])
            net.elements.append(Element(name, ttok[0], kind, dom, n_plus, n_minus, value, inverse, lineno))
        elif keyword == "src":
            name = _name(_need(tokens, 1, lineno, "source name"), lineno)
            ktok = _need(tokens, 2, lineno, "across or through")
            if ktok[0] not in ("across", "through"):
                raise NetlistSyntaxError(f"unknown generator kind {ktok[0]!r}", lineno, ktok[1],
                                         "across or through")
            dom = _domain(_need(tokens, 3, lineno, "domain"), lineno)
            n_plus = _node(_need(tokens, 4, lineno, "node"), lineno)
            n_minus = _node(_need(tokens, 5, lineno, "node"), lineno)
            signal = _check_signal(_need(tokens, 6, lineno, "signal spec"), lineno)
            _end(tokens, 7, lineno)
            claim(name, lineno, tokens[1][1])
            kind = Kind.GE if ktok[0] == "across" else Kind.GF
            net.sources.append(Source(name, kind, dom, n_plus, n_minus, signal, lineno))
        elif keyword == "cb":
            name = _name(_need(tokens, 1, lineno, "coupling name"), lineno)
            ktok = _need(tokens, 2, lineno, "xfmr or gyr")
            if ktok[0] not in ("xfmr", "gyr"):
                raise NetlistSyntaxError(f"unknown coupling kind {ktok[0]!r}", lineno, ktok[1], "xfmr or gyr")
            ports = []
            for idx in (3, 4):
                ptok = _need(tokens, idx, lineno, "port dom(n+,n-)")
                m = _PORT.match(ptok[0])
                if not m:
                    raise NetlistSyntaxError(f"bad port {ptok[0]!r}", lineno, ptok[1], "dom(n+,n-)")
                dom = _domain((m.group(1), ptok[1]), lineno)
                ports.append(Port(dom, _node((m.group(2), ptok[1]), lineno), _node((m.group(3), ptok[1]), lineno)))
            rtok = _need(tokens, 5, lineno, "ratio")
            ratio = _number(rtok, lineno, "ratio")
            if ratio == 0:
                raise NetlistSyntaxError(f"ratio of {name} must be nonzero", lineno, rtok[1], "nonzero number")
            _end(tokens, 6, lineno)
            claim(name, lineno, tokens[1][1])
            kind = "transformer" if ktok[0] == "xfmr" else "gyrator"
            net.couplings.append(Coupling(name, kind, ports[0], ports[1], ratio, lineno))
        elif keyword == "out":
            vtok = _need(tokens, 1, lineno, "variable")
            _end(tokens, 2, lineno)
            pending_out.append((vtok[0], lineno, vtok[1]))
        elif keyword == "dir":
            vtok = _need(tokens, 1, lineno, "variable")
            stok = _need(tokens, 2, lineno, "+ or -")
            if stok[0] not in ("+", "-"):
                raise NetlistSyntaxError(f"bad direction {stok[0]!r}", lineno, stok[1], "+ or -")
            _end(tokens, 3, lineno)
            pending_dir.append((vtok[0], stok[0], lineno, vtok[1]))
        else:
            raise NetlistSyntaxError(f"unknown record {keyword!r}", lineno, kcol, "el, src, cb, out or dir")

    for ref_text, lineno, col in pending_out:
        ref = resolve_variable(net, ref_text)
        if ref is None:
            raise NetlistSyntaxError(f"unknown variable {ref_text!r}", lineno, col, "element or source variable")
        net.outputs.append(ref)
        net.output_lines.append(lineno)
        net.raw_outputs.append(ref_text)
    for ref_text, sign, lineno, col in pending_dir:
        ref = resolve_variable(net, ref_text)
        if ref is None:
            raise NetlistSyntaxError(f"unknown variable {ref_text!r}", lineno, col, "element or source variable")
        # Rule 1 ties both power variables of a PE to one direction, so the flag is per owner
        net.orientations[ref.owner] = 1 if sign == "+" else -1
        net.orientation_lines[ref.owner] = lineno
        net.raw_orientations[ref.owner] = ref_text
    return net


def format_netlist(net: Netlist) -> str:
    """Print a netlist in canonical record form (parse of the result is a fixed point)."""
    lines = []
    for e in net.elements:
        flag = " inv" if e.inverse else ""
        lines.append(f"el {e.name} {e.etype} {e.domain.value} {e.node_plus} {e.node_minus} {e.value!r}{flag}")
    for s in net.sources:
        kind = "across" if s.kind is Kind.GE else "through"
        lines.append(f"src {s.name} {kind} {s.domain.value} {s.node_plus} {s.node_minus} {s.signal}")
    for c in net.couplings:
        kind = "xfmr" if c.kind == "transformer" else "gyr"
        lines.append(f"cb {c.name} {kind} {c.port_a.text()} {c.port_b.text()} {c.ratio!r}")
    for ref in net.outputs:
        lines.append(f"out {ref.owner}.{ref.which}")
    for owner, sign in net.orientations.items():
        lines.append(f"dir {owner} {'+' if sign > 0 else '-'}")
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    names: tuple[str, ...] = ()
    line: int = 0


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)


def _terminals(net: Netlist):
    """(owner, domain, node_plus, node_minus, is_element) for every two-terminal item and port."""
    for e in net.elements:
        yield e.name, e.domain, e.node_plus, e.node_minus, True
    for s in net.sources:
        yield s.name, s.domain, s.node_plus, s.node_minus, False
    for c in net.couplings:
        yield f"{c.name}.a", c.port_a.domain, c.port_a.node_plus, c.port_a.node_minus, False
        yield f"{c.name}.b", c.port_b.domain, c.port_b.node_plus, c.port_b.node_minus, False


def validate(net: Netlist) -> ValidationReport:
    report = ValidationReport()
    add = report.violations.append
    lines = {item.name: item.line for item in (*net.elements, *net.sources, *net.couplings)}

    incidence: dict[str, list] = {}
    node_domains: dict[str, set] = {}
    for owner, dom, n_plus, n_minus, _ in _terminals(net):
        base = owner.split(".")[0]
        if n_plus == n_minus:
            add(Violation("self-loop", f"{owner} connects node {n_plus!r} to itself", (base,), lines.get(base, 0)))
        for node in {n_plus, n_minus}:
            if node == GND:
                continue
            incidence.setdefault(node, []).append(owner)
            node_domains.setdefault(node, set()).add(dom)

    for node, owners in sorted(incidence.items()):
        if len(owners) < 2:
            base = owners[0].split(".")[0]
            add(Violation("dangling-node", f"node {node!r} is only used by {owners[0]}", (base,), lines.get(base, 0)))
        doms = node_domains[node]
        if len(doms) > 1:
            names = tuple(sorted({o.split(".")[0] for o in owners}))
            tags = ", ".join(sorted(d.value for d in doms))
            is_port = any("." in o for o in owners)
            code = "port-domain-mismatch" if is_port else "domain-mismatch"
            add(Violation(code, f"node {node!r} mixes domains {tags} ({', '.join(names)})", names,
                          min(lines.get(n, 0) for n in names)))

    for owner in net.orientations:
        if net.lookup(owner) is None:
            add(Violation("unknown-orientation", f"dir refers to unknown {owner!r}", (owner,), 0))

    # Rule 2: PEs in series share the through direction, PEs in parallel the across direction.
    elems = {e.name: e for e in net.elements}

    def ends(e):
        if net.direction(e.name) > 0:
            return e.node_plus, e.node_minus
        return e.node_minus, e.node_plus

    for node, owners in sorted(incidence.items()):
        if len(owners) != 2 or not all(o in elems for o in owners):
            continue
        a, b = (elems[o] for o in owners)
        if a.domain is not b.domain:
            continue
        a_in = ends(a)[1] == node
        b_in = ends(b)[1] == node
        if a_in == b_in:
            add(Violation("rule-2-series",
                          f"{a.name} and {b.name} are in series at {node!r} but declare opposite "
                          f"positive {a.domain.through_symbol} directions",
                          (a.name, b.name), max(a.line, b.line)))
    by_pair: dict[tuple, list[Element]] = {}
    for e in net.elements:
        if e.node_plus != e.node_minus:
            by_pair.setdefault((e.domain, frozenset((e.node_plus, e.node_minus))), []).append(e)
    for group in by_pair.values():
        first = group[0]
        for other in group[1:]:
            if ends(other) != ends(first):
                add(Violation("rule-2-parallel",
                              f"{first.name} and {other.name} are in parallel but declare opposite "
                              f"positive {first.domain.across_symbol} directions",
                              (first.name, other.name), max(first.line, other.line)))
    return report
