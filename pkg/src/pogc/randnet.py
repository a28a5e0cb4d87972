"""Random netlists for property tests: series-parallel chains and Wheatstone bridges."""

from __future__ import annotations

import random

from .netlist import ELEMENT_TYPES, Domain

DOMAIN_TYPES = {d: [t for t, (_, dom) in ELEMENT_TYPES.items() if dom is d] for d in Domain}


def _split(n: int, rng: random.Random) -> list[int]:
    k = rng.randint(2, min(3, n))
    cuts = sorted(rng.sample(range(1, n), k - 1))
    return [b - a for a, b in zip([0, *cuts], [*cuts, n])]


def _tree(n: int, depth: int, rng: random.Random, kind=None):
    if n == 1 or depth == 0:
        return "leaf"
    kind = kind or rng.choice("SP")
    other = "P" if kind == "S" else "S"
    return (kind, [_tree(k, depth - 1, rng, other) for k in _split(n, rng)])


class _Builder:
    def __init__(self, rng: random.Random, prefix: str, flip: bool):
        self.rng = rng
        self.prefix = prefix
        self.flip = flip
        self.count = 0

    def node(self) -> str:
        self.count += 1
        return f"{self.prefix}n{self.count}"

    def place(self, tree, a: str, b: str, leaves: list):
        if tree == "leaf":
            swap = self.flip and self.rng.random() < 0.5
            leaves.append((b, a) if swap else (a, b))
            return
        kind, kids = tree
        if kind == "P":
            for k in kids:
                self.place(k, a, b, leaves)
        else:
            nodes = [a] + [self.node() for _ in kids[:-1]] + [b]
            for k, x, y in zip(kids, nodes, nodes[1:]):
                self.place(k, x, y, leaves)


def _counts(total: int, parts: int, rng: random.Random) -> list[int]:
    out = [1] * parts
    for _ in range(total - parts):
        out[rng.randrange(parts)] += 1
    return out


def random_sp_netlist(rng: random.Random | int, max_elements: int = 8, max_couplings: int = 2,
                      max_depth: int = 5, domains=None, random_orientation: bool = False) -> str:
    """Chain of series-parallel segments joined by transformers/gyrators.

    Segment 0 is driven by a source between its first node and ground; the last
    segment ends in a second source or is left open.  Elements point from the
    driven side to ground unless ``random_orientation`` is set (which may break
    the shared-direction rule checked by ``validate``).
    """
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    domains = list(domains or Domain)
    n_cb = rng.randint(0, max_couplings)
    n_seg = n_cb + 1
    total = rng.randint(n_seg, max(n_seg, max_elements))
    per = _counts(total, n_seg, rng)
    seg_dom = [rng.choice(domains) for _ in range(n_seg)]
    lines = ["# random series-parallel chain"]
    name_no = 0
    left_port = None
    for s in range(n_seg):
        dom = seg_dom[s]
        b = _Builder(rng, f"s{s}", random_orientation)
        if s == 0:
            first = b.node()
            kind = rng.choice(["across", "through"])
            lines.append(f"src U0 {kind} {dom.value} {first} gnd const:{rng.uniform(0.5, 2):.3f}")
            ends = (first, "gnd")
        else:
            ends = left_port
        last = s == n_seg - 1
        terminal = "coupling" if not last else rng.choice(["source", "source", "open"])
        n_leaves = per[s] + (terminal != "open")
        tree = _tree(n_leaves, max_depth, rng)
        leaves: list = []
        b.place(tree, ends[0], ends[1], leaves)
        slot = rng.randrange(n_leaves) if terminal != "open" else None
        for k, (x, y) in enumerate(leaves):
            if k == slot:
                if terminal == "source":
                    kind = rng.choice(["across", "through"])
                    lines.append(f"src U1 {kind} {dom.value} {x} {y} const:{rng.uniform(0.5, 2):.3f}")
                else:
                    nxt = seg_dom[s + 1]
                    port_a = f"{dom.value}({x},{y})"
                    q = f"s{s + 1}n0"
                    port_b = f"{nxt.value}({q},gnd)" if rng.random() < 0.5 else f"{nxt.value}(gnd,{q})"
                    left_port = (q, "gnd") if port_b.endswith(",gnd)") else ("gnd", q)
                    ctype = rng.choice(["xfmr", "gyr"])
                    ratio = rng.uniform(0.2, 3.0) * rng.choice([1, -1])
                    if rng.random() < 0.5:
                        lines.append(f"cb K{s} {ctype} {port_a} {port_b} {ratio:.4f}")
                    else:
                        lines.append(f"cb K{s} {ctype} {port_b} {port_a} {ratio:.4f}")
                continue
            name_no += 1
            etype = rng.choice(DOMAIN_TYPES[dom])
            inv = " inv" if rng.random() < 0.1 else ""
            lines.append(f"el E{name_no} {etype} {dom.value} {x} {y} {rng.uniform(0.5, 5):.4f}{inv}")
    return "\n".join(lines) + "\n"


def random_parameters(names, rng: random.Random) -> dict[str, float]:
    return {n: rng.uniform(0.1, 10.0) for n in names}


def wheatstone_netlist(rng: random.Random | int, domain: Domain | None = None) -> str:
    """Source feeding a bridge of five elements: never series-parallel."""
    rng = rng if isinstance(rng, random.Random) else random.Random(rng)
    dom = domain or rng.choice(list(Domain))
    types = DOMAIN_TYPES[dom]
    edges = [("a", "b"), ("a", "c"), ("b", "c"), ("b", "gnd"), ("c", "gnd")]
    lines = [f"src U0 {rng.choice(['across', 'through'])} {dom.value} a gnd const:1"]
    for k, (x, y) in enumerate(edges, 1):
        if rng.random() < 0.5:
            x, y = y, x
        lines.append(f"el E{k} {rng.choice(types)} {dom.value} {x} {y} {rng.uniform(0.5, 5):.3f}")
    return "\n".join(lines) + "\n"
