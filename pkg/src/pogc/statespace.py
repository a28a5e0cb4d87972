"""POG state-space models: extraction from a scheme, direct assembly, model algebra.

A model is ``L x' = A x + B u``, ``y = C x + D u`` with ``L`` symmetric positive
semidefinite.  Matrices are kept numerically (numpy) and, when the model was
derived from a netlist, symbolically (sympy) in the element names.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.linalg as sla
import sympy as sp

from .errors import AlgebraicLoop, ModelFormatError, PoleAtS, SingularEnergyMatrix, SingularT
from .netlist import IMPEDANCE_FORM, Kind, Netlist
from .pogir import Coef, PogScheme, Term
from .topology import Leaf, Parallel, Series, SPChain

MATRICES = ("L", "A", "B", "C", "D")
COND_LIMIT = 1e12


# ------------------------------------------------------------------ arithmetic

class Arith:
    """Scalar field used by the exact/symbolic/float derivation routes."""

    name = "float"

    def __init__(self, params: dict | None = None):
        self.params = params or {}

    def const(self, k: int):
        return float(k)

    def coef(self, c: Coef):
        return c.evaluate(self.params, float)

    def is_zero(self, v) -> bool:
        return v == 0

    def finish(self, v):
        return v


class FractionArith(Arith):
    name = "fraction"

    def __init__(self, params: dict | None = None):
        super().__init__({k: Fraction(v) for k, v in (params or {}).items()})

    def const(self, k):
        return Fraction(k)

    def coef(self, c: Coef):
        return c.evaluate(self.params, Fraction)


class SymbolicArith(Arith):
    name = "symbolic"

    def const(self, k):
        return sp.Integer(k)

    def coef(self, c: Coef):
        return c.expr()

    def is_zero(self, v) -> bool:
        return sp.cancel(v) == 0

    def finish(self, v):
        return sp.expand(sp.cancel(sp.together(v))) if not isinstance(v, sp.Integer) else v


def arith_for(mode: str, params: dict | None = None) -> Arith:
    return {"float": Arith, "fraction": FractionArith, "symbolic": SymbolicArith}[mode](params)


# ----------------------------------------------------------------------- model

@dataclass
class PogStateSpace:
    L: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_labels: list[str]
    input_labels: list[str]
    output_labels: list[str]
    symbolic: dict[str, sp.Matrix] | None = None
    params: dict[str, float] = field(default_factory=dict)
    time_variant_hook: Callable | None = None  # (t, x) -> (L, A, B) overrides
    hook_spec: dict | None = None
    signals: dict[str, str] = field(default_factory=dict)
    x0: list[float] | None = None

    def __post_init__(self):
        n, m, p = len(self.state_labels), len(self.input_labels), len(self.output_labels)
        self.L = np.asarray(self.L, dtype=float).reshape(n, n)
        self.A = np.asarray(self.A, dtype=float).reshape(n, n)
        self.B = np.asarray(self.B, dtype=float).reshape(n, m)
        self.C = np.asarray(self.C, dtype=float).reshape(p, n)
        self.D = np.asarray(self.D, dtype=float).reshape(p, m)

    @property
    def n(self) -> int:
        return len(self.state_labels)

    @property
    def m(self) -> int:
        return len(self.input_labels)

    @property
    def p(self) -> int:
        return len(self.output_labels)

    def matrices(self):
        return self.L, self.A, self.B, self.C, self.D

    def at(self, t: float, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(L, A, B) at time t and state x; constant unless a hook is set."""
        if self.time_variant_hook is None:
            return self.L, self.A, self.B
        return self.time_variant_hook(t, x)

    def with_params(self, overrides: dict[str, float]) -> "PogStateSpace":
        """Re-evaluate the symbolic matrices with some parameters replaced."""
        params = dict(self.params)
        unknown = set(overrides) - set(params)
        if unknown:
            raise ModelFormatError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        params.update(overrides)
        if self.symbolic is None:
            return replace(self, params=params)
        nums, hook = _numeric(self.symbolic, params, self.hook_spec, self.state_labels, self.x0)
        return replace(self, **nums, params=params, time_variant_hook=hook)

    def psd_check(self, tol: float = 1e-12) -> bool:
        if self.n == 0:
            return True
        if not np.allclose(self.L, self.L.T, atol=0, rtol=0):
            return False
        eig = np.linalg.eigvalsh(self.L)
        return bool(eig.min() >= -tol * max(np.linalg.norm(self.L), 1.0))


def evaluate_matrix(m: sp.Matrix, params: dict) -> np.ndarray:
    subs = {sp.Symbol(k): v for k, v in params.items()}
    rows, cols = m.shape
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            v = m[i, j]
            out[i, j] = float(v.xreplace(subs)) if v.free_symbols else float(v)
    return out


def symbolic_entry_text(v) -> str:
    return str(v) if not isinstance(v, (int, float)) else repr(v)


# ------------------------------------------------------------------ extraction

def scheme_matrices(scheme: PogScheme, arith: Arith) -> dict[str, list[list]]:
    """Property 3: each entry is the summed gain of the integrator-free paths."""
    states = scheme.state_order
    inputs = scheme.input_order
    index = {scheme.state_signal(n): ("x", i) for i, n in enumerate(states)}
    index.update({scheme.input_signal(n): ("u", j) for j, n in enumerate(inputs)})
    producers: dict[str, tuple] = {}
    for node in scheme.nodes:
        producers[node.output] = ("sum", node.inputs)
    integrators = {}
    for block in scheme.blocks:
        for path in block.paths:
            if path.integral:
                integrators[path.output] = (block, path)
            else:
                producers[path.output] = ("gain", path.gain, path.input)
    zero = arith.const(0)
    memo: dict[str, dict] = {}
    active: set[str] = set()

    def value(sig: str) -> dict:
        if sig in index:
            return {index[sig]: arith.const(1)}
        if sig in memo:
            return memo[sig]
        if sig in active:
            raise AlgebraicLoop(f"static cycle through {scheme.signals[sig].label}",
                                names=(scheme.signals[sig].label,))
        active.add(sig)
        kind, *rest = producers[sig]
        acc: dict = {}
        if kind == "sum":
            for t in rest[0]:
                _accumulate(acc, term(t), arith.const(1))
        else:
            gain, t = rest
            _accumulate(acc, term(t), arith.coef(gain))
        active.discard(sig)
        memo[sig] = acc
        return acc

    def term(t: Term) -> dict:
        if t.signal is None:
            return {}
        sign = t.sign if t.sign is not None else t.base
        return {k: v * sign for k, v in value(t.signal).items()}

    def _accumulate(acc, contrib, factor):
        for k, v in contrib.items():
            acc[k] = acc.get(k, zero) + v * factor

    n, m, p = len(states), len(inputs), len(scheme.outputs)
    L = [[zero] * n for _ in range(n)]
    A = [[zero] * n for _ in range(n)]
    B = [[zero] * m for _ in range(n)]
    C = [[zero] * n for _ in range(p)]
    D = [[zero] * m for _ in range(p)]
    for i, name in enumerate(states):
        block, path = integrators[scheme.state_signal(name)]
        L[i][i] = arith.coef(path.gain)
        _fill(A[i], B[i], term(path.input))
    for k, t in enumerate(scheme.outputs):
        _fill(C[k], D[k], term(t))
    return _finish(arith, {"L": L, "A": A, "B": B, "C": C, "D": D})


def _fill(row_x, row_u, contrib):
    for (kind, idx), v in contrib.items():
        (row_x if kind == "x" else row_u)[idx] = v


def _finish(arith, mats):
    return {k: [[arith.finish(v) for v in row] for row in rows] for k, rows in mats.items()}


def _net_params(net: Netlist) -> dict[str, float]:
    return net.params()


def extract_state_space(scheme: PogScheme, params: dict | None = None) -> PogStateSpace:
    """Symbolic extraction plus numeric evaluation at the netlist values (or ``params``)."""
    sym = scheme_matrices(scheme, SymbolicArith())
    return _model_from_symbolic(sym, scheme.net, scheme.state_labels, scheme.input_labels,
                                scheme.output_labels, params)


def _model_from_symbolic(sym, net, states, inputs, outputs, params=None) -> PogStateSpace:
    values = dict(_net_params(net))
    if params:
        values.update(params)
    shapes = {"L": (len(states), len(states)), "A": (len(states), len(states)),
              "B": (len(states), len(inputs)), "C": (len(outputs), len(states)),
              "D": (len(outputs), len(inputs))}
    mats = {k: sp.Matrix(*shapes[k], [v for row in sym[k] for v in row]) if all(shapes[k])
            else sp.zeros(*shapes[k]) for k in MATRICES}
    nums = {k: evaluate_matrix(v, values) for k, v in mats.items()}
    signals = {}
    for src in net.sources:
        signals[src.label(src.imposed)] = src.signal
    return PogStateSpace(**nums, state_labels=list(states), input_labels=list(inputs),
                         output_labels=list(outputs), symbolic=mats, params=values, signals=signals)


# ------------------------------------------------------------- direct assembly

class _System:
    """Sparse linear equations sum(c_k z_k) = sum(d_j w_j) over unknowns z and knowns w."""

    def __init__(self, arith: Arith):
        self.ar = arith
        self.rows: list[tuple[dict, dict]] = []
        self.count = 0

    def var(self) -> int:
        self.count += 1
        return self.count - 1

    def eq(self, lhs: dict, rhs: dict | None = None):
        self.rows.append((dict(lhs), dict(rhs or {})))

    def solve(self) -> dict[int, dict]:
        ar = self.ar
        rows = [(dict(l), dict(r)) for l, r in self.rows]
        solved: dict[int, tuple[dict, dict]] = {}
        order = []
        pending = rows
        while pending:
            # pick the row with the fewest unknowns, preferring unit pivots
            best = None
            for idx, (lhs, rhs) in enumerate(pending):
                live = {k: v for k, v in lhs.items() if not ar.is_zero(v)}
                pending[idx] = (live, rhs)
                if not live:
                    if any(not ar.is_zero(v) for v in rhs.values()):
                        raise AlgebraicLoop("inconsistent balance equations")
                    continue
                unit = any(v in (1, -1) for v in live.values())
                score = (len(live), 0 if unit else 1)
                if best is None or score < best[0]:
                    best = (score, idx)
            if best is None:
                break
            lhs, rhs = pending.pop(best[1])
            piv = next((k for k, v in sorted(lhs.items()) if v in (1, -1)), min(lhs))
            pc = lhs[piv]
            expr_z = {k: -v / pc for k, v in lhs.items() if k != piv}
            expr_w = {k: v / pc for k, v in rhs.items()}
            solved[piv] = (expr_z, expr_w)
            order.append(piv)
            new_pending = []
            for l2, r2 in pending:
                if piv in l2:
                    c = l2.pop(piv)
                    for k, v in expr_z.items():
                        l2[k] = l2.get(k, 0) + c * v
                    for k, v in expr_w.items():
                        r2[k] = r2.get(k, 0) - c * v
                new_pending.append((l2, r2))
            pending = new_pending
        result: dict[int, dict] = {}
        for piv in reversed(order):
            expr_z, expr_w = solved[piv]
            acc = dict(expr_w)
            for k, v in expr_z.items():
                if ar.is_zero(v):
                    continue
                if k not in result:
                    raise AlgebraicLoop("balance equations leave a static variable undetermined")
                for w, c in result[k].items():
                    acc[w] = acc.get(w, 0) + v * c
            result[piv] = acc
        return result


def direct_matrices(chain: SPChain, arith: Arith, outputs=None) -> dict:
    """Write the series/parallel balance laws of every tree node and solve them.

    Each node carries an across unknown ``e`` and a through unknown ``f`` in the
    tree orientation.  Series children share ``f`` and add up ``e``; parallel
    children share ``e`` and add up ``f``.  Element laws, sources and coupling
    ports close the system.  Returns the matrices plus state/input/output names.
    """
    net = chain.net
    ar = arith
    one = ar.const(1)
    sysm = _System(ar)
    states: list[str] = []
    state_eq: dict[str, tuple[str, int, object]] = {}  # name -> (other unknown, sign, L coef)
    var_of: dict[tuple[str, str], tuple[int, int]] = {}  # (owner, e|f) -> (unknown, sign)

    def sigma(name, start):
        item = net.lookup(name)
        geom = 1 if item.node_plus == start else -1
        return geom * net.direction(name)

    def walk(node, e, f, seg):
        if isinstance(node, Leaf):
            leaf_eqs(node, e, f, seg)
            return
        kids = [(sysm.var(), sysm.var()) for _ in node.children]
        if isinstance(node, Series):
            sysm.eq({e: one, **_neg_sum(ar, [k[0] for k in kids])})
            for _, kf in kids:
                sysm.eq({kf: one, f: -one})
        else:
            sysm.eq({f: one, **_neg_sum(ar, [k[1] for k in kids])})
            for ke, _ in kids:
                sysm.eq({ke: one, e: -one})
        for child, (ke, kf) in zip(node.children, kids):
            walk(child, ke, kf, seg)

    ports: dict[str, dict] = {}

    def leaf_eqs(leaf: Leaf, e, f, seg):
        if leaf.role == "open":
            sysm.eq({f: one})
            return
        if leaf.role == "coupling":
            ports[leaf.name] = {"leaf": leaf, "e": e, "f": f}
            return
        s = sigma(leaf.name, leaf.start) * one
        var_of[(leaf.name, "e")] = (e, s)
        var_of[(leaf.name, "f")] = (f, s)
        item = net.lookup(leaf.name)
        if leaf.role == "source":
            imposed = e if item.kind is Kind.GE else f
            sysm.eq({imposed: one}, {("u", item.name): s})
            return
        coef = ar.coef(Coef(item.name, -1 if item.inverse else 1))
        if item.kind is Kind.R:
            if item.etype in IMPEDANCE_FORM:
                sysm.eq({e: one, f: -coef})
            else:
                sysm.eq({f: one, e: -coef})
            return
        stored, other = (e, f) if item.kind is Kind.DE else (f, e)
        sysm.eq({stored: one}, {("x", item.name): s})
        state_eq[item.name] = (other, s, coef)

    roots = []
    for seg in chain.segments:
        e, f = sysm.var(), sysm.var()
        roots.append((e, f))
        walk(seg.tree, e, f, seg.index)
    if chain.segments:
        src = net.lookup(chain.segments[0].left.name)
        e0, f0 = roots[0]
        s0 = net.direction(src.name) * one
        sysm.eq({e0 if src.kind is Kind.GE else f0: one}, {("u", src.name): s0})
        var_of[(src.name, "e")] = (e0, s0)
        var_of[(src.name, "f")] = (f0, s0)
    for k, link in enumerate(chain.links):
        c = next(cc for cc in net.couplings if cc.name == link.coupling)
        up = ports[c.name]
        leaf = up["leaf"]
        ea, fa, eb, fb = (sysm.var() for _ in range(4))
        port_up = c.port_a if leaf.side == "a" else c.port_b
        geom = 1 if port_up.node_plus == leaf.start else -1
        re, rf = roots[k + 1]
        if leaf.side == "a":
            # leaf through enters the coupling at port a
            sysm.eq({up["e"]: one, ea: -geom * one})
            sysm.eq({up["f"]: one, fa: -geom * one})
            sysm.eq({re: one, eb: -one})
            sysm.eq({rf: one, fb: -one})
        else:
            sysm.eq({up["e"]: one, eb: -geom * one})
            sysm.eq({up["f"]: one, fb: geom * one})
            sysm.eq({re: one, ea: -one})
            sysm.eq({rf: one, fa: one})
        K = ar.coef(Coef(c.name))
        if c.kind == "transformer":
            sysm.eq({fb: one, fa: -K})
            sysm.eq({ea: one, eb: -K})
        else:
            sysm.eq({fb: one, ea: -K})
            sysm.eq({fa: one, eb: -K})

    sol = sysm.solve() if sysm.rows else {}
    states = [lf.name for lf in chain.element_leaves() if net.element(lf.name).kind.dynamic]
    inputs = [s.name for s in net.sources]
    zero = ar.const(0)

    def row(unknown, sign):
        expr = sol.get(unknown)
        if expr is None:
            raise AlgebraicLoop("a balance variable is not determined by states and inputs")
        rx = [zero] * len(states)
        ru = [zero] * len(inputs)
        for (kind, name), v in expr.items():
            if kind == "x":
                rx[states.index(name)] += v * sign
            else:
                ru[inputs.index(name)] += v * sign
        return rx, ru

    n = len(states)
    L = [[zero] * n for _ in range(n)]
    A, B = [], []
    for i, name in enumerate(states):
        other, s, coef = state_eq[name]
        L[i][i] = coef
        rx, ru = row(other, s)
        A.append(rx)
        B.append(ru)
    C, D = [], []
    for ref in (net.outputs if outputs is None else outputs):
        unknown, s = var_of[(ref.owner, ref.which)]
        rx, ru = row(unknown, s)
        C.append(rx)
        D.append(ru)
    mats = _finish(ar, {"L": L, "A": A, "B": B, "C": C, "D": D})
    mats["states"] = states
    mats["inputs"] = inputs
    return mats


def _neg_sum(ar, keys):
    return {k: -ar.const(1) for k in keys}


def assemble_direct(chain: SPChain, params: dict | None = None) -> PogStateSpace:
    """Independent oracle: balance equations from the SP tree, bypassing the scheme."""
    sym = direct_matrices(chain, SymbolicArith())
    net = chain.net
    states = [net.element(n).label(net.element(n).state_var) for n in sym["states"]]
    inputs = []
    for name in sym["inputs"]:
        s = net.lookup(name)
        inputs.append(s.label(s.imposed))
    outputs = [net.lookup(r.owner).label(r.which) for r in net.outputs]
    return _model_from_symbolic(sym, net, states, inputs, outputs, params)


# ---------------------------------------------------------------- model algebra

@dataclass
class ClassicalStateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_labels: list[str] = field(default_factory=list)
    input_labels: list[str] = field(default_factory=list)
    output_labels: list[str] = field(default_factory=list)


def energy_condition(L: np.ndarray) -> float:
    if L.size == 0:
        return 1.0
    return float(np.linalg.cond(L))


def factor_energy(L: np.ndarray):
    """LU factors of L, raising SingularEnergyMatrix on a numerically singular L."""
    cond = energy_condition(L)
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise SingularEnergyMatrix(
            f"energy matrix is singular (condition number {cond:.3g}); eliminate the degenerate state first")
    return sla.lu_factor(L)


def to_classical(ss: PogStateSpace) -> ClassicalStateSpace:
    if ss.n == 0:
        return ClassicalStateSpace(ss.A.copy(), ss.B.copy(), ss.C.copy(), ss.D.copy(),
                                   ss.state_labels, ss.input_labels, ss.output_labels)
    lu = factor_energy(ss.L)
    A = sla.lu_solve(lu, ss.A)
    B = sla.lu_solve(lu, ss.B) if ss.m else np.zeros((ss.n, 0))
    return ClassicalStateSpace(A, B, ss.C.copy(), ss.D.copy(),
                               list(ss.state_labels), list(ss.input_labels), list(ss.output_labels))


def transfer_matrix(ss, s: complex) -> np.ndarray:
    """H(s) = C (L s - A)^-1 B + D for a POG model, C (s I - A)^-1 B + D for a classical one."""
    if isinstance(ss, ClassicalStateSpace):
        n = ss.A.shape[0]
        L = np.eye(n)
    else:
        n = ss.n
        L = ss.L
    if n == 0:
        return ss.D.astype(complex)
    M = L * s - ss.A
    with warnings.catch_warnings():
        # an exact pole gives a zero pivot; reported below as PoleAtS
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M.astype(complex), check_finite=True)
    if np.min(np.abs(np.diag(lu))) <= 1e-14 * max(np.abs(M).max(), 1.0):
        raise PoleAtS(f"L s - A is singular at s = {s}")
    X = sla.lu_solve((lu, piv), ss.B.astype(complex))
    return ss.C @ X + ss.D


def stored_energy(ss: PogStateSpace, x) -> float:
    x = np.asarray(x, dtype=float)
    return 0.5 * float(x @ ss.L @ x)


def dissipated_power(ss: PogStateSpace, x, A: np.ndarray | None = None) -> float:
    x = np.asarray(x, dtype=float)
    A = ss.A if A is None else A
    As = 0.5 * (A + A.T)
    return float(x @ As @ x)


def similitude_transform(cs: ClassicalStateSpace, T, Tdot=None, t: float = 0.0) -> ClassicalStateSpace:
    """Ã = T⁻¹[ĀT − Ṫ], B̃ = T⁻¹B̄, C̃ = C T."""
    Tm = np.asarray(T(t) if callable(T) else T, dtype=float)
    Td = np.zeros_like(Tm) if Tdot is None else np.asarray(Tdot(t) if callable(Tdot) else Tdot, dtype=float)
    if Tm.shape[0] != Tm.shape[1]:
        raise SingularT("similitude needs a square T")
    if Tm.size and (not np.isfinite(np.linalg.cond(Tm)) or np.linalg.cond(Tm) > COND_LIMIT):
        raise SingularT("T is singular")
    lu = sla.lu_factor(Tm) if Tm.size else None
    A = sla.lu_solve(lu, cs.A @ Tm - Td) if Tm.size else cs.A
    B = sla.lu_solve(lu, cs.B) if Tm.size and cs.B.size else cs.B
    return ClassicalStateSpace(A, B, cs.C @ Tm, cs.D.copy(), cs.state_labels, cs.input_labels, cs.output_labels)


# ------------------------------------------------------------------ model JSON

def _entry(v):
    if isinstance(v, (sp.Basic,)):
        if v.is_number:
            f = float(v)
            return int(f) if f == int(f) else f
        return str(v)
    f = float(v)
    return int(f) if f == int(f) and abs(f) < 2**53 else f


def model_to_dict(ss: PogStateSpace, symbolic: bool = True) -> dict:
    out = {"states": list(ss.state_labels), "inputs": list(ss.input_labels),
           "outputs": list(ss.output_labels)}
    for k in MATRICES:
        if symbolic and ss.symbolic is not None:
            m = ss.symbolic[k]
            out[k] = [[_entry(m[i, j]) for j in range(m.shape[1])] for i in range(m.shape[0])]
        else:
            arr = getattr(ss, k)
            out[k] = [[_entry(v) for v in row] for row in arr]
    if ss.params:
        out["params"] = {k: ss.params[k] for k in sorted(ss.params)}
    if ss.hook_spec:
        out["hook"] = ss.hook_spec
    if ss.signals:
        out["signals"] = dict(ss.signals)
    if ss.x0 is not None:
        out["x0"] = list(ss.x0)
    return out


def model_from_dict(data: dict) -> PogStateSpace:
    try:
        states, inputs, outputs = (list(data[k]) for k in ("states", "inputs", "outputs"))
        params = {k: float(v) for k, v in data.get("params", {}).items()}
        shapes = {"L": (len(states), len(states)), "A": (len(states), len(states)),
                  "B": (len(states), len(inputs)), "C": (len(outputs), len(states)),
                  "D": (len(outputs), len(inputs))}
        mats = {}
        for k in MATRICES:
            rows = data.get(k, [])
            r, c = shapes[k]
            if r and c:
                if len(rows) != r or any(len(row) != c for row in rows):
                    raise ModelFormatError(f"matrix {k} must be {r}x{c}")
                entries = [sp.sympify(v) if isinstance(v, str) else sp.nsimplify(v) if isinstance(v, int)
                           else sp.Float(v) for row in rows for v in row]
                mats[k] = sp.Matrix(r, c, entries)
            else:
                mats[k] = sp.zeros(r, c)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, sp.SympifyError) as exc:
        raise ModelFormatError(f"bad model file: {exc}") from exc
    spec = data.get("hook")
    bound = set(spec.get("bind", {})) if isinstance(spec, dict) else set()
    free = set().union(*(m.free_symbols for m in mats.values())) if mats else set()
    missing = sorted(str(s) for s in free if str(s) not in params and str(s) not in bound)
    if missing:
        raise ModelFormatError(f"parameter(s) without value: {', '.join(missing)}")
    x0 = data.get("x0")
    nums, hook = _numeric(mats, params, spec, states, x0)
    return PogStateSpace(**nums, state_labels=states, input_labels=inputs, output_labels=outputs,
                         symbolic=mats, params=params, time_variant_hook=hook, hook_spec=spec,
                         signals=dict(data.get("signals", {})), x0=x0)


def _numeric(mats, params, spec, states, x0):
    """Numeric matrices (hooked ones taken at t = 0, x = x0) and the hook itself."""
    if spec is None:
        return {k: evaluate_matrix(v, params) for k, v in mats.items()}, None
    from .casestudies import make_hook

    hook = make_hook(spec, params, mats, states)
    nums = {k: evaluate_matrix(mats[k], params) for k in ("C", "D")}
    x = np.zeros(len(states)) if x0 is None else np.asarray(x0, dtype=float)
    nums.update(zip(("L", "A", "B"), hook(0.0, x)))
    return nums, hook


def load_model(path) -> PogStateSpace:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(data)


def save_model(ss: PogStateSpace, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(ss), fh, indent=2)
        fh.write("\n")


def numeric_close(a: np.ndarray, b: np.ndarray, rtol: float) -> bool:
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-300)
    return bool(np.abs(a - b).max(initial=0.0) <= rtol * scale)


__all__ = [
    "PogStateSpace", "ClassicalStateSpace", "extract_state_space", "assemble_direct", "to_classical",
    "transfer_matrix", "stored_energy", "dissipated_power", "similitude_transform", "scheme_matrices",
    "direct_matrices", "arith_for", "load_model", "save_model", "model_to_dict", "model_from_dict",
    "factor_energy",
]
