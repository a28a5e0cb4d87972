"""Text artifacts: DOT block schemes, matrix reports, LaTeX, step traces and plot scripts."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import sympy as sp

from .pogir import PogScheme, check_loop_signs, detect_algebraic_loops
from .statespace import MATRICES, PogStateSpace, model_to_dict

STEP_TITLES = {
    1: "positive directions of states and inputs",
    2: "power sections",
    3: "dynamic elements with forced configuration",
    4: "remaining dynamic elements",
    5: "static elements",
    6: "summation node signs",
}


def circled(k: int) -> str:
    return chr(0x2460 + k - 1) if 1 <= k <= 20 else f"({k})"


def _q(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


# ------------------------------------------------------------------------- DOT

def render_dot(scheme: PogScheme) -> str:
    """Deterministic Graphviz digraph of the block scheme."""
    out = ["digraph POG {", "  rankdir=LR;", "  node [fontname=Helvetica];", "  edge [fontname=Helvetica];"]
    chain = scheme.chain
    if chain is None or not (scheme.blocks or scheme.nodes):
        out.append("}")
        return "\n".join(out) + "\n"
    upper = {i: pos for i, pos in enumerate(chain.line_assignment)}

    def rail(segment: int, line: str) -> str:
        across_top = upper.get(segment, "upper") == "upper"
        return "top" if (line == "across") == across_top else "bottom"

    producer: dict[str, str] = {}
    decl: dict[str, list[str]] = {}  # group -> node statements

    def emit(group: str, text: str):
        decl.setdefault(group, []).append(text)

    for sid in scheme.input_order:
        sig = scheme.signals[scheme.input_signal(sid)]
        nid = f"src:{sid}"
        producer[sig.id] = nid
        emit("", f"{_q(nid)} [shape=plaintext, label={_q(sig.label)}, group={rail(sig.segment, sig.line)}];")

    blocks = sorted(scheme.blocks, key=lambda b: (b.section_left, b.section_right, b.id))
    for b in blocks:
        if b.variant == "connection":
            fwd, back = b.paths
            producer[fwd.output] = f"{b.id}:k"
            producer[back.output] = f"{b.id}:kt"
            label = f"{{<k> {b.element} | <kt> {b.element}ᵀ}}"
            emit(b.group, f"{_q(b.id)} [shape=record, label={_q(label)}, tooltip={_q(b.config)}];")
        else:
            for p in b.paths:
                producer[p.output] = b.id
            line = scheme.signals[b.paths[0].output].line
            emit(b.group, f"{_q(b.id)} [shape=box, label={_q(b.gain_text())}, "
                          f"group={rail(b.segment, line)}, tooltip={_q(b.config)}];")
    nodes = sorted(scheme.nodes, key=lambda n: (n.section, n.id))
    for n in nodes:
        producer[n.output] = n.id
        out_label = scheme.signals[n.output].label
        emit(n.group, f"{_q(n.id)} [shape=circle, width=0.3, label=\"\", xlabel={_q(out_label)}, "
                      f"group={rail(n.segment, n.line)}];")

    for stmt in decl.get("", []):
        out.append("  " + stmt)
    for k, group in enumerate(sorted(g for g in decl if g), 1):
        out.append(f"  subgraph cluster_{k} {{")
        out.append(f"    label={_q(group)}; style=rounded;")
        out.extend("    " + stmt for stmt in decl[group])
        out.append("  }")

    # power sections as a dashed ruler
    secs = sorted(chain.sections, key=lambda s: s.index)
    for s in secs:
        out.append(f"  {_q(f'sec{s.index}')} [shape=plaintext, label={_q(circled(s.index))}, "
                   f"tooltip={_q(s.across_var + ' ' + s.through_var)}];")
    for a, b in zip(secs, secs[1:]):
        out.append(f"  {_q(f'sec{a.index}')} -> {_q(f'sec{b.index}')} [style=dashed, arrowhead=none];")

    def endpoint(nid: str) -> str:
        if nid.endswith(":k") or nid.endswith(":kt"):
            base, port = nid.rsplit(":", 1)
            return f"{_q(base)}:{port}"
        return _q(nid)

    for b in blocks:
        for i, p in enumerate(b.paths):
            if p.input.signal is None:
                continue
            dst = b.id if b.variant == "elaboration" else f"{b.id}:{'k' if i == 0 else 'kt'}"
            label = scheme.signals[p.input.signal].label
            out.append(f"  {endpoint(producer[p.input.signal])} -> {endpoint(dst)} [label={_q(label)}];")
    for n in nodes:
        for t in n.inputs:
            if t.signal is None:
                continue
            sign = "+" if (t.sign if t.sign is not None else t.base) > 0 else "-"
            label = scheme.signals[t.signal].label
            out.append(f"  {endpoint(producer[t.signal])} -> {_q(n.id)} "
                       f"[label={_q(label)}, headlabel={_q(sign)}];")
    out.append("}")
    return "\n".join(out) + "\n"


# -------------------------------------------------------------------- matrices

def _cells(ss: PogStateSpace, key: str) -> list[list[str]]:
    if ss.symbolic is not None:
        m = ss.symbolic[key]
        return [[str(m[i, j]) for j in range(m.shape[1])] for i in range(m.shape[0])]
    return [[f"{v:.6g}" for v in row] for row in np.asarray(getattr(ss, key))]


def _table(rows: list[list[str]], row_labels: list[str], col_labels: list[str]) -> list[str]:
    if not rows or not col_labels:
        return ["  (empty)"]
    grid = [["", *col_labels]] + [[r, *row] for r, row in zip(row_labels, rows)]
    widths = [max(len(g[j]) for g in grid) for j in range(len(grid[0]))]
    return ["  " + "  ".join(c.rjust(w) for c, w in zip(g, widths)).rstrip() for g in grid]


def matrices_text(ss: PogStateSpace) -> str:
    """Aligned text of L, A, B, C, D with row and column labels."""
    axes = {"L": (ss.state_labels, ss.state_labels), "A": (ss.state_labels, ss.state_labels),
            "B": (ss.state_labels, ss.input_labels), "C": (ss.output_labels, ss.state_labels),
            "D": (ss.output_labels, ss.input_labels)}
    lines = []
    for k in MATRICES:
        rows, cols = axes[k]
        lines.append(f"{k}:")
        lines.extend(_table(_cells(ss, k), list(rows), list(cols)))
    return "\n".join(lines) + "\n"


def matrices_json(ss: PogStateSpace) -> str:
    return json.dumps(model_to_dict(ss), indent=2, sort_keys=False) + "\n"


def _latex_matrix(m: sp.Matrix) -> str:
    if m.shape[0] == 0 or m.shape[1] == 0:
        return r"\varnothing"
    return sp.latex(m, mat_delim="[", mat_str="matrix")


def _latex_vec(labels: list[str]) -> str:
    return r"\begin{bmatrix}" + r" \\ ".join(sp.latex(sp.Symbol(s)) for s in labels) + r"\end{bmatrix}"


def latex(ss: PogStateSpace) -> str:
    """POG form ``L xdot = A x + B u``, ``y = C x + D u`` as a LaTeX align block."""
    mats = ss.symbolic if ss.symbolic is not None else {k: sp.Matrix(getattr(ss, k)) for k in MATRICES}
    x, u = _latex_vec(ss.state_labels), _latex_vec(ss.input_labels)
    lines = [r"\begin{align*}",
             rf"\underbrace{{{_latex_matrix(mats['L'])}}}_{{L}} \dot{{{x}}} &= "
             rf"\underbrace{{{_latex_matrix(mats['A'])}}}_{{A}} {x} + "
             rf"\underbrace{{{_latex_matrix(mats['B'])}}}_{{B}} {u} \\"]
    if ss.p:
        y = _latex_vec(ss.output_labels)
        lines.append(rf"{y} &= {_latex_matrix(mats['C'])} {x} + {_latex_matrix(mats['D'])} {u}")
    lines.append(r"\end{align*}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- steps, sections

def sections_text(scheme_or_chain) -> str:
    chain = getattr(scheme_or_chain, "chain", scheme_or_chain)
    rows = [["#", "segment", "domain", "left", "right", "across", "through"]]
    domains = {seg.index: seg.domain.value for seg in chain.segments}
    for s in sorted(chain.sections, key=lambda s: s.index):
        rows.append([str(s.index), str(s.segment), domains.get(s.segment, ""), s.left_block, s.right_block,
                     s.across_var, s.through_var])
    widths = [max(len(r[j]) for r in rows) for j in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def steps_text(scheme: PogScheme) -> str:
    """Step 1 ... Step 6 trace of the derivation."""
    net = scheme.net
    lines = []
    lines.append(f"Step 1: {STEP_TITLES[1]}")
    for name in scheme.state_order:
        e = net.element(name)
        lines.append(f"  state {e.label(e.state_var)}  ({e.etype}, {e.node_plus} -> {e.node_minus})")
    for name in scheme.input_order:
        s = net.lookup(name)
        lines.append(f"  input {s.label(s.imposed)}  (direction {net.direction(name):+d})")
    lines.append(f"Step 2: {STEP_TITLES[2]}")
    lines.extend("  " + row for row in sections_text(scheme.chain).rstrip("\n").split("\n"))
    for step in range(3, 7):
        lines.append(f"Step {step}: {STEP_TITLES[step]}")
        lines.extend(f"  {text}" for s, text in scheme.trace if s == step)
    for note in scheme.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- report

def run_checks(ss: PogStateSpace, scheme: PogScheme | None = None) -> dict:
    checks = {"psd": bool(ss.psd_check())}
    if scheme is not None:
        rep = check_loop_signs(scheme)
        checks["loop_parity"] = {"ok": rep.ok, "cycles": len(rep.cycles), "violations": rep.violations}
        checks["algebraic_loops"] = detect_algebraic_loops(scheme)
    return checks


def export_report(ss: PogStateSpace, scheme: PogScheme | None = None, csv_path=None,
                  out_dir=None) -> dict:
    """JSON-ready report; with ``out_dir`` also writes report.json, matrices.txt and steps.txt."""
    data = model_to_dict(ss)
    report = {k: data[k] for k in ("states", "inputs", "outputs", *MATRICES)}
    report["checks"] = run_checks(ss, scheme)
    if scheme is not None:
        report["steps"] = [[s, text] for s, text in scheme.trace]
    if csv_path is not None:
        report["trajectory_csv"] = str(csv_path)
    if out_dir is not None:
        d = Path(out_dir)
        try:
            d.mkdir(parents=True, exist_ok=True)
            (d / "report.json").write_text(json.dumps(report, indent=2) + "\n")
            (d / "matrices.txt").write_text(matrices_text(ss))
            if scheme is not None:
                (d / "steps.txt").write_text(steps_text(scheme))
        except OSError as exc:
            raise OSError(f"{d}: {exc.strerror or exc}") from exc
    return report


# ----------------------------------------------------------------------- plots

PLOT_SCRIPT = '''"""Plot a pogc trajectory CSV (generated file)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
with open(path) as fh:
    rows = list(csv.reader(fh))
header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
cols = list(zip(*data))
fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
for j in range(1, 1 + {n_states}):
    axes[0].plot(cols[0], cols[j], label=header[j])
axes[0].set_ylabel("states")
axes[0].legend(loc="best")
axes[1].plot(cols[0], cols[header.index("E_s")], label="E_s")
axes[1].set_ylabel("stored energy")
axes[1].set_xlabel("t [s]")
fig.tight_layout()
fig.savefig({png!r})
'''


def plot_script(csv_path, n_states: int, png_path=None) -> str:
    csv_path = str(csv_path)
    png = str(png_path) if png_path else str(Path(csv_path).with_suffix(".png"))
    return PLOT_SCRIPT.format(csv=csv_path, n_states=n_states, png=png)


def plot_trajectory(tr, path) -> None:
    """Save a PNG of the trajectory (needs matplotlib)."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise RuntimeError("--plot needs matplotlib (pip install 'artifact[plot]')") from exc
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for j, lab in enumerate(tr.state_labels):
        axes[0].plot(tr.times, tr.states[:, j], label=lab)
    axes[0].legend(loc="best")
    axes[1].plot(tr.times, tr.energy)
    axes[1].set_ylabel("E_s")
    axes[1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
