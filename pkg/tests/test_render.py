import json
import re

import pytest

from pogc.casestudies import fixture_path
from pogc.pogir import PogScheme, flip_sign
from pogc.render import (circled, export_report, latex, matrices_json, matrices_text, plot_script,
                         plot_trajectory, render_dot, sections_text, steps_text)
from pogc.sim import SimConfig, simulate, trajectory_csv

from conftest import derive_fixture

ID = r'"(?:[^"\\]|\\.)*"'
VALUE = rf'(?:{ID}|[A-Za-z0-9_.]+)'
ATTRS = rf'\[\s*[a-z]+={VALUE}(?:\s*,\s*[a-z]+={VALUE})*\s*\]'
NODE = re.compile(rf'^{ID}\s*{ATTRS};$')
EDGE = re.compile(rf'^({ID})(?::(\w+))?\s*->\s*({ID})(?::(\w+))?\s*{ATTRS};$')
DEFAULTS = re.compile(rf'^(?:node|edge)\s*{ATTRS};$|^[a-z]+={VALUE};(?:\s*[a-z]+={VALUE};)*$')


def parse_dot(text):
    """Check the statement grammar we emit; return (node ids, edges, clusters)."""
    lines = [ln.strip() for ln in text.strip().split("\n")]
    assert lines[0] == "digraph POG {" and lines[-1] == "}"
    depth, nodes, edges, clusters = 1, {}, [], 0
    for ln in lines[1:-1]:
        if ln.startswith("subgraph cluster_") and ln.endswith("{"):
            depth += 1
            clusters += 1
        elif ln == "}":
            depth -= 1
            assert depth >= 1
        elif m := EDGE.match(ln):
            edges.append((m.group(1), m.group(2), m.group(3), m.group(4)))
        elif NODE.match(ln):
            nid = ln.split(" [", 1)[0]
            assert nid not in nodes, f"node {nid} declared twice"
            nodes[nid] = ln
        else:
            assert DEFAULTS.match(ln), f"not DOT: {ln!r}"
    assert depth == 1
    for src, sport, dst, dport in edges:
        assert src in nodes and dst in nodes
        for nid, port in ((src, sport), (dst, dport)):
            if port:
                assert f"<{port}>" in nodes[nid]
    return nodes, edges, clusters


def shapes(nodes):
    out = {}
    for stmt in nodes.values():
        shape = re.search(r"shape=(\w+)", stmt).group(1)
        out[shape] = out.get(shape, 0) + 1
    return out


def test_motor_pump_dot_counts():
    nodes, edges, clusters = parse_dot(render_dot(derive_fixture("motor_pump")[2]))
    sh = shapes(nodes)
    assert sh["box"] + sh["record"] == 8
    assert sh["record"] == 2
    assert sh["circle"] == 6
    sections = [n for n in nodes if n.startswith('"sec')]
    assert len(sections) == 9
    assert clusters == 0


def test_dot_is_well_formed_for_every_fixture(fixture_name):
    nodes, edges, _ = parse_dot(render_dot(derive_fixture(fixture_name)[2]))
    assert edges


def test_nested_branch_becomes_cluster():
    text = render_dot(derive_fixture("hydraulic_fig11")[2])
    _, _, clusters = parse_dot(text)
    assert clusters == 1
    assert 'label="(L3||R5)"' in text


def test_summation_signs_shown():
    scheme = derive_fixture("electrical_fig10")[2]
    text = render_dot(scheme)
    assert '"src:Va" -> "SN1" [label="V_Va", headlabel="+"];' in text
    flip_sign(scheme, "SN1", 0)
    assert '"src:Va" -> "SN1" [label="V_Va", headlabel="-"];' in render_dot(scheme)


def test_dot_is_deterministic():
    a = render_dot(derive_fixture("clutch")[2])
    b = render_dot(derive_fixture("clutch")[2])
    assert a == b


def test_empty_scheme():
    text = render_dot(PogScheme(chain=None))
    parse_dot(text)
    assert text.endswith("}\n")


def test_circled_numbers():
    assert circled(1) == "①" and circled(20) == "⑳" and circled(21) == "(21)"


def test_matrices_text_has_labels():
    text = matrices_text(derive_fixture("motor_pump")[3])
    assert text.startswith("L:\n")
    assert "I_L1" in text and "-K12" in text
    for k in "LABCD":
        assert f"\n{k}:\n" in "\n" + text


def test_matrices_json_roundtrips():
    data = json.loads(matrices_json(derive_fixture("clutch")[3]))
    assert data["states"] == ["P_C_m", "v_m_p", "F_K_m"]
    assert data["A"][0] == ["-R_v", "-A", 0]


def test_latex():
    text = latex(derive_fixture("motor_pump")[3])
    assert text.startswith("\\begin{align*}") and text.rstrip().endswith("\\end{align*}")
    assert "\\underbrace" in text and "L_{1}" in text


def test_sections_and_steps():
    scheme = derive_fixture("electrical_fig10")[2]
    sec = sections_text(scheme).split("\n")
    assert sec[0].split() == ["#", "segment", "domain", "left", "right", "across", "through"]
    assert len([ln for ln in sec if ln.strip()]) == 8
    steps = steps_text(scheme)
    for k in range(1, 7):
        assert f"Step {k}:" in steps
    assert "state V_C1  (cap, n1 -> nA)" in steps
    assert "L3: S-a" in steps


def test_report(tmp_path):
    _, _, scheme, model = derive_fixture("motor_pump")
    rep = export_report(model, scheme, out_dir=tmp_path)
    assert rep["checks"]["psd"] and rep["checks"]["loop_parity"]["ok"]
    assert rep["checks"]["algebraic_loops"] == []
    assert json.loads((tmp_path / "report.json").read_text()) == rep
    first = (tmp_path / "steps.txt").read_bytes()
    export_report(model, scheme, out_dir=tmp_path)
    assert (tmp_path / "steps.txt").read_bytes() == first


def test_report_without_states():
    from pogc import derive

    rep = export_report(derive(fixture_path("resistor_ring.pog").read_text()))
    assert rep["states"] == [] and rep["L"] == [] and rep["checks"]["psd"]


def test_plot_script_compiles(tmp_path):
    src = plot_script(tmp_path / "run.csv", 3)
    compile(src, "plot.py", "exec")
    assert "run.png" in src


def test_plot_png(tmp_path):
    pytest.importorskip("matplotlib")
    model = derive_fixture("clutch")[3]
    tr = simulate(model, cfg=SimConfig(t_end=0.1, dt=1e-3))
    plot_trajectory(tr, tmp_path / "a.png")
    assert (tmp_path / "a.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert trajectory_csv(tr).startswith("t,P_C_m,v_m_p,F_K_m,")
