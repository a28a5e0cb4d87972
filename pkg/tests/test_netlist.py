import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pogc.errors import NetlistSyntaxError
from pogc.netlist import Domain, Kind, format_netlist, parse_netlist, validate
from pogc.randnet import random_sp_netlist

RC = """
# simple RC
src V1 across e n1 gnd const:1
el R1 res e n1 n2 2.5
el C1 cap e n2 gnd 1e-3   # trailing comment
out C1.e
"""


def test_parse_records():
    net = parse_netlist(RC)
    assert [e.name for e in net.elements] == ["R1", "C1"]
    c1 = net.element("C1")
    assert c1.kind is Kind.DE and c1.domain is Domain.ELECTRICAL
    assert (c1.node_plus, c1.node_minus, c1.value) == ("n2", "gnd", 1e-3)
    assert c1.state_var == "e" and c1.label("e") == "V_C1"
    src = net.sources[0]
    assert src.kind is Kind.GE and src.imposed == "e" and src.signal == "const:1"
    assert net.outputs[0].owner == "C1" and net.outputs[0].which == "e"
    assert net.params() == {"R1": 2.5, "C1": 1e-3}


def test_coupling_and_inverse_flag():
    net = parse_netlist("el R3 hres hy n5 gnd 0.5 inv\ncb K gyr mr(n4,gnd) hy(n5,gnd) -0.2\n")
    assert net.element("R3").inverse
    cb = net.couplings[0]
    assert cb.kind == "gyrator" and cb.ratio == -0.2
    assert cb.port_a.domain is Domain.ROTATIONAL and cb.port_b.node_plus == "n5"


def test_labels_resolve_as_outputs_and_dir():
    net = parse_netlist("el L1 ind e a gnd 1\nel R1 res e a gnd 1\nout I_L1\ndir R1 -\n")
    assert (net.outputs[0].owner, net.outputs[0].which) == ("L1", "f")
    assert net.direction("R1") == -1 and net.direction("L1") == 1


@pytest.mark.parametrize("text, line, column", [
    ("el R1 res e n1 gnd\n", 1, None),
    ("el R1 resistor e n1 gnd 1\n", 1, 7),
    ("\n\nel R1 res mt n1 gnd 1\n", 3, 11),
    ("el R1 res e n1 gnd -1\n", 1, 20),
    ("el R1 res e n1 gnd 1\nel R1 cap e n1 gnd 1\n", 2, 4),
    ("cb K xfmr e(a,gnd) mr(b gnd) 2\n", 1, None),
    ("cb K xfmr e(a,gnd) mr(b,gnd) 0\n", 1, None),
    ("src S sideways e a gnd const:1\n", 1, 7),
    ("wire a b\n", 1, 1),
    ("out nobody.e\n", 1, 5),
    ("el R1 res e n1 gnd 1 extra\n", 1, None),
])
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(NetlistSyntaxError) as info:
        parse_netlist(text)
    assert info.value.line == line
    if column is not None:
        assert info.value.column == column


def test_validation_flags_each_rule():
    text = """
src V across e a gnd const:1
el R1 res e a a 1
el R2 res e a b 1
el M1 mass mt b gnd 1
"""
    codes = {v.code for v in validate(parse_netlist(text))}
    assert {"self-loop", "domain-mismatch"} <= codes


def test_dangling_node():
    rep = validate(parse_netlist("src V across e a gnd const:1\nel R1 res e a b 1\n"))
    assert [v.code for v in rep] == ["dangling-node"]
    assert rep.violations[0].names == ("R1",)


def test_rule2_series_and_parallel():
    series = "src V across e a gnd const:1\nel R1 res e a b 1\nel R2 res e gnd b 1\n"
    assert [v.code for v in validate(parse_netlist(series))] == ["rule-2-series"]
    parallel = "src V across e a gnd const:1\nel R1 res e a gnd 1\nel C1 cap e gnd a 1\n"
    assert [v.code for v in validate(parse_netlist(parallel))] == ["rule-2-parallel"]
    # a dir flag restores agreement
    assert validate(parse_netlist(parallel + "dir C1 -\n")).ok


def test_port_domain_mismatch():
    text = "src V across e a gnd const:1\nel R1 res e a gnd 1\ncb K xfmr e(a,gnd) mr(b,gnd) 1\nel M hcap hy b gnd 1\n"
    codes = [v.code for v in validate(parse_netlist(text))]
    assert "port-domain-mismatch" in codes


@pytest.mark.parametrize("name", ["electrical_fig10", "hydraulic_fig11", "motor_pump", "clutch"])
def test_fixtures_validate(name):
    from pogc.casestudies import fixture_path

    assert validate(parse_netlist(fixture_path(name + ".pog").read_text())).ok


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_format_is_a_fixed_point(seed):
    net = parse_netlist(random_sp_netlist(seed))
    text = format_netlist(net)
    again = parse_netlist(text)
    assert format_netlist(again) == text
    assert [e.value for e in again.elements] == [e.value for e in net.elements]


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-12, max_value=1e12, allow_nan=False))
def test_coefficients_roundtrip_exactly(value):
    net = parse_netlist(f"el R1 res e a gnd {value!r}\n")
    assert parse_netlist(format_netlist(net)).element("R1").value == value


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_generator_output_is_valid(seed):
    assert validate(parse_netlist(random_sp_netlist(seed))).ok
