import json
import random

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pogc import derive
from pogc.casestudies import fixture_path
from pogc.errors import ModelFormatError, PoleAtS, PogError, SingularEnergyMatrix
from pogc.netlist import parse_netlist
from pogc.randnet import random_sp_netlist
from pogc.statespace import (FractionArith, PogStateSpace, assemble_direct, direct_matrices, load_model,
                             model_from_dict, model_to_dict, save_model, scheme_matrices, similitude_transform,
                             extract_state_space, stored_energy, to_classical, transfer_matrix)
from pogc.topology import build_sp_chain
from pogc.pogir import build_scheme

from conftest import derive_fixture


def test_rc_by_hand():
    ss = derive("src V across e a gnd const:1\nel R1 res e a b 2\nel C1 cap e b gnd 0.5\nout C1.e\n")
    assert ss.state_labels == ["V_C1"] and ss.input_labels == ["V_V"]
    # C v' = -v/R + V/R
    assert ss.L.tolist() == [[0.5]]
    assert ss.A.tolist() == [[-0.5]] and ss.B.tolist() == [[0.5]]
    assert ss.C.tolist() == [[1.0]] and ss.D.tolist() == [[0.0]]


def test_fig10_energy_matrix_is_diagonal_of_coefficients():
    model = derive_fixture("electrical_fig10")[3]
    assert model.symbolic["L"] == sp.diag(*sp.symbols("C1 L2 L3 C4"))
    A = model.A
    # off-diagonal structure: skew part only, dissipation on the diagonal
    off = A - np.diag(np.diag(A))
    assert np.allclose(off, -off.T)
    assert np.all(np.diag(A) <= 0)


def test_dissipation_is_negative_semidefinite(fixture_name):
    model = derive_fixture(fixture_name)[3]
    As = 0.5 * (model.A + model.A.T)
    assert np.linalg.eigvalsh(As).max() <= 1e-12
    assert model.psd_check()


def test_scheme_and_oracle_agree_exactly_on_fixtures(fixture_name):
    net, chain, scheme, _ = derive_fixture(fixture_name)
    arith = FractionArith(net.params())
    a = scheme_matrices(scheme, arith)
    b = direct_matrices(chain, arith)
    for k in "LABCD":
        assert a[k] == b[k]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_random_chain_matches_oracle_symbolically(seed):
    net = parse_netlist(random_sp_netlist(seed))
    try:
        chain = build_sp_chain(net)
        model = extract_state_space(build_scheme(chain))
    except PogError:
        return
    oracle = assemble_direct(chain)
    ps = [oracle.state_labels.index(s) for s in model.state_labels]
    pu = [oracle.input_labels.index(s) for s in model.input_labels]
    assert model.symbolic["A"] == oracle.symbolic["A"].extract(ps, ps)
    assert model.symbolic["B"] == oracle.symbolic["B"].extract(ps, pu)
    assert model.symbolic["L"] == oracle.symbolic["L"].extract(ps, ps)


def test_with_params_reevaluates():
    model = derive_fixture("motor_pump")[3]
    other = model.with_params({"L1": 2.0})
    assert other.L[0, 0] == 2.0 and model.L[0, 0] == 0.05
    with pytest.raises(ModelFormatError):
        model.with_params({"nope": 1.0})


def test_classical_form_and_transfer():
    model = derive_fixture("motor_pump")[3]
    cs = to_classical(model)
    assert np.allclose(model.L @ cs.A, model.A)
    s = 1.5 + 2j
    assert np.allclose(transfer_matrix(model, s), transfer_matrix(cs, s), rtol=1e-12)


def test_similitude_preserves_transfer():
    cs = to_classical(derive_fixture("electrical_fig10")[3])
    T = np.random.default_rng(0).normal(size=(4, 4))
    tcs = similitude_transform(cs, T)
    s = 3.0 + 40j
    assert np.allclose(transfer_matrix(cs, s), transfer_matrix(tcs, s), rtol=1e-9)


def test_pole_at_s():
    ss = derive("src V across e a gnd const:1\nel R1 res e a b 1\nel C1 cap e b gnd 1\nout C1.e\n")
    with pytest.raises(PoleAtS):
        transfer_matrix(ss, -1.0)


def test_singular_energy_matrix():
    ss = PogStateSpace(np.diag([1.0, 0.0]), -np.eye(2), np.zeros((2, 0)), np.zeros((0, 2)),
                       np.zeros((0, 0)), ["x1", "x2"], [], [])
    assert ss.psd_check()
    with pytest.raises(SingularEnergyMatrix):
        to_classical(ss)


def test_stored_energy_is_quadratic():
    model = derive_fixture("clutch")[3]
    x = np.array([1.0, 2.0, 3.0])
    assert stored_energy(model, 2 * x) == pytest.approx(4 * stored_energy(model, x))


def test_model_json_roundtrip(tmp_path, fixture_name):
    model = derive_fixture(fixture_name)[3]
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    assert back.state_labels == model.state_labels
    for k in "LABCD":
        assert np.array_equal(getattr(back, k), getattr(model, k))
        assert sp.simplify(back.symbolic[k] - model.symbolic[k]).is_zero_matrix


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: d.pop("states"), "bad model"),
    (lambda d: d.__setitem__("A", [[1]]), "must be"),
    (lambda d: d["params"].pop("L1"), "without value"),
])
def test_bad_model_files(mutate, msg):
    data = json.loads(json.dumps(model_to_dict(derive_fixture("motor_pump")[3])))
    mutate(data)
    with pytest.raises(ModelFormatError, match=msg):
        model_from_dict(data)


def test_bundled_json_models_load():
    for name in ("cvt.json", "pmsm.json"):
        model = load_model(fixture_path(name))
        assert model.time_variant_hook is not None
        assert model.psd_check()


def test_no_storage_gives_empty_model():
    ss = derive(fixture_path("resistor_ring.pog").read_text())
    assert ss.n == 0 and ss.L.shape == (0, 0)


def test_random_parameters_keep_symmetry():
    model = derive_fixture("hydraulic_fig11")[3]
    rng = random.Random(0)
    for _ in range(10):
        m = model.with_params({k: rng.uniform(0.1, 5) for k in model.params})
        assert np.array_equal(m.L, m.L.T)
