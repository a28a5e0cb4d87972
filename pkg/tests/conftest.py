import pytest

from pogc import build_scheme, build_sp_chain, check_valid, parse_netlist
from pogc.casestudies import read_fixture
from pogc.statespace import extract_state_space

NETLIST_FIXTURES = ["electrical_fig10", "hydraulic_fig11", "motor_pump", "motor_pump_fig12", "clutch"]


def derive_fixture(name, params=None):
    """(net, chain, scheme, model) for a bundled netlist."""
    net = check_valid(parse_netlist(read_fixture(name)))
    chain = build_sp_chain(net)
    scheme = build_scheme(chain)
    return net, chain, scheme, extract_state_space(scheme, params)


@pytest.fixture(params=NETLIST_FIXTURES)
def fixture_name(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
