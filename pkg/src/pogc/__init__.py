"""pogc: compile series-parallel netlists into Power-Oriented Graph schemes and simulate them."""

from .errors import PogError, ValidationFailed
from .netlist import Netlist, parse_netlist, validate
from .pogir import build_scheme
from .statespace import PogStateSpace, extract_state_space, load_model
from .topology import build_sp_chain

__version__ = "0.1.0"


def check_valid(net: Netlist) -> Netlist:
    """Raise ValidationFailed on the first structural violation."""
    report = validate(net)
    if not report.ok:
        v = report.violations[0]
        more = f" (+{len(report.violations) - 1} more)" if len(report.violations) > 1 else ""
        raise ValidationFailed(f"{v.code}: {v.message}{more}", line=v.line or None, names=v.names)
    return net


def derive(text: str, params: dict | None = None) -> PogStateSpace:
    """Netlist text to POG state-space model."""
    net = check_valid(parse_netlist(text))
    return extract_state_space(build_scheme(build_sp_chain(net)), params)


__all__ = ["PogError", "PogStateSpace", "build_scheme", "build_sp_chain", "check_valid", "derive",
           "extract_state_space", "load_model", "parse_netlist"]
