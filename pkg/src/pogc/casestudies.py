"""Bundled example models and the hooks used by time-variant / state-dependent models.

Netlist fixtures live next to this module as ``*.pog`` files.  The CVT and
PMSM models are multidimensional, so they are authored directly as POG
state-space models and shipped as model JSON.

A model JSON may carry ``"hook": {"bind": {symbol: expression}}``.  Each bound
symbol is re-evaluated at every time step from ``t``, the parameters and the
state labels, and the L, A, B matrices are evaluated with the result.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import sympy as sp

from .errors import ModelFormatError

FIXTURE_DIR = Path(__file__).parent / "fixtures"

NETLISTS = {
    "electrical_fig10": "electrical_fig10.pog",
    "hydraulic_fig11": "hydraulic_fig11.pog",
    "motor_pump": "motor_pump.pog",
    "motor_pump_fig12": "motor_pump_fig12.pog",
    "clutch": "clutch.pog",
    "bridge": "bridge.pog",
    "resistor_ring": "resistor_ring.pog",
}
MODELS = {"cvt": "cvt.json", "pmsm": "pmsm.json"}


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture given its file name or stem."""
    if name in NETLISTS:
        name = NETLISTS[name]
    elif name in MODELS:
        name = MODELS[name]
    return FIXTURE_DIR / name


def read_fixture(name: str) -> str:
    return fixture_path(name).read_text()


# ----------------------------------------------------------------------- hooks

def make_hook(spec: dict, params: dict, symbolic: dict, states: list[str]):
    """Build ``(t, x) -> (L, A, B)`` from a ``{"bind": {...}}`` hook spec."""
    bind = spec.get("bind")
    if not isinstance(bind, dict) or not bind:
        raise ModelFormatError("hook needs a non-empty 'bind' table")
    t = sp.Symbol("t")
    state_syms = [sp.Symbol(s) for s in states]
    psubs = {sp.Symbol(k): v for k, v in params.items()}
    bound = [sp.Symbol(k) for k in bind]
    binders = []
    for name, text in bind.items():
        try:
            expr = sp.sympify(text, locals={s.name: s for s in state_syms} | {"t": t}).xreplace(psubs)
        except (sp.SympifyError, TypeError) as exc:
            raise ModelFormatError(f"bad hook expression for {name}: {exc}") from exc
        extra = expr.free_symbols - {t, *state_syms}
        if extra:
            raise ModelFormatError(f"hook expression for {name} uses unknown symbols "
                                   + ", ".join(sorted(map(str, extra))))
        binders.append(sp.lambdify((t, state_syms), expr, "numpy"))
    mats = []
    for key in ("L", "A", "B"):
        m = symbolic[key].xreplace(psubs)
        extra = m.free_symbols - set(bound)
        if extra:
            raise ModelFormatError(f"matrix {key} has unbound symbols " + ", ".join(sorted(map(str, extra))))
        mats.append((sp.lambdify(bound, m, "numpy"), m.shape))

    def hook(time, x):
        x = np.asarray(x, dtype=float)
        vals = [float(f(float(time), list(x))) for f in binders]
        return tuple(np.asarray(f(*vals), dtype=float).reshape(shape) for f, shape in mats)

    return hook


# ------------------------------------------------------------------------- CVT

CVT_PARAMS = {
    "J_c": 0.05, "J_p": 0.002, "J_s": 0.01, "J_r": 0.04, "J_d": 0.01, "J_e": 0.03,
    "b_c": 0.01, "b_p": 0.001, "b_s": 0.005, "b_r": 0.01, "b_d": 0.004, "b_e": 0.008,
    "K_sp": 2.0e4, "K_pr": 2.0e4, "K_sd": 1.0e4, "K_re": 1.0e4, "C_de": 1.0e-3,
    "d_sp": 5.0, "d_pr": 5.0, "d_sd": 4.0, "d_re": 4.0, "R_de": 0.5,
    "r_c": 0.1, "r_p": 0.03, "r_s": 0.04, "r_r": 0.1, "r_a": 0.05, "r_d": 0.06, "r_re": 0.05, "r_e": 0.07,
    "K_p": 0.02, "h_q": 0.01, "theta0": 0.3, "theta1": 0.1, "f_theta": 0.5,
}
CVT_STATES = ["w_c", "w_p", "w_s", "w_r", "w_d", "w_e", "F_sp", "F_pr", "F_sd", "F_re", "P_de"]
CVT_INPUTS = ["tau_c", "tau_p", "tau_s", "tau_r", "tau_d", "tau_e"]
CVT_THETA = "theta0 + theta1*sin(2*pi*f_theta*t)"


def _syms(names):
    return [sp.Symbol(n) for n in names.split()]


def cvt_conversion(theta=None) -> sp.Matrix:
    """Energy conversion matrix R(t) with h_p(theta) = K_p * theta."""
    r_c, r_p, r_s, r_r, r_a, r_d, r_re, r_e, K_p, h_q = _syms("r_c r_p r_s r_r r_a r_d r_re r_e K_p h_q")
    theta = sp.Symbol("theta") if theta is None else theta
    return sp.Matrix([
        [-r_c, r_p, r_s, 0, 0, 0],
        [r_c, r_p, 0, -r_r, 0, 0],
        [0, 0, r_a, 0, r_d, 0],
        [0, 0, 0, r_re, 0, r_e],
        [0, 0, 0, 0, K_p * theta, -h_q],
    ])


def cvt_matrices(theta=None) -> dict[str, sp.Matrix]:
    J = sp.diag(*_syms("J_c J_p J_s J_r J_d J_e"))
    BJ = sp.diag(*_syms("b_c b_p b_s b_r b_d b_e"))
    K_sp, K_pr, K_sd, K_re, C_de = _syms("K_sp K_pr K_sd K_re C_de")
    Kinv = sp.diag(1 / K_sp, 1 / K_pr, 1 / K_sd, 1 / K_re, C_de)
    BK = sp.diag(*_syms("d_sp d_pr d_sd d_re R_de"))
    R = cvt_conversion(theta)
    L = sp.diag(J, Kinv)
    A = sp.BlockMatrix([[-BJ - R.T * BK * R, -R.T], [R, sp.zeros(5, 5)]]).as_explicit()
    B = sp.Matrix.vstack(sp.eye(6), sp.zeros(5, 6))
    return {"L": L, "A": sp.expand(A), "B": B, "C": sp.eye(11), "D": sp.zeros(11, 6)}


def cvt_q(theta=None) -> sp.Matrix:
    """Speed basis Q with omega = Q * omega_s satisfying the kinematic constraints."""
    r_c, r_p, r_s, r_r, r_a, r_d, r_re, r_e, K_p, h_q = _syms("r_c r_p r_s r_r r_a r_d r_re r_e K_p h_q")
    th = sp.Symbol("theta") if theta is None else theta
    return sp.Matrix([
        (h_q * r_d * r_re * r_s + K_p * r_a * r_e * r_r * th) / (2 * h_q * r_d * r_re * r_c),
        (K_p * r_a * r_e * r_r * th - h_q * r_d * r_re * r_s) / (2 * h_q * r_d * r_p * r_re),
        1,
        K_p * r_a * r_e * th / (h_q * r_d * r_re),
        -r_a / r_d,
        -K_p * r_a * th / (h_q * r_d),
    ])


def cvt_theta(t, params=CVT_PARAMS):
    return params["theta0"] + params["theta1"] * np.sin(2 * np.pi * params["f_theta"] * t)


def cvt_transform(params=CVT_PARAMS):
    """Time-variant congruent transform x = [Q(t); 0] * omega_s (no analytic derivative supplied)."""
    from .reduce import CongruentTransform

    q = cvt_q().xreplace({sp.Symbol(k): v for k, v in params.items()})
    qf = sp.lambdify(sp.Symbol("theta"), q, "numpy")

    def T(t):
        col = np.asarray(qf(float(cvt_theta(t, params))), dtype=float).reshape(6, 1)
        return np.vstack([col, np.zeros((5, 1))])

    return CongruentTransform(T=T, T_u=np.zeros((11, 6)), labels=["w_s"])


# ------------------------------------------------------------------------ PMSM

PMSM_PARAMS = {"p": 4.0, "L_e": 0.005, "R_s": 0.1, "K_d": 0.05, "K_q": 0.5, "J_m": 0.05, "b_m": 0.01}
PMSM_STATES = ["I_d", "I_q", "omega"]
PMSM_INPUTS = ["V_d", "V_q", "tau"]


def pmsm_matrices() -> dict[str, sp.Matrix]:
    p, L_e, R_s, K_d, K_q, J_m, b_m, omega = _syms("p L_e R_s K_d K_q J_m b_m omega")
    Le = sp.diag(p * L_e, p * L_e)
    Len = sp.Matrix([[0, -p**2 * omega * L_e], [p**2 * omega * L_e, 0]])
    Re = sp.diag(-p * R_s, -p * R_s)
    Kt = sp.Matrix([K_d, K_q])
    L = sp.diag(Le, J_m)
    A = sp.BlockMatrix([[Len + Re, -Kt], [Kt.T, sp.Matrix([[-b_m]])]]).as_explicit()
    B = sp.diag(1, 1, -1)
    return {"L": L, "A": A, "B": B, "C": sp.eye(3), "D": sp.zeros(3, 3)}


def pmsm_skew_block() -> sp.Matrix:
    """A restricted to the speed-dependent coupling L_en (zeros elsewhere)."""
    p, L_e, omega = _syms("p L_e omega")
    out = sp.zeros(3, 3)
    out[0, 1] = -p**2 * omega * L_e
    out[1, 0] = p**2 * omega * L_e
    return out


def _model_json(mats, states, inputs, outputs, params, hook, signals) -> dict:
    def cell(v):
        v = sp.sympify(v)
        if v.is_number:
            f = float(v)
            return int(f) if f == int(f) else f
        return str(v)

    out = {"states": states, "inputs": inputs, "outputs": outputs}
    for k in ("L", "A", "B", "C", "D"):
        m = mats[k]
        out[k] = [[cell(m[i, j]) for j in range(m.shape[1])] for i in range(m.shape[0])]
    out["params"] = params
    out["hook"] = hook
    out["signals"] = signals
    return out


def cvt_json() -> dict:
    params = dict(CVT_PARAMS)
    signals = {name: "const:0" for name in CVT_INPUTS}
    signals["tau_c"] = "step:1@0"
    signals["tau_r"] = "const:-0.5"
    return _model_json(cvt_matrices(), CVT_STATES, CVT_INPUTS, CVT_STATES, params,
                       {"bind": {"theta": CVT_THETA}}, signals)


def pmsm_json() -> dict:
    signals = {"V_d": "const:0", "V_q": "step:2@0", "tau": "const:0.1"}
    return _model_json(pmsm_matrices(), PMSM_STATES, PMSM_INPUTS, PMSM_STATES, dict(PMSM_PARAMS),
                       {"bind": {"omega": "omega"}}, signals)


def write_model_fixtures(directory: Path = FIXTURE_DIR) -> None:
    for name, builder in (("cvt.json", cvt_json), ("pmsm.json", pmsm_json)):
        with open(Path(directory) / name, "w") as fh:
            json.dump(builder(), fh, indent=2)
            fh.write("\n")
