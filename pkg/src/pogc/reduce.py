"""Congruent transformations ``x = T x̂ + T_u u`` and degenerate-state elimination.

    L̂ = Tᵀ L T,  Â = Tᵀ (A T − L Ṫ),  B̂ = Tᵀ (A T_u + B),  Ĉ = C T,  D̂ = C T_u + D

valid when T_u is constant and Tᵀ L T_u = 0.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import sympy as sp

from .errors import MissingTdot, ModelFormatError, NonEliminable, SideConditionViolated
from .statespace import PogStateSpace, evaluate_matrix

SIDE_WARN = 1e-12
SIDE_FAIL = 1e-6


@dataclass
class CongruentTransform:
    T: np.ndarray | Callable[[float], np.ndarray]
    T_u: np.ndarray
    T_dot: np.ndarray | Callable[[float], np.ndarray] | None = None
    labels: list[str] | None = None
    symbolic: dict[str, sp.Matrix] | None = None  # exact "T" and "T_u" when known

    @property
    def time_variant(self) -> bool:
        return callable(self.T)

    def T_at(self, t: float) -> np.ndarray:
        return np.asarray(self.T(t) if callable(self.T) else self.T, dtype=float)

    def Tdot_at(self, t: float, finite_difference: bool = True) -> np.ndarray:
        if self.T_dot is not None:
            return np.asarray(self.T_dot(t) if callable(self.T_dot) else self.T_dot, dtype=float)
        if not self.time_variant:
            return np.zeros_like(self.T_at(t))
        if not finite_difference:
            raise MissingTdot("time-variant T needs its derivative")
        h = 1e-6 * max(1.0, abs(t))
        warnings.warn("T_dot estimated by central finite difference", stacklevel=3)
        return (self.T_at(t + h) - self.T_at(t - h)) / (2 * h)


def side_condition_residual(L: np.ndarray, T: np.ndarray, T_u: np.ndarray) -> float:
    """‖TᵀLT_u‖ relative to ‖L‖‖T‖‖T_u‖ (0 when any factor vanishes)."""
    denom = np.linalg.norm(L) * np.linalg.norm(T) * np.linalg.norm(T_u)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(T.T @ L @ T_u) / denom)


def apply_congruent(ss: PogStateSpace, tr: CongruentTransform, t: float | None = None,
                    x=None, finite_difference: bool = True) -> PogStateSpace:
    """Transformed model at time ``t`` (``t`` is ignored for constant T and an LTI model)."""
    t = 0.0 if t is None else float(t)
    T = tr.T_at(t)
    if T.shape[0] != ss.n:
        raise ModelFormatError(f"T has {T.shape[0]} rows, the model has {ss.n} states")
    Tu = np.asarray(tr.T_u, dtype=float)
    if Tu.size != ss.n * ss.m:
        raise ModelFormatError(f"T_u must be {ss.n}x{ss.m}")
    Tu = Tu.reshape(ss.n, ss.m)
    Td = tr.Tdot_at(t, finite_difference)
    xs = np.zeros(ss.n) if x is None else np.asarray(x, dtype=float)
    L, A, B = ss.at(t, xs)
    res = side_condition_residual(L, T, Tu)
    if res > SIDE_FAIL:
        raise SideConditionViolated(f"T^T L T_u is not zero (relative size {res:.3g})")
    if res > SIDE_WARN:
        warnings.warn(f"side condition T^T L T_u = 0 holds only to {res:.3g}", stacklevel=2)
    Lh = T.T @ L @ T
    Lh = 0.5 * (Lh + Lh.T)
    Ah = T.T @ (A @ T - L @ Td)
    Bh = T.T @ (A @ Tu + B)
    Ch = ss.C @ T
    Dh = ss.C @ Tu + ss.D
    r = T.shape[1]
    labels = tr.labels or [f"xh{i + 1}" for i in range(r)]
    sym = None
    if ss.symbolic is not None and tr.symbolic is not None and ss.time_variant_hook is None:
        sym = congruent_symbolic(ss.symbolic, tr.symbolic["T"], tr.symbolic["T_u"])
    return PogStateSpace(Lh, Ah, Bh, Ch, Dh, labels, list(ss.input_labels), list(ss.output_labels),
                         symbolic=sym, params=dict(ss.params), signals=dict(ss.signals))


def congruent_symbolic(mats: dict, T: sp.Matrix, Tu: sp.Matrix, Tdot: sp.Matrix | None = None) -> dict:
    """Exact transform of symbolic matrices (constant T unless Tdot is given)."""
    L, A, B, C, D = (mats[k] for k in ("L", "A", "B", "C", "D"))
    Td = sp.zeros(*T.shape) if Tdot is None else Tdot
    out = {
        "L": T.T * L * T,
        "A": T.T * (A * T - L * Td),
        "B": T.T * (A * Tu + B),
        "C": C * T,
        "D": C * Tu + D,
    }
    return {k: v.applyfunc(lambda e: sp.expand(sp.cancel(e))) for k, v in out.items()}


def _state_index(ss: PogStateSpace, state) -> int:
    if isinstance(state, int):
        return state
    if state in ss.state_labels:
        return ss.state_labels.index(state)
    # element name: label suffix after the domain symbol
    hits = [i for i, lab in enumerate(ss.state_labels) if lab.split("_", 1)[-1] == state]
    if len(hits) == 1:
        return hits[0]
    raise ModelFormatError(f"unknown state {state!r}; states are {', '.join(ss.state_labels)}")


def eliminate_degenerate_state(ss: PogStateSpace, state, limit: str = "zero"):
    """Drop one state whose energy coefficient tends to 0 or to infinity.

    zero: the row becomes the static constraint 0 = a_i x + b_i u, solved for x_i.
    inf: the state stops moving and is held at zero.
    Returns (transform, reduced model).
    """
    if limit in ("infinity", "inf"):
        limit = "inf"
    if limit not in ("zero", "inf"):
        raise ModelFormatError("limit must be 'zero' or 'inf'")
    i = _state_index(ss, state)
    n, m = ss.n, ss.m
    keep = [j for j in range(n) if j != i]
    labels = [ss.state_labels[j] for j in keep]
    sym = ss.symbolic if ss.time_variant_hook is None else None
    if sym is not None:
        mats = {k: sp.Matrix(v) for k, v in sym.items()}
        L = mats["L"]
        if any(L[i, j] != 0 or L[j, i] != 0 for j in keep):
            raise NonEliminable(f"{ss.state_labels[i]} is coupled to other states through L")
        T = sp.zeros(n, n - 1)
        Tu = sp.zeros(n, m)
        for c, j in enumerate(keep):
            T[j, c] = 1
        if limit == "zero":
            L[i, i] = 0
            a_ii = mats["A"][i, i]
            if sp.cancel(a_ii) == 0:
                raise NonEliminable(f"a_ii = 0: the constraint row of {ss.state_labels[i]} does not contain it")
            for c, j in enumerate(keep):
                T[i, c] = sp.cancel(-mats["A"][i, j] / a_ii)
            for k in range(m):
                Tu[i, k] = sp.cancel(-mats["B"][i, k] / a_ii)
        mats["L"] = L
        red = congruent_symbolic(mats, T, Tu)
        nums = {k: evaluate_matrix(v, ss.params) for k, v in red.items()}
        tr = CongruentTransform(evaluate_matrix(T, ss.params), evaluate_matrix(Tu, ss.params),
                                labels=labels, symbolic={"T": T, "T_u": Tu})
        model = PogStateSpace(**nums, state_labels=labels, input_labels=list(ss.input_labels),
                              output_labels=list(ss.output_labels), symbolic=red, params=dict(ss.params),
                              signals=dict(ss.signals))
        return tr, model
    L = ss.L.copy()
    if np.any(L[i, keep] != 0) or np.any(L[keep, i] != 0):
        raise NonEliminable(f"{ss.state_labels[i]} is coupled to other states through L")
    T = np.zeros((n, n - 1))
    Tu = np.zeros((n, m))
    for c, j in enumerate(keep):
        T[j, c] = 1.0
    if limit == "zero":
        L[i, i] = 0.0
        a_ii = ss.A[i, i]
        if a_ii == 0:
            raise NonEliminable(f"a_ii = 0: the constraint row of {ss.state_labels[i]} does not contain it")
        T[i, :] = -ss.A[i, keep] / a_ii
        Tu[i, :] = -ss.B[i, :] / a_ii
    tr = CongruentTransform(T, Tu, labels=labels)
    model = apply_congruent(replace(ss, L=L, symbolic=None), tr)
    return tr, model


def load_transform(path) -> CongruentTransform:
    """Transform file: {"T": [[...]], "T_u": [[...]], optional "T_dot", "labels"}."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        T = np.asarray(data["T"], dtype=float)
        n = T.shape[0]
        Tu = np.asarray(data.get("T_u", []), dtype=float)
        Td = np.asarray(data["T_dot"], dtype=float) if "T_dot" in data else None
    except (OSError, json.JSONDecodeError):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad transform file: {exc}") from exc
    if Tu.size == 0:
        Tu = None
    return CongruentTransform(T, Tu if Tu is not None else np.zeros((n, 0)), Td, data.get("labels"))


def resize_inputs(tr: CongruentTransform, m: int) -> CongruentTransform:
    if tr.T_u.size == 0:
        n = tr.T_at(0.0).shape[0]
        return replace(tr, T_u=np.zeros((n, m)))
    return tr
