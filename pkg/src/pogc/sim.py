"""Fixed-step simulation of POG models with energy / power-balance monitoring."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import IncompatibleLabels, NonFiniteState
from .signals import Const, Samples, Sine, Step, parse_signal  # noqa: F401  (re-exported)
from .statespace import PogStateSpace, factor_energy


@dataclass
class SimConfig:
    t_end: float
    dt: float = 1e-5
    method: str = "rk4"  # rk4 | trap
    t_start: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.method not in ("rk4", "trap", "trapezoidal"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (N, n)
    outputs: np.ndarray  # (N, p)
    energy: np.ndarray
    balance_residual: np.ndarray
    inputs: np.ndarray  # (N, m)
    state_labels: list[str] = field(default_factory=list)
    output_labels: list[str] = field(default_factory=list)
    power_in: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.times)

    def final(self) -> np.ndarray:
        return self.states[-1]

    def column(self, label: str) -> np.ndarray:
        if label in self.state_labels:
            return self.states[:, self.state_labels.index(label)]
        return self.outputs[:, self.output_labels.index(label)]

    def decimate(self, every: int) -> "Trajectory":
        if every <= 1:
            return self
        idx = np.arange(0, len(self.times), every)
        if idx[-1] != len(self.times) - 1:
            idx = np.append(idx, len(self.times) - 1)
        return Trajectory(self.times[idx], self.states[idx], self.outputs[idx], self.energy[idx],
                          self.balance_residual[idx], self.inputs[idx], self.state_labels,
                          self.output_labels, None if self.power_in is None else self.power_in[idx])


# ---------------------------------------------------------------------- inputs

def input_function(ss: PogStateSpace, u=None):
    """Vectorized u(t) -> (len(t), m) from a mapping label -> signal, a list, or the model defaults."""
    specs = dict(ss.signals)
    if isinstance(u, dict):
        unknown = set(u) - set(ss.input_labels)
        if unknown:
            raise IncompatibleLabels(f"no input named {', '.join(sorted(unknown))}")
        specs.update(u)
        funcs = [specs.get(label) for label in ss.input_labels]
    elif u is None:
        funcs = [specs.get(label) for label in ss.input_labels]
    else:
        funcs = list(u)
        if len(funcs) != ss.m:
            raise IncompatibleLabels(f"expected {ss.m} input signals, got {len(funcs)}")
    funcs = [Const(0.0) if f is None else parse_signal(f) if isinstance(f, str) else
             Const(float(f)) if isinstance(f, (int, float)) else f for f in funcs]

    def U(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not funcs:
            return np.zeros((len(t), 0))
        return np.column_stack([np.broadcast_to(f(t), t.shape) for f in funcs])

    return U


# ---------------------------------------------------------------------- solvers

def rk4_maps(F: np.ndarray, G: np.ndarray, h: float):
    """Linear maps of one classical RK4 step for x' = F x + G u(t).

    Returns M, N0, Nh, N1 with x+ = M x + N0 u(t) + Nh u(t+h/2) + N1 u(t+h).
    """
    n, m = G.shape
    width = n + 3 * m
    X = np.zeros((n, width))
    X[:, :n] = np.eye(n)

    def drive(col):
        out = np.zeros((n, width))
        out[:, n + col * m:n + (col + 1) * m] = G
        return out

    k1 = F @ X + drive(0)
    k2 = F @ (X + h / 2 * k1) + drive(1)
    k3 = F @ (X + h / 2 * k2) + drive(1)
    k4 = F @ (X + h * k3) + drive(2)
    step = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return step[:, :n], step[:, n:n + m], step[:, n + m:n + 2 * m], step[:, n + 2 * m:]


def _check(x, k):
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(f"state became non-finite at step {k}", k, x.copy())


def simulate(ss: PogStateSpace, u=None, x0=None, cfg: SimConfig | None = None, **kw) -> Trajectory:
    """Integrate L x' = A x + B u on a fixed grid and fill energy diagnostics."""
    cfg = cfg or SimConfig(**kw)
    n, m = ss.n, ss.m
    N = cfg.steps
    h = cfg.dt
    times = cfg.t_start + h * np.arange(N + 1)
    U = input_function(ss, u)
    u_grid = U(times)
    u_half = U(times[:-1] + h / 2)
    if x0 is None:
        x0 = ss.x0 if ss.x0 is not None else np.zeros(n)
    x = np.asarray(x0, dtype=float).reshape(n)
    X = np.zeros((N + 1, n))
    X[0] = x
    method = "trap" if cfg.method.startswith("trap") else "rk4"
    if n and ss.time_variant_hook is None:
        lu = factor_energy(ss.L)
        if method == "rk4":
            F = sla.lu_solve(lu, ss.A)
            G = sla.lu_solve(lu, ss.B) if m else np.zeros((n, 0))
            M, N0, Nh, N1 = rk4_maps(F, G, h)
            drive = u_grid[:-1] @ N0.T + u_half @ Nh.T + u_grid[1:] @ N1.T
        else:
            left = sla.lu_factor(ss.L - h / 2 * ss.A)
            M = sla.lu_solve(left, ss.L + h / 2 * ss.A)
            Nt = sla.lu_solve(left, h / 2 * ss.B) if m else np.zeros((n, 0))
            drive = (u_grid[:-1] + u_grid[1:]) @ Nt.T
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(N):
                x = M @ x + drive[k]
                X[k + 1] = x
        bad = ~np.isfinite(X).all(axis=1)
        if bad.any():
            k = int(np.argmax(bad))
            raise NonFiniteState(f"state became non-finite at step {k}", k, X[k].copy())
    elif n:
        for k in range(N):
            t = times[k]
            if method == "rk4":
                x = _rk4_hooked(ss, t, x, h, u_grid[k], u_half[k], u_grid[k + 1])
            else:
                x = _trap_hooked(ss, t, x, h, u_grid[k], u_grid[k + 1])
            _check(x, k + 1)
            X[k + 1] = x
    return _diagnostics(ss, times, X, u_grid)


def _deriv(ss, t, x, u):
    L, A, B = ss.at(t, x)
    return sla.solve(L, A @ x + B @ u, assume_a="sym") if len(x) else x


def _rk4_hooked(ss, t, x, h, u0, uh, u1):
    k1 = _deriv(ss, t, x, u0)
    k2 = _deriv(ss, t + h / 2, x + h / 2 * k1, uh)
    k3 = _deriv(ss, t + h / 2, x + h / 2 * k2, uh)
    k4 = _deriv(ss, t + h, x + h * k3, u1)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _trap_hooked(ss, t, x, h, u0, u1):
    L, A, B = ss.at(t + h / 2, x)
    rhs = (L + h / 2 * A) @ x + h / 2 * B @ (u0 + u1)
    return np.linalg.solve(L - h / 2 * A, rhs)


def _diagnostics(ss, times, X, u_grid) -> Trajectory:
    n, N = ss.n, len(times)
    Y = X @ ss.C.T + u_grid @ ss.D.T if ss.p else np.zeros((N, 0))
    if not n:
        zeros = np.zeros(N)
        return Trajectory(times, X, Y, zeros, zeros.copy(), u_grid, list(ss.state_labels),
                          list(ss.output_labels), zeros.copy())
    if ss.time_variant_hook is None:
        energy = 0.5 * np.einsum("ki,ij,kj->k", X, ss.L, X)
        p_in = np.einsum("ki,ij,kj->k", X, ss.B, u_grid)
        p_d = np.einsum("ki,ij,kj->k", X, 0.5 * (ss.A + ss.A.T), X)
    else:
        energy, p_in, p_d = np.zeros(N), np.zeros(N), np.zeros(N)
        Ls = np.zeros((N, n, n))
        for k, (t, x, u) in enumerate(zip(times, X, u_grid)):
            L, A, B = ss.at(t, x)
            Ls[k] = L
            energy[k] = 0.5 * x @ L @ x
            p_in[k] = x @ B @ u
            p_d[k] = x @ (0.5 * (A + A.T)) @ x
    power = p_d + p_in
    resid = np.zeros(N)
    if N > 1:
        dt = np.diff(times)
        # ½(x1 - x0)ᵀ L (x1 + x0) avoids cancelling two large energies
        if ss.time_variant_hook is None:
            dE = 0.5 * np.einsum("ki,ij,kj->k", np.diff(X, axis=0), ss.L, X[1:] + X[:-1])
        else:
            Lm = 0.5 * (Ls[1:] + Ls[:-1])
            dE = 0.5 * np.einsum("ki,kij,kj->k", np.diff(X, axis=0), Lm, X[1:] + X[:-1])
        resid[1:] = np.abs(dE / dt - 0.5 * (power[1:] + power[:-1]))
    return Trajectory(times, X, Y, energy, resid, u_grid, list(ss.state_labels), list(ss.output_labels), p_in)


def power_balance_residual(tr: Trajectory, ss: PogStateSpace | None = None, u=None) -> float:
    """max_k |ΔE_s/Δt − midpoint(xᵀA_s x + xᵀB u)| over the trajectory."""
    if ss is not None:
        tr = _diagnostics(ss, tr.times, tr.states, tr.inputs if u is None else input_function(ss, u)(tr.times))
    return float(tr.balance_residual.max(initial=0.0))


def compare_trajectories(a: Trajectory, b: Trajectory) -> dict:
    if a.state_labels != b.state_labels or a.output_labels != b.output_labels:
        raise IncompatibleLabels("trajectories carry different state/output labels")
    Sa = np.hstack([a.states, a.outputs])
    if len(a.times) == len(b.times) and np.array_equal(a.times, b.times):
        Sb = np.hstack([b.states, b.outputs])
    else:
        Sb_raw = np.hstack([b.states, b.outputs])
        Sb = np.column_stack([np.interp(a.times, b.times, Sb_raw[:, j]) for j in range(Sb_raw.shape[1])]) \
            if Sb_raw.shape[1] else np.zeros_like(Sa)
    err = np.abs(Sa - Sb)
    labels = a.state_labels + a.output_labels
    per = {lab: float(err[:, j].max(initial=0.0)) for j, lab in enumerate(labels)}
    return {"max_abs": float(err.max(initial=0.0)),
            "rms": float(np.sqrt(np.mean(err**2))) if err.size else 0.0,
            "per_signal": per}


def trajectory_csv(tr: Trajectory, out=None) -> str | None:
    """Write ``t,<states>,<outputs>,E_s,balance_residual`` rows; returns the text when ``out`` is None."""
    buf = out if out is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *tr.state_labels, *tr.output_labels, "E_s", "balance_residual"])
    for k in range(len(tr.times)):
        row = [tr.times[k], *tr.states[k], *tr.outputs[k], tr.energy[k], tr.balance_residual[k]]
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue() if out is None else None
