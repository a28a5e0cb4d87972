"""Reference computations that share no code with the derivation pipeline."""

import numpy as np
import scipy.linalg as sla

DYNAMIC_ACROSS = {"cap", "hcap", "mass", "inertia"}
DYNAMIC_THROUGH = {"ind", "hind", "spring", "rspring"}
IMPEDANCE = {"res", "hres"}


def coefficient(value, inverse):
    return 1.0 / value if inverse else value


def nodal_pencil(net, values=None):
    """Descriptor pencil (E, F) of the source-free network, E z' = F z.

    Across generators short their nodes to ground, through generators are
    removed. Unknowns are the node potentials followed by the flows of the
    through-storing elements.
    """
    values = values or {}
    shorted = {"gnd"}
    for s in net.sources:
        if s.kind.name == "GE":
            shorted.update({s.node_plus, s.node_minus})
    nodes = sorted({n for e in net.elements for n in (e.node_plus, e.node_minus)} - shorted)
    inductive = [e for e in net.elements if e.etype in DYNAMIC_THROUGH]
    idx = {n: i for i, n in enumerate(nodes)}
    size = len(nodes) + len(inductive)
    E = np.zeros((size, size))
    F = np.zeros((size, size))

    def stamp(M, a, b, g):
        # conductance-like stamp between nodes a and b
        for x, sx in ((a, 1), (b, -1)):
            if x not in idx:
                continue
            for y, sy in ((a, 1), (b, -1)):
                if y in idx:
                    M[idx[x], idx[y]] += sx * sy * g

    for e in net.elements:
        c = coefficient(values.get(e.name, e.value), e.inverse)
        a, b = e.node_plus, e.node_minus
        if e.etype in DYNAMIC_ACROSS:
            stamp(E, a, b, c)
        elif e.etype in IMPEDANCE:
            stamp(F, a, b, -1.0 / c)
        elif e.etype not in DYNAMIC_THROUGH:
            stamp(F, a, b, -c)
    for k, e in enumerate(inductive):
        c = coefficient(values.get(e.name, e.value), e.inverse)
        row = len(nodes) + k
        a, b = e.node_plus, e.node_minus
        # flow leaves node a, enters node b
        if a in idx:
            F[idx[a], row] -= 1.0
            F[row, idx[a]] += 1.0
        if b in idx:
            F[idx[b], row] += 1.0
            F[row, idx[b]] -= 1.0
        E[row, row] = c
    return E, F


def nodal_eigenvalues(net, values=None):
    E, F = nodal_pencil(net, values)
    w = sla.eigvals(F, E)
    return np.sort_complex(w[np.isfinite(w)])


def expm_trajectory(L, A, B, u, x0, dt, steps):
    """Exact zero-order-hold solution of L x' = A x + B u for a constant u."""
    n = len(x0)
    F = np.linalg.solve(L, A)
    g = np.linalg.solve(L, B @ u)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = F
    aug[:n, n] = g
    phi = sla.expm(aug * dt)
    M, c = phi[:n, :n], phi[:n, n]
    X = np.empty((steps + 1, n))
    X[0] = x = np.asarray(x0, dtype=float)
    for k in range(steps):
        x = M @ x + c
        X[k + 1] = x
    return X


def fig10_dc(Vb=10.0, R3=1.0, R4=1.0):
    """Capacitors open, inductors short: (V_C1, I_L2, I_L3, V_C4) at steady state."""
    I3 = -Vb / (R3 + R4)
    V4 = Vb + R4 * I3
    return np.array([0.0, -I3, I3, V4])
