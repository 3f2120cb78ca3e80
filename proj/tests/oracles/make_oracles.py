"""Independent reference values for the unit tests.

Everything here is plain numpy/cvxpy and does not share code with the C++ library.
Run from the repository root: python3 tests/oracles/make_oracles.py
Outputs go to tests/oracles/frozen/ and tests/oracles/two_bus/ and are committed.
"""
import json
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
FROZEN = os.path.join(HERE, "frozen")
TWO_BUS = os.path.join(HERE, "two_bus")


def cpx(z):
    return [float(np.real(z)), float(np.imag(z))]


def cmat(M):
    return [[cpx(v) for v in row] for row in np.asarray(M)]


def dump(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")


def three_bus_case():
    # Path 0-1-2, two phases.
    y01 = np.array([[4 - 8j, -1 + 2j], [-0.5 + 1.5j, 3 - 7j]])
    y12 = np.array([[2 - 5j, 0.3 - 0.2j], [0.1 + 0.4j, 2.5 - 4j]])
    lines = [(0, 1, y01), (1, 2, y12)]
    n, m = 3, 2
    Y = np.zeros((n * m, n * m), complex)
    for j, k, y in lines:
        for a in range(m):
            for b in range(m):
                Y[j * m + a, j * m + b] += y[a, b]
                Y[k * m + a, k * m + b] += y[a, b]
                Y[j * m + a, k * m + b] -= y[a, b]
                Y[k * m + a, j * m + b] -= y[a, b]
    return n, m, lines, Y


def write_ybus():
    n, m, lines, Y = three_bus_case()
    V = np.array([1, np.exp(-2j * np.pi / 3), 0.98 * np.exp(0.05j), 1.01 * np.exp(-2.1j),
                  0.97 * np.exp(0.11j), 0.99 * np.exp(-2.0j)])
    # Injections straight from nodal currents.
    s = V * np.conj(Y @ V)
    W = np.outer(V, V.conj())
    # Phi and Psi for flat index 3 (bus 1, phase 1), written out from the row selector.
    i = 3
    Yi = np.zeros_like(Y)
    Yi[i, :] = Y[i, :]
    Phi = (Yi.conj().T + Yi) / 2
    Psi = (Yi.conj().T - Yi) / 2j
    dump(os.path.join(FROZEN, "ybus_3bus.json"), {
        "n": n, "m": m,
        "lines": [{"from": j, "to": k, "y": cmat(y)} for j, k, y in lines],
        "Y": cmat(Y),
        "V": [cpx(v) for v in V],
        "s": [cpx(v) for v in s],
        "index": i,
        "Phi": cmat(Phi),
        "Psi": cmat(Psi),
        "trPhiW": float(np.real(np.trace(Phi @ W))),
        "trPsiW": float(np.real(np.trace(Psi @ W))),
    })


def write_embedding():
    H = np.array([[2.0, 1 - 1j, 0.5j], [1 + 1j, 3.0, -0.25], [-0.5j, -0.25, 1.0]])
    E = np.block([[H.real, -H.imag], [H.imag, H.real]])
    dump(os.path.join(FROZEN, "embedding.json"), {
        "H": cmat(H),
        "eig_H": sorted(np.linalg.eigvalsh(H).tolist()),
        "eig_E": sorted(np.linalg.eigvalsh(E).tolist()),
    })


def write_sdp():
    import cvxpy as cp
    rng = np.random.default_rng(7)

    def herm(k):
        A = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        return (A + A.conj().T) / 2

    k = 3
    G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    C = G @ G.conj().T / k + herm(k) * 0.3
    C = (C + C.conj().T) / 2
    A1 = np.eye(k)
    A2 = herm(k)
    A3 = herm(k)
    W0 = np.eye(k) / k
    b = [1.0, float(np.real(np.trace(A2 @ W0))) + 0.1, float(np.real(np.trace(A3 @ W0)))]
    W = cp.Variable((k, k), hermitian=True)
    cons = [W >> 0,
            cp.real(cp.trace(A1 @ W)) == b[0],
            cp.real(cp.trace(A2 @ W)) <= b[1],
            cp.real(cp.trace(A3 @ W)) >= b[2]]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(C @ W))), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    dump(os.path.join(FROZEN, "sdp_3x3.json"), {
        "C": cmat(C),
        "constraints": [
            {"A": cmat(A1), "sense": "eq", "b": b[0]},
            {"A": cmat(A2), "sense": "le", "b": b[1]},
            {"A": cmat(A3), "sense": "ge", "b": b[2]},
        ],
        "objective": float(prob.value),
        "solver": "clarabel",
    })


TWO_BUS_CASES = [
    # name, y, c (bus0 re, im), c (bus1 re, im), bus1 bounds
    ("tb1", 4 - 8j, (1.0, 0.0), (0.0, 0.0), {"p_min": -0.8}),
    ("tb2", 3 - 9j, (0.0, 0.0), (1.0, 0.5), {"p_min": -0.5, "q_min": -0.3}),
    ("tb3", 0.8 - 1.2j, (0.5, 0.2), (-1.0, 0.0), {"p_max": 0.6}),
    ("tb4", 2 - 7j, (1.0, -0.5), (0.5, 0.0), {"p_min": -0.9, "q_max": 0.2}),
    ("tb5", 6 - 10j, (0.0, 1.0), (0.0, 0.0), {"q_min": -0.4}),
]


def two_bus_json(name, y, c0, c1, bounds):
    def bus(nm, idx, c, vmin, vmax, extra):
        b = {"name": nm, "index": idx, "c_re": [c[0]], "c_im": [c[1]], "v_min": [vmin], "v_max": [vmax]}
        for key in ("p_min", "p_max", "q_min", "q_max"):
            b[key] = [extra.get(key)]
        return b
    return {
        "schema_version": 1,
        "phases": 1,
        "voltage_bound_form": "magnitude",
        "slack_reference": [[1.0, 0.0]],
        "buses": [bus("slack", 0, c0, 0.95, 1.05, {}), bus("load", 1, c1, 0.9, 1.1, bounds)],
        "lines": [{"from": "slack", "to": "load", "y": [[cpx(y)]]}],
    }


def grid_oracle(case):
    y = complex(*case["lines"][0]["y"][0][0])
    Y = np.array([[y, -y], [-y, y]])
    b1 = case["buses"][1]
    c = np.array([[case["buses"][0]["c_re"][0], case["buses"][0]["c_im"][0]],
                  [b1["c_re"][0], b1["c_im"][0]]])
    mags = np.round(np.arange(0.9, 1.1 + 5e-4, 1e-3), 12)
    angs = np.arange(-np.pi / 2, np.pi / 2 + 1e-12, 1e-3)
    R, T = np.meshgrid(mags, angs, indexing="ij")
    V1 = R * np.exp(1j * T)
    V0 = 1.0 + 0j
    I0 = Y[0, 0] * V0 + Y[0, 1] * V1
    I1 = Y[1, 0] * V0 + Y[1, 1] * V1
    s0 = V0 * np.conj(I0)
    s1 = V1 * np.conj(I1)
    cost = c[0, 0] * s0.real + c[0, 1] * s0.imag + c[1, 0] * s1.real + c[1, 1] * s1.imag
    ok = np.ones_like(cost, bool)
    lo = lambda key: -np.inf if b1[key][0] is None else b1[key][0]
    hi = lambda key: np.inf if b1[key][0] is None else b1[key][0]
    ok &= (s1.real >= lo("p_min")) & (s1.real <= hi("p_max"))
    ok &= (s1.imag >= lo("q_min")) & (s1.imag <= hi("q_max"))
    best = np.where(ok, cost, np.inf)
    k = np.unravel_index(np.argmin(best), best.shape)
    return float(best[k]), float(R[k]), float(T[k])


def write_two_bus():
    results = {}
    for name, y, c0, c1, bounds in TWO_BUS_CASES:
        case = two_bus_json(name, y, c0, c1, bounds)
        dump(os.path.join(TWO_BUS, name + ".json"), case)
        cost, mag, ang = grid_oracle(case)
        results[name] = {"grid_cost": cost, "magnitude": mag, "angle": ang}
    dump(os.path.join(FROZEN, "two_bus_grid.json"), results)


if __name__ == "__main__":
    os.makedirs(FROZEN, exist_ok=True)
    os.makedirs(TWO_BUS, exist_ok=True)
    write_ybus()
    write_embedding()
    write_sdp()
    write_two_bus()
