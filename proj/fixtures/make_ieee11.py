#!/usr/bin/env python3
"""Synthesize the 11-bus three-phase fixture (per-unit, 4.16 kV / 50 MVA base).

Line impedances start from one three-wire overhead configuration scaled by
length, get a fixed-seed multiplicative perturbation, and are inverted. Costs
and one-sided injection bounds are then placed on the critical buses. Rerun to
regenerate ieee11.json byte-for-byte.
"""
import json
import sys
from pathlib import Path

import numpy as np

NAMES = ["650", "632", "633", "634", "645", "646", "671", "684", "611", "652", "680"]
EDGES = [("650", "632", 2000), ("632", "633", 500), ("633", "634", 300), ("632", "645", 500),
         ("645", "646", 300), ("632", "671", 2000), ("671", "684", 300), ("684", "611", 300),
         ("684", "652", 800), ("671", "680", 1000)]
# ohm per mile
ZMI = np.array([[0.3465 + 1.0179j, 0.1560 + 0.5017j, 0.1580 + 0.4236j],
                [0.1560 + 0.5017j, 0.3375 + 1.0478j, 0.1535 + 0.3849j],
                [0.1580 + 0.4236j, 0.1535 + 0.3849j, 0.3414 + 1.0348j]])
ZBASE = 4.16 ** 2 / 50.0

C_RE = {"650": [2.455, 4.419, 2.227], "633": -1.0, "645": 1.0, "671": -1.0, "611": 1.0, "652": 1.0}
C_IM = {"650": [1.31, 2.333, 0.659], "633": -0.5, "645": -0.5, "671": 0.5, "611": 0.5}
P_MAX = {"650": 10.0, "645": 5.0, "611": 5.0}
P_MIN = {"633": -5.0, "671": -5.0}
Q_MAX = {"650": [0.6, 0.198, 0.587], "671": [8.211, 5.201, 5.408], "611": [1.068, 2.239, 2.31]}
Q_MIN = {"633": -5.0, "645": -5.0}


def per_phase(table, name, default):
    v = table.get(name, default)
    return [v] * 3 if not isinstance(v, list) else list(v)


def pair(z):
    return [float(z.real), float(z.imag)]


def build():
    rng = np.random.default_rng(13)
    lines = []
    for a, b, feet in EDGES:
        z = ZMI * (feet / 5280.0) / ZBASE
        noise = 1 + 0.1 * rng.uniform(-1, 1, (3, 3)) + 0.1j * rng.uniform(-1, 1, (3, 3))
        z = z * noise
        z = 0.5 * (z + z.T)
        y = np.linalg.inv(z)
        lines.append({"from": a, "to": b, "y": [[pair(v) for v in row] for row in y]})
    a = np.exp(-2j * np.pi / 3)
    buses = []
    for i, name in enumerate(NAMES):
        buses.append({
            "name": name,
            "index": i,
            "c_re": per_phase(C_RE, name, 0.0),
            "c_im": per_phase(C_IM, name, 0.0),
            "v_min": [0.9] * 3,
            "v_max": [1.1] * 3,
            "p_min": per_phase(P_MIN, name, None),
            "p_max": per_phase(P_MAX, name, None),
            "q_min": per_phase(Q_MIN, name, None),
            "q_max": per_phase(Q_MAX, name, None),
        })
    return {
        "schema_version": 1,
        "phases": 3,
        "voltage_bound_form": "magnitude",
        "slack_reference": [pair(1.0 + 0j), pair(a), pair(a * a)],
        "buses": buses,
        "lines": lines,
    }


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("ieee11.json")
    out.write_text(json.dumps(build(), indent=1, sort_keys=True) + "\n")
