"""Writes the synthetic demonstration used by scenarios/learn.json.

A discrete primitive (k=100, b=20, tau=1, goal 1, start 0) driven by the
exponential phase x = exp(-4t) and a 10-term Gaussian forcing with known
weights is integrated with RK4. Accelerations are taken from the model at
each sample so the recorded forcing is exact up to rounding.
"""
import json
import math
import pathlib

K, B, TAU, GOAL, ALPHA = 100.0, 20.0, 1.0, 1.0, 4.0
H, SUB, T_END = 1e-3, 10, 1.5
TIMES = [i / 9 for i in range(10)]
CENTERS = [math.exp(-ALPHA * t / TAU) for t in TIMES]
WIDTH = 0.05
WEIGHTS = [60.0, -35.0, 120.0, 80.0, -150.0, 40.0, 220.0, -90.0, 300.0, -200.0]


def phase(t):
    return math.exp(-ALPHA * t / TAU)


def forcing(x):
    act = [math.exp(-(x - c) ** 2 / (2 * WIDTH * WIDTH)) for c in CENTERS]
    s = sum(act)
    return sum(a * w for a, w in zip(act, WEIGHTS)) / s * x


def accel(t, y, v):
    return (K * (GOAL - y) - B * v + forcing(phase(t))) / TAU


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "scenarios"
    n = round(T_END / H)
    y, v = 0.0, 0.0
    rows = []
    for i in range(n + 1):
        t = i * H
        rows.append((t, y, v, accel(t, y, v)))
        h = H / SUB
        for s in range(SUB):
            ts = t + s * h

            def f(tt, yy, vv):
                return vv, accel(tt, yy, vv)

            k1 = f(ts, y, v)
            k2 = f(ts + h / 2, y + h / 2 * k1[0], v + h / 2 * k1[1])
            k3 = f(ts + h / 2, y + h / 2 * k2[0], v + h / 2 * k2[1])
            k4 = f(ts + h, y + h * k3[0], v + h * k3[1])
            y += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            v += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    with open(out / "learn_demo.csv", "w") as fh:
        fh.write("t,y,ydot,yddot\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")
    cfg = {
        "name": "learn",
        "description": "Recovers the forcing weights of a synthetic discrete demonstration.",
        "learning": {
            "demo": "learn_demo.csv",
            "stiffness": K, "damping": B, "goal": GOAL, "tau": TAU,
            "canonical": {"kind": "exponential", "alpha_x": ALPHA, "tau": TAU},
            "x0": [1.0],
            "basis": {"kind": "gaussian", "centers": CENTERS, "width": WIDTH},
            "ridge": 0,
            "expected_weights": [[w] for w in WEIGHTS],
            "tolerance": 1e-6,
        },
    }
    with open(out / "learn.json", "w") as fh:
        json.dump(cfg, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
