"""Regenerates stoi_reference.json with pystoi (0.4.x).

The signals are closed-form so the Rust test can rebuild them exactly:
a five-harmonic tone with slow amplitude modulation, plus noise from a
64-bit LCG. Run from this directory: python3 gen_stoi_reference.py
"""
import json
import math

import numpy as np
import pystoi

MASK64 = (1 << 64) - 1


def lcg_noise(n, seed):
    state = seed & MASK64
    out = np.empty(n)
    for i in range(n):
        state = (state * 6364136223846793005 + 1442695040888963407) & MASK64
        out[i] = (state >> 11) / float(1 << 53) - 0.5
    return out


def tone(n, rate, f0):
    t = np.arange(n) / rate
    env = 0.6 + 0.4 * np.sin(2 * math.pi * 3.0 * t)
    x = sum(np.sin(2 * math.pi * k * f0 * t) / k for k in range(1, 6))
    return x * env


def build(case):
    rate, secs = case["rate"], case["secs"]
    n = int(round(rate * secs))
    clean = tone(n, rate, case["f0"])
    degraded = clean + case["noise_gain"] * lcg_noise(n, case["seed"])
    if case["gap"]:
        a, b = case["gap"]
        degraded[a:b] = 0.0
    return clean, degraded


CASES = [
    {"name": "noisy-10k", "rate": 10000, "secs": 1.5, "f0": 140.0,
     "seed": 1, "noise_gain": 1.5, "gap": None},
    {"name": "noisy-16k", "rate": 16000, "secs": 1.5, "f0": 180.0,
     "seed": 2, "noise_gain": 2.5, "gap": None},
    {"name": "gap-16k", "rate": 16000, "secs": 2.0, "f0": 120.0,
     "seed": 3, "noise_gain": 0.2, "gap": [9600, 12800]},
]

if __name__ == "__main__":
    for case in CASES:
        clean, degraded = build(case)
        case["stoi"] = float(pystoi.stoi(clean, degraded, case["rate"], extended=False))
    with open("stoi_reference.json", "w") as f:
        json.dump({"generator": "pystoi " + getattr(pystoi, "__version__", "0.4"),
                   "cases": CASES}, f, indent=2)
        f.write("\n")
    for c in CASES:
        print(c["name"], c["stoi"])
