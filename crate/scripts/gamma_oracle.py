"""Writes 40-digit reference values for the gamma remap to a CSV fixture."""
import random
import sys

import mpmath

mpmath.mp.dps = 40
rng = random.Random(4)
out = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/gamma_mpmath.csv"
with open(out, "w") as f:
    f.write("input,gamma,expected\n")
    for _ in range(1000):
        x = rng.uniform(0.0, 255.0)
        if rng.random() < 0.3:
            x = float(rng.randint(0, 255))
        g = rng.uniform(0.1, 5.0)
        v = mpmath.mpf(255) * mpmath.power(mpmath.mpf(x) / 255, mpmath.mpf(g))
        f.write(f"{x!r},{g!r},{float(v)!r}\n")
