"""Stand-alone reference for the vanishing-order selection recursion.

Computes the worked configuration step by step with plain floats so the C++
pipeline can be cross-checked against an implementation-independent path.
"""
import json
import math
import sys


def reference(n=2, R0=1 / 32, gamma=2.0, j0=2, C0=2.0, beta0=1.0, Ct=1.0, log_rho=40 * math.log(2)):
    L = math.log(R0)
    a = ((4 * L - 1) ** 2 - (2 * L) ** 2) / (-1 - 4 * L)
    logC = max(math.log(C0) - 2 * n * L, beta0 * (-1 - 4 * L))
    c = 1 / gamma
    t0 = (math.log(2) - math.log(a * c) + math.log(log_rho)) / (-2 * L - math.log(a))
    s = max(1, math.ceil(t0))
    Rj = lambda j: 1 / (gamma * (j + 0.5))
    while R0 ** (2 * s) > Rj(j0):
        s += 1
    j = j0
    while not (Rj(j + 1) < R0 ** (2 * s) <= Rj(j)):
        j += 1
    m1 = n + 2 * (j + 0.5)
    d = m1 - n
    log2C3 = m1 + math.log2((8 * Ct + 2 * d * d) / (d * d))
    return {"a": a, "log_C": logC, "t0": t0, "s": s, "j1": j, "m1": m1,
            "log2_C3": log2C3, "R2": R0, "R3": R0 ** (2 * s + 2) / 8}


if __name__ == "__main__":
    print(json.dumps(reference(), indent=1))
    sys.exit(0)
