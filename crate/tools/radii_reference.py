"""Recompute confidence radii and Lambert W at 50 significant digits.

Writes crates/core/tests/fixtures/radii_reference.json, which the Rust tests
compare against. Run from the repository root:  python3 tools/radii_reference.py
"""

import itertools
import json
from pathlib import Path

from mpmath import mp, mpf, log, exp, lambertw

mp.dps = 50


def g(n, q, m, delta, a, b):
    n, q, m = mpf(n), mpf(q), mpf(m)
    inner = q * log(n / q) / (a * n) + 4 * q * log(1 / mpf(delta)) / (a * (q - 2 * m) * n)
    return inner ** (1 / mpf(b))


def f(n, m, q, d1, d2, a, b):
    n, q, m = mpf(n), mpf(q), mpf(m)
    first = q * log(n / q) / (a * (n / q)) + 4 * q * log(1 / mpf(d1)) / (a * (q - 2 * m) * n)
    k = n - m
    second = log(k) / (a * k) + 4 * log(1 / mpf(d2)) / (a * k)
    return first ** (1 / mpf(b)) + second ** (1 / mpf(b))


def h(n, m, delta, m_max, a, b):
    b = mpf(b)
    dmax = mpf(delta) - exp(-(1 + b) * (2 * m_max + 1))
    q = mpf(2 * m + 1)
    w1 = lambertw(mpf(n) * exp(4 * (1 + b) * (2 * m_max + 1)) / q).real
    k = mpf(n - m)
    w2 = lambertw(k * exp(4 * log(1 / dmax))).real
    return 2 * (q / (a * n) * w1) ** (1 / b) + (w2 / (a * k)) ** (1 / b)


def p(n, m, delta, a, b):
    b = mpf(b)
    q = mpf(2 * m + 1)
    w = lambertw(mpf(n) * exp((1 + b) * log(1 / mpf(delta))) / q).real
    return (q / (a * n) * w) ** (1 / b)


def s(x):
    return mp.nstr(x, 30, min_fixed=-400, max_fixed=400)


def main():
    out = {"lambert_w0": [], "g": [], "f": [], "h": [], "p": [], "h_sweep": []}
    for k in range(0, 61):
        z = mpf(10) ** (mpf(-12) + k * mpf("0.4"))
        out["lambert_w0"].append({"z": float(z), "w": s(lambertw(mpf(float(z))).real)})

    ab = [(1.0, 1.0), (1.0, 2.0), (2.5, 2.0), (0.5, 3.0), (1.0, 100.0)]
    for (n, q, m), delta, (a, b) in itertools.product(
        [(100, 11, 5), (500, 21, 3), (1000, 201, 100), (550, 101, 50)], [1e-3, 0.1, 0.5], ab
    ):
        out["g"].append(dict(n=n, q=q, m=m, delta=delta, a=a, b=b, value=s(g(n, q, m, delta, a, b))))
    for (n, m, q), (d1, d2), (a, b) in itertools.product(
        [(400, 0, 1), (500, 10, 21), (1000, 60, 201)], [(0.05, 0.05), (1e-8, 0.2)], ab
    ):
        out["f"].append(dict(n=n, m=m, q=q, delta1=d1, delta2=d2, a=a, b=b, value=s(f(n, m, q, d1, d2, a, b))))
    for (n, m, m_max), delta, (a, b) in itertools.product(
        [(500, 0, 200), (616, 50, 200), (1000, 150, 200), (400, 10, 100)], [0.1, 0.5], ab
    ):
        out["h"].append(dict(n=n, m=m, delta=delta, m_max=m_max, a=a, b=b, value=s(h(n, m, delta, m_max, a, b))))
    for (n, m), delta, (a, b) in itertools.product([(500, 0), (616, 50), (1000, 150)], [1e-3, 0.1], ab):
        out["p"].append(dict(n=n, m=m, delta=delta, a=a, b=b, value=s(p(n, m, delta, a, b))))
    for m in range(0, 201, 5):
        out["h_sweep"].append(dict(n=600, m=m, delta=0.1, m_max=200, a=1.0, b=2.0, value=s(h(600, m, 0.1, 200, 1.0, 2.0))))

    vals = [mpf(r["value"]) for r in out["h_sweep"]]
    assert all(x <= y for x, y in zip(vals, vals[1:])), "h not monotone"
    dest = Path("crates/core/tests/fixtures/radii_reference.json")
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(json.dumps(out, indent=1) + "\n")
    print({k: len(v) for k, v in out.items()})


if __name__ == "__main__":
    main()
