"""Independent 60-digit evaluation of the Zoomeron left-hand side for the
radical candidate u = sqrt(a1*t / (6*x^2*(a1s*y + a2s))).

Derivatives are taken by sympy directly on the closed form and every term of
the expanded equation is evaluated separately with mpmath, so the output does
not depend on any code in this repository.

Usage: python3 radical_oracle.py > ../../fixtures/radical_oracle.json
"""
import json
import sympy as sp
import mpmath as mp

mp.mp.dps = 60
x, y, t = sp.symbols("x y t")
a1, a1s, a2s = sp.symbols("a1 a1s a2s")
u = sp.sqrt(a1 * t / (6 * x**2 * (a1s * y + a2s)))


def d(*v):
    return sp.diff(u, *v)


terms = [
    4 * u**5 * d(x, t),
    4 * u**4 * d(x) * d(t),
    u**3 * d(x, y, t, t),
    -(u**3) * d(x, x, x, y),
    2 * u**2 * d(x) * d(x, x, y),
    u**2 * d(x, x) * d(x, y),
    -2 * u**2 * d(t) * d(x, y, t),
    -(u**2) * d(t, t) * d(x, y),
    2 * u * d(t) ** 2 * d(x, y),
    -2 * u * d(x) ** 2 * d(x, y),
]

bindings = {"a1": "1", "a1s": "1", "a2s": "1"}
points = [
    ("3/2", "2", "5/4"),
    ("1", "1", "1"),
    ("2", "3/2", "7/3"),
    ("5/2", "11/4", "3/2"),
    ("7/4", "6/5", "13/5"),
]
tolerance = mp.mpf("1e-9")

out = {"bindings": bindings, "tolerance": "1e-9", "digits": 50, "points": []}
for px, py, pt in points:
    sub = {x: sp.Rational(px), y: sp.Rational(py), t: sp.Rational(pt)}
    sub.update({sp.Symbol(k): sp.Rational(v) for k, v in bindings.items()})
    vals = [mp.mpf(str(sp.N(term.subs(sub), 60))) for term in terms]
    total = mp.fsum(vals)
    scale = max(abs(v) for v in vals)
    rel = abs(total) / scale
    out["points"].append(
        {
            "x": px,
            "y": py,
            "t": pt,
            "residual": mp.nstr(total, 50),
            "scale": mp.nstr(scale, 50),
            "relative": mp.nstr(rel, 50),
            "pass": bool(rel <= tolerance),
        }
    )
out["verdict_pass"] = all(p["pass"] for p in out["points"])
print(json.dumps(out, indent=2))
