"""Symbolic derivation of the manufactured loads hard-coded in
include/vkplate/problems.hpp.

For a pair (u, v) the loads are

    f = biharm(u) - [u, v]
    g = biharm(v) + 1/2 [u, u]

with the von Karman bracket [a, b] = a_xx b_yy + a_yy b_xx - 2 a_xy b_xy.
Run with `python3 docs/derive_loads.py`; the printed values are frozen into
tests/test_problems.cpp.
"""
import sympy as sp

x, y = sp.symbols("x y", real=True)


def bracket(a, b):
    return (sp.diff(a, x, 2) * sp.diff(b, y, 2) + sp.diff(a, y, 2) * sp.diff(b, x, 2)
            - 2 * sp.diff(a, x, y) * sp.diff(b, x, y))


def biharm(a):
    return sp.diff(a, x, 4) + 2 * sp.diff(a, x, 2, y, 2) + sp.diff(a, y, 4)


problems = {
    "square-poly": (x**2 * (1 - x)**2 * y**2 * (1 - y)**2,) * 2,
    "square-trig": (sp.sin(sp.pi * x)**2 * sp.sin(sp.pi * y)**2,) * 2,
}

points = [(sp.Rational(1, 2), sp.Rational(1, 2)), (sp.Rational(1, 4), sp.Rational(2, 3)),
          (sp.Rational(1, 10), sp.Rational(7, 10))]

for name, (u, v) in problems.items():
    f = sp.simplify(biharm(u) - bracket(u, v))
    g = sp.simplify(biharm(v) + bracket(u, u) / 2)
    print(name)
    print("  biharm(u) =", sp.factor(biharm(u)))
    for px, py in points:
        sub = {x: px, y: py}
        print(f"  ({px}, {py}): f = {sp.N(f.subs(sub), 20)}  g = {sp.N(g.subs(sub), 20)}")
