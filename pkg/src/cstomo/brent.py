"""Derivative-free 1-D minimization: geometric bracketing plus Brent's method.

The contrast line search starts from the fixed interval [-1, 1] and widens it
geometrically until a three-point bracket exists; callers treat a bracketing
failure (monotone objective within the doubling budget) as "take no step".
"""

from __future__ import annotations

__all__ = ["bracket_minimum", "minimize_brent"]

_GOLD = 0.3819660112501051  # 2 - golden ratio, the NR fallback section


def bracket_minimum(f, lo: float = -1.0, hi: float = 1.0, max_doublings: int = 40):
    """Find (a, b, c) with a < b < c and f(b) <= f(a), f(c).

    Starts from the endpoints and midpoint of [lo, hi]; if the midpoint is not
    already lowest, marches downhill doubling the step each time.  Returns
    ((a, b, c), (fa, fb, fc)) or None after max_doublings expansions.
    """
    a, c = float(lo), float(hi)
    b = 0.5 * (a + c)
    fa, fb, fc = f(a), f(b), f(c)
    if fb <= fa and fb <= fc:
        return (a, b, c), (fa, fb, fc)

    if fa < fc:
        # downhill to the left: triple slides left, step doubling
        x2, x1, f2, f1 = b, a, fb, fa
        step = b - a
        for _ in range(max_doublings):
            x0 = x1 - step
            f0 = f(x0)
            # strict rise only: a tie can be underflow flatness, keep marching
            if f0 > f1:
                return (x0, x1, x2), (f0, f1, f2)
            x2, x1, f2, f1 = x1, x0, f1, f0
            step *= 2.0
    else:
        x0, x1, f0, f1 = b, c, fb, fc
        step = c - b
        for _ in range(max_doublings):
            x2 = x1 + step
            f2 = f(x2)
            if f2 > f1:
                return (x0, x1, x2), (f0, f1, f2)
            x0, x1, f0, f1 = x1, x2, f1, f2
            step *= 2.0
    return None


def minimize_brent(f, bracket, fvals=None, rel_tol: float = 1e-8,
                   abs_tol: float = 1e-12, max_iter: int = 200):
    """Brent minimization inside a three-point bracket.

    Parabolic interpolation with golden-section fallback; convergence when the
    interval shrinks below rel_tol * |x| + abs_tol.  Returns (x, f(x)).
    """
    a, b, c = bracket
    if not (a < b < c):
        raise ValueError("bracket must be ordered a < b < c")
    lo, hi = a, c
    x = w = v = b
    fx = fw = fv = f(b) if fvals is None else fvals[1]
    d = e = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        tol1 = rel_tol * abs(x) + abs_tol
        tol2 = 2.0 * tol1
        if abs(x - mid) <= tol2 - 0.5 * (hi - lo):
            break
        use_golden = True
        if abs(e) > tol1:
            # trial parabola through x, w, v
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev = e
            e = d
            if abs(p) < abs(0.5 * q * e_prev) and q * (lo - x) < p < q * (hi - x):
                d = p / q
                u = x + d
                if u - lo < tol2 or hi - u < tol2:
                    d = tol1 if x < mid else -tol1
                use_golden = False
        if use_golden:
            e = (hi if x < mid else lo) - x
            d = _GOLD * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0 else -tol1)
        fu = f(u)
        # strict improvement only, so a tie never drags x off an exact minimum
        if fu < fx:
            if u >= x:
                lo = x
            else:
                hi = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx
