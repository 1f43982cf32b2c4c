import numpy as np

from cstomo.brent import bracket_minimum, minimize_brent


def test_parabola_inside_default_window():
    f = lambda b: (b - 0.37) ** 2 + 1.0
    br = bracket_minimum(f)
    assert br is not None
    x, fx = minimize_brent(f, br[0], fvals=br[1])
    assert abs(x - 0.37) < 1e-10
    assert fx == f(x)


def test_minimum_outside_window_is_reached_by_expansion():
    f = lambda b: (b - 17.0) ** 2 + 2.0
    br = bracket_minimum(f)
    assert br is not None
    x, _ = minimize_brent(f, br[0])
    assert abs(x - 17.0) < 1e-8


def test_monotone_function_gives_no_bracket():
    assert bracket_minimum(lambda b: b, max_doublings=40) is None
    assert bracket_minimum(lambda b: np.exp(-b), max_doublings=40) is None


def test_bracket_is_ordered_and_valid():
    f = lambda b: np.cosh(b - 0.8)
    br = bracket_minimum(f)
    (a, b, c), (fa, fb, fc) = br
    assert a < b < c
    assert fb < fa and fb < fc


def test_rational_quadratic_objective():
    # same shape as the contrast line search: quadratic over quadratic plus
    # a quadratic, minimized against dense scan as oracle
    rng = np.random.default_rng(5)
    for _ in range(6):
        p = rng.uniform(0.5, 2.0, size=3)
        q = rng.uniform(0.5, 2.0, size=3)
        r = rng.uniform(0.0, 1.0, size=3)
        p[1], q[1], r[1] = rng.uniform(-1, 1, size=3)

        def f(b):
            return ((p[0] + p[1] * b + p[2] * b * b)
                    / (q[0] + abs(q[1]) * 0.1 * b + q[2] * b * b)
                    + (r[0] + r[1] * b + r[2] * b * b))

        br = bracket_minimum(f)
        assert br is not None
        x, fx = minimize_brent(f, br[0])
        grid = np.linspace(br[0][0], br[0][2], 20001)
        assert fx <= f(grid[np.argmin(f(grid))]) + 1e-9


def test_flat_quadratic_term_reduces_to_linear_fraction():
    # frozen denominator: f(b) = (1 - 2b + 2b^2)/3 has closed-form minimum 0.5
    f = lambda b: (1.0 - 2.0 * b + 2.0 * b * b) / 3.0
    br = bracket_minimum(f)
    x, _ = minimize_brent(f, br[0])
    assert abs(x - 0.5) < 1e-10
