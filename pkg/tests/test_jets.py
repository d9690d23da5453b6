import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from _systems import QUADRATIC_PAIR, SINE_SQUARES, TRIG_TWELVE, CUBIC_CHAIN
from multizero.dual_space import multiplicity_structure
from multizero.expr import DomainError, eval_system, parse_system
from multizero.jets import (JetSpace, directional_derivative, directional_derivatives,
                            graded_indices, jet_truncate, multi_factorial, system_tables,
                            taylor_table, value_and_jacobian)


def eq(text, k=0):
    return parse_system(text).equations[k]


def test_sine_maclaurin():
    tab = taylor_table(eq("vars x; sin(x)"), [0], 4)
    assert [tab[(j,)] for j in range(5)] == pytest.approx([0, 1, 0, -1 / 6, 0], abs=1e-16)


def test_quadratic_pair_first_equation():
    tab = taylor_table(eq(QUADRATIC_PAIR), [0, 0], 2)
    want = {(1, 0): 1, (0, 1): -1, (2, 0): 1}
    for j in graded_indices(2, 2):
        assert tab[j] == want.get(j, 0)


def test_trig_second_equation_against_symbolic_oracle():
    x1, x2 = sp.symbols("x1 x2")
    f = sp.sin(x2) * sp.sin(x1) ** 2 + x2 ** 4
    tab = taylor_table(eq(TRIG_TWELVE, 1), [0, 0], 3)
    for j in graded_indices(2, 3):
        exact = sp.diff(f, x1, j[0], x2, j[1]).subs({x1: 0, x2: 0}) / (
            math.factorial(j[0]) * math.factorial(j[1]))
        assert tab[j] == pytest.approx(complex(exact), abs=1e-15)
    assert tab[(2, 1)] == pytest.approx(1.0)


def test_negative_index_reads_zero_and_order_is_bounded():
    tab = taylor_table(eq("vars x y; exp(x + y)"), [0, 0], 2)
    assert tab[(-1, 2)] == 0
    with pytest.raises(KeyError):
        tab[(3, 0)]


def test_constant_term_is_function_value():
    f = eq("vars x y; exp(x)*cos(y) + sqrt(x + 2*y)")
    p = [0.3 + 0.1j, 0.7 - 0.2j]
    sys_ = parse_system("vars x y; exp(x)*cos(y) + sqrt(x + 2*y)")
    assert taylor_table(f, p, 3)[(0, 0)] == pytest.approx(eval_system(sys_, p)[0], rel=1e-15)


@pytest.mark.parametrize("text", ["vars x; 1/x", "vars x; log(x)", "vars x; sqrt(x)",
                                  "vars x; 1/(x^2)"])
def test_singular_series_raise(text):
    with pytest.raises(DomainError):
        taylor_table(eq(text), [0], 2)


def test_system_tables_report_the_equation():
    with pytest.raises(DomainError) as info:
        system_tables(parse_system("vars x; x; log(x)"), [0], 1)
    assert info.value.equation == 1


# --- symbolic oracle over all grammar functions ------------------------------

SYMS = sp.symbols("x y")
CASES = [
    ("tan(x)*exp(y) - x*y^3", sp.tan(SYMS[0]) * sp.exp(SYMS[1]) - SYMS[0] * SYMS[1] ** 3),
    ("log(1 + x - y)/cos(x*y)", sp.log(1 + SYMS[0] - SYMS[1]) / sp.cos(SYMS[0] * SYMS[1])),
    ("sqrt(2 + x)^3*sin(x - 2*y)", sp.sqrt(2 + SYMS[0]) ** 3 * sp.sin(SYMS[0] - 2 * SYMS[1])),
]


@pytest.mark.parametrize("text, expr", CASES)
def test_all_functions_against_sympy(text, expr):
    p = (0.2 + 0.1j, -0.3 + 0.2j)
    tab = taylor_table(eq("vars x y; " + text), p, 4)
    for j in graded_indices(2, 4):
        d = sp.diff(expr, SYMS[0], j[0], SYMS[1], j[1])
        exact = complex(d.subs({SYMS[0]: p[0], SYMS[1]: p[1]}).evalf(30)) / multi_factorial(j)
        assert tab[j] == pytest.approx(exact, rel=1e-11, abs=1e-12)


# --- finite differences ------------------------------------------------------

RANDOM_FUNCTIONS = [
    "sin(x)*cos(y) - x", "exp(x*y) + x^3", "log(2 + x + y^2)", "sqrt(3 + x - y)*tan(y)",
    "1/(2 - x*y)", "cos(x)^2 - exp(-y)",
]


def central_second(f, p, i, j, h=1e-5):
    e = np.eye(2)
    if i == j:
        return (f(p + h * e[i]) - 2 * f(p) + f(p - h * e[i])) / h ** 2
    return (f(p + h * e[i] + h * e[j]) - f(p + h * e[i] - h * e[j])
            - f(p - h * e[i] + h * e[j]) + f(p - h * e[i] - h * e[j])) / (4 * h ** 2)


@pytest.mark.parametrize("case", range(20))
def test_finite_differences(case):
    rng = np.random.default_rng(case)
    text = RANDOM_FUNCTIONS[case % len(RANDOM_FUNCTIONS)]
    sys_ = parse_system("vars x y; " + text)
    f = lambda q: eval_system(sys_, q)[0]
    p = 0.3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    tab = taylor_table(sys_.equations[0], p, 2)
    h = 1e-5
    for i in range(2):
        e = np.eye(2)[i]
        fd = (f(p + h * e) - f(p - h * e)) / (2 * h)
        j = tuple(int(v) for v in e)
        assert tab[j] == pytest.approx(fd, rel=1e-6, abs=1e-8)
        for k in range(i, 2):
            j2 = tuple(int(v) for v in np.eye(2)[i] + np.eye(2)[k])
            assert tab[j2] * multi_factorial(j2) == pytest.approx(
                central_second(f, p, i, k), rel=1e-4, abs=1e-5)


# --- directional derivatives ------------------------------------------------

def test_directional_examples():
    assert directional_derivative(eq("vars x1 x2; x1*x2"), [0, 0], [[1, 0], [0, 1]]) == 1
    assert directional_derivative(eq("vars x1 x2; x1^2"), [0, 0], [[1, 0], [1, 0]]) == 2
    d3 = directional_derivative(eq(TRIG_TWELVE), [0, 0], [[1, 0]] * 3)
    assert d3 == pytest.approx(-4, abs=1e-14)


def test_directional_without_directions_is_evaluation():
    f = eq("vars x y; exp(x) + y")
    assert directional_derivative(f, [0, 2], []) == pytest.approx(3)


def test_directional_length_mismatch():
    with pytest.raises(ValueError):
        directional_derivative(eq("vars x y; x"), [0, 0], [[1, 0, 0]])


def test_directional_derivatives_matches_per_equation():
    sys_ = parse_system(TRIG_TWELVE)
    rng = np.random.default_rng(3)
    dirs = [rng.standard_normal(2) + 1j * rng.standard_normal(2) for _ in range(3)]
    p = [0.1, -0.2j]
    vec = directional_derivatives(sys_, p, dirs)
    for i, f in enumerate(sys_.equations):
        assert vec[i] == directional_derivative(f, p, dirs)


vectors = st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                   min_size=2, max_size=2)


@settings(max_examples=50, deadline=None)
@given(st.lists(vectors, min_size=2, max_size=4), st.randoms(use_true_random=False))
def test_directional_symmetry(dirs, rnd):
    f = eq("vars x y; sin(x)*exp(y) + x^3*y - cos(x*y)")
    p = [0.3 - 0.1j, -0.2 + 0.4j]
    perm = list(dirs)
    rnd.shuffle(perm)
    a = directional_derivative(f, p, dirs)
    b = directional_derivative(f, p, perm)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=50, deadline=None)
@given(vectors, vectors, vectors, st.complex_numbers(max_magnitude=3, allow_nan=False,
                                                      allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_directional_linearity(u, v, w, a, b):
    f = eq("vars x y; exp(x - y)*sin(y) + x^2*y")
    p = [0.1 + 0.2j, 0.3]
    u, v, w = map(np.array, (u, v, w))
    lhs = directional_derivative(f, p, [a * u + b * v, w])
    rhs = a * directional_derivative(f, p, [u, w]) + b * directional_derivative(f, p, [v, w])
    scale = max(1.0, abs(a) * abs(directional_derivative(f, p, [u, w])),
                abs(b) * abs(directional_derivative(f, p, [v, w])))
    assert abs(lhs - rhs) <= 1e-12 * scale


@pytest.mark.parametrize("j", [(1, 0, 0), (2, 1, 0), (0, 3, 1), (1, 1, 1), (4, 0, 0)])
def test_directional_consistency_with_table(j):
    f = eq("vars x y z; exp(x*y) + sin(z - y)*x^2 + z^5")
    p = [0.2, -0.1 + 0.3j, 0.5]
    dirs = [np.eye(3)[r] for r in range(3) for _ in range(j[r])]
    tab = taylor_table(f, p, sum(j))
    assert directional_derivative(f, p, dirs) == pytest.approx(multi_factorial(j) * tab[j],
                                                               rel=1e-12)


# --- jet spaces ---------------------------------------------------------------

def test_graded_indices_count_and_order():
    idx = graded_indices(3, 4)
    assert len(idx) == math.comb(7, 3)
    assert idx[:4] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_jet_product_matches_polynomial_product():
    space = JetSpace.total(2, 3)
    x, y = space.variable(0, 1.0), space.variable(1, 2.0)
    prod = (x * y) ** 2
    # (x y)^2 around (1, 2): expand (1+a)^2 (2+b)^2
    a, b = sp.symbols("a b")
    poly = sp.Poly(sp.expand((1 + a) ** 2 * (2 + b) ** 2), a, b)
    for j in map(tuple, space.indices.tolist()):
        assert prod.c[space.position[j]] == pytest.approx(float(poly.coeff_monomial(a ** j[0] * b ** j[1])))


def test_box_space_truncates_per_variable():
    space = JetSpace.box((1, 2))
    assert set(map(tuple, space.indices.tolist())) == {(a, b) for a in range(2) for b in range(3)}


# --- jet truncation -----------------------------------------------------------

def test_jet_of_sine_is_identity():
    poly = jet_truncate(parse_system("vars x; sin(x)"), [0], 1)
    for p in [0.3, -1 + 2j]:
        assert eval_system(poly, [p])[0] == pytest.approx(p)


def test_jet_of_polynomial_is_itself():
    sys_ = parse_system(QUADRATIC_PAIR)
    poly = jet_truncate(sys_, [0, 0], 2)
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert np.allclose(eval_system(poly, p), eval_system(sys_, p), rtol=1e-14)


def test_jet_at_shifted_point():
    sys_ = parse_system("vars x y; exp(x)*y")
    poly = jet_truncate(sys_, [1, -2], 6)
    p = np.array([1.01, -2.02])
    assert eval_system(poly, p)[0] == pytest.approx(eval_system(sys_, p)[0], rel=1e-12)


@pytest.mark.parametrize("text, point, k", [
    (TRIG_TWELVE, [0, 0], 7),
    (SINE_SQUARES, [0, 0], 6),
    (CUBIC_CHAIN, [0, 0, 0], 12),
])
def test_jet_preserves_multiplicity_structure(text, point, k):
    sys_ = parse_system(text)
    a = multiplicity_structure(sys_, point)
    b = multiplicity_structure(jet_truncate(sys_, point, k), point)
    assert (a.multiplicity, a.hilbert) == (b.multiplicity, b.hilbert)


def test_value_and_jacobian():
    sys_ = parse_system("vars x y; x*y + sin(x); exp(y)")
    f, jac = value_and_jacobian(sys_, [0.5, 0.25])
    assert np.allclose(f, eval_system(sys_, [0.5, 0.25]))
    assert np.allclose(jac, [[0.25 + np.cos(0.5), 0.5], [0, np.exp(0.25)]])
