import math
import random

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpc, mpf

from phibound import qseries
from phibound.qseries import ComplexPoint, IntSeries


# --- independent oracles -------------------------------------------------------

def naive_mul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        for j, y in enumerate(b[:n - i]):
            out[i + j] += x * y
    return out


def naive_delta(n):
    """q prod (1 - q^k)^24 to n terms, by plain polynomial multiplication."""
    p = [1] + [0] * (n - 1)
    for k in range(1, n):
        f = [0] * n
        f[0] = 1
        f[k] = -1
        for _ in range(24):
            p = naive_mul(p, f, n)
    return [0] + p[:n - 1]


def sigma3(n):
    return sum(d ** 3 for d in range(1, n + 1) if n % d == 0)


series_lists = st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=1, max_size=40)


# --- expansions ---------------------------------------------------------------

def test_delta_matches_product_oracle():
    d = qseries.delta_expansion(30)
    assert d.valuation == 1
    assert d.dense(0, 30) == naive_delta(30)
    assert [d[1], d[2], d[3]] == [1, -24, 252]


def test_e4_divisor_sums():
    e = qseries.e4_expansion(60)
    assert e[0] == 1
    assert [e[1], e[2]] == [240, 2160]
    assert all(e[n] == 240 * sigma3(n) for n in range(1, 60))


def test_j_leading_coefficients():
    j = qseries.j_expansion(6)
    assert j.valuation == -1
    assert [j[n] for n in range(-1, 5)] == [1, 744, 196884, 21493760, 864299970, 20245856256]


def test_j_times_delta_is_e4_cubed():
    n = 300
    j = qseries.j_expansion(n)
    e4 = qseries.e4_expansion(n)
    d = qseries.delta_expansion(n)
    assert (j * d).truncate(n - 1) == (e4 * e4 * e4).truncate(n - 1)


def test_j_by_series_division_oracle():
    n = 25
    e4 = [240 * sigma3(k) if k else 1 for k in range(n)]
    num = naive_mul(naive_mul(e4, e4, n), e4, n)
    den = naive_delta(n + 1)[1:]          # Delta / q
    # long division num / den, den[0] == 1
    quo = []
    rem = list(num)
    for k in range(n):
        c = rem[k]
        quo.append(c)
        for i in range(k, n):
            rem[i] -= c * den[i - k]
    j = qseries.j_expansion(n - 1)
    assert [j[m] for m in range(-1, n - 1)] == quo


def test_precondition_errors():
    with pytest.raises(ValueError):
        qseries.delta_expansion(1)
    with pytest.raises(ValueError):
        qseries.e4_expansion(0)
    with pytest.raises(ValueError):
        qseries.j_expansion(-1)


# --- series arithmetic ----------------------------------------------------------

@given(series_lists, series_lists)
def test_multiplication_matches_naive(a, b):
    n = min(len(a), len(b))
    got = IntSeries(a) * IntSeries(b)
    assert got.prec >= n
    assert got.dense(0, n) == naive_mul(a, b, n)


@given(series_lists)
def test_square_equals_product(a):
    s = IntSeries(a)
    assert s.square() == s * s


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=30), st.integers(-3, 3))
def test_inverse_of_unit_series(a, v):
    a = [1] + a
    s = IntSeries(a, v)
    inv = s.inverse()
    prod = s * inv
    assert prod[0] == 1
    assert all(prod[k] == 0 for k in range(1, prod.prec))


@given(series_lists, st.integers(1, 5), st.integers(1, 5))
def test_substitute_power_composes(a, m, k):
    s = IntSeries(a, -1)
    one = qseries.substitute_power(s, m * k)
    two = qseries.substitute_power(qseries.substitute_power(s, m), k)
    assert one == two


def test_substitute_power_examples():
    j = qseries.j_expansion(10)
    j2 = qseries.substitute_power(j, 2)
    assert j2.valuation == -2 and j2[-2] == 1 and j2[-1] == 0 and j2[0] == 744
    assert j2.prec == 2 * j.prec
    assert qseries.substitute_power(j, 3)[3] == 196884
    zero = IntSeries([], 0, 4)
    assert qseries.substitute_power(zero, 5).is_zero()
    with pytest.raises(ValueError):
        qseries.substitute_power(j, 0)


def test_series_is_immutable():
    s = IntSeries([1, 2, 3])
    with pytest.raises(AttributeError):
        s.prec = 7


def test_coefficient_beyond_precision_is_an_error():
    s = IntSeries([1, 2, 3])
    with pytest.raises(IndexError):
        s[3]


# --- fundamental domain -------------------------------------------------------------

def test_reduce_examples():
    w, m = qseries.reduce_to_fundamental_domain(1j)
    assert m == qseries.IDENTITY
    assert abs(w.to_mpc() - 1j) < 1e-30
    w, m = qseries.reduce_to_fundamental_domain(5 + 1j)
    assert m == ((1, -5), (0, 1))
    assert abs(w.to_mpc() - 1j) < 1e-30
    w, _ = qseries.reduce_to_fundamental_domain(mpc(1, 1) / 3)
    assert w.im >= mpf(3) ** 0.5 / 2


@settings(max_examples=200)
@given(st.floats(-50, 50), st.floats(1e-3, 10))
def test_reduction_lands_in_domain(x, y):
    z = mpc(x, y)
    w, ((a, b), (c, d)) = qseries.reduce_to_fundamental_domain(z)
    assert a * d - b * c == 1
    assert abs(w.re) <= 0.5 + 1e-20
    assert w.re ** 2 + w.im ** 2 >= 1 - 1e-20
    with mpmath.workprec(256):
        assert abs(qseries.apply_matrix(((a, b), (c, d)), z) - w.to_mpc()) < 1e-25


def test_complex_point_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        ComplexPoint(0, 0)
    with pytest.raises(ValueError):
        ComplexPoint(1, -1)


# --- evaluation -----------------------------------------------------------------

def test_j_at_i():
    v = qseries.eval_j(1j)
    assert v.radius <= 1e-30
    assert abs(v.value - 1728) <= v.radius


def test_j_vanishes_at_cube_root_of_unity():
    rho = mpmath.expjpi(mpf(2) / 3)
    v = qseries.eval_j(rho)
    assert abs(v.value) <= v.radius
    assert v.radius <= 1e-30


def test_j_at_bracket_end_exceeds_twice_1728():
    v = qseries.eval_j(ComplexPoint(0, mpf("1.254")))
    assert v.value.real - v.radius > 3456


@pytest.mark.parametrize("z", [0.1 + 1.2j, -0.3 + 0.9j, 0.25 + 2.5j, 0.49 + 0.88j, 1.7 + 0.3j])
def test_eval_matches_mpmath_kleinj(z):
    v = qseries.eval_j(z, 1e-20)
    with mpmath.workprec(200):
        ref = 1728 * mpmath.kleinj(mpc(z))
    assert abs(v.value - ref) <= v.radius + 1e-40 * abs(ref)


def test_invariance_under_random_unimodular_maps():
    rng = random.Random(7)
    done = 0
    while done < 100:
        a, b, c, d = (rng.randint(-10, 10) for _ in range(4))
        if a * d - b * c != 1:
            continue
        z = mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.6))
        # the image is computed exactly enough that its rounding is below the radii
        with mpmath.workprec(400):
            w = ComplexPoint.of(qseries.apply_matrix(((a, b), (c, d)), z))
        v1 = qseries.eval_j(z, 1e-25)
        v2 = qseries.eval_j(w, 1e-25)
        assert abs(v1.value - v2.value) <= v1.radius + v2.radius
        done += 1


def test_monotone_on_imaginary_axis():
    prev = None
    for k in range(31):
        t = 1 + mpf(k) / 100
        v = qseries.eval_j(ComplexPoint(0, t), 1e-20)
        lo, hi = v.value.real - v.radius, v.value.real + v.radius
        if prev is not None:
            assert lo > prev
        prev = hi


def test_unreachable_precision_raises():
    with pytest.raises(qseries.PrecisionError):
        qseries.eval_j(1j, mpf('1e-3000'), max_prec=256)


def test_bad_target_rejected():
    with pytest.raises(ValueError):
        qseries.eval_j(1j, 0)


# --- inverse on the imaginary axis -------------------------------------------

def test_solve_t_endpoints_and_interior():
    assert qseries.solve_t_for_y(1728) == 1
    assert qseries.solve_t_for_y(3456) < 1.254
    t = qseries.solve_t_for_y(2000)
    v = qseries.eval_j(ComplexPoint(0, t))
    assert abs(v.value.real - 2000) <= 1e-9
    with pytest.raises(ValueError):
        qseries.solve_t_for_y(1727)
    with pytest.raises(ValueError):
        qseries.solve_t_for_y(3457)


def test_lognorm_enclosure():
    lo, hi = qseries.lognorm_j(1j)
    assert lo <= math.log(1728) <= hi
    assert hi - lo < 1e-12
    lo, hi = qseries.lognorm_j(mpmath.expjpi(mpf(2) / 3))
    assert lo == 0.0
