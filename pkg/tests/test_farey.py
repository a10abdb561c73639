import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from phibound import bounds, farey


def brute_farey(N):
    return sorted({Fraction(h, k) for k in range(1, N + 1) for h in range(0, k + 1)})


def brute_totient(n):
    return sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)


@pytest.mark.parametrize("N", [1, 2, 3, 7, 20])
def test_sequence_matches_brute_force(N):
    assert [Fraction(h, k) for h, k in farey.farey_sequence(N)] == brute_farey(N)


def test_small_partitions():
    p1 = farey.build_partition(1)
    assert len(p1) == 1
    e = p1.entries[0]
    assert (e.h, e.k, e.rho1, e.rho2) == (1, 1, Fraction(1, 2), Fraction(3, 2))
    assert len(farey.build_partition(5)) == 10
    with pytest.raises(ValueError):
        farey.build_partition(0)


@pytest.mark.parametrize("N", [1, 2, 5, 13, 60, 137])
def test_entry_count_is_totient_sum(N):
    assert len(farey.build_partition(N)) == farey.totient_sum(N)
    assert farey.totient_sum(N) == sum(brute_totient(k) for k in range(1, N + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 120))
def test_partition_invariants(N):
    part = farey.build_partition(N)
    assert farey.check_partition(part) == []
    for e in part.entries:
        s, mr = e.matrix[0]
        k, mh = e.matrix[1]
        assert s * mh - mr * k == 1          # det of [[s, -r], [k, -h]]
        assert 0 <= e.s < e.k or e.k == 1


def test_checker_detects_corruption():
    part = farey.build_partition(8)
    entries = list(part.entries)
    e = entries[3]
    entries[3] = farey.FareyEntry(e.h, e.k, e.rho1 + Fraction(1, 1000), e.rho2, e.r, e.s)
    bad = farey.FareyPartition(8, tuple(entries))
    assert farey.check_partition(bad)
    entries = list(part.entries)
    e = entries[5]
    entries[5] = farey.FareyEntry(e.h, e.k, e.rho1, e.rho2, e.r + 1, e.s)
    assert farey.check_partition(farey.FareyPartition(8, tuple(entries)))


def test_locate():
    part = farey.build_partition(6)
    for e in part.entries:
        assert part.entries[part.locate(e.rho1)] is e
        assert part.entries[part.locate(e.center)] is e
    with pytest.raises(ValueError):
        part.locate(Fraction(8, 7))


def test_all_orders_up_to_60():
    assert farey.verify_partitions(60) == {}


# --- lattice points -----------------------------------------------------------------

def test_lattice_range_has_l_points():
    for l in (7, 11, 101, 499):
        for t in (1.0, 1.1, 1.25):
            N = farey.farey_order(l, t)
            r = farey.lattice_range(l, N)
            assert len(r) == l
            assert all(Fraction(1, N + 1) <= Fraction(b, l) < Fraction(N + 2, N + 1) for b in r)


def test_farey_order_is_exact():
    assert farey.farey_order(100, 1.0) == 10
    assert farey.farey_order(99, 1.0) == 9
    assert farey.farey_order(121, 1.21) == 10


@pytest.mark.parametrize("l", [7, 11, 13, 53, 97, 199])
@pytest.mark.parametrize("t", [1.0, 1.1, 1.2, 1.25])
def test_classification_claims(l, t):
    pts = farey.classify_points(l, t)
    assert len(pts) == l
    assert sorted(p.b for p in pts) == list(farey.lattice_range(l, farey.farey_order(l, t)))
    K = farey.totient_sum(farey.farey_order(l, t))
    assert sum(p.kind == farey.BAD for p in pts) <= K + 1
    assert all(p.im_lambda >= 0.5 - 1e-12 for p in pts)
    # every cell holds at least one point
    assert len({(p.h, p.k) for p in pts}) == K


def test_classification_preconditions():
    with pytest.raises(ValueError):
        farey.classify_points(5, 1.0)
    with pytest.raises(ValueError):
        farey.classify_points(7, 1.3)
    with pytest.raises(ValueError):
        farey.classify_points(11, 1.0, farey.build_partition(2))


def test_lattice_points_up_to_503():
    assert farey.verify_lattice_points(503) == {}


# --- direct sums -------------------------------------------------------------------

def test_empirical_sum_l7():
    s = farey.empirical_S(7, 1.0)
    assert s.lower <= s.upper
    assert s.upper - s.lower < 1e-9
    assert s.upper <= bounds.lemma5_bound(7, 1.0) + bounds.lemma6_bound(7, 1.0).total
    g, eps = farey.empirical_g_eps(7, 1.0)
    assert s.mid <= g + eps + 1e-9
    assert eps <= bounds.epsilon_prime(7, 1.0)


def test_terms_nonnegative_and_periodic():
    from mpmath import mpf

    from phibound import qseries

    for b in range(2):
        lo, hi = qseries.lognorm_j(qseries.ComplexPoint(mpf(b) / 2, mpf(1) / 2))
        assert 0 <= lo <= hi
    for b in range(5):
        a = qseries.lognorm_j(qseries.ComplexPoint(mpf(b) / 5, mpf(1) / 5))
        c = qseries.lognorm_j(qseries.ComplexPoint(mpf(b + 5) / 5, mpf(1) / 5))
        assert abs(a[0] - c[0]) < 1e-12


def test_empirical_sum_limit():
    with pytest.raises(ValueError):
        farey.empirical_S(211, 1.0)


# --- totient count bound ----------------------------------------------------------

def test_totient_count_bound():
    assert farey.totient_sum(2) == 2
    assert not farey.kn_bound_check(2)
    assert farey.kn_bound_check(10)
    assert farey.totient_sum(10) == 32
    assert farey.kn_bound_check(100)
    assert farey.kn_bound_threshold(2000) == 3
    with pytest.raises(ValueError):
        farey.kn_bound_check(1)


def test_dump_format():
    text = farey.dump_partition(3)
    assert text == "1/3 1/4 2/5 3\n1/2 2/5 3/5 2\n2/3 3/5 3/4 3\n1/1 3/4 5/4 1\n"
