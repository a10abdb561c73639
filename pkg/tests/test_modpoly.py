import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import TABLE_ROWS
from phibound import modpoly
from phibound.modpoly import BivariateIntPoly, MalformedPolynomialError
from phibound.qseries import j_expansion

PHI2_TEXT = """phi l 2
0 0 -157464000000000
1 0 8748000000
1 1 40773375
2 0 -162000
2 1 1488
2 2 -1
3 0 1
"""


# --- oracle: dense rational solve of the q-expansion equations ---------------------

def _laurent(jser, hi, m=1):
    """{exponent: coefficient} of j(q^m) for exponents < hi."""
    out = {}
    for n in range(-1, hi):
        if m * n >= hi:
            break
        out[m * n] = jser[n]
    return out


def _lmul(a, b, hi):
    out = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            if e1 + e2 < hi:
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
    return out


def _lpow(a, k, hi):
    out = {0: 1}
    for _ in range(k):
        out = _lmul(out, a, hi)
    return out


def phi_by_dense_solve(l):
    """Symmetric ansatz solved by exact Gaussian elimination on q-coefficients."""
    hi = 2 * l + 4
    # products of Laurent series lose precision to the poles: carry extra terms
    H = hi + l * (l + 1) + l + 2
    jser = j_expansion(H + 1)
    X = _laurent(jser, H, l)
    Y = _laurent(jser, H)
    xp = [_lpow(X, i, H) for i in range(l + 2)]
    yp = [_lpow(Y, j, H) for j in range(l + 2)]
    unknowns = [(i, j) for i in range(l + 1) for j in range(i + 1)]
    lo = -l * (l + 1) - l - 1
    prod = {(i, j): _lmul(xp[i], yp[j], hi) for i in range(l + 2) for j in range(l + 2)}
    rows = []
    for e in range(lo, hi):
        row = []
        for i, j in unknowns:
            v = prod[i, j].get(e, 0)
            if i != j:
                v += prod[j, i].get(e, 0)
            row.append(Fraction(v))
        rhs = -(prod[l + 1, 0].get(e, 0) + prod[0, l + 1].get(e, 0))
        rows.append(row + [Fraction(rhs)])
    n = len(unknowns)
    r = 0
    piv = []
    for c in range(n):
        p = next((k for k in range(r, len(rows)) if rows[k][c] != 0), None)
        assert p is not None, "singular system"
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][c] != 0:
                f = rows[k][c]
                rows[k] = [a - f * b for a, b in zip(rows[k], rows[r])]
        piv.append(c)
        r += 1
    # every remaining equation must be consistent
    assert all(row[-1] == 0 for row in rows[r:])
    sol = {unknowns[c]: rows[k][-1] for k, c in enumerate(piv)}
    assert all(v.denominator == 1 for v in sol.values())
    coeffs = {k: int(v) for k, v in sol.items()}
    coeffs[(l + 1, 0)] = 1
    return BivariateIntPoly(l, coeffs)


@pytest.mark.parametrize("l", [2, 3, 5])
def test_strategies_match_dense_oracle(l):
    ref = phi_by_dense_solve(l)
    assert modpoly.compute_phi(l) == ref
    assert modpoly.compute_phi(l, "linear_solve") == ref


@pytest.mark.parametrize("l", [2, 3, 5, 7, 11, 13, 17, 19, 23])
def test_strategies_agree(l, polys):
    assert modpoly.compute_phi(l, "linear_solve") == polys.get(l)


def test_phi2_known_coefficients():
    p = modpoly.compute_phi(2)
    assert p.coeff(2, 2) == -1
    assert p.coeff(0, 0) == -157464000000000
    assert p.coeff(3, 0) == p.coeff(0, 3) == 1
    assert modpoly.serialize(p) == PHI2_TEXT


@pytest.mark.parametrize("l", [2, 3, 5, 7, 11, 13])
def test_structure_symmetry_and_congruence(l, polys):
    p = polys.get(l)
    for i in range(l + 2):
        for j in range(l + 2):
            assert p.coeff(i, j) == p.coeff(j, i)
    assert modpoly.check_structure(p)
    assert modpoly.kronecker_congruence_holds(p)


def test_modular_equation_check_detects_perturbation(polys):
    p = polys.get(2)
    assert modpoly.verify_modular_equation(p, 16)
    assert not modpoly.verify_modular_equation(p.with_coeff(1, 0, p.coeff(1, 0) + 1), 16)
    assert modpoly.verify_modular_equation(polys.get(11), 16)


def test_congruence_detects_perturbation(polys):
    p = polys.get(5)
    assert not modpoly.kronecker_congruence_holds(p.with_coeff(2, 1, p.coeff(2, 1) + 1))
    # a multiple of l leaves the congruence intact; the equation check must catch it
    q = p.with_coeff(2, 1, p.coeff(2, 1) + 5)
    assert modpoly.kronecker_congruence_holds(q)
    assert not modpoly.verify_modular_equation(q)


def test_rejects_bad_levels():
    with pytest.raises(ValueError):
        modpoly.compute_phi(4)
    with pytest.raises(ValueError):
        modpoly.compute_phi(67, max_l=61)
    with pytest.raises(ValueError):
        modpoly.compute_phi(3, strategy="magic")


# --- heights -------------------------------------------------------------------

@pytest.mark.parametrize("l,h2,c,r", TABLE_ROWS[:6])
def test_small_rows_match_table(l, h2, c, r, polys):
    rep = modpoly.height(polys.get(l))
    assert rep.h2 == h2
    assert modpoly.table_stats(rep) == (c, r)


def test_height_conventions_for_phi2(polys):
    rep = modpoly.height(polys.get(2))
    assert rep.h == pytest.approx(math.log(157464000000000), rel=1e-15)
    assert modpoly.table_stats(rep) == (12.48, 1.33)
    assert modpoly.table_stats(rep, "exact")[0] == 12.19
    with pytest.raises(ValueError):
        modpoly.table_stats(rep, "other")


def test_round_half_up():
    assert modpoly.round_half_up(1.005) == 1.01
    assert modpoly.round_half_up(2.345) == 2.35
    assert modpoly.round_half_up(-0.125) == -0.13


@given(st.integers(1, 10 ** 4000))
@settings(max_examples=60)
def test_log_abs_int(n):
    ref = math.log(n) if n.bit_length() < 1000 else math.log2(n) * math.log(2)
    assert modpoly.log_abs_int(-n) == pytest.approx(ref, rel=1e-14)


# --- text format ------------------------------------------------------------------

def test_round_trip_and_line_content(polys):
    for l in (2, 3, 5, 7):
        text = modpoly.serialize(polys.get(l))
        assert modpoly.parse(text) == polys.get(l)
        assert modpoly.serialize(modpoly.parse(text)) == text
    assert "\n2 2 -1\n" in modpoly.serialize(polys.get(2))


@pytest.mark.parametrize("bad", [
    PHI2_TEXT.replace("2 1 1488", "1 2 1488"),          # i < j
    PHI2_TEXT.replace("2 1 1488\n", ""),                 # fine on its own, checked below
    PHI2_TEXT.replace("1488", "01488"),                  # leading zero
    PHI2_TEXT.replace("1488", "+1488"),
    PHI2_TEXT.replace("2 1 1488", "2 1 0"),              # explicit zero
    PHI2_TEXT.replace("\n", "\r\n"),
    PHI2_TEXT.replace("phi l 2", "phi l 4"),
    PHI2_TEXT.replace("2 0 -162000\n2 1 1488", "2 1 1488\n2 0 -162000"),   # order
    PHI2_TEXT.replace("3 0 1", "4 0 1"),
    PHI2_TEXT.replace("2 1 1488", "2 1  1488"),
    "",
])
def test_parse_rejects_non_canonical(bad):
    if bad == PHI2_TEXT.replace("2 1 1488\n", ""):
        # well-formed text of a wrong polynomial parses; semantic checks reject it
        p = modpoly.parse(bad)
        assert not modpoly.verify_modular_equation(p)
        return
    with pytest.raises(MalformedPolynomialError):
        modpoly.parse(bad)


# --- cache ---------------------------------------------------------------------

def test_cache_round_trip_and_repair(tmp_path, monkeypatch):
    monkeypatch.setenv("CACHE_DIR", str(tmp_path))
    assert modpoly.cache_dir() == tmp_path
    p = modpoly.load_or_compute(3)
    path = tmp_path / "phi_3.txt"
    first = path.read_bytes()
    assert modpoly.load_or_compute(3) == p
    assert path.read_bytes() == first
    path.write_text("phi l 3\n0 0 garbage\n")
    assert modpoly.load_or_compute(3) == p
    assert path.read_bytes() == first
    # a readable but wrong polynomial fails the congruence and is replaced
    wrong = p.with_coeff(1, 0, p.coeff(1, 0) + 1)
    path.write_text(modpoly.serialize(wrong))
    assert modpoly.load_or_compute(3) == p
