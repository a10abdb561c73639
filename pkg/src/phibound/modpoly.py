"""Classical modular polynomials for prime level, their heights and caching.

Two independent computations are provided:

``j_reduction``
    The l+1 conjugates j(q^l) and j(zeta^b q^(1/l)) are the roots of
    Phi_l(X, j(q)).  Power sums of the l conjugates j(zeta^b q^(1/l)) are the
    l-sections of j(x)^k; Newton's identities turn them into elementary
    symmetric functions, and each symmetric function is written as a
    polynomial in j(q) by peeling off poles.
``linear_solve``
    Symmetric ansatz with unknown a_ij, i, j <= l, solved by matching
    q-coefficients of Phi_l(j(q^l), j(q)) pole by pole.  The system is
    triangular in the pole order l*i + j, so no elimination is needed.
"""

from __future__ import annotations

import math
import os
import re
import tempfile
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import mpmath

from .qseries import IntSeries, j_expansion, substitute_power

__all__ = [
    "BivariateIntPoly",
    "HeightReport",
    "InconsistentSystemError",
    "MalformedPolynomialError",
    "compute_phi",
    "check_structure",
    "kronecker_congruence_holds",
    "verify_modular_equation",
    "height",
    "table_stats",
    "round_half_up",
    "serialize",
    "parse",
    "load_or_compute",
    "cache_dir",
    "is_prime",
    "STRATEGIES",
    "DEFAULT_MAX_L",
]

STRATEGIES = ("j_reduction", "linear_solve")
DEFAULT_MAX_L = 61
VERIFY_SLACK = 16


class InconsistentSystemError(ArithmeticError):
    """The q-expansion system left a nonzero remainder."""


class MalformedPolynomialError(ValueError):
    """Polynomial text does not follow the canonical file format."""


def is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class BivariateIntPoly:
    """Symmetric polynomial in X, Y of degree l+1 in each variable.

    Only entries with i >= j are stored; zero coefficients are dropped.
    """

    __slots__ = ("l", "_c")

    def __init__(self, l, coeffs):
        self.l = l
        c = {}
        for (i, j), v in coeffs.items():
            if i < j:
                i, j = j, i
            if not (0 <= j <= i <= l + 1):
                raise ValueError(f"exponent pair ({i}, {j}) out of range for l={l}")
            if v:
                c[(i, j)] = int(v)
        self._c = c

    def coeff(self, i, j):
        if i < j:
            i, j = j, i
        return self._c.get((i, j), 0)

    def items(self):
        """Canonical (i, j, c) triples, i >= j, ascending (i, j)."""
        return [(i, j, c) for (i, j), c in sorted(self._c.items())]

    def __len__(self):
        return len(self._c)

    def max_abs(self):
        return max((abs(v) for v in self._c.values()), default=0)

    def with_coeff(self, i, j, value):
        d = dict(self._c)
        if i < j:
            i, j = j, i
        d[(i, j)] = value
        return BivariateIntPoly(self.l, d)

    def row(self, i):
        """Coefficients of X^i as a list indexed by the Y exponent."""
        return [self.coeff(i, j) for j in range(self.l + 2)]

    def __eq__(self, other):
        if not isinstance(other, BivariateIntPoly):
            return NotImplemented
        return self.l == other.l and self._c == other._c

    def __hash__(self):
        return hash((self.l, tuple(sorted(self._c.items()))))

    def __repr__(self):
        return f"BivariateIntPoly(l={self.l}, terms={len(self._c)})"


# ---------------------------------------------------------------------------
# strategy: j_reduction
# ---------------------------------------------------------------------------

def _j_powers(j, top, prec):
    """[j^0, ..., j^top] each truncated to q^prec."""
    out = [IntSeries([1], 0, prec)]
    cur = None
    for d in range(1, top + 1):
        cur = j if cur is None else cur * j
        out.append(cur.truncate(prec))
    return out


def _reduce_against_j(s, jpow):
    """Write s as sum c_d j^d; return ([c_0..c_D], remainder)."""
    top = len(jpow) - 1
    rem = s
    cs = [0] * (top + 1)
    for d in range(top, -1, -1):
        c = rem[-d]
        if c:
            cs[d] = c
            rem = rem - jpow[d] * c
    return cs, rem


def _phi_by_reduction(l, extra):
    prec = l + 2 + extra                    # q-precision of symmetric functions
    xprec = l * prec + l + 2                # j(x)^k needs this many x-terms
    jx = j_expansion(xprec)
    psum = [None]
    cur = None
    for k in range(1, l + 1):
        cur = jx if cur is None else (cur * jx)
        psum.append(cur.decimate(l) * l)
    # Newton: m e_m = sum_{i=1..m} (-1)^(i-1) e_{m-i} P_i
    e = [IntSeries([1], 0, prec + 2)]
    for m in range(1, l + 1):
        acc = None
        for i in range(1, m + 1):
            t = e[m - i] * psum[i]
            if i % 2 == 0:
                t = -t
            acc = t if acc is None else acc + t
        e.append(acc.divexact(m))
    jq = j_expansion(prec + 2 * l + 4)
    jl = substitute_power(j_expansion(prec // l + 3), l)
    low = min(s.prec for s in e) - 2
    jpow = _j_powers(jq, l + 1, low)
    coeffs = {}
    for k in range(0, l + 2):
        ek = e[k] if k <= l else None
        prev = e[k - 1] if k >= 1 else None
        big = ek
        if prev is not None:
            t = prev * jl
            big = t if big is None else big + t
        cs, rem = _reduce_against_j(big.truncate(min(big.prec, low)), jpow)
        if not rem.is_zero():
            raise InconsistentSystemError(f"nonzero remainder reducing e_{k} for l={l}")
        if rem.prec < 2:
            raise InconsistentSystemError("precision exhausted during reduction")
        sign = -1 if k % 2 else 1
        for d, c in enumerate(cs):
            if c:
                coeffs[(l + 1 - k, d)] = sign * c
    return _symmetrize(l, coeffs)


def _symmetrize(l, full):
    canon = {}
    for (i, j), c in full.items():
        a, b = (i, j) if i >= j else (j, i)
        prev = canon.get((a, b))
        if prev is not None and prev != c:
            raise InconsistentSystemError(f"asymmetric coefficients at ({a}, {b})")
        canon[(a, b)] = c
    for (i, j) in list(canon):
        if i != j and full.get((j, i), canon[(i, j)]) != canon[(i, j)]:
            raise InconsistentSystemError(f"asymmetric coefficients at ({i}, {j})")
    return BivariateIntPoly(l, canon)


# ---------------------------------------------------------------------------
# strategy: linear_solve
# ---------------------------------------------------------------------------

def _phi_by_linear_solve(l, extra):
    # pole order of X^i Y^j with X = j(q^l), Y = j(q) is l*i + j
    yprec = (l + 1) ** 2 + 2 * (l + 1) + extra
    jq = j_expansion(yprec)
    ypow = [IntSeries([1], 0, yprec - l - 1)]
    cur = None
    for d in range(1, l + 2):
        cur = jq if cur is None else cur * jq
        ypow.append(cur)
    xbase = j_expansion(yprec // l + l + 3)
    xpow = [IntSeries([1], 0, xbase.prec)]
    cur = None
    for i in range(1, l + 2):
        cur = xbase if cur is None else cur * xbase
        xpow.append(cur)
    a = {(l, l): -1}
    residual = substitute_power(xpow[l + 1], l)
    for i in range(l, -1, -1):
        row = {}
        for jj in range(l, -1, -1):
            if (i, jj) in a:
                row[jj] = a[(i, jj)]
                continue
            if jj > i:
                row[jj] = a[(jj, i)]
                continue
            p = l * i + jj
            known = residual[-p]
            for j2, v in row.items():
                if v:
                    known += v * ypow[j2][-jj]
                    if jj == 0 and j2 == l:
                        known += v * 744 * i
            if i == 0:
                known += ypow[l + 1][-jj]
            if i == 1 and jj == 1:
                known += 1
            if jj == 0 and i >= 1:
                below = a.get((l, i - 1))
                known += below
                if i == 1:
                    known += ypow[l + 1][-l]
            row[jj] = -known
            a[(i, jj)] = row[jj]
        poly_y = None
        for jj, v in row.items():
            if v:
                t = ypow[jj] * v
                poly_y = t if poly_y is None else poly_y + t
        if i == 0:
            poly_y = ypow[l + 1] if poly_y is None else poly_y + ypow[l + 1]
        if poly_y is not None:
            residual = residual + substitute_power(xpow[i], l) * poly_y
    if not residual.is_zero():
        raise InconsistentSystemError(
            f"q-expansion system for l={l} is inconsistent (lowest term q^{residual.valuation})")
    full = {(i, j): v for (i, j), v in a.items()}
    full[(l + 1, 0)] = 1
    full[(0, l + 1)] = 1
    return _symmetrize(l, full)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def check_structure(p):
    """Degree and leading-term shape of a level-l modular polynomial."""
    l = p.l
    if p.coeff(l + 1, 0) != 1 or p.coeff(l, l) != -1:
        return False
    if any(p.coeff(l + 1, j) for j in range(1, l + 2)):
        return False
    return True


def kronecker_congruence_holds(p):
    """Phi_l = X^(l+1) - X^l Y^l - X Y + Y^(l+1) mod l."""
    l = p.l
    expected = {(l + 1, 0): 1, (l, l): -1, (1, 1): -1}
    for i in range(l + 2):
        for j in range(i + 1):
            if (p.coeff(i, j) - expected.get((i, j), 0)) % l:
                return False
    return True


def verify_modular_equation(p, slack=VERIFY_SLACK):
    """True iff Phi(j(q^l), j(q)) vanishes through q^slack."""
    l = p.l
    target = slack + 1
    ny = target + l * (l + 1) + l + 4
    jq = j_expansion(ny)
    jy = j_expansion((target + l + 2) // l + l + 4)
    ypow_x = [IntSeries([1], 0, jy.prec)]
    cur = None
    for i in range(1, l + 2):
        cur = jy if cur is None else cur * jy
        ypow_x.append(cur)
    acc = None
    for jj in range(l + 1, -1, -1):
        col = None
        for i in range(l + 2):
            c = p.coeff(i, jj)
            if c:
                t = ypow_x[i] * c
                col = t if col is None else col + t
        if col is None:
            col = IntSeries([], jy.prec, jy.prec)
        col = substitute_power(col, l)
        acc = col if acc is None else acc * jq + col
    if acc.prec < target:
        raise ArithmeticError("verification precision too small")  # pragma: no cover
    return acc.truncate(target).is_zero()


# ---------------------------------------------------------------------------
# public computation
# ---------------------------------------------------------------------------

_SOLVERS = {"j_reduction": _phi_by_reduction, "linear_solve": _phi_by_linear_solve}


def compute_phi(l, strategy="j_reduction", *, max_l=None, extra=16, verify=True):
    """Exact Phi_l for a prime l, checked before it is returned."""
    if not is_prime(l):
        raise ValueError(f"l={l} is not prime")
    if max_l is not None and l > max_l:
        raise ValueError(f"l={l} exceeds the configured maximum {max_l}")
    try:
        solver = _SOLVERS[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None
    try:
        p = solver(l, extra)
    except InconsistentSystemError:
        p = solver(l, 2 * extra + l)
    if verify:
        if not check_structure(p):
            raise InconsistentSystemError(f"Phi_{l} has the wrong degree structure")
        if not kronecker_congruence_holds(p):
            raise InconsistentSystemError(f"Phi_{l} fails the congruence mod {l}")
        if not verify_modular_equation(p):
            raise InconsistentSystemError(f"Phi_{l} fails the modular equation")
    return p


# ---------------------------------------------------------------------------
# heights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeightReport:
    """Height of Phi_l.

    ``h`` is log max|c|; ``h2`` its bit length.  ``c_l``/``r_l`` use
    h2*log 2 (the tabulated convention), the ``*_exact`` fields use ``h``.
    """

    l: int
    h: float
    h2: int
    c_l: float
    r_l: float
    c_l_exact: float
    r_l_exact: float

    @property
    def h_bits(self):
        return self.h2 * math.log(2)


def log_abs_int(n):
    """Natural log of |n| for a nonzero integer, to double precision."""
    n = abs(n)
    if n == 0:
        raise ValueError("log of zero")
    b = n.bit_length()
    if b <= 1000:
        return math.log(n)
    shift = b - 64
    return math.log(n >> shift) + shift * math.log(2)


def _stats(l, hconv):
    lead = 6 * l * math.log(l)
    return (hconv - lead) / l, (lead + 18 * l) / hconv


def height(p):
    m = p.max_abs()
    if m == 0:
        raise ValueError("zero polynomial has no height")
    with mpmath.workprec(96):
        h = float(mpmath.log(mpmath.mpf(m)))
    h2 = m.bit_length()
    c_l, r_l = _stats(p.l, h2 * math.log(2))
    ce, re_ = _stats(p.l, h)
    return HeightReport(p.l, h, h2, c_l, r_l, ce, re_)


def round_half_up(x, places=2):
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def table_stats(report, convention="bits"):
    """(c_l, r_l) rounded half-up to 2 decimals."""
    if convention == "bits":
        return round_half_up(report.c_l), round_half_up(report.r_l)
    if convention == "exact":
        return round_half_up(report.c_l_exact), round_half_up(report.r_l_exact)
    raise ValueError(f"unknown convention {convention!r}")


# ---------------------------------------------------------------------------
# text format and cache
# ---------------------------------------------------------------------------

def serialize(p):
    lines = [f"phi l {p.l}"]
    lines.extend(f"{i} {j} {c}" for i, j, c in p.items())
    return "\n".join(lines) + "\n"


def parse(text):
    if "\r" in text:
        raise MalformedPolynomialError("CR line endings are not allowed")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedPolynomialError("empty input")
    head = lines[0].split(" ")
    if len(head) != 3 or head[:2] != ["phi", "l"] or not head[2].isdigit():
        raise MalformedPolynomialError(f"bad header {lines[0]!r}")
    l = int(head[2])
    if not is_prime(l):
        raise MalformedPolynomialError(f"level {l} is not prime")
    coeffs = {}
    last = None
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        if len(parts) != 3 or line != line.strip():
            raise MalformedPolynomialError(f"line {n}: expected 'i j c'")
        try:
            i, j = int(parts[0]), int(parts[1])
            c = int(parts[2])
        except ValueError:
            raise MalformedPolynomialError(f"line {n}: non-integer field") from None
        if not re.fullmatch(r"(0|[1-9][0-9]*) (0|[1-9][0-9]*) -?[1-9][0-9]*", line):
            raise MalformedPolynomialError(f"line {n}: non-canonical entry")
        if i < j:
            raise MalformedPolynomialError(f"line {n}: redundant entry with i < j")
        if i > l + 1:
            raise MalformedPolynomialError(f"line {n}: exponent exceeds l+1")
        if c == 0:
            raise MalformedPolynomialError(f"line {n}: zero coefficient")
        if last is not None and (i, j) <= last:
            raise MalformedPolynomialError(f"line {n}: entries not in ascending order")
        last = (i, j)
        coeffs[(i, j)] = c
    p = BivariateIntPoly(l, coeffs)
    if serialize(p) != "\n".join(lines) + "\n":
        raise MalformedPolynomialError("non-canonical text")
    return p


def cache_dir():
    return Path(os.environ.get("CACHE_DIR", Path.home() / ".cache" / "phibound"))


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def load_or_compute(l, directory=None, strategy="j_reduction"):
    """Phi_l from the cache directory, computing and storing it if absent."""
    directory = Path(directory) if directory is not None else cache_dir()
    path = directory / f"phi_{l}.txt"
    if path.exists():
        # a damaged or foreign file is recomputed, never trusted
        try:
            p = parse(path.read_text())
        except (MalformedPolynomialError, UnicodeDecodeError):
            p = None
        if p is not None and p.l == l and check_structure(p) and kronecker_congruence_holds(p):
            return p
    p = compute_phi(l, strategy)
    try:
        write_atomic(path, serialize(p))
    except OSError:
        pass
    return p
