"""Farey partition of the shifted unit interval and the lattice-point statistics.

The order-N Farey fractions split [0, 1] at mediants of neighbours.  The piece
[0, 1/(N+1)) belonging to 0/1 is moved up by one and glued onto the piece of
1/1, so the cells cover I_N = [1/(N+1), (N+2)/(N+1)) exactly.  Each cell
[rho1, rho2) carries the unimodular matrix [[s, -r], [k, -h]] with
r k - s h = 1 that sends the cell's lattice points to the fundamental region.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mpf, workprec

from . import qseries
from .bounds import c_of_x

__all__ = [
    "FareyEntry",
    "FareyPartition",
    "PointClassification",
    "SInterval",
    "build_partition",
    "classify_points",
    "adjacent_bad_violations",
    "verify_lattice_points",
    "empirical_S",
    "empirical_g_eps",
    "check_partition",
    "verify_partitions",
    "totient_sum",
    "kn_bound_check",
    "kn_bound_threshold",
    "dump_partition",
    "farey_sequence",
    "farey_order",
    "lattice_range",
]

INTERIOR = "interior"
GOOD = "good_exterior"
BAD = "bad_exterior"


@dataclass(frozen=True)
class FareyEntry:
    h: int
    k: int
    rho1: Fraction
    rho2: Fraction
    r: int
    s: int

    @property
    def center(self):
        return Fraction(self.h, self.k)

    @property
    def matrix(self):
        return ((self.s, -self.r), (self.k, -self.h))

    def contains(self, x):
        return self.rho1 <= x < self.rho2


@dataclass(frozen=True)
class FareyPartition:
    N: int
    entries: tuple

    @property
    def lower(self):
        return Fraction(1, self.N + 1)

    @property
    def upper(self):
        return Fraction(self.N + 2, self.N + 1)

    def __len__(self):
        return len(self.entries)

    def locate(self, x):
        """Index of the cell containing x (a Fraction in I_N)."""
        if not (self.lower <= x < self.upper):
            raise ValueError(f"{x} lies outside I_{self.N}")
        starts = [e.rho1 for e in self.entries]
        return bisect.bisect_right(starts, x) - 1


def farey_sequence(N):
    """Ascending order-N Farey fractions in [0, 1] as (h, k) pairs."""
    a, b, c, d = 0, 1, 1, N
    out = [(0, 1)]
    while c <= N:
        kk = (N + b) // d
        a, b, c, d = c, d, kk * c - a, kk * d - b
        out.append((a, b))
    return out


def _rs(h, k, nk):
    # successor h'/k' gives h' k - k' h = 1; reduce s = k' mod k to 0 <= s < k
    s = nk % k if k > 1 else 0
    r = (1 + s * h) // k
    return r, s


def build_partition(N):
    if N < 1:
        raise ValueError("order N must be >= 1")
    seq = farey_sequence(N)
    cells = []
    n = len(seq)
    lo = Fraction(1, N + 1)
    for idx in range(1, n):
        h, k = seq[idx]
        if idx + 1 < n:
            nh, nk = seq[idx + 1]
            hi = Fraction(h + nh, k + nk)
        else:
            # 1/1 absorbs the shifted piece [1, 1 + 1/(N+1)) of 0/1
            nk = 1
            hi = Fraction(N + 2, N + 1)
        r, s = _rs(h, k, nk)
        cells.append(FareyEntry(h, k, lo, hi, r, s))
        lo = hi
    return FareyPartition(N, tuple(cells))


def check_partition(part):
    """Violated invariants of a partition, as human-readable strings (empty if sound).

    Exact integer cross-multiplication throughout: the cells must tile I_N
    without gaps or overlaps and each endpoint must satisfy
    1/(2kN) <= |rho - h/k| <= 1/(k(N+1)).
    """
    N = part.N
    bad = []
    expect = part.lower
    for e in part.entries:
        h, k = e.h, e.k
        if math.gcd(h, k) != 1 or not (1 <= h <= k <= N):
            bad.append(f"{h}/{k}: not a reduced fraction of order {N}")
        if e.r * k - e.s * h != 1:
            bad.append(f"{h}/{k}: r k - s h != 1")
        if e.rho1 != expect:
            bad.append(f"{h}/{k}: gap or overlap at {e.rho1}")
        if not e.rho1 < e.rho2:
            bad.append(f"{h}/{k}: empty cell")
        expect = e.rho2
        for rho in (e.rho1, e.rho2):
            # |rho - h/k| = |p k - h q| / (q k)
            p, q = rho.numerator, rho.denominator
            num = abs(p * k - h * q)
            # 1/(2kN) <= num/(qk)  <=>  q <= 2 N num ;  num/(qk) <= 1/(k(N+1))  <=>  num (N+1) <= q
            if not (q <= 2 * N * num and num * (N + 1) <= q):
                bad.append(f"{h}/{k}: endpoint {rho} outside the distance window")
    if expect != part.upper:
        bad.append(f"cover ends at {expect}, not {part.upper}")
    return bad


def verify_partitions(n_max, progress=None):
    """check_partition for every order 1..n_max; returns {N: violations} for failing N."""
    out = {}
    for N in range(1, n_max + 1):
        v = check_partition(build_partition(N))
        if v:
            out[N] = v
        if progress is not None:
            progress(N)
    return out


def totient_sum(N):
    """K_N = sum_{k <= N} phi(k)."""
    phi = list(range(N + 1))
    for p in range(2, N + 1):
        if phi[p] == p:
            for m in range(p, N + 1, p):
                phi[m] -= phi[m] // p
    return sum(phi[1:])


def kn_bound_check(N):
    """K_N <= 3 N^2 / pi^2 + N log N / 2."""
    if N < 2:
        raise ValueError("N must be >= 2")
    return totient_sum(N) <= 3 * N * N / math.pi ** 2 + 0.5 * N * math.log(N)


def kn_bound_threshold(n_max):
    """Smallest N0 >= 2 such that the K_N bound holds for all N0 <= N <= n_max."""
    phi = list(range(n_max + 1))
    for p in range(2, n_max + 1):
        if phi[p] == p:
            for m in range(p, n_max + 1, p):
                phi[m] -= phi[m] // p
    k = 1
    last_fail = 1
    for N in range(2, n_max + 1):
        k += phi[N]
        if k > 3 * N * N / math.pi ** 2 + 0.5 * N * math.log(N):
            last_fail = N
    return last_fail + 1


# ---------------------------------------------------------------------------
# lattice points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointClassification:
    b: int
    h: int
    k: int
    alpha: float
    beta: float
    kind: str

    @property
    def im_lambda(self):
        """Imaginary part of the transformed point, 1/(alpha^2 + beta^2)."""
        return 1.0 / (self.alpha ** 2 + self.beta ** 2)


def farey_order(l, t):
    """N = floor(sqrt(l/t)), exact for float t."""
    return math.isqrt(math.floor(Fraction(l) / Fraction(t)))


def lattice_range(l, N):
    """Integers b with b/l in I_N; there are exactly l of them."""
    lo = -((-l) // (N + 1))
    hi = -((-l * (N + 2)) // (N + 1))   # exclusive
    return range(lo, hi)


def classify_points(l, t, partition=None):
    """Assign the l points b/l of I_N to cells and label them."""
    if l <= 5:
        raise ValueError("l must exceed 5")
    t = float(t)
    if not (1 <= t < 1.254):
        raise ValueError("t must lie in [1, 1.254)")
    N = farey_order(l, t)
    if partition is None:
        partition = build_partition(N)
    elif partition.N != N:
        raise ValueError(f"partition order {partition.N} != floor(sqrt(l/t)) = {N}")
    groups = [[] for _ in partition.entries]
    starts = [e.rho1 for e in partition.entries]
    for b in lattice_range(l, N):
        x = Fraction(b, l)
        groups[bisect.bisect_right(starts, x) - 1].append(b)
    half = Fraction(1, 2 * l)
    sq_lt = math.sqrt(l / t)
    out = []
    for e, pts in zip(partition.entries, groups):
        beta = e.k * math.sqrt(t / l)
        for pos, b in enumerate(pts):
            x = Fraction(b, l)
            alpha = e.k * sq_lt * abs(float(x - e.center))
            if 0 < pos < len(pts) - 1:
                kind = INTERIOR
            elif x - e.rho1 < half or e.rho2 - x < half:
                kind = BAD
            else:
                kind = GOOD
            out.append(PointClassification(b, e.h, e.k, alpha, beta, kind))
    return out


def adjacent_bad_violations(l, t=1.0):
    """Neighbouring half-cells from different cells that both hold a bad point."""
    N = farey_order(l, t)
    part = build_partition(N)
    pts = classify_points(l, t, part)
    by_cell = {}
    for p in pts:
        by_cell.setdefault((p.h, p.k), []).append(p)
    bad_left = []
    bad_right = []
    for e in part.entries:
        cell = by_cell.get((e.h, e.k), [])
        c = e.center
        bad_left.append(any(p.kind == BAD and Fraction(p.b, l) < c for p in cell))
        bad_right.append(any(p.kind == BAD and Fraction(p.b, l) >= c for p in cell))
    return [(part.entries[i], part.entries[i + 1])
            for i in range(len(part.entries) - 1)
            if bad_right[i] and bad_left[i + 1]]


# ---------------------------------------------------------------------------
# direct evaluation of S(l, t)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SInterval:
    """Certified enclosure of a sum of log+|j| values."""

    lower: float
    upper: float

    @property
    def mid(self):
        return (self.lower + self.upper) / 2


def empirical_S(l, t):
    """sum_{b=0}^{l-1} log+|j((i t + b)/l)| as a certified interval."""
    if l > 200:
        raise ValueError("l must be <= 200")
    lo = hi = 0.0
    for b in range(l):
        # build the point well beyond double precision so it is not perturbed
        with workprec(256):
            z = qseries.ComplexPoint(mpf(b) / l, mpf(t) / l)
        a, c = qseries.lognorm_j(z)
        lo += float(a)
        hi += float(c)
    # float accumulation of l nonnegative terms
    pad = 4 * l * 2.0 ** -52 * max(hi, 1.0)
    return SInterval(max(0.0, lo - pad), hi + pad)


def empirical_g_eps(l, t):
    """(sum of 2 pi Im Lambda z, sum of c(Im Lambda z)) over the classified points."""
    g = eps = 0.0
    for p in classify_points(l, t):
        y = p.im_lambda
        g += 2 * math.pi * y
        eps += c_of_x(y)
    return g, eps


def _frac(x):
    return f"{x.numerator}/{x.denominator}"


def dump_partition(N):
    """Lines "h/k rho1 rho2 k" with exact rationals."""
    part = build_partition(N)
    return "".join(f"{e.h}/{e.k} {_frac(e.rho1)} {_frac(e.rho2)} {e.k}\n" for e in part.entries)


def verify_lattice_points(l_max=503, t=1.0):
    """Check the lattice-point claims for every prime 7 <= l <= l_max.

    Returns {l: [violations]} for the failing l: the l points must all be
    classified, at most K_N + 1 may be bad, every Im(Lambda z) must be at
    least 1/2 and no two adjacent half-cells may both hold a bad point.
    """
    out = {}
    for l in range(7, l_max + 1):
        if any(l % p == 0 for p in range(2, math.isqrt(l) + 1)):
            continue
        N = farey_order(l, t)
        part = build_partition(N)
        pts = classify_points(l, t, part)
        v = []
        if len(pts) != l:
            v.append(f"{len(pts)} points classified, expected {l}")
        nbad = sum(p.kind == BAD for p in pts)
        if nbad > len(part) + 1:
            v.append(f"{nbad} bad exterior points exceed K_N + 1 = {len(part) + 1}")
        # alpha^2 + beta^2 <= 2 exactly: k^2 (l (x - h/k)^2 / t + t / l) <= 2
        for p in pts:
            dx = Fraction(p.b, l) - Fraction(p.h, p.k)
            if p.k * p.k * (l * dx * dx / Fraction(t) + Fraction(t) / l) > 2:
                v.append(f"b={p.b}: Im(Lambda z) < 1/2")
        if adjacent_bad_violations(l, t):
            v.append("adjacent half-cells both hold a bad exterior point")
        if v:
            out[l] = v
    return out
