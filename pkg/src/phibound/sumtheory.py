"""Sieves for mu and phi, and machine checks of explicit summatory bounds.

Real-variable statements are reduced to finitely many checks.  Every sum
below is a step function that is constant on [n, n+1), and on each such
piece the bound either stays on the same side of its worst case or is
monotone; so it is enough to test x = n and the left limit x = n + 1 - 2^-40
(or the exact limit n + 1 where that is the conservative choice).

Partial sums that need more than double precision are kept as integers in
fixed point with 2^-256 resolution; the accumulated truncation error is at
most (number of terms) * 2^-256 and is carried into the reported margins.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr

__all__ = [
    "SieveTables",
    "VerificationReport",
    "build_sieve",
    "small_primes",
    "mobius_segments",
    "factor",
    "mobius_direct",
    "totient_direct",
    "verify_corollary10",
    "verify_theorem9",
    "verify_harmonic_lemma",
    "verify_mobius_sums",
    "verify_totient_over_square",
    "verify_totient_sum",
    "verify_quartiles",
    "coeff_product_bound",
    "log_coeff_product_bound",
    "height_from_roots_bound",
    "interp_height_bound",
    "QUARTILE_CONSTANTS",
]

PREC = 320
FIX = 256
LEFT = Fraction(1, 1 << 40)
QUARTILE_CONSTANTS = (Fraction("0.539"), Fraction("0.742"), Fraction("0.917"))


# ---------------------------------------------------------------------------
# sieves
# ---------------------------------------------------------------------------

def small_primes(n):
    """Primes <= n as a numpy array."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.nonzero(flags)[0].astype(np.int64)


def _sieve_block(lo, hi, primes, want_phi):
    """mu (and phi) on [lo, hi) using primes up to sqrt(hi - 1)."""
    size = hi - lo
    mu = np.ones(size, dtype=np.int8)
    rem = np.arange(lo, hi, dtype=np.int64)
    phi = rem.copy() if want_phi else None
    for p in primes:
        p = int(p)
        start = (-lo) % p
        if start >= size:
            continue
        mu[start::p] *= -1
        pp = p * p
        s2 = (-lo) % pp
        if s2 < size:
            mu[s2::pp] = 0
        if want_phi:
            phi[start::p] -= phi[start::p] // p
        pk = p
        while pk < hi:
            sk = (-lo) % pk
            if sk >= size:
                break
            rem[sk::pk] //= p
            if pk > hi // p:
                break
            pk *= p
    big = rem > 1
    mu[big] *= -1
    if want_phi:
        phi[big] -= phi[big] // rem[big]
    if lo == 0:
        mu[0] = 0
        if want_phi:
            phi[0] = 0
    return mu, phi


@dataclass(frozen=True)
class SieveTables:
    """mu, phi and the prefix sums M, Q, K for 0 <= n <= x_max (index n)."""

    x_max: int
    mu: np.ndarray
    phi: np.ndarray
    prefix_M: np.ndarray
    prefix_Q: np.ndarray
    prefix_K: np.ndarray

    @property
    def squarefree(self):
        return self.mu != 0

    def _idx(self, x):
        n = math.floor(x)
        if n > self.x_max:
            raise ValueError(f"x={x} beyond sieve bound {self.x_max}")
        return max(n, 0)

    def M(self, x):
        return int(self.prefix_M[self._idx(x)])

    def Q(self, x):
        return int(self.prefix_Q[self._idx(x)])

    def K(self, x):
        return int(self.prefix_K[self._idx(x)])

    def R(self, x):
        return self.Q(x) - 6 * x / math.pi ** 2


def build_sieve(x_max):
    if x_max < 1:
        raise ValueError("x_max must be >= 1")
    primes = small_primes(math.isqrt(x_max))
    mu, phi = _sieve_block(0, x_max + 1, primes, True)
    pm = np.cumsum(mu, dtype=np.int64)
    pq = np.cumsum(mu != 0, dtype=np.int64)
    pk = np.cumsum(phi, dtype=np.int64)
    for a in (mu, phi, pm, pq, pk):
        a.setflags(write=False)
    return SieveTables(x_max, mu, phi, pm, pq, pk)


def mobius_segments(x_max, segment=1 << 20):
    """Yield (lo, mu[lo:hi]) blocks covering 1..x_max."""
    primes = small_primes(math.isqrt(x_max))
    lo = 1
    while lo <= x_max:
        hi = min(lo + segment, x_max + 1)
        mu, _ = _sieve_block(lo, hi, primes, False)
        yield lo, mu
        lo = hi


def factor(n):
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius_direct(n):
    f = factor(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def totient_direct(n):
    r = n
    for p in factor(n):
        r -= r // p
    return r


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    lemma: str
    x_range: tuple
    status: str = "pass"
    worst_x: object = None
    worst_margin: float = math.inf
    checked: int = 0
    failures: int = 0
    first_failure: object = None
    last_failure: object = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "pass"

    def observe(self, x, margin):
        self.checked += 1
        if margin < self.worst_margin:
            self.worst_margin = float(margin)
            self.worst_x = x
        if margin < 0:
            self.failures += 1
            self.status = "fail"
            if self.first_failure is None:
                self.first_failure = x
            self.last_failure = x

    def record(self):
        def num(v):
            return None if v is None else float(v)

        return {
            "lemma": self.lemma,
            "x_range": [float(v) for v in self.x_range],
            "status": self.status,
            "worst_x": num(self.worst_x),
            "worst_margin": self.worst_margin,
            "checked": self.checked,
            "failures": self.failures,
            "first_failure": num(self.first_failure),
            "last_failure": num(self.last_failure),
            "extra": self.extra,
        }

    def to_json(self):
        return json.dumps(self.record(), sort_keys=True)


def _observe_min(rep, xs, margins, tag=None):
    """Bulk form of observe for numpy arrays."""
    if len(margins) == 0:
        return
    i = int(np.argmin(margins))
    m = float(margins[i])
    rep.checked += len(margins)
    if m < rep.worst_margin:
        rep.worst_margin = m
        rep.worst_x = float(xs[i])
        if tag:
            rep.extra["worst_side"] = tag
    bad = np.nonzero(margins < 0)[0]
    if len(bad):
        rep.status = "fail"
        rep.failures += len(bad)
        first, last = float(xs[bad[0]]), float(xs[bad[-1]])
        if rep.first_failure is None or first < rep.first_failure:
            rep.first_failure = first
        if rep.last_failure is None or last > rep.last_failure:
            rep.last_failure = last


# ---------------------------------------------------------------------------
# Mertens and squarefree counts
# ---------------------------------------------------------------------------

SIX_OVER_PI2 = 6 / math.pi ** 2


def _mertens_check(tables, lo, hi, divisor, lemma):
    rep = VerificationReport(lemma, (lo, hi))
    n = np.arange(lo, hi + 1, dtype=np.int64)
    M = tables.prefix_M[lo:hi + 1]
    # |M(x)| <= x/divisor, exact in integers; x = n is the worst point of [n, n+1)
    margin = (n - divisor * np.abs(M)).astype(np.float64) / divisor
    _observe_min(rep, n, margin)
    rep.extra["max_ratio"] = float(np.max(np.abs(M) * divisor / n))
    return rep


def _refine(margins, fn, xs):
    """Recompute margins below 1e-6 with 320-bit arithmetic (fn takes an int index)."""
    idx = np.nonzero(margins < 1e-6)[0]
    if len(idx):
        with gmpy2.context(precision=PREC):
            for i in idx:
                margins[i] = float(fn(int(i)))
    return margins


def _squarefree_check(tables, lo, hi, coeff, lemma):
    """|R(x)| <= coeff*sqrt(x) on [lo, hi], at integers and left limits."""
    rep = VerificationReport(lemma, (lo, hi))
    n = np.arange(lo, hi + 1, dtype=np.int64)
    Qi = tables.prefix_Q[lo:hi + 1]
    Q = Qi.astype(np.float64)
    nf = n.astype(np.float64)
    cq = Fraction(str(coeff)) if not isinstance(coeff, Fraction) else coeff

    def exact_up(i):
        k = 6 / gmpy2.const_pi() ** 2
        return mpfr(cq) * gmpy2.sqrt(mpfr(int(n[i]))) - (int(Qi[i]) - k * int(n[i]))

    def exact_low(i):
        k = 6 / gmpy2.const_pi() ** 2
        x = mpfr(int(n[i]) + 1)
        return mpfr(cq) * gmpy2.sqrt(x) - (k * x - int(Qi[i]))

    # upper side R <= c sqrt x: worst at x = n
    up = _refine(float(cq) * np.sqrt(nf) - (Q - SIX_OVER_PI2 * nf), exact_up, nf)
    _observe_min(rep, nf, up, "upper")
    # lower side -R <= c sqrt x: 6x/pi^2 outgrows the bound, so the limit
    # x -> n+1 is the worst point of [n, n+1)
    xl = nf[:-1] + 1.0
    low = _refine(float(cq) * np.sqrt(xl) - (SIX_OVER_PI2 * xl - Q[:-1]), exact_low, xl)
    _observe_min(rep, xl, low, "lower")
    # the same bound read only at integer x (lower side at x = n)
    low_int = float(cq) * np.sqrt(nf) - (SIX_OVER_PI2 * nf - Q)
    rep.extra["integers_only_pass"] = bool(up.min() >= 0 and low_int.min() >= 0)
    ratio = np.abs(Q - SIX_OVER_PI2 * nf) / np.sqrt(nf)
    rep.extra["max_ratio"] = float(np.max(ratio) / float(cq))
    return rep


def verify_corollary10(tables=None, lo=10 ** 5, hi=2160535):
    """|M(x)| <= x/900 and |R(x)| <= sqrt(x)/25 for x in [lo, hi]."""
    if tables is None or tables.x_max < hi:
        tables = build_sieve(hi)
    rm = _mertens_check(tables, lo, hi, 900, "mertens_x_over_900")
    rr = _squarefree_check(tables, lo, hi, 1 / 25, "squarefree_sqrt_over_25")
    return [rm, rr]


def verify_theorem9(tables=None, hi=5 * 10 ** 6):
    """|M(x)| <= x/4345 on [2160535, hi] and |R(x)| <= 0.02767 sqrt(x) on [438653, hi]."""
    if tables is None or tables.x_max < hi:
        tables = build_sieve(hi)
    rm = _mertens_check(tables, 2160535, hi, 4345, "mertens_x_over_4345")
    rr = _squarefree_check(tables, 438653, hi, 0.02767, "squarefree_0.02767_sqrt")
    return [rm, rr]


# ---------------------------------------------------------------------------
# harmonic-type sums (fixed point, high precision)
# ---------------------------------------------------------------------------

def _fixed_prefix(weights, n_max):
    """Prefix sums of weights(n) in fixed point 2^-FIX; entry n is the sum up to n."""
    out = [0] * (n_max + 1)
    s = 0
    for n in range(1, n_max + 1):
        w = weights(n)
        if w:
            s += w
        out[n] = s
    return out


def _to_mpfr(v):
    return mpfr(v) / mpfr(2) ** FIX


def _sweep(rep, prefix, lo_x, n_max, main, bound, upper_dec=True):
    """Check |prefix(x) - main(x)| <= bound(x) for x in [lo_x, n_max + 1).

    main/bound take mpfr x.  For the side ``S - main <= bound`` the worst x of
    [n, n+1) is x = n; for ``main - S <= bound`` it is the left limit.
    """
    err = mpfr(n_max) / mpfr(2) ** FIX
    eta = mpfr(LEFT)
    start = math.floor(lo_x)
    for n in range(max(start, 1), n_max + 1):
        s = _to_mpfr(prefix[n])
        x0 = mpfr(max(Fraction(n), Fraction(lo_x)))
        rep.observe(float(x0), float(bound(x0) - (s - main(x0)) - err))
        x1 = mpfr(n + 1) - eta
        rep.observe(float(x1), float(bound(x1) - (main(x1) - s) - err))


def verify_harmonic_lemma(x_max=10 ** 5, tables=None):
    """Both harmonic-type bounds for 1 <= x < x_max + 1."""
    if tables is None or tables.x_max < x_max:
        tables = build_sieve(x_max)
    one = 1 << FIX
    mu = tables.mu
    h = _fixed_prefix(lambda n: one // n, x_max)
    hq = _fixed_prefix(lambda n: one // n if mu[n] else 0, x_max)
    with gmpy2.context(precision=PREC):
        g = gmpy2.const_euler()
        k = 6 / gmpy2.const_pi() ** 2
        gp = _gamma_prime_mpfr()
        r1 = VerificationReport("harmonic_sum", (1, x_max))
        _sweep(r1, h, 1, x_max, lambda x: gmpy2.log(x) + g,
               lambda x: 1 / (2 * x) + 1 / (12 * x * x))
        r2 = VerificationReport("squarefree_harmonic_sum", (1, x_max))
        _sweep(r2, hq, 1, x_max, lambda x: k * gmpy2.log(x) + gp,
               lambda x: mpfr(3) / (25 * gmpy2.sqrt(x)))
    for r in (r1, r2):
        _annotate_threshold(r)
    r2.extra["gamma_prime"] = float(gp)
    return [r1, r2]


def _annotate_threshold(rep):
    if rep.last_failure is not None:
        rep.extra["holds_from"] = math.floor(rep.last_failure) + 1


def _zeta_constants():
    import mpmath
    with mpmath.workprec(PREC):
        z2 = mpmath.zeta(2)
        c = mpmath.zeta(2, derivative=1) / z2 ** 2
        gp = mpmath.euler / z2 - 2 * c
        return mpmath.nstr(c, 90), mpmath.nstr(gp, 90)


def _gamma_prime_mpfr():
    return mpfr(_zeta_constants()[1])


def _c_mpfr():
    return mpfr(_zeta_constants()[0])


def verify_totient_over_square(x_max=10 ** 5, tables=None):
    """sum phi(n)/n^2 against 6 log x/pi^2 + 6 gamma/pi^2 - C, error (log x + 1)/(3x)."""
    if tables is None or tables.x_max < x_max:
        tables = build_sieve(x_max)
    one = 1 << FIX
    phi = tables.phi
    pre = _fixed_prefix(lambda n: (one * int(phi[n])) // (n * n), x_max)
    with gmpy2.context(precision=PREC):
        g = gmpy2.const_euler()
        k = 6 / gmpy2.const_pi() ** 2
        c = _c_mpfr()
        rep = VerificationReport("totient_over_square_sum", (1, x_max))
        _sweep(rep, pre, 1, x_max, lambda x: k * gmpy2.log(x) + k * g - c,
               lambda x: (gmpy2.log(x) + 1) / (3 * x))
    _annotate_threshold(rep)
    return rep


def verify_totient_sum(x_max=10 ** 5, tables=None):
    """K(x) = 3x^2/pi^2 + eps(x log x / 2) for 3/2 <= x < x_max + 1."""
    if tables is None or tables.x_max < x_max:
        tables = build_sieve(x_max)
    pk = tables.prefix_K
    rep = VerificationReport("totient_sum", (1.5, x_max))
    n = np.arange(2, x_max + 1, dtype=np.float64)
    K = pk[2:x_max + 1].astype(np.float64)
    k3 = 3 / math.pi ** 2
    # piece [3/2, 2) where K = 1: upper side at 3/2, lower side at the limit 2
    rep.observe(1.5, 0.75 * math.log(1.5) - (1 - k3 * 2.25))
    rep.observe(2.0, math.log(2) - (k3 * 4 - 1))
    # K - 3x^2/pi^2 <= x log x / 2 is tightest at x = n (decreasing in x)
    up = n * np.log(n) / 2 - (K - k3 * n * n)
    _observe_min(rep, n, up, "upper")
    # 3x^2/pi^2 - K <= x log x / 2 is tightest at the left limit (convex difference)
    xl = n + 1.0
    low = xl * np.log(xl) / 2 - (k3 * xl * xl - K)
    _observe_min(rep, xl, low, "lower")
    _annotate_threshold(rep)
    if rep.failures:
        rep.extra["note"] = "fails near the bottom of the stated range"
    return rep


def verify_quartiles(x_max=300, tables=None):
    """K(C_i x) >= (i/4) K(x) - 2 for every real 1 <= x < x_max."""
    if tables is None or tables.x_max < x_max:
        tables = build_sieve(x_max)
    pk = tables.prefix_K
    reps = []
    for i, c in enumerate(QUARTILE_CONSTANTS, start=1):
        rep = VerificationReport(f"quartile_C{i}", (1, x_max))
        frac = Fraction(i, 4)
        crit = {Fraction(n) for n in range(1, x_max)}
        m = 1
        while Fraction(m) / c < x_max:
            p = Fraction(m) / c
            if p >= 1:
                crit.add(p)
            m += 1
        # both sides are constant between consecutive critical points
        for x in sorted(crit):
            lhs = int(pk[math.floor(c * x)])
            rhs = frac * int(pk[math.floor(x)]) - 2
            rep.observe(x, float(lhs - rhs))
        rep.extra["critical_points"] = len(crit)
        reps.append(rep)
    return reps


# ---------------------------------------------------------------------------
# Moebius sums with weights 1/n^2 and log n / n^2
# ---------------------------------------------------------------------------

FIX62 = 1 << 62


def verify_mobius_sums(x_max=10 ** 7, lo=10 ** 5, segment=1 << 20):
    """sum mu/n^2 = 6/pi^2 + eps(1/(300x)); sum mu log n/n^2 = C + eps((3 log x + 1)/(900x)).

    Every integer piece [n, n+1) with lo <= n <= x_max is checked.  Both
    error terms decrease in x, so the exact limit x = n + 1 is the
    conservative point.  Sums are accumulated in 2^-62 fixed point.
    """
    r1 = VerificationReport("mobius_over_square", (lo, x_max))
    r2 = VerificationReport("mobius_log_over_square", (lo, x_max))
    target1 = 6 / math.pi ** 2
    target2 = float(_c_mpfr())
    s1 = 0
    s2 = 0
    for start, mu in mobius_segments(x_max, segment):
        n = np.arange(start, start + len(mu), dtype=np.float64)
        t1 = np.floor(FIX62 / (n * n)).astype(np.int64) * mu
        t2 = np.floor(FIX62 * np.log(n) / (n * n)).astype(np.int64) * mu
        c1 = np.cumsum(t1, dtype=np.int64) + s1
        c2 = np.cumsum(t2, dtype=np.int64) + s2
        s1 = int(c1[-1])
        s2 = int(c2[-1])
        keep = n >= lo
        if not keep.any():
            continue
        nn = n[keep]
        # truncation error <= (terms) * 2^-62 plus float rounding of the weights
        err = nn * 2.0 ** -62 + 1e-15
        xr = nn + 1.0
        v1 = c1[keep].astype(np.float64) / FIX62
        v2 = c2[keep].astype(np.float64) / FIX62
        _observe_min(r1, nn, 1 / (300 * xr) - np.abs(v1 - target1) - err)
        _observe_min(r2, nn, (3 * np.log(xr) + 1) / (900 * xr) - np.abs(v2 - target2) - err)
    r1.extra["final_sum"] = s1 / FIX62
    r2.extra["final_sum"] = s2 / FIX62
    r2.extra["C"] = target2
    return [r1, r2]


# ---------------------------------------------------------------------------
# polynomial coefficient bounds
# ---------------------------------------------------------------------------

def coeff_product_bound(roots):
    """2^(n-1) prod max(1, |w|) bounds every coefficient of prod (X - w)."""
    n = len(roots)
    if n == 0:
        return 1.0
    return math.exp(log_coeff_product_bound(roots))


def log_coeff_product_bound(roots):
    n = len(roots)
    if n == 0:
        return 0.0
    return (n - 1) * math.log(2) + math.fsum(math.log(max(1.0, abs(w))) for w in roots)


def height_from_roots_bound(n, m, M):
    """log M + n (log m + 1)/m, for monic degree-n polynomials with all |roots| >= m > 1."""
    if not m > 1:
        raise ValueError("smallest root modulus must exceed 1")
    return math.log(M) + (math.log(m) + 1) / m * n


def height_from_roots(roots):
    """The bound for the monic polynomial with the given roots."""
    mods = [abs(w) for w in roots]
    if any(r <= 1 for r in mods):
        raise ValueError("all roots must have modulus > 1")
    if not mods:
        return 0.0
    logM = math.fsum(math.log(r) for r in mods)
    m = min(mods)
    return logM + (math.log(m) + 1) / m * len(mods)


def interp_height_bound(B, L, n):
    """B + ((log L + 1)/L + 3 log 2) n."""
    if not L > 1:
        raise ValueError("L must exceed 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    return B + ((math.log(L) + 1) / L + 3 * math.log(2)) * n
