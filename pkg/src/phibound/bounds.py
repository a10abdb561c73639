"""Closed-form height bounds for modular polynomials and the pieces they are built from.

All formulas are evaluated in double precision.  Published constants are
used as given; the ``*_reconstruction`` helpers rebuild some of them from
their ingredients for cross-checking only.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import mpmath

__all__ = [
    "BoundBreakdown",
    "EpsilonContext",
    "lognorm",
    "c_of_x",
    "f_alpha_beta",
    "epsilon_prime",
    "lemma5_bound",
    "ramanujan_ck",
    "ramanujan_ck_bruteforce",
    "lemma6_bound",
    "lemma6_main_sum",
    "lemma6_tail_sum",
    "poisson_identity_residual",
    "coth_identity_residual",
    "tanh_identity_residual",
    "s_d",
    "epsilon_1",
    "epsilon_2",
    "delta_d",
    "delta_total",
    "DELTA_BOUND",
    "delta_lower_bound",
    "lemma8_bound",
    "b1",
    "b2",
    "theorem1_bound",
    "corollary1_bound",
    "interp_step",
    "interp_constant",
    "assembled_bound_at_t",
    "b1_linear_reconstruction",
    "b2_linear_reconstruction",
    "hly_bound",
    "bounds_record",
    "EULER_GAMMA",
    "C_MOBIUS_LOG",
    "GAMMA_SQUAREFREE",
]

TWO_PI = 2 * math.pi
PI2 = math.pi ** 2
E2PI = math.exp(TWO_PI)

C1, C2, C3 = 0.539, 0.742, 0.917
INTERP_PER_DEGREE = 2.083


def _constants():
    with mpmath.workprec(200):
        g = +mpmath.euler
        z2 = mpmath.zeta(2)
        dz2 = mpmath.zeta(2, derivative=1)
        c = dz2 / z2 ** 2                     # sum mu(n) log n / n^2
        gp = g / z2 - 2 * c                   # constant in sum |mu(n)|/n
        return g, c, gp


EULER_GAMMA, C_MOBIUS_LOG, GAMMA_SQUAREFREE = (float(v) for v in _constants())


# ---------------------------------------------------------------------------
# basic pieces
# ---------------------------------------------------------------------------

def lognorm(y):
    """log max(1, |y|)."""
    a = abs(y)
    if a <= 1:
        return 0.0
    return float(mpmath.log(a))


def c_of_x(x):
    """log(exp(2 pi max(x, 1/x)) + 1728 - exp(2 pi)) - 2 pi x, for x > 0."""
    if not x > 0:
        raise ValueError("x must be positive")
    m = max(x, 1.0 / x)
    # factor out exp(2 pi m) so large x does not overflow
    return TWO_PI * (m - x) + math.log1p((1728.0 - E2PI) * math.exp(-TWO_PI * m))


def f_alpha_beta(alpha, beta):
    s = alpha * alpha + beta * beta
    if not (0 < s <= 2 + 1e-12):
        raise ValueError("need 0 < alpha^2 + beta^2 <= 2")
    return c_of_x(1.0 / s)


@dataclass(frozen=True)
class EpsilonContext:
    """Constants c1..c7 of the epsilon estimate at a given t."""

    t: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    C1: float = C1
    C2: float = C2
    C3: float = C3

    @classmethod
    def at(cls, t):
        t = float(t)
        return cls(
            t,
            f_alpha_beta(1, 1),
            f_alpha_beta(1, C3),
            f_alpha_beta(1 - C2 / (2 * t), C2),
            f_alpha_beta(1 - C1 / (2 * t), C1),
            f_alpha_beta(1 - 1 / t, 1),
            f_alpha_beta(1 - C3 / t, C3),
            f_alpha_beta(1 - C2 / t, C2),
        )

    def M(self, l):
        """Upper bound for K_N / 2."""
        r = l / self.t
        return 3 * r / (2 * PI2) + math.sqrt(r) * math.log(r) / 8

    def value(self, l):
        M = self.M(l)
        return (self.c1 * (M + 4) + self.c2 * M + self.c3 * M + self.c4 * (M - 4)
                + 0.5 * self.c5 * (M + 2) + self.c6 * M + self.c7 * (l - 5.5 * M - 2))


def _check_lt(l, t):
    if l <= 5:
        raise ValueError("l must exceed 5")
    if not (1 <= t < 1.254):
        raise ValueError("t must lie in [1, 1.254)")


def epsilon_prime(l, t=1.0):
    _check_lt(l, t)
    return EpsilonContext.at(t).value(l)


def lemma5_bound(l, t=1.0):
    _check_lt(l, t)
    sl = math.sqrt(l)
    return (3.066 + 1 - t) * l + 2.485 * sl * math.log(l) + 36.963


# ---------------------------------------------------------------------------
# Ramanujan sums and the g-sum bound
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _factor(n):
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _mu(n):
    f = _factor(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def _phi(n):
    r = n
    for p, _ in _factor(n):
        r -= r // p
    return r


def ramanujan_ck(k, n):
    """c_k(n) = mu(k/g) phi(k) / phi(k/g) with g = gcd(k, n)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = k // math.gcd(k, n)
    return _mu(m) * _phi(k) // _phi(m)


def ramanujan_ck_bruteforce(k, n):
    """(real, imag) of sum over h coprime to k of exp(2 pi i n h / k)."""
    re = im = 0.0
    for h in range(1, k + 1):
        if math.gcd(h, k) == 1:
            a = TWO_PI * ((n * h) % k) / k
            re += math.cos(a)
            im += math.sin(a)
    return re, im


@dataclass(frozen=True)
class BoundBreakdown:
    """total = leading + linear*l + sqrt_log*sqrt(l)*log(l) + sqrt*sqrt(l) + constant."""

    l: float
    t: float
    leading: float
    linear_coeff: float
    sqrt_log_coeff: float
    sqrt_coeff: float
    constant: float
    total: float
    provenance: str

    @classmethod
    def build(cls, l, t, lin, sqlog, sq, const, provenance):
        sl = math.sqrt(l)
        lead = 6 * l * math.log(l)
        total = lead + lin * l + sqlog * sl * math.log(l) + sq * sl + const
        return cls(float(l), float(t), lead, lin, sqlog, sq, const, total, provenance)

    def recomputed_total(self):
        l = self.l
        sl = math.sqrt(l)
        return (self.leading + self.linear_coeff * l + self.sqrt_log_coeff * sl * math.log(l)
                + self.sqrt_coeff * sl + self.constant)


def lemma6_bound(l, t=1.0):
    if math.isqrt(math.floor(l / t)) < 2:
        raise ValueError("need floor(sqrt(l/t)) >= 2")
    return BoundBreakdown.build(l, t, 13.889 - 6 * math.log(t), 3.290, 6.580, 0.0, "lemma6")


def lemma6_tail_sum(l, t=1.0):
    """Bound for sum_{nu >= 1} a_nu sigma(nu)/nu with a_nu = 2 pi^2 l exp(-2 pi nu t)."""
    tail = math.exp(-4 * math.pi) * (1 + 4 * math.pi) / (4 * PI2)
    return 2 * PI2 * l * (math.exp(-TWO_PI * t) + 1.5 * math.exp(-4 * math.pi * t) + tail)


def lemma6_main_sum(l, t=1.0):
    """Bound for a_0 sum_{k<=N} phi(k)/k^2 with N = floor(sqrt(l/t)) <= sqrt(l)."""
    sl = math.sqrt(l)
    return 2 * PI2 * l * (3 * math.log(l / t) / PI2 + 6 * EULER_GAMMA / PI2 - C_MOBIUS_LOG
                          + (0.5 * math.log(l) + 1) / (3 * sl))


# ---------------------------------------------------------------------------
# lattice-sum identities
# ---------------------------------------------------------------------------

def _g_deriv(u, t, n):
    # d^n/du^n of 1/(t^2+u^2) = Im((-1)^n n! (u - i t)^(-n-1)) / t
    w = complex(u, -t) ** (-(n + 1))
    return ((-1) ** n) * math.factorial(n) * w.imag / t


def _em_tail(a, t):
    """sum_{k>=0} 1/(t^2 + (a+k)^2) by Euler-Maclaurin, with remainder bound."""
    integral = (math.pi / 2 - math.atan(a / t)) / t
    val = (integral + 0.5 / (t * t + a * a)
           - _g_deriv(a, t, 1) / 12 + _g_deriv(a, t, 3) / 720)
    # |R_5| <= 2 zeta(5)/(2 pi)^5 * int_a^inf |g^(5)|, |g^(5)(u)| <= 120/(t u^6)
    rem = 2 * 1.0369277551433699 / TWO_PI ** 5 * 24 / (t * a ** 5)
    return val, rem


def poisson_identity_residual(t, theta, trunc):
    """|sum_c 1/(t^2+(c-theta)^2) - (pi/t) sum_nu exp(-2 pi |nu| t) cos(2 pi nu theta)|.

    Both sides are truncated at |c|, |nu| <= trunc; the left tail is added by
    Euler-Maclaurin and every discarded piece is bounded and added to the
    returned value, so it is a rigorous upper bound for the true residual
    (zero) up to rounding.
    """
    if trunc < 1:
        raise ValueError("trunc must be >= 1")
    t = float(t)
    th = float(theta) % 1.0
    lhs = math.fsum(1.0 / (t * t + (c - th) ** 2) for c in range(-trunc, trunc + 1))
    up, e1 = _em_tail(trunc + 1 - th, t)
    dn, e2 = _em_tail(trunc + 1 + th, t)
    lhs += up + dn
    rhs = (math.pi / t) * (1 + 2 * math.fsum(
        math.exp(-TWO_PI * v * t) * math.cos(TWO_PI * v * th) for v in range(1, trunc + 1)))
    q = math.exp(-TWO_PI * t)
    rhs_tail = (2 * math.pi / t) * q ** (trunc + 1) / (1 - q)
    rounding = 8 * (2 * trunc + 8) * 2.0 ** -52 * max(abs(lhs), 1.0)
    return abs(lhs - rhs) + e1 + e2 + rhs_tail + rounding


def coth_identity_residual(t, trunc):
    """|sum_n t/(t^2+n^2) - pi coth(pi t)| plus tail bounds."""
    lhs = math.fsum(t / (t * t + n * n) for n in range(-trunc, trunc + 1))
    tail, rem = _em_tail(trunc + 1, t)
    lhs += 2 * t * tail
    return abs(lhs - math.pi / math.tanh(math.pi * t)) + 2 * t * rem + 1e-15 * abs(lhs)


def tanh_identity_residual(t, trunc):
    """|sum_n t/(t^2+(n-1/2)^2) - pi tanh(pi t)| plus tail bounds."""
    lhs = math.fsum(t / (t * t + (n - 0.5) ** 2) for n in range(-trunc + 1, trunc + 1))
    tail, rem = _em_tail(trunc + 0.5, t)
    lhs += 2 * t * tail
    return abs(lhs - math.pi * math.tanh(math.pi * t)) + 2 * t * rem + 1e-15 * abs(lhs)


# ---------------------------------------------------------------------------
# overestimate subtraction
# ---------------------------------------------------------------------------

DELTA_BOUND = (10.086, -17.693, 58.939)   # l, sqrt(l) log l, sqrt(l)
DELTA_TERMS = 59


def s_d(l, t, d):
    lt = l * t
    return (6 / PI2 * math.log((d + 1) / d)
            - (math.log(lt) - 2 * ((d + 1) * math.log(d + 1) - d * math.log(d)) + 2)
            / (6 * math.sqrt(lt)))


def epsilon_1(l, t):
    return -(((t + 2) * math.log(l) + 2 * t + 4 - math.log(16) + (2 - t) * math.log(t))
             / (6 * math.sqrt(l * t)))


def epsilon_2(l, t):
    return -((math.log(l * t) - 2 * (3 * math.log(3) - 2 * math.log(2)) + 2)
             / (6 * math.sqrt(l * t)))


def _odd_bracket(t, d):
    # pi tanh(pi t) minus the terms with |n - 1/2| <= d/2
    lo = -((d - 1) // 2)
    hi = (d + 1) // 2
    s = math.fsum(t / (t * t + (n - 0.5) ** 2) for n in range(lo, hi + 1))
    return math.pi * math.tanh(math.pi * t) - s


def _even_bracket(t, d):
    # pi coth(pi t) minus the terms with |n| <= d/2
    m = d // 2
    s = math.fsum(t / (t * t + n * n) for n in range(-m, m + 1))
    return math.pi / math.tanh(math.pi * t) - s


def delta_d(l, t, d):
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return TWO_PI * l * _odd_bracket(t, 1) * (6 / PI2 * math.log(2 / t) + epsilon_1(l, t))
    if d == 2:
        return TWO_PI * l * _even_bracket(t, 2) * (6 / PI2 * math.log(1.5) + epsilon_2(l, t))
    if l < (d + 1) ** 2:
        raise ValueError("need l >= (d+1)^2")
    br = _odd_bracket(t, d) if d % 2 else _even_bracket(t, d)
    return TWO_PI * l * s_d(l, t, d) * br


def delta_total(l, t=1.0):
    if l < 3600:
        raise ValueError("l must be >= 3600")
    return math.fsum(delta_d(l, t, d) for d in range(1, DELTA_TERMS + 1))


def delta_lower_bound(l):
    a, b, c = DELTA_BOUND
    sl = math.sqrt(l)
    return a * l + b * sl * math.log(l) + c * sl


def lemma8_bound(l, t=1.0):
    if l < 3600:
        raise ValueError("l must be >= 3600")
    return BoundBreakdown.build(l, t, 3.803 - 6 * math.log(t), 17.693, -58.939, 0.0, "lemma8")


# ---------------------------------------------------------------------------
# final bounds
# ---------------------------------------------------------------------------

def b1(l):
    return BoundBreakdown.build(l, 1.0, 26.016, 5.775, 6.580, 39.046, "B1")


def b2(l):
    if l < 3600:
        raise ValueError("l must be >= 3600")
    return BoundBreakdown.build(l, 1.0, 15.929, 20.178, -58.939, 39.046, "B2")


def theorem1_bound(l):
    return BoundBreakdown.build(l, 1.0, 16.0, 14.0, 0.0, 0.0, "theorem1").total


def corollary1_bound(l):
    return BoundBreakdown.build(l, 1.0, 18.0, 0.0, 0.0, 0.0, "corollary1").total


def interp_step(B, l):
    """Height bound for Phi_l from a bound B on its specialisations."""
    return B + INTERP_PER_DEGREE * (l + 1)


def interp_constant(L=1728):
    """Per-degree cost (log L + 1)/L + 3 log 2 of interpolating at points in [L, 2L]."""
    return (math.log(L) + 1) / L + 3 * math.log(2)


def assembled_bound_at_t(l, t):
    """Specialised-height bound for 5 < l < 3600 as a function of t."""
    sl = math.sqrt(l)
    lin = 18.649 + TWO_PI * t - t - 6 * math.log(t)
    return 6 * l * math.log(l) + lin * l + 5.775 * sl * math.log(l) + 6.580 * sl + 36.963


def b1_linear_reconstruction():
    return 13.889 + (3.066 + 1) + math.log(2) + TWO_PI - 1 + INTERP_PER_DEGREE


def b2_linear_reconstruction():
    return 3.803 + (3.066 + 1) + math.log(2) + TWO_PI - 1 + INTERP_PER_DEGREE


def hly_bound(l, z):
    """||j(l z)|| + sum_b ||j((z+b)/l)|| + l log 2, using certified upper ends."""
    from . import qseries

    if l > 200:
        raise ValueError("l must be <= 200")
    z = qseries.ComplexPoint.of(z)
    with mpmath.workprec(256):
        pts = [qseries.ComplexPoint(z.re * l, z.im * l)]
        pts += [qseries.ComplexPoint((z.re + b) / l, z.im / l) for b in range(l)]
    total = sum(qseries.lognorm_j(w)[1] for w in pts)
    return float(total) + l * math.log(2)


def bounds_record(l, h_exact=None):
    """One JSON-serialisable record of bound values and margins for l."""
    rec = {
        "l": l,
        "h_exact": h_exact,
        "theorem1": theorem1_bound(l),
        "corollary1": corollary1_bound(l),
        "B1": b1(l).total,
        "B2": b2(l).total if l >= 3600 else None,
    }
    rec["B2_le_theorem1"] = None if rec["B2"] is None else rec["B2"] <= rec["theorem1"]
    rec["margin_theorem1_B2"] = None if rec["B2"] is None else rec["theorem1"] - rec["B2"]
    if h_exact is not None:
        rec["margin_theorem1"] = rec["theorem1"] - h_exact
        rec["margin_corollary1"] = rec["corollary1"] - h_exact
        rec["margin_B1"] = rec["B1"] - h_exact
    else:
        rec["margin_theorem1"] = rec["margin_corollary1"] = rec["margin_B1"] = None
    return rec


def breakdown_json(bd):
    return json.dumps(asdict(bd), sort_keys=True)
