"""Exact q-expansions of Delta, E4 and j, and certified numerical values of j.

The integer expansions are built from the Euler product (through the
pentagonal number series), its 24th power by repeated squaring, and
``j = E4**3 / Delta``.  Numerical evaluation reduces the argument to the
standard fundamental domain first, so ``|q| <= exp(-pi*sqrt(3))`` and the
q-series tail is bounded geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf, mpc

from ._kron import mul_trunc

__all__ = [
    "IntSeries",
    "ComplexPoint",
    "JValue",
    "PrecisionError",
    "delta_expansion",
    "e4_expansion",
    "j_expansion",
    "eta_product",
    "substitute_power",
    "reduce_to_fundamental_domain",
    "apply_matrix",
    "eval_j",
    "solve_t_for_y",
    "lognorm_j",
]


class PrecisionError(ArithmeticError):
    """Requested accuracy is not reachable within the working precision cap."""


class IntSeries:
    """Truncated Laurent series in q with exact integer coefficients.

    ``coeffs[k]`` is the coefficient of ``q**(valuation + k)`` and the series
    is known exactly modulo ``q**prec``.  The leading coefficient is nonzero
    unless the series is zero, in which case ``valuation == prec``.
    Instances are immutable.
    """

    __slots__ = ("valuation", "coeffs", "prec")

    def __init__(self, coeffs, valuation=0, prec=None):
        coeffs = list(coeffs)
        if prec is None:
            prec = valuation + len(coeffs)
        n = prec - valuation
        if n < 0:
            n = 0
        coeffs = coeffs[:n]
        start = 0
        while start < len(coeffs) and coeffs[start] == 0:
            start += 1
        if start == len(coeffs):
            valuation, coeffs = prec, []
        else:
            valuation += start
            coeffs = coeffs[start:]
            coeffs.extend([0] * (prec - valuation - len(coeffs)))
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, name, value):
        raise AttributeError("IntSeries is immutable")

    @classmethod
    def _raw(cls, coeffs, valuation, prec):
        return cls(coeffs, valuation, prec)

    # ------------------------------------------------------------------ access
    def __getitem__(self, n):
        if n >= self.prec:
            raise IndexError(f"coefficient of q^{n} is beyond the precision q^{self.prec}")
        if n < self.valuation:
            return 0
        return self.coeffs[n - self.valuation]

    def coefficient(self, n):
        return self[n]

    def is_zero(self):
        return not self.coeffs

    def relative_prec(self):
        return self.prec - self.valuation

    def truncate(self, prec):
        if prec > self.prec:
            raise ValueError("cannot raise the precision of a truncated series")
        return IntSeries(self.coeffs, self.valuation, prec)

    def shift(self, k):
        """Multiply by q**k."""
        return IntSeries(self.coeffs, self.valuation + k, self.prec + k)

    def dense(self, start, stop):
        """Coefficients of q**start .. q**(stop-1) as a list."""
        if stop > self.prec:
            raise IndexError("requested range exceeds precision")
        v = self.valuation
        c = self.coeffs
        lo = max(start, v)
        out = [0] * (min(lo, stop) - start)
        out.extend(c[lo - v:stop - v])
        return out

    # -------------------------------------------------------------- arithmetic
    def __add__(self, other):
        if isinstance(other, int):
            other = IntSeries([other], 0, self.prec)
        if not isinstance(other, IntSeries):
            return NotImplemented
        prec = min(self.prec, other.prec)
        v = min(self.valuation, other.valuation)
        if v >= prec:
            return IntSeries([], prec, prec)
        out = self.dense(v, prec)
        for i, c in enumerate(other.dense(v, prec)):
            if c:
                out[i] += c
        return IntSeries(out, v, prec)

    __radd__ = __add__

    def __neg__(self):
        return IntSeries([-c for c in self.coeffs], self.valuation, self.prec)

    def __sub__(self, other):
        if isinstance(other, int):
            other = IntSeries([other], 0, self.prec)
        if not isinstance(other, IntSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return IntSeries([], self.prec, self.prec)
            return IntSeries([other * c for c in self.coeffs], self.valuation, self.prec)
        if not isinstance(other, IntSeries):
            return NotImplemented
        v = self.valuation + other.valuation
        prec = min(self.valuation + other.prec, other.valuation + self.prec)
        n = prec - v
        if n <= 0 or self.is_zero() or other.is_zero():
            return IntSeries([], prec, prec)
        return IntSeries(mul_trunc(list(self.coeffs), list(other.coeffs), n), v, prec)

    __rmul__ = __mul__

    def square(self):
        v = 2 * self.valuation
        prec = self.valuation + self.prec
        n = prec - v
        if n <= 0 or self.is_zero():
            return IntSeries([], prec, prec)
        c = list(self.coeffs)
        return IntSeries(mul_trunc(c, c, n), v, prec)

    def __pow__(self, e):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.inverse() ** (-e)
        if e == 0:
            return IntSeries([1], 0, self.prec - self.valuation)
        result = None
        base = self
        while True:
            if e & 1:
                result = base if result is None else result * base
            e >>= 1
            if not e:
                return result
            base = base.square()

    def inverse(self):
        """Multiplicative inverse; the leading coefficient must be +1 or -1."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of a zero series")
        u = self.coeffs[0]
        if u not in (1, -1):
            raise ArithmeticError("leading coefficient is not a unit in Z")
        n = self.prec - self.valuation
        h = list(self.coeffs)
        g = [u]
        k = 1
        while k < n:
            k = min(2 * k, n)
            hg = mul_trunc(h, g, k)
            # g <- g * (2 - h*g)
            corr = [-c for c in hg]
            corr[0] += 2
            g = mul_trunc(g, corr, k)
        return IntSeries(g, -self.valuation, -self.valuation + n)

    def __truediv__(self, other):
        if isinstance(other, int):
            return self.divexact(other)
        if not isinstance(other, IntSeries):
            return NotImplemented
        return self * other.inverse()

    def divexact(self, m):
        """Divide every coefficient by the integer m; raise if not exact."""
        out = []
        for c in self.coeffs:
            qt, r = divmod(c, m)
            if r:
                raise ArithmeticError(f"coefficient {c} not divisible by {m}")
            out.append(qt)
        return IntSeries(out, self.valuation, self.prec)

    def substitute_power(self, m):
        return substitute_power(self, m)

    def decimate(self, m):
        """Series in q built from the coefficients at exponents divisible by m
        (i.e. the q**(1/m) -> q section)."""
        lo = -((-self.valuation) // m) if self.valuation < 0 else (self.valuation + m - 1) // m
        hi = -((-self.prec) // m)  # ceil(prec / m)
        out = [self[n * m] for n in range(lo, hi)]
        return IntSeries(out, lo, hi)

    # ------------------------------------------------------------ comparisons
    def __eq__(self, other):
        if not isinstance(other, IntSeries):
            return NotImplemented
        return (self.valuation, self.prec, self.coeffs) == (other.valuation, other.prec, other.coeffs)

    def __hash__(self):
        return hash((self.valuation, self.prec, self.coeffs))

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs[:6]):
            if c:
                terms.append(f"{c}*q^{self.valuation + k}")
        more = " + ..." if len(self.coeffs) > 6 else ""
        body = " + ".join(terms) if terms else "0"
        return f"IntSeries({body}{more} + O(q^{self.prec}))"


def substitute_power(s, m):
    """Replace q by q**m."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if m == 1 or s.is_zero():
        return IntSeries([], s.prec * m, s.prec * m) if s.is_zero() else s
    n = (s.prec - s.valuation) * m
    out = [0] * n
    for k, c in enumerate(s.coeffs):
        out[k * m] = c
    return IntSeries(out, s.valuation * m, s.prec * m)


# ---------------------------------------------------------------------------
# exact expansions
# ---------------------------------------------------------------------------

def eta_product(prec):
    """prod_{n>=1} (1 - q^n) mod q**prec, via the pentagonal number theorem."""
    out = [0] * prec
    k = 0
    while True:
        e1 = k * (3 * k - 1) // 2
        if e1 >= prec:
            break
        sign = -1 if k & 1 else 1
        out[e1] += sign
        if k:
            e2 = k * (3 * k + 1) // 2
            if e2 < prec:
                out[e2] += sign
        k += 1
    return IntSeries(out, 0, prec)


def _sigma3_table(n):
    s = [0] * n
    for d in range(1, n):
        d3 = d * d * d
        for m in range(d, n, d):
            s[m] += d3
    return s


def e4_expansion(prec):
    """E4 = 1 + 240 * sum sigma_3(n) q^n, exact modulo q**prec."""
    if prec < 1:
        raise ValueError("prec must be >= 1")
    s = _sigma3_table(prec)
    out = [240 * c for c in s]
    out[0] = 1
    return IntSeries(out, 0, prec)


def _eta24(prec):
    e = eta_product(prec)
    e2 = e.square()
    e4 = e2.square()
    e8 = e4.square()
    e16 = e8.square()
    return e16 * e8


def delta_expansion(prec):
    """Delta = q * prod (1 - q^n)^24, exact modulo q**prec (valuation 1)."""
    if prec < 2:
        raise ValueError("prec must be >= 2")
    return _eta24(prec - 1).shift(1)


_J_CACHE = {"series": None}


def j_expansion(prec):
    """j(q) = q^-1 + 744 + 196884 q + ..., exact modulo q**prec.

    ``prec`` counts the known terms after q^-1.
    """
    if prec < 0:
        raise ValueError("prec must be >= 0")
    cached = _J_CACHE["series"]
    if cached is not None and cached.prec >= prec:
        return cached.truncate(prec)
    n = prec + 1
    e4 = e4_expansion(n)
    num = e4.square() * e4
    den = _eta24(n)
    j = (num * den.inverse()).shift(-1)
    # E4^3 = j * Delta must hold exactly; a mismatch means an arithmetic bug
    if (j * delta_expansion(n + 1)).truncate(n) != num.truncate(n):
        raise ArithmeticError("E4^3 / Delta left a nonzero remainder")
    _J_CACHE["series"] = j
    return j


def _j_coefficients(count):
    """Coefficients c_{-1}, c_0, ..., c_{count-2} as Python ints."""
    return list(j_expansion(count - 1).coeffs)


# ---------------------------------------------------------------------------
# points of the upper half plane
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexPoint:
    """A point of the upper half plane with multiprecision coordinates."""

    re: mpf
    im: mpf

    def __post_init__(self):
        object.__setattr__(self, "re", mpf(self.re))
        object.__setattr__(self, "im", mpf(self.im))
        if not self.im > 0:
            raise ValueError("point must lie in the upper half plane (im > 0)")

    @classmethod
    def of(cls, z):
        if isinstance(z, ComplexPoint):
            return z
        z = mpc(z)
        return cls(z.real, z.imag)

    def to_mpc(self):
        return mpc(self.re, self.im)


Matrix = tuple  # ((a, b), (c, d)) with integer entries

IDENTITY = ((1, 0), (0, 1))


def apply_matrix(m, z):
    """Moebius action of an integer matrix on a complex number."""
    (a, b), (c, d) = m
    z = mpc(z)
    return (a * z + b) / (c * z + d)


def reduce_to_fundamental_domain(z, prec=None):
    """Return (w, M) with w = M z in the closed fundamental domain, det M = 1."""
    z = ComplexPoint.of(z)
    wp = prec or max(mp.prec, 128)
    with mpmath.workprec(wp):
        zc = z.to_mpc()
        eps = mpf(2) ** (-wp + 16)
        a, b, c, d = 1, 0, 0, 1
        w = zc
        for _ in range(100000):
            n = int(mpmath.nint(w.real))
            if n:
                w -= n
                a, b = a - n * c, b - n * d
            if abs(w) ** 2 < 1 - eps:
                w = -1 / w
                a, b, c, d = -c, -d, a, b
            else:
                break
        else:  # pragma: no cover
            raise RuntimeError("fundamental domain reduction did not terminate")
        m = ((a, b), (c, d))
        # recompute from the original point to avoid accumulated rounding
        w = apply_matrix(m, zc)
        if c < 0 or (c == 0 and d < 0):
            m = ((-a, -b), (-c, -d))
        return ComplexPoint(w.real, w.imag), m


# ---------------------------------------------------------------------------
# certified evaluation of j
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JValue:
    """j(z) lies in the closed disc of the given radius around value."""

    value: mpc
    radius: mpf

    @property
    def lower_abs(self):
        return max(mpf(0), abs(self.value) - self.radius)

    @property
    def upper_abs(self):
        return abs(self.value) + self.radius


_FOUR_PI = 4 * math.pi


def _tail_bound(N, aq):
    """Upper bound for sum_{n > N} exp(4 pi sqrt n) |q|^n."""
    n0 = N + 1
    with mpmath.workprec(64):
        ratio = mpmath.exp(_FOUR_PI * (math.sqrt(n0 + 1) - math.sqrt(n0))) * aq
        if ratio >= 1:
            return mpmath.inf
        first = mpmath.exp(_FOUR_PI * math.sqrt(n0)) * aq ** n0
        return first / (1 - ratio) * (1 + mpf(2) ** -40)


def _mantissa_bits(x):
    return x._mpf_[3]


def eval_j(z, target_precision=1e-30, *, max_prec=1 << 15):
    """Evaluate j(z) with a radius ``r <= target_precision``.

    The radius accounts for the truncated q-series tail (through the bound
    |c_n| <= exp(4 pi sqrt n)), floating-point rounding in the summation,
    and the rounding of the reduced argument.
    """
    z = ComplexPoint.of(z)
    target = mpf(target_precision)
    if not target > 0:
        raise ValueError("target_precision must be positive")
    # never round the input itself: start at least at its mantissa length
    wp = max(128, _mantissa_bits(z.re) + 16, _mantissa_bits(z.im) + 16)
    while wp <= max_prec:
        with mpmath.workprec(wp):
            w, m = reduce_to_fundamental_domain(z, prec=wp)
            wc = w.to_mpc()
            q = mpmath.expjpi(2 * wc)
            aq = abs(q)
            N = 8
            while True:
                tail = _tail_bound(N, aq)
                if tail <= target / 4:
                    break
                N += 8
                if N > 4000:
                    raise PrecisionError("q-series tail does not reach the target")
            coeffs = _j_coefficients(N + 2)
            acc = mpc(0)
            for cn in reversed(coeffs[2:]):
                acc = acc * q + cn
            value = acc * q + coeffs[1] + 1 / q
            # error budget
            sabs = 1 / aq + coeffs[1]
            dsum = 1 / aq
            p = aq
            for n, cn in enumerate(coeffs[2:], start=1):
                t = cn * p
                sabs += t
                dsum += n * t
                p *= aq
            unit = mpf(2) ** (-wp + 4)
            rounding = sabs * (N + 16) * unit
            arg_err = 2 * mpmath.pi * (dsum + tail) * unit * (abs(wc) + 1) * 8
            radius = tail + rounding + arg_err
            if radius <= target:
                return JValue(+value, radius)
        wp *= 2
    raise PrecisionError(
        f"target radius {target_precision} needs more than {max_prec} bits")


J_I = 1728
J_BRACKET_T = mpf("1.254")


def solve_t_for_y(y, tol=1e-9):
    """The unique t in [1, 1.254) with j(i t) = y, for y in [1728, 3456]."""
    y = mpf(y)
    if not (1728 <= y <= 3456):
        raise ValueError("y must lie in [1728, 3456]")
    if y == J_I:
        return mpf(1)
    tol = mpf(tol)
    lo, hi = mpf(1), J_BRACKET_T
    with mpmath.workprec(128):
        for _ in range(400):
            mid = (lo + hi) / 2
            jv = eval_j(ComplexPoint(0, mid), tol / 16)
            v = jv.value.real
            if abs(v - y) + jv.radius <= tol:
                return mid
            if v < y:
                lo = mid
            else:
                hi = mid
    raise PrecisionError("bisection did not converge")  # pragma: no cover


def lognorm_j(z, rel=1e-25):
    """Enclosure (lo, hi) of log max(1, |j(z)|)."""
    w, _ = reduce_to_fundamental_domain(z)
    # |j(w)| is about exp(2 pi Im w): request a relative accuracy
    y = float(w.im)
    scale = math.exp(min(2 * math.pi * y, 700.0)) if y > 2 else 1.0
    jv = eval_j(w, rel * scale)
    lo, hi = jv.lower_abs, jv.upper_abs
    return (float(mpmath.log(lo)) if lo > 1 else 0.0,
            float(mpmath.log(hi)) if hi > 1 else 0.0)
