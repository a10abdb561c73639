"""Truncated products of integer coefficient lists.

Large products go through Kronecker substitution: both operands are packed
into one big integer (fixed-width two's complement chunks), multiplied with
GMP when available, and unpacked again.  Small products use the schoolbook
loop, which is faster below a few dozen terms.
"""

try:
    import gmpy2
    _mpz = gmpy2.mpz
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = None

NAIVE_CUTOFF = 24


def _pack(coeffs, nbytes):
    """Return the exact integer sum(c_i * 2**(8*nbytes*i))."""
    to_bytes = int.to_bytes
    buf = b"".join([to_bytes(c, nbytes, "little", signed=True) for c in coeffs])
    value = int.from_bytes(buf, "little")
    # a negative chunk c was stored as c + 2**B; undo the implied carries
    carries = None
    for i, c in enumerate(coeffs):
        if c < 0:
            if carries is None:
                carries = bytearray(nbytes * (len(coeffs) + 1))
            carries[(i + 1) * nbytes] = 1
    if carries is not None:
        value -= int.from_bytes(carries, "little")
    return value


def _unpack(value, n, total, nbytes):
    """Inverse of _pack for the first n of total chunks (signed digits)."""
    offset = int.from_bytes((b"\x00" * (nbytes - 1) + b"\x80") * total, "little")
    width = 8 * nbytes * n
    buf = ((value + offset) & ((1 << width) - 1)).to_bytes(nbytes * n, "little")
    half = 1 << (8 * nbytes - 1)
    from_bytes = int.from_bytes
    return [from_bytes(buf[i * nbytes:(i + 1) * nbytes], "little") - half
            for i in range(n)]


def _maxbits(coeffs):
    m = 0
    for c in coeffs:
        b = c.bit_length()
        if b > m:
            m = b
    return m


def mul_trunc(a, b, n):
    """First n coefficients of the product of coefficient lists a and b."""
    same = a is b
    a = a[:n]
    b = a if same else b[:n]
    if not a or not b or n <= 0:
        return [0] * max(n, 0)
    total = len(a) + len(b) - 1
    m = min(n, total)
    if min(len(a), len(b)) <= NAIVE_CUTOFF:
        out = [0] * m
        if len(a) > len(b):
            a, b = b, a
        for i, x in enumerate(a):
            if x:
                for k, y in enumerate(b[:m - i]):
                    out[i + k] += x * y
        return out + [0] * (n - m)
    ba = _maxbits(a)
    bb = _maxbits(b)
    if ba == 0 or bb == 0:
        return [0] * n
    bits = ba + bb + min(len(a), len(b)).bit_length() + 2
    nbytes = (bits + 7) // 8
    pa = _pack(a, nbytes)
    if same:
        prod = _square(pa)
    else:
        prod = _mul(pa, _pack(b, nbytes))
    return _unpack(prod, m, total, nbytes) + [0] * (n - m)


def _mul(x, y):
    if _mpz is None:
        return x * y
    return int(_mpz(x) * _mpz(y))


def _square(x):
    if _mpz is None:
        return x * x
    z = _mpz(x)
    return int(z * z)


def sq_trunc(a, n):
    return mul_trunc(a, a, n)
