"""Double-double (compensated) arithmetic on (hi, lo) float pairs.

Used for critical-orbit iteration and for derivative-product accumulation,
where plain float64 loses digits to exponential error growth.  Only the
handful of operations the orbit code needs are provided.
"""

from __future__ import annotations

_SPLITTER = 134217729.0  # 2**27 + 1, Veltkamp split constant


def two_sum(a: float, b: float):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a: float, b: float):
    # requires |a| >= |b|
    s = a + b
    err = b - (s - a)
    return s, err


def split(a: float):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a: float, b: float):
    p = a * b
    ahi, alo = split(a)
    bhi, blo = split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def dd(x: float):
    return (float(x), 0.0)


def dd_add(x, y):
    s, e = two_sum(x[0], y[0])
    e += x[1] + y[1]
    return quick_two_sum(s, e)


def dd_neg(x):
    return (-x[0], -x[1])


def dd_sub(x, y):
    return dd_add(x, dd_neg(y))


def dd_mul(x, y):
    p, e = two_prod(x[0], y[0])
    e += x[0] * y[1] + x[1] * y[0]
    return quick_two_sum(p, e)


def dd_div(x, y):
    q1 = x[0] / y[0]
    r = dd_sub(x, dd_mul(dd(q1), y))
    q2 = r[0] / y[0]
    r = dd_sub(r, dd_mul(dd(q2), y))
    q3 = r[0] / y[0]
    s, e = quick_two_sum(q1, q2)
    return dd_add((s, e), dd(q3))


def dd_abs(x):
    return dd_neg(x) if x[0] < 0.0 or (x[0] == 0.0 and x[1] < 0.0) else x


def to_float(x) -> float:
    return x[0] + x[1]
