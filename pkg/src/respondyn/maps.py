"""Parametric one-dimensional map families and their orbit diagnostics.

Three families are provided: smooth expanding circle maps given by a
monotone lift, symmetric tent maps on [-1, 1], and the quadratic family on
[0, 1].  Circle maps answer preimage queries by safeguarded Newton on the
lift; the interval families have closed-form branch inverses.  Critical
orbits are iterated in double-double arithmetic because derivative growth
along the postcritical orbit amplifies rounding exponentially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _dd
from .errors import ArgumentError, DomainError, NumericError, PreconditionError
from .kernels import birkhoff_logistic, birkhoff_tent

TWO_PI = 2.0 * math.pi

DD_ORBIT_STEPS = 200      # double-double iterations before dropping to float64
MARKOV_TOL = 1e-9
MARKOV_SCAN_LIMIT = 64
_BRANCH_TOL = 1e-14
_BRANCH_CAP = 100


# ---------------------------------------------------------------------------
# vector fields / observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VectorField:
    """A trig-polynomial (circle) or polynomial (interval) function.

    ``trig``: X(x) = sum_k a_k sin(2 pi k x) + b_k cos(2 pi k x)
    ``poly``: X(x) = sum_i c_i x**i   (coefficients constant-first)
    """

    kind: str
    sin_amps: tuple = ()
    cos_amps: tuple = ()
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("trig", "poly"):
            raise ArgumentError(f"unknown vector-field kind {self.kind!r}")
        if self.kind == "poly" and len(self.coeffs) == 0:
            object.__setattr__(self, "coeffs", (0.0,))

    @staticmethod
    def trig(sin_amps=(), cos_amps=()):
        return VectorField("trig", sin_amps=tuple(float(a) for a in sin_amps),
                           cos_amps=tuple(float(b) for b in cos_amps))

    @staticmethod
    def poly(coeffs):
        return VectorField("poly", coeffs=tuple(float(c) for c in coeffs))

    @staticmethod
    def zero():
        return VectorField.poly((0.0,))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "poly":
            acc = np.full_like(x, self.coeffs[-1])
            for c in self.coeffs[-2::-1]:
                acc = acc * x + c
            return acc
        acc = np.zeros_like(x)
        for k, a in enumerate(self.sin_amps, start=1):
            acc = acc + a * np.sin(TWO_PI * k * x)
        for k, b in enumerate(self.cos_amps, start=1):
            acc = acc + b * np.cos(TWO_PI * k * x)
        return acc

    def deriv(self, x, order=1):
        if order not in (1, 2):
            raise ArgumentError(f"derivative order must be 1 or 2, got {order}")
        x = np.asarray(x, dtype=float)
        if self.kind == "poly":
            cs = self.coeffs
            for _ in range(order):
                cs = tuple(i * c for i, c in enumerate(cs))[1:] or (0.0,)
            acc = np.full_like(x, cs[-1])
            for c in cs[-2::-1]:
                acc = acc * x + c
            return acc
        acc = np.zeros_like(x)
        for k, a in enumerate(self.sin_amps, start=1):
            w = TWO_PI * k
            term = w * np.cos(w * x) if order == 1 else -w * w * np.sin(w * x)
            acc = acc + a * term
        for k, b in enumerate(self.cos_amps, start=1):
            w = TWO_PI * k
            term = -w * np.sin(w * x) if order == 1 else -w * w * np.cos(w * x)
            acc = acc + b * term
        return acc

    def sup_abs(self, lo=0.0, hi=1.0, samples=4097):
        """Grid bound for sup |X| on [lo, hi]; exact for affine fields."""
        if self.kind == "poly" and len(self.coeffs) <= 2:
            ends = np.abs(self(np.array([lo, hi])))
            return float(ends.max())
        xs = np.linspace(lo, hi, samples)
        return float(np.abs(self(xs)).max())

    def scaled(self, factor):
        if self.kind == "poly":
            return VectorField.poly(tuple(factor * c for c in self.coeffs))
        return VectorField.trig(tuple(factor * a for a in self.sin_amps),
                                tuple(factor * b for b in self.cos_amps))

    def plus(self, other):
        if self.kind != other.kind:
            raise ArgumentError("cannot add fields of different kinds")
        if self.kind == "poly":
            n = max(len(self.coeffs), len(other.coeffs))
            a = self.coeffs + (0.0,) * (n - len(self.coeffs))
            b = other.coeffs + (0.0,) * (n - len(other.coeffs))
            return VectorField.poly(tuple(x + y for x, y in zip(a, b)))
        n = max(len(self.sin_amps), len(other.sin_amps))
        m = max(len(self.cos_amps), len(other.cos_amps))
        sa = self.sin_amps + (0.0,) * (n - len(self.sin_amps))
        sb = other.sin_amps + (0.0,) * (n - len(other.sin_amps))
        ca = self.cos_amps + (0.0,) * (m - len(self.cos_amps))
        cb = other.cos_amps + (0.0,) * (m - len(other.cos_amps))
        return VectorField.trig(tuple(x + y for x, y in zip(sa, sb)),
                                tuple(x + y for x, y in zip(ca, cb)))


# ---------------------------------------------------------------------------
# circle maps
# ---------------------------------------------------------------------------

def _certify_expansion(lift_deriv1, lift_deriv2, samples=8192):
    """Certified lower bound for the lift derivative via a Lipschitz grid bound."""
    xs = np.linspace(0.0, 1.0, samples, endpoint=False)
    d1 = lift_deriv1(xs)
    d2max = float(np.abs(lift_deriv2(xs)).max()) + 1.0
    return float(d1.min()) - 0.5 * d2max / samples


class _CircleBase:
    """Shared behaviour for maps of the circle given by a monotone lift."""

    domain = "circle"

    # subclasses provide: degree, lift(x), lift_deriv(x, order)

    def __call__(self, x):
        val = np.mod(self.lift(np.mod(np.asarray(x, dtype=float), 1.0)), 1.0)
        return val if val.ndim else float(val)

    def deriv(self, x, order=1):
        if order not in (1, 2):
            raise ArgumentError(f"derivative order must be 1 or 2, got {order}")
        val = self.lift_deriv(np.mod(np.asarray(x, dtype=float), 1.0), order)
        return val if val.ndim else float(val)

    def branch_preimages(self, ys):
        """All preimages of each y: returns an array of shape (degree, len(ys)).

        Row b holds the preimage on the b-th monotone stretch of the lift,
        found by bisection-seeded safeguarded Newton.
        """
        ys = np.mod(np.asarray(ys, dtype=float), 1.0)
        h0 = float(self.lift(np.zeros(1))[0])
        m0 = np.ceil(h0 - ys)
        out = np.empty((self.degree, ys.size))
        for b in range(self.degree):
            out[b] = self._solve_lift(ys + m0 + b, b)
        return out

    def _solve_lift(self, targets, branch_id):
        lo = np.zeros_like(targets)
        hi = np.ones_like(targets)
        x = 0.5 * (lo + hi)
        iters = 0
        for _ in range(20):                     # bisection seed
            fx = self.lift(x) - targets
            neg = fx < 0.0
            lo = np.where(neg, x, lo)
            hi = np.where(neg, hi, x)
            x = 0.5 * (lo + hi)
            iters += 1
        scale = np.maximum(1.0, np.abs(targets))
        while True:                             # safeguarded Newton polish
            fx = self.lift(x) - targets
            if np.all(np.abs(fx) <= _BRANCH_TOL * scale):
                return x
            if iters >= _BRANCH_CAP:
                raise NumericError(
                    f"branch {branch_id}: lift root finder did not reach "
                    f"{_BRANCH_TOL} within {_BRANCH_CAP} iterations")
            neg = fx < 0.0
            lo = np.where(neg, x, lo)
            hi = np.where(neg, hi, x)
            step = fx / self.lift_deriv(x, 1)
            xn = x - step
            bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
            x = np.where(bad, 0.5 * (lo + hi), xn)
            iters += 1

    def inverse_branches(self, y):
        xs = self.branch_preimages(np.array([float(y)]))[:, 0]
        return [(b, float(xs[b])) for b in range(self.degree)]


@dataclass(frozen=True)
class CircleMap(_CircleBase):
    """Expanding circle map with lift d*x + sum_k a_k sin(2 pi k x) + b_k cos(2 pi k x).

    Construction certifies inf f' >= expansion_floor > 1 on a Lipschitz grid
    bound and fails otherwise.
    """

    degree: int
    sin_amps: tuple = ()
    cos_amps: tuple = ()
    expansion_floor: float = field(default=None)

    def __post_init__(self):
        if self.degree < 2:
            raise ArgumentError("circle map degree must be >= 2")
        object.__setattr__(self, "sin_amps", tuple(float(a) for a in self.sin_amps))
        object.__setattr__(self, "cos_amps", tuple(float(b) for b in self.cos_amps))
        certified = _certify_expansion(lambda x: self.lift_deriv(x, 1),
                                       lambda x: self.lift_deriv(x, 2))
        if self.expansion_floor is None:
            object.__setattr__(self, "expansion_floor", certified)
        if certified < self.expansion_floor or self.expansion_floor <= 1.0:
            raise PreconditionError(
                f"expansion check failed: certified inf f' = {certified:.6g}, "
                f"required floor {self.expansion_floor}")

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        acc = self.degree * x
        for k, a in enumerate(self.sin_amps, start=1):
            acc = acc + a * np.sin(TWO_PI * k * x)
        for k, b in enumerate(self.cos_amps, start=1):
            acc = acc + b * np.cos(TWO_PI * k * x)
        return acc

    def lift_deriv(self, x, order=1):
        x = np.asarray(x, dtype=float)
        if order == 1:
            acc = np.full_like(x, float(self.degree))
            for k, a in enumerate(self.sin_amps, start=1):
                acc = acc + a * TWO_PI * k * np.cos(TWO_PI * k * x)
            for k, b in enumerate(self.cos_amps, start=1):
                acc = acc - b * TWO_PI * k * np.sin(TWO_PI * k * x)
            return acc
        acc = np.zeros_like(x)
        for k, a in enumerate(self.sin_amps, start=1):
            acc = acc - a * (TWO_PI * k) ** 2 * np.sin(TWO_PI * k * x)
        for k, b in enumerate(self.cos_amps, start=1):
            acc = acc - b * (TWO_PI * k) ** 2 * np.cos(TWO_PI * k * x)
        return acc

    def tag(self):
        return f"circle:d={self.degree},sin={list(self.sin_amps)},cos={list(self.cos_amps)}"


@dataclass(frozen=True)
class PerturbedCircleMap(_CircleBase):
    """Member f_t = f0 + t * X(f0(.)) mod 1 of an image-perturbation family.

    X must be 1-periodic (trig fields, or constant polys) for the lift to
    stay a lift; the constructor re-certifies expansion at this t.
    """

    base: CircleMap
    vfield: VectorField
    t: float
    expansion_floor: float = field(default=None)

    def __post_init__(self):
        certified = _certify_expansion(lambda x: self.lift_deriv(x, 1),
                                       lambda x: self.lift_deriv(x, 2))
        if self.expansion_floor is None:
            object.__setattr__(self, "expansion_floor", certified)
        if certified <= 1.0:
            raise PreconditionError(
                f"perturbed map at t={self.t} is no longer expanding "
                f"(certified inf f' = {certified:.6g})")

    @property
    def degree(self):
        return self.base.degree

    def lift(self, x):
        h = self.base.lift(x)
        return h + self.t * self.vfield(h)

    def lift_deriv(self, x, order=1):
        h = self.base.lift(x)
        h1 = self.base.lift_deriv(x, 1)
        if order == 1:
            return h1 * (1.0 + self.t * self.vfield.deriv(h, 1))
        h2 = self.base.lift_deriv(x, 2)
        return (h2 * (1.0 + self.t * self.vfield.deriv(h, 1))
                + self.t * self.vfield.deriv(h, 2) * h1 * h1)

    def tag(self):
        return f"perturbed({self.base.tag()},t={self.t!r})"


# ---------------------------------------------------------------------------
# interval maps
# ---------------------------------------------------------------------------

class _TentBase:
    """Symmetric tent profile f(x) = height - slope*|x| on [-1, 1]."""

    domain = (-1.0, 1.0)
    crit = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = self.height - self.slope * np.abs(x)
        return val if val.ndim else float(val)

    def deriv(self, x, order=1):
        if order not in (1, 2):
            raise ArgumentError(f"derivative order must be 1 or 2, got {order}")
        x = np.asarray(x, dtype=float)
        if order == 2:
            val = np.zeros_like(x)
        else:
            # left-branch slope (+slope) at the kink x = 0 by convention
            val = np.where(x > 0.0, -self.slope, self.slope)
        return val if val.ndim else float(val)

    def is_kink(self, x):
        return np.asarray(x, dtype=float) == 0.0

    @property
    def crit_value(self):
        return self.height

    def left_inverse(self, y):
        # increasing branch on [-1, 0]
        return (np.asarray(y, dtype=float) - self.height) / self.slope

    def right_inverse(self, y):
        # decreasing branch on [0, 1]
        return (self.height - np.asarray(y, dtype=float)) / self.slope

    def inverse_branches(self, y):
        y = float(y)
        lo, hi = self.domain
        if not (lo <= y <= hi):
            raise DomainError(f"y={y} outside [{lo}, {hi}]")
        if y > self.height:
            return []
        if y == self.height:
            return [(0, 0.0)]
        out = []
        xl = float(self.left_inverse(y))
        if xl >= -1.0:
            out.append((0, xl))
        xr = float(self.right_inverse(y))
        if xr <= 1.0:
            out.append((1, xr))
        return out

    def _dd_step(self, x):
        ax = _dd.dd_abs(x)
        return _dd.dd_sub(_dd.dd(self.height), _dd.dd_mul(_dd.dd(self.slope), ax))

    def _mp_step(self, x, mp):
        return mp.mpf(self.height) - mp.mpf(self.slope) * abs(x)

    def orbit_deriv_at(self, x):
        """Signed f'(x) with the left-branch convention at the kink."""
        return -self.slope if x > 0.0 else self.slope

    def birkhoff_kernel(self, x0s, burn, n, coeffs):
        return birkhoff_tent(self.height, self.slope, x0s, burn, n, coeffs)


@dataclass(frozen=True)
class TentMap(_TentBase):
    """Tent family member: f(x) = (a+t) - (a+t+1)|x| on [-1, 1].

    Slopes are +-(a+t+1); the turning point sits at 0 and f(-1) = f(1) = -1
    exactly.
    """

    a: float
    t: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.a <= 1.0):
            raise PreconditionError(f"tent height parameter a={self.a} not in (0, 1]")
        if self.a + self.t <= 0.0:
            raise PreconditionError(
                f"tent slope {self.a + self.t + 1.0} is not > 1 (a+t must be > 0)")
        if self.a + self.t > 1.0:
            raise PreconditionError(
                f"tent peak {self.a + self.t} exceeds 1; map leaves [-1, 1]")

    @property
    def height(self):
        return self.a + self.t

    @property
    def slope(self):
        return self.a + self.t + 1.0

    def __call__(self, x):
        # u*(1-|x|) - |x| equals u - (u+1)|x| but pins f(+-1) = -1 exactly
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        val = self.height * (1.0 - ax) - ax
        return val if val.ndim else float(val)

    def _dd_step(self, x):
        ax = _dd.dd_abs(x)
        ua = _dd.dd_mul(_dd.dd(self.height), _dd.dd_sub(_dd.dd(1.0), ax))
        return _dd.dd_sub(ua, ax)

    def _mp_step(self, x, mp):
        return mp.mpf(self.height) * (1 - abs(x)) - abs(x)

    def tag(self):
        return f"tent:a={self.a!r},t={self.t!r}"


@dataclass(frozen=True)
class AffineTent(_TentBase):
    """General symmetric tent f(x) = height - slope*|x|, used for families.

    Members of image-perturbation families of tent maps are of this form but
    need not map the endpoints to -1; when height - slope < -1 the edge
    neighbourhoods escape [-1, 1] while the core [f(height), height] remains
    invariant.
    """

    height: float
    slope: float

    def __post_init__(self):
        if self.slope <= 1.0:
            raise PreconditionError(f"tent slope {self.slope} is not > 1")
        if not (0.0 < self.height <= 1.0):
            raise PreconditionError(f"tent peak {self.height} not in (0, 1]")
        if self.height * (self.slope - 1.0) > 1.0:
            raise PreconditionError("tent core leaves [-1, 1]")

    def tag(self):
        return f"affinetent:u={self.height!r},v={self.slope!r}"


@dataclass(frozen=True)
class LogisticMap:
    """Quadratic family member f(x) = t*x*(1-x) on [0, 1], 2 < t <= 4."""

    t: float
    domain = (0.0, 1.0)
    crit = 0.5

    def __post_init__(self):
        if not (2.0 < self.t <= 4.0):
            raise PreconditionError(f"logistic parameter t={self.t} not in (2, 4]")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = self.t * x * (1.0 - x)
        return val if val.ndim else float(val)

    def deriv(self, x, order=1):
        if order not in (1, 2):
            raise ArgumentError(f"derivative order must be 1 or 2, got {order}")
        x = np.asarray(x, dtype=float)
        val = self.t * (1.0 - 2.0 * x) if order == 1 else np.full_like(x, -2.0 * self.t)
        return val if val.ndim else float(val)

    def is_kink(self, x):
        return np.zeros_like(np.asarray(x), dtype=bool)

    @property
    def crit_value(self):
        return self.t / 4.0

    def left_inverse(self, y):
        y = np.asarray(y, dtype=float)
        return 0.5 * (1.0 - np.sqrt(np.maximum(1.0 - 4.0 * y / self.t, 0.0)))

    def right_inverse(self, y):
        y = np.asarray(y, dtype=float)
        return 0.5 * (1.0 + np.sqrt(np.maximum(1.0 - 4.0 * y / self.t, 0.0)))

    def inverse_branches(self, y):
        y = float(y)
        if not (0.0 <= y <= 1.0):
            raise DomainError(f"y={y} outside [0, 1]")
        if y > self.crit_value:
            return []
        if y == self.crit_value:
            return [(0, 0.5)]
        return [(0, float(self.left_inverse(y))), (1, float(self.right_inverse(y)))]

    def orbit_deriv_at(self, x):
        return self.t * (1.0 - 2.0 * x)

    def _dd_step(self, x):
        tx = _dd.dd_mul(_dd.dd(self.t), x)
        return _dd.dd_mul(tx, _dd.dd_sub(_dd.dd(1.0), x))

    def _mp_step(self, x, mp):
        return mp.mpf(self.t) * x * (1 - x)

    def birkhoff_kernel(self, x0s, burn, n, coeffs):
        return birkhoff_logistic(self.t, x0s, burn, n, coeffs)

    def tag(self):
        return f"logistic:t={self.t!r}"


INTERVAL_TYPES = (TentMap, AffineTent, LogisticMap)
CIRCLE_TYPES = (CircleMap, PerturbedCircleMap)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """One-parameter family f_t = f0 + t * X(f0(.)), reduced mod 1 on the circle.

    The velocity at t = 0 is X o f0 identically by construction.  Circle
    bases accept any periodic field; tent bases accept affine polynomial
    fields, for which the perturbed map is again a symmetric tent and keeps
    closed-form branch inverses.
    """

    base: object
    vfield: VectorField

    def __post_init__(self):
        if isinstance(self.base, CIRCLE_TYPES):
            return
        if isinstance(self.base, (TentMap, AffineTent)):
            if self.vfield.kind != "poly" or len(self.vfield.coeffs) > 2:
                raise ArgumentError(
                    "tent families require an affine polynomial field "
                    "(closed-form members); got " + self.vfield.kind)
            return
        raise ArgumentError(f"unsupported family base {type(self.base).__name__}")

    def at(self, t):
        t = float(t)
        if t == 0.0:
            return self.base
        if isinstance(self.base, CIRCLE_TYPES):
            return PerturbedCircleMap(self.base, self.vfield, t)
        c = self.vfield.coeffs
        c0 = c[0]
        c1 = c[1] if len(c) > 1 else 0.0
        scale = 1.0 + t * c1
        return AffineTent(scale * self.base.height + t * c0, scale * self.base.slope)

    def velocity(self, x, t=0.0):
        return self.vfield(self.at(t)(x))

    def safe_radius(self, probe=1.0, steps=40):
        """Largest |t| <= probe (bisected) where members still construct."""

        def ok(t):
            try:
                self.at(t)
                return True
            except (PreconditionError, ArgumentError):
                return False

        radius = probe
        for sgn in (1.0, -1.0):
            lo, hi = 0.0, probe
            if ok(sgn * probe):
                lo = probe
            else:
                for _ in range(steps):
                    mid = 0.5 * (lo + hi)
                    if ok(sgn * mid):
                        lo = mid
                    else:
                        hi = mid
            radius = min(radius, lo)
        return radius


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def eval_map(mp, x):
    """f(x) with domain checking; circle results are reduced to [0, 1)."""
    if isinstance(mp, CIRCLE_TYPES):
        return mp(x)
    lo, hi = mp.domain
    xs = np.asarray(x, dtype=float)
    if np.any(xs < lo) or np.any(xs > hi):
        raise DomainError(f"point outside [{lo}, {hi}]")
    return mp(x)


def eval_deriv(mp, x, order=1, with_kink=False):
    """f'(x) or f''(x); at a tent kink the left-branch slope is returned.

    With ``with_kink=True`` the return value is ``(value, kink_flag)``.
    """
    val = mp.deriv(x, order)
    if not with_kink:
        return val
    kink = mp.is_kink(x) if hasattr(mp, "is_kink") else np.zeros_like(np.asarray(x), dtype=bool)
    return val, kink


def inverse_branches(mp, y):
    """All (branch id, x) with f(x) = y, one per monotone branch attaining y."""
    return mp.inverse_branches(y)


def critical_orbit(mp, n):
    """c_1 .. c_n with c_1 = f(c); double-double for the first 200 steps."""
    if not isinstance(mp, INTERVAL_TYPES):
        raise ArgumentError("critical orbits are defined for interval maps only")
    if n < 1:
        raise ArgumentError("orbit length must be >= 1")
    out = np.empty(n)
    x = _dd.dd(mp.crit)
    k = 0
    for k in range(min(n, DD_ORBIT_STEPS)):
        x = mp._dd_step(x)
        out[k] = _dd.to_float(x)
    for k in range(DD_ORBIT_STEPS, n):
        out[k] = float(mp(out[k - 1]))
    return out


@dataclass(frozen=True)
class MarkovData:
    preperiod: int
    period: int
    multiplier: float


@dataclass(frozen=True)
class OrbitStats:
    lyapunov: float
    ce_growth: list
    markov: Optional[MarkovData]
    postcritical_prefix: np.ndarray
    restarts: int = 0


def _confirm_markov(mp_map, j, p, tol):
    """Re-iterate the critical orbit at quadrupled precision to rule out drift."""
    import mpmath as mp

    with mp.workdps(34):
        x = mp.mpf(mp_map.crit)
        orbit = []
        for _ in range(j + p):
            x = mp_map._mp_step(x, mp)
            orbit.append(x)
        return abs(orbit[j + p - 1] - orbit[j - 1]) <= tol


def detect_markov(mp, orbit=None, tol=MARKOV_TOL, limit=MARKOV_SCAN_LIMIT):
    """Minimal (preperiod j >= 2, period p) with |c_{j+p} - c_j| <= tol.

    Candidates must have cycle multiplier > 1 and survive re-iteration at
    doubled precision.
    """
    if orbit is None:
        orbit = critical_orbit(mp, limit)
    jmax = min(len(orbit), limit)
    for j in range(2, jmax):
        for p in range(1, jmax - j + 1):
            if abs(orbit[j + p - 1] - orbit[j - 1]) > tol:
                continue
            mult = 1.0
            for i in range(j, j + p):
                mult *= abs(mp.orbit_deriv_at(orbit[i - 1]))
            if mult <= 1.0:
                continue
            if _confirm_markov(mp, j, p, tol):
                return MarkovData(j, p, float(mult))
    return None


def orbit_stats(mp, depth=64, seed=0, orbit_len=2 ** 20, n_starts=64, burn=1000):
    """Lyapunov estimate, postcritical growth table, and Markov detection.

    The Lyapunov exponent is the ensemble average of log|f'| over burned-in
    orbits from ``n_starts`` seeded initial points; an orbit that lands
    exactly on the critical point (log|f'| = -inf) is flagged and restarted
    from a perturbed start.
    """
    if depth < 10:
        raise PreconditionError("orbit_stats requires depth >= 10")
    per_seed = max(16, (orbit_len // n_starts) & ~15)  # multiple of 16
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)

    if isinstance(mp, CIRCLE_TYPES):
        x = rng.uniform(0.0, 1.0, n_starts)
        for _ in range(burn):
            x = mp(x)
        acc = np.zeros(n_starts)
        for _ in range(per_seed):
            acc += np.log(np.abs(mp.deriv(x, 1)))
            x = mp(x)
        return OrbitStats(float(np.mean(acc / per_seed)), [], None,
                          np.empty(0), 0)

    lo, hi = mp.domain
    margin = 1e-3 * (hi - lo)
    coeffs = np.array([0.0])
    restarts = 0
    x0s = rng.uniform(lo + margin, hi - margin, n_starts)
    for attempt in range(6):
        _, lyaps = mp.birkhoff_kernel(x0s, burn, per_seed, coeffs)
        bad = ~np.isfinite(lyaps)
        if not bad.any():
            break
        if attempt == 5:
            raise NumericError("orbit keeps hitting the critical point exactly")
        restarts += int(bad.sum())
        x0s = np.where(bad, rng.uniform(lo + margin, hi - margin, n_starts), x0s)
    lyapunov = float(np.mean(lyaps))

    orbit = critical_orbit(mp, depth)
    derivs = np.array([mp.orbit_deriv_at(c) for c in orbit])
    ce = []
    logs = 0.0
    for k in range(1, depth + 1):
        d = abs(derivs[k - 1])
        if d == 0.0:
            break
        logs += math.log(d)
        ce.append((k, math.exp(logs / k)))

    markov = detect_markov(mp, orbit=orbit)
    return OrbitStats(lyapunov, ce, markov, orbit, restarts)
