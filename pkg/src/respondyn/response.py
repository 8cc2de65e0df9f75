"""Response-side formulas: horizontality, operator derivative, resolvent and
series forms of the response derivative, the twisted cohomological equation,
and the jump/regular density decomposition for piecewise-affine maps.

Sign conventions: the response derivative of an observable phi along a
family f_t = f_0 + t X(f_0(.)) is d/dt of the phi-average at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _dd
from .errors import ArgumentError, NumericError, PreconditionError
from .maps import (
    CIRCLE_TYPES,
    AffineTent,
    TentMap,
    VectorField,
    critical_orbit,
    detect_markov,
)
from .transfer import (
    Density,
    FourierBasis,
    build_circle_operator,
    build_ulam_operator,
    eval_modes_at,
    grid_to_modes,
    invariant_density,
    resolvent_solve,
    transfer_apply_pointwise,
)

HORIZONTAL_TOL = 1e-8
FD_REL_TOL = 1e-6

TENT_TYPES = (TentMap, AffineTent)


# ---------------------------------------------------------------------------
# report containers
# ---------------------------------------------------------------------------

@dataclass
class ResponseReport:
    observable_tag: str
    fd_estimates: list = field(default_factory=list)   # [(h, value)]
    resolvent_value: Optional[float] = None
    ruelle_partials: list = field(default_factory=list)
    tail_bound: float = 0.0
    converged: bool = False
    deltas: dict = field(default_factory=dict)

    def to_json_dict(self):
        out = {
            "fd": [[h, v] for h, v in self.fd_estimates],
            "resolvent": self.resolvent_value,
            "ruelle_partials": list(self.ruelle_partials),
            "tail_bound": self.tail_bound,
            "converged": self.converged,
        }
        if self.deltas:
            out["deltas"] = dict(self.deltas)
        return out


@dataclass(frozen=True)
class RationalTail:
    """Eventually-periodic coefficient tail: prefix then a repeating cycle."""

    prefix: tuple
    cycle: tuple

    @property
    def period(self):
        return len(self.cycle)


@dataclass
class SeriesData:
    """Power-series prefix with Horner evaluation inside its disc."""

    coeffs: np.ndarray
    radius_hint: float
    rational: Optional[RationalTail] = None

    def eval(self, z):
        if self.rational is not None:
            q = len(self.rational.prefix)
            p = self.rational.period
            acc = 0.0 + 0.0j
            for c in reversed(self.rational.prefix):
                acc = acc * z + c
            cyc = 0.0 + 0.0j
            for c in reversed(self.rational.cycle):
                cyc = cyc * z + c
            return acc + z ** q * cyc / (1.0 - z ** p)
        acc = 0.0 + 0.0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def eval_radial(self, omega, radii):
        """Probe z -> e^{i omega} along the radius (nontangential limit)."""
        return [complex(self.eval(r * np.exp(1j * omega))) for r in radii]

    def partial_sums(self, z=1.0):
        acc = 0.0
        out = []
        for j, c in enumerate(self.coeffs):
            acc += c * z ** j
            out.append(acc)
        return out


@dataclass
class TceSolution:
    xs: np.ndarray
    alpha: np.ndarray
    residual_norm: float
    skipped: int
    horizontality: float
    warning: Optional[str] = None


@dataclass
class DensityDecomposition:
    jumps: list                  # [(location, signed weight, orbit index)]
    regular: Density
    decay_rate: Optional[float]  # fitted |weight| ~ rate**k, when fittable

    def reassemble(self):
        vals = self.regular.values.copy()
        b = self.regular.boundaries
        for loc, w, _ in self.jumps:
            vals = vals + w * _heaviside_cells(b, loc)
        return Density("ulam", values=vals, boundaries=b)


# ---------------------------------------------------------------------------
# horizontality
# ---------------------------------------------------------------------------

def horizontality_index(mp, vfield, terms=96):
    """The series sum_j X(c_{j+1}) / (f^j)'(c_1) with a certified tail bound.

    Orbit points and derivative products are accumulated in double-double
    arithmetic; the tail bound is sup|X| * lambda^(-terms) / (1 - 1/lambda)
    / lambda with lambda the slope magnitude.
    """
    if not isinstance(mp, TENT_TYPES):
        raise ArgumentError("horizontality index requires a tent-type map")
    if terms < 1:
        raise PreconditionError("need at least one term")
    lam = mp.slope
    x = _dd.dd(mp.crit)
    d = _dd.dd(1.0)
    acc = _dd.dd(0.0)
    for _ in range(terms):
        x = mp._dd_step(x)           # x is now c_{j+1}
        cx = _dd.to_float(x)
        if cx == 0.0:
            raise NumericError("postcritical orbit hits the turning point; "
                               "derivative chain breaks")
        xval = float(vfield(cx))
        acc = _dd.dd_add(acc, _dd.dd_div(_dd.dd(xval), d))
        slope = -lam if cx > 0.0 else lam
        d = _dd.dd_mul(d, _dd.dd(slope))
    lo, hi = mp.domain
    supx = vfield.sup_abs(lo, hi)
    tail = supx * lam ** (-terms) / (1.0 - 1.0 / lam) / lam
    return _dd.to_float(acc), tail


def horizontal_field(mp, basis=None, terms=96):
    """A field with vanishing horizontality index from a two-field basis.

    Solves the one linear constraint J(B1 + beta*B2) = 0 for beta; default
    basis is (1, x+1).
    """
    if basis is None:
        basis = (VectorField.poly((1.0,)), VectorField.poly((1.0, 1.0)))
    b1, b2 = basis
    j1, _ = horizontality_index(mp, b1, terms)
    j2, _ = horizontality_index(mp, b2, terms)
    if abs(j2) < 1e-14:
        raise NumericError("second basis field has vanishing index; "
                           "constraint is degenerate")
    beta = -j1 / j2
    return b1.plus(b2.scaled(beta))


# ---------------------------------------------------------------------------
# operator derivative (circle maps)
# ---------------------------------------------------------------------------

def operator_derivative(mp, vfield, phi, modes=128):
    """d/dt of the transfer operator applied to phi, on the collocation grid.

    Returns (grid points, values) of
        -X' L(phi) - X L(phi'/f') + X L(phi f''/(f')^2).
    """
    if not isinstance(mp, CIRCLE_TYPES):
        raise ArgumentError("operator derivative is implemented for circle maps")
    xs = FourierBasis(modes).grid()
    l_phi = transfer_apply_pointwise(mp, phi, xs)
    l_psi2 = transfer_apply_pointwise(
        mp, lambda y: phi.deriv(y, 1) / mp.deriv(y, 1), xs)
    l_psi3 = transfer_apply_pointwise(
        mp, lambda y: phi(y) * mp.deriv(y, 2) / mp.deriv(y, 1) ** 2, xs)
    vals = -vfield.deriv(xs, 1) * l_phi - vfield(xs) * l_psi2 + vfield(xs) * l_psi3
    return xs, vals


class ModeFunction:
    """Adapter exposing Fourier coefficients as a differentiable function."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        n = (len(self.coeffs) - 1) // 2
        self._ns = np.arange(-n, n + 1)

    def __call__(self, x):
        return eval_modes_at(self.coeffs, np.asarray(x, dtype=float)).real

    def deriv(self, x, order=1):
        factor = (2j * np.pi * self._ns) ** order
        return eval_modes_at(self.coeffs * factor, np.asarray(x, dtype=float)).real


# ---------------------------------------------------------------------------
# response: resolvent form, series form, finite differences
# ---------------------------------------------------------------------------

def _density_and_grid(mp, modes):
    op = build_circle_operator(mp, modes)
    rho = invariant_density(op)
    xs = op.basis.grid()
    rho_x = eval_modes_at(rho.coeffs, xs).real
    return op, rho, xs, rho_x


def _xrho_deriv_coeffs(vfield, xs, rho_x, modes):
    coeffs = grid_to_modes(vfield(xs) * rho_x, modes)
    ns = np.arange(-modes, modes + 1)
    return coeffs * (2j * np.pi * ns)


def response_resolvent(mp, vfield, phi, modes=256):
    """Response derivative via the resolvent: -int phi (1-L)^(-1) (X rho)'. """
    op, _, xs, rho_x = _density_and_grid(mp, modes)
    g = _xrho_deriv_coeffs(vfield, xs, rho_x, modes)
    u = resolvent_solve(op, g)
    return -float(np.mean(np.asarray(phi(xs)) * eval_modes_at(u, xs).real))


def _observable_degree(phi):
    if isinstance(phi, VectorField) and phi.kind == "trig":
        return max(len(phi.sin_amps), len(phi.cos_amps), 1)
    if isinstance(phi, VectorField):
        return max(len(phi.coeffs) - 1, 1)
    if isinstance(phi, ModeFunction):
        return max((len(phi.coeffs) - 1) // 2, 1)
    return 4


def ruelle_sum(mp, vfield, phi, terms=40, modes=256):
    """Partial sums S_0..S_terms of sum_j int X (phi o f^j)' d mu.

    Terms inside the grid's resolvable horizon are computed by chain rule
    along forward orbits of the quadrature points; the orbit derivative
    (f^j)' doubles the integrand's wavenumber content each step, so once it
    exceeds the quadrature bandwidth the same term is evaluated through the
    push-forward identity int X (phi o f^j)' rho dx = -int phi L^j (X rho)' dx,
    which only smooths.  Both routes agree to machine precision at the
    switchover.
    """
    if terms < 1:
        raise PreconditionError("need at least one term")
    op, _, xs, rho_x = _density_and_grid(mp, modes)
    m = len(xs)
    lam_max = float(np.abs(mp.deriv(xs, 1)).max())
    horizon = math.log(m / 4.0 / _observable_degree(phi)) / math.log(lam_max)
    j_switch = max(1, int(horizon))

    terms_list = []
    ys = xs.copy()
    dp = np.ones(m)
    x_weights = vfield(xs) * rho_x
    for _ in range(min(terms + 1, j_switch)):
        terms_list.append(float(np.mean(x_weights * phi.deriv(ys, 1) * dp)))
        dp = dp * mp.deriv(ys, 1)
        ys = np.asarray(mp(ys))

    if terms + 1 > j_switch:
        g = _xrho_deriv_coeffs(vfield, xs, rho_x, modes)
        for _ in range(j_switch):
            g = op.entries @ g
        phi_x = np.asarray(phi(xs))
        for _ in range(j_switch, terms + 1):
            terms_list.append(-float(np.mean(phi_x * eval_modes_at(g, xs).real)))
            g = op.entries @ g

    partials = list(np.cumsum(terms_list))
    lam = mp.expansion_floor
    sup0 = float(np.abs(x_weights * phi.deriv(xs, 1)).max())
    tail = sup0 * lam ** (-terms) / (lam - 1.0)
    converged = abs(partials[-1] - partials[-2]) <= max(tail, 1e-12 * (1 + abs(partials[-1])))
    tag = getattr(phi, "kind", type(phi).__name__)
    return ResponseReport(observable_tag=str(tag), ruelle_partials=partials,
                          tail_bound=tail, converged=bool(converged))


def _interval_density(mp, cells):
    return invariant_density(build_ulam_operator(mp, cells))


def fd_derivative(family, phi, steps, resolution=None):
    """Central differences of the phi-average through the family's densities.

    Returns [(h, value)] rows; a density failure at some h yields a NaN row
    (and is recorded in the companion errors dict via ``full_output``).
    """
    circle = isinstance(family.base, CIRCLE_TYPES)
    if resolution is None:
        resolution = 256 if circle else 4096
    rows = []
    errors = {}
    for h in steps:
        try:
            if circle:
                dens_p = invariant_density(build_circle_operator(family.at(h), resolution))
                dens_m = invariant_density(build_circle_operator(family.at(-h), resolution))
            else:
                dens_p = _interval_density(family.at(h), resolution)
                dens_m = _interval_density(family.at(-h), resolution)
            val = (dens_p.mean_of(phi) - dens_m.mean_of(phi)) / (2.0 * h)
        except Exception as exc:  # noqa: BLE001 - per-step failures are data
            errors[h] = str(exc)
            val = math.nan
        rows.append((float(h), float(val)))
    fd_derivative.last_errors = errors
    return rows


def fd_extrapolate(rows, rel_tol=FD_REL_TOL):
    """Richardson extrapolation over halving steps; flags convergence.

    Convergence is declared when successive extrapolants differ by less than
    ``rel_tol`` relatively; otherwise the last extrapolant is returned with
    ``converged=False`` (the drifting, no-limit signature of log-modulus
    families).
    """
    rows = sorted((r for r in rows if math.isfinite(r[1])), key=lambda r: -r[0])
    if len(rows) < 2:
        return (rows[0][1] if rows else math.nan), False
    extrap = []
    for (h1, v1), (h2, v2) in zip(rows[:-1], rows[1:]):
        if abs(h1 / h2 - 2.0) > 1e-9:
            continue
        extrap.append((4.0 * v2 - v1) / 3.0)
    if len(extrap) < 2:
        return (extrap[-1] if extrap else rows[-1][1]), False
    converged = abs(extrap[-1] - extrap[-2]) <= rel_tol * max(1.0, abs(extrap[-1]))
    return extrap[-1], bool(converged)


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------

def _radius_hint(coeffs):
    best = 0.0
    for j, c in enumerate(coeffs):
        if j >= 1 and abs(c) > 1e-300:
            best = max(best, abs(c) ** (1.0 / j))
    return 1.0 / best if best > 0 else math.inf


def susceptibility_series(mp, vfield, phi, terms=40, resolution=None):
    """Coefficients kappa_j = int X (phi o f^j)' d mu_0 for j < terms."""
    if isinstance(mp, CIRCLE_TYPES):
        report = ruelle_sum(mp, vfield, phi, terms=terms,
                            modes=resolution or 256)
        partials = np.asarray(report.ruelle_partials)
        coeffs = np.diff(np.concatenate([[0.0], partials]))[:terms]
        return SeriesData(coeffs=coeffs, radius_hint=_radius_hint(coeffs))
    dens = _interval_density(mp, resolution or 4096)
    centers = 0.5 * (dens.boundaries[:-1] + dens.boundaries[1:])
    weights = dens.values * np.diff(dens.boundaries)
    ys = centers.copy()
    dp = np.ones_like(ys)
    xw = np.asarray(vfield(centers)) * weights
    coeffs = np.empty(terms)
    for j in range(terms):
        coeffs[j] = float(np.sum(xw * phi.deriv(ys, 1) * dp))
        dp = dp * mp.deriv(ys, 1)
        ys = np.asarray(mp(ys))
    return SeriesData(coeffs=coeffs, radius_hint=_radius_hint(coeffs))


def sigma_series(mp, phi, terms=64):
    """Postcritical series with coefficients phi(c_{j+1}).

    For Markov-detected maps the eventually-periodic cycle is pinned once
    detected (floating-point orbits of preperiodic parameters drift off the
    cycle exponentially), and the closed rational form is attached.
    """
    if terms < 1:
        raise PreconditionError("need at least one term")
    orbit = critical_orbit(mp, terms)
    markov = detect_markov(mp)
    rational = None
    if markov is not None and markov.preperiod <= terms:
        j0, p = markov.preperiod, markov.period
        for k in range(j0 + 1, terms + 1):
            orbit[k - 1] = orbit[j0 - 1 + ((k - j0) % p)]
        coeffs = np.asarray(phi(orbit), dtype=float)
        rational = RationalTail(tuple(coeffs[:j0 - 1]),
                                tuple(coeffs[j0 - 1:j0 - 1 + p]))
    else:
        coeffs = np.asarray(phi(orbit), dtype=float)
    return SeriesData(coeffs=coeffs, radius_hint=1.0, rational=rational)


# ---------------------------------------------------------------------------
# twisted cohomological equation
# ---------------------------------------------------------------------------

def _tce_series(mp, vfield, xs, depth):
    """alpha(x) = -sum_{j<depth} v(f^j x) / (f^{j+1})'(x), v = X o f."""
    ys = np.asarray(xs, dtype=float).copy()
    d = np.ones_like(ys)
    acc = np.zeros_like(ys)
    hit = np.zeros(ys.shape, dtype=bool)
    for _ in range(depth):
        hit |= ys == mp.crit
        d = d * mp.deriv(ys, 1)
        ys = np.asarray(mp(ys))
        acc = acc + np.asarray(vfield(ys)) / d
    return -acc, hit


def tce_solve(mp, vfield, depth=60, grid=2048):
    """Grid solution of v = alpha o f - f' alpha away from the turning point.

    Horizontality within 1e-8 is a soft precondition: a warning is attached
    otherwise (the series solution is then discontinuous at the turning
    point) and the residual is still reported on a disjoint test grid.
    """
    if not isinstance(mp, TENT_TYPES):
        raise ArgumentError("the twisted cohomological equation solver "
                            "requires a tent-type map")
    jval, _ = horizontality_index(mp, vfield, terms=max(64, depth))
    warning = None
    if abs(jval) > HORIZONTAL_TOL:
        warning = (f"field is not horizontal (index {jval:.3e}); "
                   "solution is discontinuous at the turning point")
    lo, hi = mp.domain
    w = (hi - lo) / grid
    xs = lo + (np.arange(grid) + 0.5) * w
    alpha, hit = _tce_series(mp, vfield, xs, depth)
    alpha = np.where(hit, np.nan, alpha)

    test = lo + (np.arange(grid // 2) + 1.0 / 3.0) * 2 * w
    a_test, hit_t = _tce_series(mp, vfield, test, depth)
    fx = np.asarray(mp(test))
    a_img, hit_i = _tce_series(mp, vfield, fx, depth)
    v_test = np.asarray(vfield(fx))
    res = np.abs(v_test - (a_img - mp.deriv(test, 1) * a_test))
    ok = ~(hit_t | hit_i)
    residual = float(res[ok].max()) if ok.any() else math.nan
    return TceSolution(xs, alpha, residual, int(hit.sum()), jval, warning)


# ---------------------------------------------------------------------------
# density decomposition and the piecewise-expanding response formula
# ---------------------------------------------------------------------------

def _heaviside_cells(boundaries, loc):
    """Cell averages of the unit step at loc (fractional in its cell)."""
    widths = np.diff(boundaries)
    vals = np.zeros(len(widths))
    vals[boundaries[:-1] >= loc] = 1.0
    idx = np.searchsorted(boundaries, loc, side="right") - 1
    if 0 <= idx < len(widths):
        vals[idx] = (boundaries[idx + 1] - loc) / widths[idx]
    return vals


def _distinct_orbit_points(mp, count, tol=1e-9):
    orbit = critical_orbit(mp, count)
    out = []
    for k, c in enumerate(orbit, start=1):
        if all(abs(c - loc) > tol for loc, _ in out):
            out.append((float(c), k))
    return out


def density_decompose(density, mp, max_jumps=8, window=3, gap=1):
    """Split an Ulam density into postcritical jumps plus a regular part.

    Jump weights are one-sided cell averages around each postcritical point,
    skipping ``gap`` cells on either side of the containing cell (the
    eigenvector smears a step over its immediate neighbours); the regular
    remainder is the input minus the reassembled steps, so reassembly is
    exact by construction.
    """
    if density.kind != "ulam":
        raise ArgumentError("decomposition expects an Ulam density")
    if not isinstance(mp, TENT_TYPES):
        raise ArgumentError("decomposition expects a tent-type map")
    b = density.boundaries
    v = density.values
    n = len(v)
    locs = _distinct_orbit_points(mp, max_jumps)
    cells = [int(np.clip(np.searchsorted(b, loc, side="right") - 1, 0, n - 1))
             for loc, _ in locs]
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            if abs(cells[i] - cells[j]) < 2 * (gap + 1):
                raise NumericError(
                    "two postcritical points share a cell neighbourhood; "
                    "refine the grid")

    jumps = []
    for (loc, k), idx in zip(locs, cells):
        exclude = set()
        for other in cells:
            if other != idx:
                exclude.update(range(other - gap - 1, other + gap + 2))
        left = [v[i] for i in range(idx - gap - window, idx - gap)
                if 0 <= i < n and i not in exclude]
        right = [v[i] for i in range(idx + 1 + gap, idx + 1 + gap + window)
                 if 0 <= i < n and i not in exclude]
        left_avg = float(np.mean(left)) if left else 0.0
        right_avg = float(np.mean(right)) if right else 0.0
        jumps.append((loc, right_avg - left_avg, k))

    regular = v.copy()
    for loc, wgt, _ in jumps:
        regular = regular - wgt * _heaviside_cells(b, loc)
    # the eigenvector smears each step over the adjacent cells; the regular
    # part is continuous there, so bridge those cells by interpolation
    centers = 0.5 * (b[:-1] + b[1:])
    for idx in cells:
        i0, i1 = max(idx - gap - 1, 0), min(idx + gap + 1, n - 1)
        for i in range(i0 + 1, i1):
            frac = (centers[i] - centers[i0]) / (centers[i1] - centers[i0])
            regular[i] = (1 - frac) * regular[i0] + frac * regular[i1]

    ks = np.array([k for _, w, k in jumps if abs(w) > 1e-300])
    ws = np.array([abs(w) for _, w, k in jumps if abs(w) > 1e-300])
    decay = None
    if len(ks) >= 2:
        slope = np.polyfit(ks, np.log(ws), 1)[0]
        decay = float(math.exp(slope))
    return DensityDecomposition(jumps, Density("ulam", values=regular, boundaries=b),
                                decay)


def response_pw_horizontal(mp, vfield, phi, cells=8192, terms=96):
    """Response derivative for a horizontal field on a Markov tent map.

    Assembles the atomic-part pairing int phi' alpha rho_sing dx (the
    distributional product rule applied to the step part of the density,
    which is the convention the finite-difference oracle selects and the
    only one conserving total mass) plus the resolvent term
    -int phi (1-L)^(-1)(X' rho_sing + (X rho_reg)') dx, with jump weights
    and the regular part estimated from the Ulam density.
    """
    jval, _ = horizontality_index(mp, vfield, terms=max(64, terms))
    if abs(jval) > HORIZONTAL_TOL:
        raise PreconditionError(
            f"field is not horizontal: index J = {jval:.6e} exceeds {HORIZONTAL_TOL}")
    markov = detect_markov(mp)
    if markov is None:
        raise PreconditionError("map is not Markov; decomposition is not finite")

    op = build_ulam_operator(mp, cells)
    rho = invariant_density(op)
    n_jumps = markov.preperiod + markov.period
    decomp = density_decompose(rho, mp, max_jumps=n_jumps)

    b = rho.boundaries
    centers = 0.5 * (b[:-1] + b[1:])
    widths = np.diff(b)
    rho_sing = np.zeros_like(rho.values)
    for loc, w, _ in decomp.jumps:
        rho_sing = rho_sing + w * _heaviside_cells(b, loc)
    alpha, hit = _tce_series(mp, vfield, centers, terms)
    ok = ~hit
    atomic = float(np.sum((np.asarray(phi.deriv(centers, 1)) * alpha
                           * rho_sing * widths)[ok]))

    rho_reg = decomp.regular.values
    q = np.asarray(vfield(centers)) * rho_reg
    dq = np.empty_like(q)
    dq[1:-1] = (q[2:] - q[:-2]) / (centers[2:] - centers[:-2])
    dq[0] = (q[1] - q[0]) / (centers[1] - centers[0])
    dq[-1] = (q[-1] - q[-2]) / (centers[-1] - centers[-2])
    g = np.asarray(vfield.deriv(centers, 1)) * rho_sing + dq
    u = resolvent_solve(op, g)
    resolvent_term = -float(np.sum(np.asarray(phi(centers)) * u * widths))
    return atomic + resolvent_term
