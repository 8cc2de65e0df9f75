"""Finite discretizations of the transfer operator and their solvers.

Circle maps are discretized in a Fourier collocation basis (spectrally
accurate for analytic maps); interval maps use a cell-to-cell transition
matrix over a uniform partition with closed-form preimage intervals per
monotone branch.  Densities, resolvent solves on the mean-zero subspace,
and spectral gaps are computed from these matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, ConvergenceError, NumericError, PreconditionError
from .maps import CIRCLE_TYPES, INTERVAL_TYPES, critical_orbit

log = logging.getLogger("respondyn")

POWER_TOL = 1e-12
POWER_CAP = 100_000
RESIDUAL_LIMIT = 1e-8
RESOLVENT_TOL = 1e-10
MEAN_ZERO_TOL = 1e-8
BOUNDARY_NUDGE = 1e-15


# ---------------------------------------------------------------------------
# bases and containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierBasis:
    modes: int  # coefficients for wavenumbers -modes..modes

    @property
    def size(self):
        return 2 * self.modes + 1

    @property
    def wavenumbers(self):
        return np.arange(-self.modes, self.modes + 1)

    def grid(self, oversample=4):
        m = oversample * 2 * self.modes
        return np.arange(m) / m


@dataclass(frozen=True)
class UlamBasis:
    boundaries: np.ndarray  # length cells+1, strictly increasing

    @property
    def size(self):
        return len(self.boundaries) - 1

    @property
    def lo(self):
        return float(self.boundaries[0])

    @property
    def hi(self):
        return float(self.boundaries[-1])

    @property
    def widths(self):
        return np.diff(self.boundaries)

    @property
    def centers(self):
        return 0.5 * (self.boundaries[:-1] + self.boundaries[1:])


@dataclass(frozen=True)
class OperatorMatrix:
    entries: object  # dense complex ndarray (Fourier) or csr_matrix (Ulam)
    basis: object
    map_tag: str

    def validate(self, strict_rows=True):
        if isinstance(self.basis, FourierBasis):
            n = self.basis.modes
            row0 = np.zeros(self.basis.size, dtype=complex)
            row0[n] = 1.0
            if not np.allclose(self.entries[n], row0, atol=1e-12):
                raise NumericError("constant-mode row of the Fourier operator is off")
        else:
            m = self.entries
            if m.nnz and (m.data.min() < -1e-14 or m.data.max() > 1.0 + 1e-12):
                raise NumericError("transition entries must lie in [0, 1]")
            sums = np.asarray(m.sum(axis=1)).ravel()
            if strict_rows and np.abs(sums - 1.0).max() > 1e-12:
                raise NumericError("transition rows must sum to 1")
        return self


@dataclass(frozen=True)
class Density:
    """Invariant-density representation: Fourier coefficients or cell values."""

    kind: str
    coeffs: np.ndarray = None      # fourier: conjugate-symmetric, length 2N+1
    values: np.ndarray = None      # ulam: nonnegative per-cell values
    boundaries: np.ndarray = None

    @property
    def modes(self):
        return (len(self.coeffs) - 1) // 2

    def mass(self):
        if self.kind == "fourier":
            return float(self.coeffs[self.modes].real)
        return float(self.values @ np.diff(self.boundaries))

    def evaluate(self, xs):
        if self.kind == "fourier":
            return eval_modes_at(self.coeffs, np.asarray(xs, dtype=float)).real
        idx = np.clip(np.searchsorted(self.boundaries, np.asarray(xs), side="right") - 1,
                      0, len(self.values) - 1)
        return self.values[idx]

    def mean_of(self, fn):
        """integral of fn against the density, as a cell/grid weak pairing."""
        if self.kind == "fourier":
            xs = FourierBasis(self.modes).grid()
            vals = eval_modes_at(self.coeffs, xs)
            return float(np.mean(np.asarray(fn(xs)) * vals.real))
        centers = 0.5 * (self.boundaries[:-1] + self.boundaries[1:])
        return float(np.sum(np.asarray(fn(centers)) * self.values * np.diff(self.boundaries)))

    def l1_distance(self, other):
        if self.kind != other.kind:
            raise ArgumentError("cannot compare densities in different bases")
        if self.kind == "ulam":
            if len(self.values) != len(other.values):
                raise ArgumentError("cell counts differ")
            return float(np.sum(np.abs(self.values - other.values) * np.diff(self.boundaries)))
        m = max(self.modes, other.modes)
        xs = FourierBasis(m).grid()
        return float(np.mean(np.abs(eval_modes_at(self.coeffs, xs).real
                                    - eval_modes_at(other.coeffs, xs).real)))

    def c1_weighted_norm(self):
        """sum (1 + 2 pi |n|) |c_n| - a C^1 proxy norm on Fourier densities."""
        ns = np.arange(-self.modes, self.modes + 1)
        return float(np.sum((1.0 + 2.0 * np.pi * np.abs(ns)) * np.abs(self.coeffs)))


# ---------------------------------------------------------------------------
# Fourier helpers
# ---------------------------------------------------------------------------

def eval_modes_at(coeffs, xs):
    """Evaluate sum_n c_n e^{2 pi i n x} (modes ordered -N..N) at points xs."""
    n = (len(coeffs) - 1) // 2
    ns = np.arange(-n, n + 1)
    return np.exp(2j * np.pi * np.outer(xs, ns)) @ coeffs


def grid_to_modes(values, modes):
    """Leading Fourier coefficients (order -modes..modes) of grid samples."""
    m = len(values)
    spec = np.fft.fft(values) / m
    return np.concatenate([spec[m - modes:], spec[:modes + 1]])


def transfer_apply_pointwise(mp, fn, xs):
    """(L fn)(x) = sum over preimages fn(y)/|f'(y)|, evaluated at points xs."""
    ys = mp.branch_preimages(xs)
    acc = np.zeros(len(xs), dtype=np.result_type(float, np.asarray(fn(ys[0])).dtype))
    for b in range(ys.shape[0]):
        acc += np.asarray(fn(ys[b])) / np.abs(mp.deriv(ys[b], 1))
    return acc


# ---------------------------------------------------------------------------
# operator builders
# ---------------------------------------------------------------------------

def build_circle_operator(mp, modes):
    """Fourier-collocation matrix of the transfer operator of a circle map.

    Each basis mode is pushed through the operator on a 4x-oversampled
    equispaced grid via the inverse branches, then transformed back; the
    constant-mode row is pinned to (1, 0, ..., 0), which is exact because the
    operator preserves Lebesgue integrals.
    """
    if modes < 4:
        raise PreconditionError("need at least 4 Fourier modes")
    if not isinstance(mp, CIRCLE_TYPES):
        raise ArgumentError("Fourier discretization requires a circle map")
    basis = FourierBasis(modes)
    xs = basis.grid()
    m = len(xs)
    ys = mp.branch_preimages(xs)
    ns = basis.wavenumbers
    applied = np.zeros((m, basis.size), dtype=complex)
    for b in range(ys.shape[0]):
        w = 1.0 / np.abs(mp.deriv(ys[b], 1))
        applied += w[:, None] * np.exp(2j * np.pi * np.outer(ys[b], ns))
    spec = np.fft.fft(applied, axis=0) / m
    entries = np.concatenate([spec[m - modes:], spec[:modes + 1]], axis=0)
    entries[modes] = 0.0
    entries[modes, modes] = 1.0
    tag = mp.tag() if hasattr(mp, "tag") else repr(mp)
    return OperatorMatrix(entries, basis, tag).validate()


def _nudged_boundaries(mp, cells):
    lo, hi = mp.domain
    bounds = np.linspace(lo, hi, cells + 1)
    special = np.concatenate([[mp.crit], critical_orbit(mp, min(64, 4 * cells))])
    for s in special:
        if not (lo < s < hi):
            continue
        k = np.searchsorted(bounds, s)
        for idx in (k - 1, k):
            if 0 < idx < cells and abs(bounds[idx] - s) < BOUNDARY_NUDGE:
                bounds[idx] = s + BOUNDARY_NUDGE
    return bounds


def build_ulam_operator(mp, cells):
    """Cell-transition matrix P[i, j] = m(A_i n f^-1 A_j) / m(A_i).

    Preimage intervals are computed exactly per monotone branch (affine
    inverses for tents, quadratic roots for the logistic family).  Cell
    boundaries falling exactly on the turning point or on postcritical
    points are nudged off by 1e-15.  Rows are stochastic except for cells
    whose image leaves the domain (possible only for off-class tents).
    """
    if cells < 2:
        raise PreconditionError("need at least 2 cells")
    if not isinstance(mp, INTERVAL_TYPES):
        raise ArgumentError("Ulam discretization requires an interval map")
    bounds = _nudged_boundaries(mp, cells)
    basis = UlamBasis(bounds)
    lo, hi = basis.lo, basis.hi
    c = mp.crit

    # monotone pieces: cells split at the turning point
    starts, ends, srcs, right_flag = [], [], [], []
    for i in range(cells):
        p, q = bounds[i], bounds[i + 1]
        if p < c < q:
            starts += [p, c]
            ends += [c, q]
            srcs += [i, i]
            right_flag += [False, True]
        else:
            starts.append(p)
            ends.append(q)
            srcs.append(i)
            right_flag.append(q > c)
    starts = np.array(starts)
    ends = np.array(ends)
    srcs = np.array(srcs)
    right_flag = np.array(right_flag)

    fa = np.asarray(mp(np.clip(starts, lo, hi)))
    fb = np.asarray(mp(np.clip(ends, lo, hi)))
    ylo = np.minimum(fa, fb)
    yhi = np.maximum(fa, fb)
    np.clip(yhi, None, mp.crit_value, out=yhi)

    j1 = np.clip(np.searchsorted(bounds, np.maximum(ylo, lo), side="right") - 1, 0, cells - 1)
    j2 = np.clip(np.searchsorted(bounds, np.minimum(yhi, hi), side="left") - 1, 0, cells - 1)
    j2 = np.maximum(j2, j1)
    counts = j2 - j1 + 1
    total = int(counts.sum())
    piece_of = np.repeat(np.arange(len(starts)), counts)
    offs = np.concatenate([[0], np.cumsum(counts)])[:-1]
    jflat = j1[piece_of] + (np.arange(total) - offs[piece_of])

    ya = np.maximum(ylo[piece_of], bounds[jflat])
    yb = np.minimum(yhi[piece_of], bounds[jflat + 1])
    # keep degenerate-image entries: a sliver piece next to a nudged kink
    # boundary maps to a single point but still carries its full x-length
    ok = yb >= ya
    right = right_flag[piece_of]
    # preimage cut coordinates; piece endpoints are substituted exactly so
    # that the sub-lengths tile each source cell and rows stay stochastic
    # to machine precision
    ga = np.where(right, mp.right_inverse(ya), mp.left_inverse(ya))
    gb = np.where(right, mp.right_inverse(yb), mp.left_inverse(yb))
    p_rep, q_rep = starts[piece_of], ends[piece_of]
    at_lo = ya == ylo[piece_of]
    at_hi = yb == yhi[piece_of]
    ga = np.where(at_lo, np.where(right, q_rep, p_rep), ga)
    gb = np.where(at_hi, np.where(right, p_rep, q_rep), gb)
    lengths = np.where(ok, np.abs(gb - ga), 0.0)

    rows = srcs[piece_of][ok]
    cols = jflat[ok]
    data = lengths[ok] / basis.widths[rows]
    mat = sp.coo_matrix((data, (rows, cols)), shape=(cells, cells)).tocsr()

    strict = True
    if hasattr(mp, "slope") and mp.height - mp.slope < lo - 1e-12:
        strict = False  # edge cells leak below the domain for off-class tents
    tag = mp.tag() if hasattr(mp, "tag") else repr(mp)
    return OperatorMatrix(mat, basis, tag).validate(strict_rows=strict)


# ---------------------------------------------------------------------------
# density action and eigen-solves
# ---------------------------------------------------------------------------

def apply_to_density_values(op, values):
    """Push density cell-values forward through an Ulam operator."""
    w = op.basis.widths
    return (op.entries.T @ (values * w)) / w


def invariant_density(op):
    """Fixed density of the discretized operator, normalized to unit mass.

    Power iteration with a dense-eigensolve fallback when the contraction
    rate indicates a spectral gap below 1e-3.
    """
    if isinstance(op.basis, FourierBasis):
        return _fourier_density(op)
    return _ulam_density(op)


def _fourier_density(op):
    n = op.basis.modes
    size = op.basis.size
    c = np.zeros(size, dtype=complex)
    c[n] = 1.0
    mat = op.entries
    residual = np.inf
    prev = residual
    for it in range(POWER_CAP):
        nxt = mat @ c
        residual = float(np.abs(nxt - c).max())
        c = nxt
        if residual <= POWER_TOL:
            break
        if it > 0 and it % 64 == 0:
            rate = residual / max(prev, 1e-300)
            if rate > 0.999:
                c = _dense_unit_eigvec(mat, n)
                break
            prev = residual
    c = 0.5 * (c + np.conj(c[::-1]))
    c /= c[n].real
    residual = float(np.abs(mat @ c - c).max())
    if residual > RESIDUAL_LIMIT:
        raise ConvergenceError(
            f"fixed-density residual {residual:.3e} above {RESIDUAL_LIMIT}", residual)
    grid_vals = eval_modes_at(c, op.basis.grid()).real
    if grid_vals.min() < -1e-8:
        raise NumericError(f"density dips to {grid_vals.min():.3e} on the grid")
    return Density("fourier", coeffs=c)


def _dense_unit_eigvec(mat, n):
    vals, vecs = np.linalg.eig(mat)
    k = int(np.argmin(np.abs(vals - 1.0)))
    if abs(vals[k] - 1.0) > 1e-6:
        raise ConvergenceError(
            f"no eigenvalue near 1 (closest {vals[k]:.6g})", abs(vals[k] - 1.0))
    v = vecs[:, k]
    return v / v[n]


def _ulam_density(op):
    # Non-mixing Markov maps put an eigenvalue near -1 next to the fixed
    # density, so power iteration may contract very slowly; switch to a
    # deterministic two-eigenvalue Arnoldi solve when that happens.
    basis = op.basis
    w = basis.widths
    m = (w / w.sum()).astype(float)
    pt = op.entries.T.tocsr()
    residual = np.inf
    prev = np.inf
    for it in range(POWER_CAP):
        nxt = pt @ m
        s = nxt.sum()
        if s <= 0:
            raise NumericError("transition iteration lost all mass")
        nxt /= s
        residual = float(np.abs(nxt - m).sum())
        m = nxt
        if residual <= POWER_TOL:
            break
        if it > 0 and it % 512 == 0:
            if residual / max(prev, 1e-300) > 0.6:
                m = _sparse_unit_eigvec(pt, m)
                break
            prev = residual
    m = np.maximum(m, 0.0)
    m /= m.sum()
    residual = float(np.abs(pt @ m - m).sum())
    if residual > RESIDUAL_LIMIT:
        raise ConvergenceError(
            f"fixed-density residual {residual:.3e} above {RESIDUAL_LIMIT}", residual)
    return Density("ulam", values=m / w, boundaries=basis.boundaries)


def _sparse_unit_eigvec(pt, v0):
    vals, vecs = spla.eigs(pt, k=2, which="LM", v0=v0, maxiter=20000, tol=1e-14)
    k = int(np.argmin(np.abs(vals - 1.0)))
    if abs(vals[k] - 1.0) > 1e-6:
        raise ConvergenceError(
            f"no eigenvalue near 1 (closest {vals[k]:.6g})", abs(vals[k] - 1.0))
    v = vecs[:, k].real
    if v.sum() < 0:
        v = -v
    return np.maximum(v, 0.0) / np.maximum(v, 0.0).sum()


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------

def resolvent_solve(op, g, full_output=False):
    """Solve (1 - L) u = g on the mean-zero subspace; u has zero mean.

    ``g`` is coefficients (Fourier) or cell values (Ulam).  If the mean of g
    exceeds 1e-8 it is projected out and the discarded mass reported.
    """
    if isinstance(op.basis, FourierBasis):
        u, info = _fourier_resolvent(op, np.asarray(g, dtype=complex))
    else:
        u, info = _ulam_resolvent(op, np.asarray(g, dtype=float))
    if info["discarded_mass"] > MEAN_ZERO_TOL:
        log.info("resolvent input projected to mean zero; discarded mass %.3e",
                 info["discarded_mass"])
    return (u, info) if full_output else u


def _fourier_resolvent(op, g):
    n = op.basis.modes
    size = op.basis.size
    discarded = abs(complex(g[n]))
    keep = np.arange(size) != n
    a = np.eye(size - 1, dtype=complex) - op.entries[np.ix_(keep, keep)]
    u = np.zeros(size, dtype=complex)
    try:
        u[keep] = np.linalg.solve(a, g[keep])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"resolvent system singular: {exc}") from exc
    gz = g.copy()
    gz[n] = 0.0
    scale = max(float(np.abs(gz).max()), 1e-300)
    residual = float(np.abs(u - op.entries @ u - gz).max()) / scale
    if residual > RESOLVENT_TOL and float(np.abs(gz).max()) > 0:
        raise NumericError(f"resolvent residual {residual:.3e} above {RESOLVENT_TOL}")
    return u, {"discarded_mass": discarded, "residual": residual}


def _ulam_resolvent(op, g):
    # Bordered augmented system [(1-L)u + mu*1 = g, int u = 0]: the extra
    # column removes the eigenvalue-1 kernel, and mu = 0 follows from the
    # projected right-hand side.  A direct sparse factorization keeps this
    # robust for non-mixing maps whose operator has spectrum touching |z|=1.
    basis = op.basis
    w = basis.widths
    n = basis.size
    span = basis.hi - basis.lo
    integral = float(g @ w)
    gz = g - integral / span
    scale = max(float(np.abs(gz * w).sum()), 1e-300)

    dens_action = sp.diags(1.0 / w) @ op.entries.T.tocsr() @ sp.diags(w)
    bordered = sp.bmat(
        [[sp.identity(n, format="csr") - dens_action, np.ones((n, 1))],
         [w[None, :], None]], format="csc")
    try:
        sol = spla.splu(bordered).solve(np.concatenate([gz, [0.0]]))
    except RuntimeError as exc:
        raise NumericError(f"augmented resolvent factorization failed: {exc}") from exc
    u = sol[:n]
    u = u - (u @ w) / span
    residual = float(np.abs((u - apply_to_density_values(op, u) - gz) * w).sum()) / scale
    if residual > RESOLVENT_TOL and float(np.abs(gz).max()) > 0:
        raise NumericError(f"resolvent residual {residual:.3e} above {RESOLVENT_TOL}")
    return u, {"discarded_mass": abs(integral), "residual": residual}


# ---------------------------------------------------------------------------
# spectral gap
# ---------------------------------------------------------------------------

def spectral_gap(op):
    """Modulus of the second-largest eigenvalue of the discretized operator."""
    if isinstance(op.basis, FourierBasis):
        mods = np.sort(np.abs(np.linalg.eigvals(op.entries)))[::-1]
        return float(mods[1])
    n = op.basis.size
    if n <= 2500:
        mods = np.sort(np.abs(np.linalg.eigvals(op.entries.toarray())))[::-1]
        return float(mods[1])
    v0 = np.full(n, 1.0 / n)
    vals = spla.eigs(op.entries.T.tocsr(), k=6, which="LM", v0=v0,
                     return_eigenvectors=False, maxiter=10000)
    mods = np.sort(np.abs(vals))[::-1]
    return float(mods[1])
