"""Parameter-scan harnesses: modulus-of-continuity scans for tent families,
Holder-exponent scans for the quadratic family, and the three-way response
agreement report for circle families.

All randomness is drawn from per-row streams spawned off a master seed, so
results are independent of scheduling and thread count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, PreconditionError, RespondynError
from .maps import CIRCLE_TYPES, LogisticMap, VectorField, detect_markov
from .response import (
    ResponseReport,
    fd_derivative,
    fd_extrapolate,
    response_resolvent,
    ruelle_sum,
)
from .transfer import build_circle_operator, build_ulam_operator, invariant_density

log = logging.getLogger("respondyn")

LYAPUNOV_FLOOR = 0.05   # empirical filter standing in for the parameter sets
BURN_IN = 1000
MOM_BLOCKS = 8


@dataclass(frozen=True)
class ScanRow:
    t: float
    delta: float
    stderr: float
    resolution: int
    accepted: bool
    lyapunov: float = math.nan


@dataclass
class ScanReport:
    rows: list
    fit_exponent: float
    fit_ci: tuple
    log_coeff: float
    grid_meta: dict = field(default_factory=dict)
    degenerate: bool = False

    def accepted_rows(self):
        return [r for r in self.rows if r.accepted]

    def to_sidecar(self):
        return {
            "beta": self.fit_exponent,
            "beta_ci_lo": self.fit_ci[0],
            "beta_ci_hi": self.fit_ci[1],
            "log_coeff": self.log_coeff,
            "degenerate": self.degenerate,
            "meta": self.grid_meta,
        }


def _loglog_fit(xs, ys):
    """Slope, 95% band and intercept of log ys against log xs."""
    lx = np.log(np.asarray(xs))
    ly = np.log(np.asarray(ys))
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(a, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    dof = max(len(lx) - 2, 1)
    sigma2 = float(res[0]) / dof if len(res) else 0.0
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    se = math.sqrt(sigma2 / sxx) if sxx > 0 else math.inf
    return slope, (slope - 1.96 * se, slope + 1.96 * se), intercept


# ---------------------------------------------------------------------------
# Birkhoff estimation (median of means over seeded orbit ensembles)
# ---------------------------------------------------------------------------

def birkhoff_estimate(mp, phi, orbit_len=10 ** 7, seeds=64, master_seed=0,
                      row_key=0, burn=BURN_IN, blocks=MOM_BLOCKS):
    """Median-of-means estimate of the phi-average over the physical measure.

    Returns (estimate, stderr, lyapunov): per-seed Birkhoff means are grouped
    into blocks whose means are medianed (plain means are heavy-tailed when
    the density has inverse-square-root spikes); stderr is the standard error
    of that median (the block-mean spread carries the asymptotic pi/2 factor
    of a median).  The Lyapunov value is the median per-seed log|f'| average.
    """
    if not (isinstance(phi, VectorField) and phi.kind == "poly"):
        raise ArgumentError("orbit estimation needs a polynomial observable")
    coeffs = np.asarray(phi.coeffs, dtype=float)
    lo, hi = mp.domain
    margin = 1e-3 * (hi - lo)
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(row_key,))
    rng = np.random.default_rng(ss)
    x0s = rng.uniform(lo + margin, hi - margin, seeds)
    phi_means, lyaps = mp.birkhoff_kernel(x0s, burn, orbit_len, coeffs)
    per_block = seeds // blocks
    block_means = phi_means[: per_block * blocks].reshape(blocks, per_block).mean(axis=1)
    estimate = float(np.median(block_means))
    stderr = float(math.sqrt(math.pi / 2.0)
                   * np.std(block_means, ddof=1) / math.sqrt(blocks))
    lyapunov = float(np.median(lyaps))
    return estimate, stderr, lyapunov


# ---------------------------------------------------------------------------
# modulus-of-continuity scan (tent families, circle control)
# ---------------------------------------------------------------------------

def modulus_scan(family, k_range=range(6, 15), cells=2 ** 14):
    """L1 distance of the invariant density along a dyadic parameter grid.

    Distances ||rho_s - rho_0||_1 at s = +-2^-k are fitted both against
    |s| alone and against |s| log(1/|s|); the ratio of distance to the
    log-corrected law is recorded row by row.  The ``t`` column holds the
    offset s from the family's base map.
    """
    circle = isinstance(family.base, CIRCLE_TYPES)
    if not circle and detect_markov(family.base) is None:
        raise PreconditionError("tent modulus scans require a Markov base map")

    def density_at(s):
        mp = family.at(s)
        if circle:
            return invariant_density(build_circle_operator(mp, cells))
        return invariant_density(build_ulam_operator(mp, cells))

    rho0 = density_at(0.0)
    rows = []
    for k in sorted(k_range):
        for sign in (1.0, -1.0):
            s = sign * 2.0 ** (-k)
            try:
                delta = density_at(s).l1_distance(rho0)
                rows.append(ScanRow(s, delta, 0.0, cells, True))
            except RespondynError as exc:
                log.warning("density solve failed at offset %g: %s", s, exc)
                rows.append(ScanRow(s, math.nan, 0.0, cells, False))
    rows.sort(key=lambda r: abs(r.t))

    good = [r for r in rows if r.accepted]
    deltas = np.array([r.delta for r in good])
    seps = np.array([abs(r.t) for r in good])
    degenerate = len(good) < 3 or float(deltas.max(initial=0.0)) < 1e-12
    if degenerate:
        beta, ci, log_coeff, ratios = math.nan, (math.nan, math.nan), math.nan, []
    else:
        beta, ci, _ = _loglog_fit(seps, deltas)
        corrected = seps * np.log(1.0 / seps)
        log_beta, _, log_icept = _loglog_fit(corrected, deltas)
        log_coeff = math.exp(log_icept)
        ratios = list(deltas / corrected)
    meta = {
        "kind": "circle" if circle else "tent",
        "resolution": cells,
        "k_range": [min(k_range), max(k_range)],
        "ratio_spread": (max(ratios) / min(ratios)) if ratios else math.nan,
        "log_fit_exponent": log_beta if not degenerate else math.nan,
    }
    return ScanReport(rows, beta, ci, log_coeff, meta, degenerate)


# ---------------------------------------------------------------------------
# Holder scan at the top of the quadratic family
# ---------------------------------------------------------------------------

def holder_scan(t0=4.0, param_count=40, orbit_len=10 ** 7, seeds=64,
                phi=None, delta_range=(1e-5, 1e-2), master_seed=20260809):
    """Observable-difference scan |int phi d mu_t - int phi d mu_t0|.

    Parameters are log-spaced below t0 (one-sided when t0 = 4, the domain
    boundary); each row is estimated by median-of-means Birkhoff averaging
    and kept only when its empirical Lyapunov exponent clears the floor
    0.05 (the operational stand-in for selecting chaotic parameters).
    Excluded rows stay in the report with their Lyapunov estimate.
    """
    phi = phi if phi is not None else VectorField.poly((0.0, 1.0))
    base = LogisticMap(t=t0)
    markov = detect_markov(base)
    if markov is None or markov.multiplier <= 1.0:
        raise PreconditionError(
            "scan base parameter must have a preperiodic critical point "
            "falling onto a repelling cycle")
    if t0 != 4.0:
        raise PreconditionError("scans are implemented one-sided at t0 = 4")

    ref, ref_err, _ = birkhoff_estimate(base, phi, orbit_len, seeds,
                                        master_seed, row_key=0)
    lo, hi = delta_range
    offs = np.exp(np.linspace(math.log(lo), math.log(hi), param_count))
    rows = []
    for i, d in enumerate(offs):
        t = t0 - d
        est, err, lyap = birkhoff_estimate(LogisticMap(t=t), phi, orbit_len,
                                           seeds, master_seed, row_key=i + 1)
        accepted = lyap > LYAPUNOV_FLOOR
        delta = abs(est - ref)
        rows.append(ScanRow(t, delta, math.hypot(err, ref_err), orbit_len,
                            accepted, lyap))

    good = [r for r in rows if r.accepted]
    if len(good) >= 3:
        beta, ci, icept = _loglog_fit([t0 - r.t for r in good],
                                      [max(r.delta, 1e-300) for r in good])
        degenerate = False
    else:
        beta, ci, icept = math.nan, (math.nan, math.nan), math.nan
        degenerate = True
    meta = {
        "t0": t0,
        "orbit_len": orbit_len,
        "seeds": seeds,
        "burn_in": BURN_IN,
        "blocks": MOM_BLOCKS,
        "master_seed": master_seed,
        "reference": ref,
        "reference_stderr": ref_err,
        "accepted": len(good),
        "excluded": [{"t": r.t, "lyapunov": r.lyapunov}
                     for r in rows if not r.accepted],
        "lyapunov_floor": LYAPUNOV_FLOOR,
    }
    return ScanReport(rows, beta, ci, math.exp(icept) if not degenerate else math.nan,
                      meta, degenerate)


# ---------------------------------------------------------------------------
# three-way response agreement
# ---------------------------------------------------------------------------

def three_way_report(family, phi, terms=40, steps=(1e-3, 5e-4, 2.5e-4),
                     modes=256):
    """Finite differences vs resolvent formula vs series partial sums."""
    if not isinstance(family.base, CIRCLE_TYPES):
        raise ArgumentError("the three-way report runs on circle families")
    fd_rows = fd_derivative(family, phi, list(steps), resolution=modes)
    fd_value, fd_conv = fd_extrapolate(fd_rows)
    resolvent = response_resolvent(family.base, family.vfield, phi, modes=modes)
    series = ruelle_sum(family.base, family.vfield, phi, terms=terms, modes=modes)
    s_last = series.ruelle_partials[-1]
    report = ResponseReport(
        observable_tag=series.observable_tag,
        fd_estimates=fd_rows,
        resolvent_value=resolvent,
        ruelle_partials=series.ruelle_partials,
        tail_bound=series.tail_bound,
        converged=bool(fd_conv and series.converged),
        deltas={
            "fd_vs_resolvent": abs(fd_value - resolvent),
            "series_vs_resolvent": abs(s_last - resolvent),
            "fd_vs_series": abs(fd_value - s_last),
            "fd_extrapolated": fd_value,
        },
    )
    return report
