"""Command-line front end.

Subcommands cover densities, response formulas, series, the twisted
cohomological equation, density decomposition, scan harnesses, and orbit
diagnostics.  Maps, fields, and observables are given in a small spec
language:

    maps:        tent:a=<r>[,t=<r>]   logistic:t=<r>
                 circle:d=<int>[,sin=<r,...>][,cos=<r,...>]
    fields/obs:  trig:sin=<r,...>[,cos=<r,...>]   poly:<r,...>   (constant first)

Outputs are CSV or JSON per subcommand, written to --out (default stdout);
scan subcommands add a JSON sidecar with fit results.  Identical arguments,
config, and seed produce byte-identical outputs at any --threads value.
Exit codes: 0 success, 1 precondition error, 2 numeric/convergence error,
64 usage, 65 unparsable spec string.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .errors import (
    ArgumentError,
    DomainError,
    NumericError,
    PreconditionError,
    SpecParseError,
)
from .experiments import holder_scan, modulus_scan, three_way_report
from .kernels import set_threads
from .maps import (
    CIRCLE_TYPES,
    CircleMap,
    Family,
    LogisticMap,
    TentMap,
    VectorField,
    orbit_stats,
)
from .response import (
    density_decompose,
    horizontality_index,
    response_pw_horizontal,
    ruelle_sum,
    sigma_series,
    susceptibility_series,
    tce_solve,
)
from .serialize import csv_text, density_csv, emit, json_text, sidecar_path
from .transfer import build_circle_operator, build_ulam_operator, invariant_density

log = logging.getLogger("respondyn")

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64
EXIT_BADSPEC = 65

SUBCOMMANDS = ("density", "respond", "ruelle", "susceptibility", "sigma",
               "tce", "horizontality", "decompose", "modulus", "holder", "orbit")

DEFAULTS = {
    "method": "auto",     # fourier | ulam | auto (by map type)
    "n": 0,               # 0 = auto: 256 Fourier modes / 4096 cells
    "terms": 64,
    "steps": "",          # respond: fd step list; holder: parameter count
    "seed": 20260809,
    "seeds": 64,
    "orbit_len": 10_000_000,
    "k_min": 6,
    "k_max": 14,
    "t0": 4.0,
    "threads": 0,         # 0 = all cores
    "out": None,
}


# ---------------------------------------------------------------------------
# spec-string parsing
# ---------------------------------------------------------------------------

def _parse_float(token):
    try:
        return float(token)
    except ValueError:
        raise SpecParseError(f"not a number: {token!r}", token) from None


def _parse_kv(body, spec):
    """key=value[,value...] groups; bare tokens extend the previous key."""
    out = {}
    key = None
    for token in body.split(","):
        if "=" in token:
            key, val = token.split("=", 1)
            key = key.strip()
            if key in out:
                raise SpecParseError(f"duplicate key in {spec!r}", key)
            out[key] = [val]
        elif key is None:
            raise SpecParseError(f"stray token in {spec!r}", token)
        else:
            out[key].append(token)
    return out


def parse_map(spec):
    head, _, body = spec.partition(":")
    if head == "tent":
        kv = _parse_kv(body, spec)
        if "a" not in kv:
            raise SpecParseError(f"tent map needs a=<r> in {spec!r}", spec)
        extra = set(kv) - {"a", "t"}
        if extra:
            raise SpecParseError(f"unknown tent key in {spec!r}", extra.pop())
        return TentMap(a=_parse_float(kv["a"][0]),
                       t=_parse_float(kv["t"][0]) if "t" in kv else 0.0)
    if head == "logistic":
        kv = _parse_kv(body, spec)
        if set(kv) != {"t"}:
            raise SpecParseError(f"logistic map needs exactly t=<r> in {spec!r}", spec)
        return LogisticMap(t=_parse_float(kv["t"][0]))
    if head == "circle":
        kv = _parse_kv(body, spec)
        if "d" not in kv:
            raise SpecParseError(f"circle map needs d=<int> in {spec!r}", spec)
        extra = set(kv) - {"d", "sin", "cos"}
        if extra:
            raise SpecParseError(f"unknown circle key in {spec!r}", extra.pop())
        degree = _parse_float(kv["d"][0])
        if degree != int(degree):
            raise SpecParseError(f"degree must be an integer in {spec!r}", kv["d"][0])
        return CircleMap(degree=int(degree),
                         sin_amps=tuple(_parse_float(v) for v in kv.get("sin", [])),
                         cos_amps=tuple(_parse_float(v) for v in kv.get("cos", [])))
    raise SpecParseError(f"unknown map family {head!r}", head)


def parse_field(spec):
    head, _, body = spec.partition(":")
    if head == "poly":
        if not body:
            raise SpecParseError(f"poly field needs coefficients in {spec!r}", spec)
        return VectorField.poly(tuple(_parse_float(v) for v in body.split(",")))
    if head == "trig":
        kv = _parse_kv(body, spec)
        extra = set(kv) - {"sin", "cos"}
        if extra:
            raise SpecParseError(f"unknown trig key in {spec!r}", extra.pop())
        return VectorField.trig(tuple(_parse_float(v) for v in kv.get("sin", [])),
                                tuple(_parse_float(v) for v in kv.get("cos", [])))
    raise SpecParseError(f"unknown field kind {head!r}", head)


def parse_steps(text):
    return [_parse_float(tok) for tok in text.split(",") if tok]


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RunConfig:
    subcommand: str
    map: str = ""
    field: str = ""
    obs: str = ""
    method: str = DEFAULTS["method"]
    n: int = DEFAULTS["n"]
    terms: int = DEFAULTS["terms"]
    steps: str = DEFAULTS["steps"]
    seed: int = DEFAULTS["seed"]
    seeds: int = DEFAULTS["seeds"]
    orbit_len: int = DEFAULTS["orbit_len"]
    k_min: int = DEFAULTS["k_min"]
    k_max: int = DEFAULTS["k_max"]
    t0: float = DEFAULTS["t0"]
    threads: int = DEFAULTS["threads"]
    out: str = None

    def canonical_json(self):
        return json_text(dataclasses.asdict(self))

    @staticmethod
    def from_namespace(ns, config_file_values):
        merged = {}
        for fld in dataclasses.fields(RunConfig):
            if fld.name == "subcommand":
                merged[fld.name] = ns.subcommand
                continue
            flag_val = getattr(ns, fld.name, None)
            if flag_val is not None:
                merged[fld.name] = flag_val
            elif fld.name in config_file_values:
                merged[fld.name] = config_file_values[fld.name]
            elif fld.name in DEFAULTS:
                merged[fld.name] = DEFAULTS[fld.name]
            else:
                merged[fld.name] = ""
        return RunConfig(**merged)


def _resolve_resolution(cfg, mp, default_circle=256, default_interval=4096):
    if cfg.n:
        return cfg.n
    return default_circle if isinstance(mp, CIRCLE_TYPES) else default_interval


def _pick_method(cfg, mp):
    method = cfg.method
    circle = isinstance(mp, CIRCLE_TYPES)
    if method == "auto":
        return "fourier" if circle else "ulam"
    if method == "fourier" and not circle:
        raise PreconditionError("fourier discretization needs a circle map")
    if method == "ulam" and circle:
        raise PreconditionError("ulam discretization needs an interval map")
    return method


def _density_for(cfg, mp):
    method = _pick_method(cfg, mp)
    n = _resolve_resolution(cfg, mp)
    if method == "fourier":
        return invariant_density(build_circle_operator(mp, n))
    return invariant_density(build_ulam_operator(mp, n))


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def cmd_density(cfg):
    dens = _density_for(cfg, parse_map(cfg.map))
    emit(density_csv(dens), cfg.out)
    return EXIT_OK


def cmd_respond(cfg):
    mp = parse_map(cfg.map)
    field = parse_field(cfg.field)
    obs = parse_field(cfg.obs) if cfg.obs else VectorField.poly((0.0, 1.0))
    if isinstance(mp, CIRCLE_TYPES):
        steps = parse_steps(cfg.steps) or [1e-3, 5e-4, 2.5e-4]
        report = three_way_report(Family(mp, field), obs, terms=cfg.terms,
                                  steps=steps, modes=_resolve_resolution(cfg, mp))
        emit(json_text(report.to_json_dict()), cfg.out)
    else:
        value = response_pw_horizontal(mp, field, obs,
                                       cells=_resolve_resolution(cfg, mp, default_interval=8192),
                                       terms=cfg.terms)
        jval, _ = horizontality_index(mp, field, terms=max(64, cfg.terms))
        emit(json_text({"response": value, "horizontality": jval}), cfg.out)
    return EXIT_OK


def cmd_ruelle(cfg):
    mp = parse_map(cfg.map)
    report = ruelle_sum(mp, parse_field(cfg.field), parse_field(cfg.obs),
                        terms=cfg.terms, modes=_resolve_resolution(cfg, mp))
    emit(json_text(report.to_json_dict()), cfg.out)
    return EXIT_OK


def cmd_susceptibility(cfg):
    mp = parse_map(cfg.map)
    series = susceptibility_series(mp, parse_field(cfg.field), parse_field(cfg.obs),
                                   terms=cfg.terms,
                                   resolution=_resolve_resolution(cfg, mp))
    rows = list(enumerate(series.coeffs.tolist()))
    emit(csv_text(("j", "coefficient"), rows), cfg.out)
    return EXIT_OK


def cmd_sigma(cfg):
    series = sigma_series(parse_map(cfg.map), parse_field(cfg.obs), terms=cfg.terms)
    rows = list(enumerate(series.coeffs.tolist()))
    emit(csv_text(("j", "coefficient"), rows), cfg.out)
    return EXIT_OK


def cmd_tce(cfg):
    sol = tce_solve(parse_map(cfg.map), parse_field(cfg.field), depth=cfg.terms)
    rows = list(zip(sol.xs.tolist(), sol.alpha.tolist()))
    emit(csv_text(("x", "alpha"), rows), cfg.out)
    sidecar = {
        "residual_norm": sol.residual_norm,
        "skipped_points": sol.skipped,
        "horizontality": sol.horizontality,
        "warning": sol.warning,
    }
    emit("\n" + json_text(sidecar) if cfg.out is None else json_text(sidecar),
         sidecar_path(cfg.out))
    return EXIT_OK


def cmd_horizontality(cfg):
    value, tail = horizontality_index(parse_map(cfg.map), parse_field(cfg.field),
                                      terms=cfg.terms)
    emit(json_text({"value": value, "tail_bound": tail, "terms": cfg.terms}), cfg.out)
    return EXIT_OK


def cmd_decompose(cfg):
    mp = parse_map(cfg.map)
    from .maps import detect_markov

    markov = detect_markov(mp)
    jumps = markov.preperiod + markov.period if markov else 8
    dens = invariant_density(
        build_ulam_operator(mp, _resolve_resolution(cfg, mp, default_interval=8192)))
    dec = density_decompose(dens, mp, max_jumps=jumps)
    payload = {
        "jumps": [{"location": loc, "weight": w, "orbit_index": k}
                  for loc, w, k in dec.jumps],
        "decay_rate": dec.decay_rate,
        "regular_mean": float(np.mean(dec.regular.values)),
    }
    emit(json_text(payload), cfg.out)
    return EXIT_OK


def _scan_csv(report):
    rows = [(r.t, r.delta, r.stderr, r.resolution, r.accepted) for r in report.rows]
    return csv_text(("t", "delta", "stderr", "resolution", "accepted"), rows)


def cmd_modulus(cfg):
    family = Family(parse_map(cfg.map), parse_field(cfg.field))
    report = modulus_scan(family, k_range=range(cfg.k_min, cfg.k_max + 1),
                          cells=cfg.n or 2 ** 14)
    emit(_scan_csv(report), cfg.out)
    text = json_text(report.to_sidecar())
    emit("\n" + text if cfg.out is None else text, sidecar_path(cfg.out))
    return EXIT_OK


def cmd_holder(cfg):
    obs = parse_field(cfg.obs) if cfg.obs else VectorField.poly((0.0, 1.0))
    count = int(cfg.steps) if cfg.steps else 40
    report = holder_scan(t0=cfg.t0, param_count=count, orbit_len=cfg.orbit_len,
                         seeds=cfg.seeds, phi=obs,
                         delta_range=(10.0 ** -cfg.k_max * 10, 10.0 ** -cfg.k_min * 10),
                         master_seed=cfg.seed)
    emit(_scan_csv(report), cfg.out)
    text = json_text(report.to_sidecar())
    emit("\n" + text if cfg.out is None else text, sidecar_path(cfg.out))
    return EXIT_OK


def cmd_orbit(cfg):
    stats = orbit_stats(parse_map(cfg.map), depth=max(10, cfg.terms), seed=cfg.seed)
    payload = {
        "postcritical": stats.postcritical_prefix.tolist(),
        "lyapunov": stats.lyapunov,
        "ce_growth": [[k, v] for k, v in stats.ce_growth],
        "markov": None if stats.markov is None else {
            "preperiod": stats.markov.preperiod,
            "period": stats.markov.period,
            "multiplier": stats.markov.multiplier,
        },
        "restarts": stats.restarts,
    }
    emit(json_text(payload), cfg.out)
    return EXIT_OK


HANDLERS = {
    "density": cmd_density,
    "respond": cmd_respond,
    "ruelle": cmd_ruelle,
    "susceptibility": cmd_susceptibility,
    "sigma": cmd_sigma,
    "tce": cmd_tce,
    "horizontality": cmd_horizontality,
    "decompose": cmd_decompose,
    "modulus": cmd_modulus,
    "holder": cmd_holder,
    "orbit": cmd_orbit,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=96)


_HELP = {
    "map": "map spec, e.g. tent:a=1  logistic:t=4  circle:d=2,sin=0.05",
    "field": "perturbation field spec, e.g. trig:sin=1 or poly:0.5,0.5",
    "obs": "observable spec (same language as --field); default poly:0,1",
    "method": "density discretization: fourier, ulam, or auto by map type (default auto)",
    "n": "resolution: Fourier modes or cells (default 256 modes / 4096 cells)",
    "terms": "series terms / TCE depth / orbit length (default 64)",
    "steps": "respond: comma list of fd steps (default 0.001,0.0005,0.00025); "
             "holder: parameter count (default 40)",
    "seed": "master seed for all random streams (default 20260809)",
    "seeds": "independent orbit starts per parameter (default 64)",
    "orbit-len": "iterates per orbit start (default 10000000)",
    "k-min": "smallest dyadic/decade exponent (default 6)",
    "k-max": "largest dyadic/decade exponent (default 14)",
    "t0": "scan center parameter (default 4.0)",
    "threads": "worker-thread cap, 0 = all cores (default 0)",
    "config": "JSON file whose keys mirror the flags; flags take precedence",
    "out": "output path (default stdout); scans write a .json sidecar",
}


def build_parser():
    parser = _Parser(prog="respondyn", formatter_class=_formatter,
                     description="Invariant densities and linear-response "
                                 "diagnostics for one-dimensional chaotic maps.")
    subs = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    subs.required = True
    for name in SUBCOMMANDS:
        sub = subs.add_parser(name, formatter_class=_formatter,
                              help=f"run the {name} operation")
        sub.add_argument("--map", type=str, help=_HELP["map"])
        sub.add_argument("--field", type=str, help=_HELP["field"])
        sub.add_argument("--obs", type=str, help=_HELP["obs"])
        sub.add_argument("--method", choices=("fourier", "ulam", "auto"),
                         help=_HELP["method"])
        sub.add_argument("--n", type=int, help=_HELP["n"])
        sub.add_argument("--terms", type=int, help=_HELP["terms"])
        sub.add_argument("--steps", type=str, help=_HELP["steps"])
        sub.add_argument("--seed", type=int, help=_HELP["seed"])
        sub.add_argument("--seeds", type=int, help=_HELP["seeds"])
        sub.add_argument("--orbit-len", dest="orbit_len", type=int,
                         help=_HELP["orbit-len"])
        sub.add_argument("--k-min", dest="k_min", type=int, help=_HELP["k-min"])
        sub.add_argument("--k-max", dest="k_max", type=int, help=_HELP["k-max"])
        sub.add_argument("--t0", type=float, help=_HELP["t0"])
        sub.add_argument("--threads", type=int, help=_HELP["threads"])
        sub.add_argument("--config", type=str, help=_HELP["config"])
        sub.add_argument("--out", type=str, help=_HELP["out"])
        sub.add_argument("--dump-config", action="store_true",
                         help="print the resolved canonical config and exit")
    return parser


def _setup_logging():
    level = {"quiet": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("RESPONDYN_LOG", "quiet"),
                                         logging.ERROR)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("respondyn: %(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)


def run(argv=None):
    _setup_logging()
    parser = build_parser()
    ns = parser.parse_args(argv)
    config_values = {}
    if ns.config:
        try:
            with open(ns.config, "r", encoding="utf-8") as fh:
                config_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"respondyn: cannot read config: {exc}\n")
            return EXIT_PRECONDITION
    cfg = RunConfig.from_namespace(ns, config_values)
    if ns.dump_config:
        sys.stdout.write(cfg.canonical_json())
        return EXIT_OK
    set_threads(cfg.threads)
    try:
        return HANDLERS[cfg.subcommand](cfg)
    except SpecParseError as exc:
        sys.stderr.write(f"respondyn: bad spec string: {exc} (token: {exc.token!r})\n")
        return EXIT_BADSPEC
    except (PreconditionError, DomainError, ArgumentError) as exc:
        sys.stderr.write(f"respondyn: precondition: {exc}\n")
        return EXIT_PRECONDITION
    except NumericError as exc:
        sys.stderr.write(f"respondyn: numeric failure: {exc}\n")
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
