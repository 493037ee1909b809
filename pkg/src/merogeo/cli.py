"""Command line front end.

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 witness found
(``probe`` only).  Diagnostics go to standard error.  The default tolerance
can be overridden with the ``MEROGEO_TOL`` environment variable.
"""

from __future__ import annotations

import argparse
import cmath
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .coercivity import check_esempio_coercive, incompleteness_probe
from .continuation import (
    ClassifyOptions, ContinuationFailure, ReturnsAfter,
    classify_singularity, displacement_is_stationary, monodromy_probe,
)
from .expr import Pole
from .geodesic import GeodesicState, geodesic_rhs, trace_geodesic
from .io import (
    InputError, atomic_write, detect_kind, format_float, load_esempio, load_metric,
    load_ode, load_path, parse_complex, parse_complex_list, read_text, trace_csv,
    trace_json,
)
from .metric import NotOrdinary, christoffel_generic, christoffel_warped
from .quad import BranchCutCrossing, NewtonDivergence, QuadBranch, check_derivative

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_WITNESS = 0, 2, 3, 4
DEFAULT_TOL = 1e-10
TOL_ENV = "MEROGEO_TOL"


@dataclass
class RunConfig:
    command: str
    inputs: dict
    tol: float = DEFAULT_TOL
    outdir: str = "."
    fmt: str = "csv"
    seed: int = 0
    options: dict = field(default_factory=dict)

    def validate(self):
        if not 0 < self.tol <= 1e-2:
            raise InputError(f"tol must lie in (0, 1e-2], got {self.tol}")
        if self.fmt not in ("csv", "json", "text"):
            raise InputError(f"unknown format {self.fmt!r}")
        if self.command == "trace":
            if not os.path.isdir(self.outdir) or not os.access(self.outdir, os.W_OK):
                raise InputError(f"output directory {self.outdir!r} is not writable")

    def resolved(self) -> dict:
        return asdict(self)


def _c(x: complex) -> str:
    x = complex(x)
    if cmath.isinf(x):
        return "inf"
    return f"{format_float(x.real)}{'+' if x.imag >= 0 or x.imag != x.imag else '-'}{format_float(abs(x.imag))}i"


def _cs(v) -> str:
    return "[" + ", ".join(_c(x) for x in np.ravel(v)) + "]"


class _Report:
    """Collects key/value lines; renders as text or JSON with version and config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.items = []

    def add(self, key, value):
        self.items.append((key, value))

    def render(self) -> str:
        if self.cfg.fmt == "json":
            doc = {"version": __version__, "config": self.cfg.resolved(),
                   "result": {k: v for k, v in self.items}}
            return json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n"
        lines = [f"# merogeo {__version__}",
                 "# config: " + json.dumps(self.cfg.resolved(), sort_keys=True,
                                           separators=(",", ":"), default=str)]
        for k, v in self.items:
            if isinstance(v, (list, tuple)):
                lines.append(f"{k}:")
                lines += [f"  {x}" for x in v]
            else:
                lines.append(f"{k}: {v}")
        return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, rep: _Report):
    text = rep.render()
    out = cfg.options.get("out")
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _seed_state(metric, opts) -> GeodesicState:
    if opts.get("u0") is None or opts.get("udot0") is None:
        raise InputError("--u0 and --udot0 are required for a metric")
    u0 = parse_complex_list(opts["u0"])
    ud = parse_complex_list(opts["udot0"])
    if len(u0) != metric.n or len(ud) != metric.n:
        raise InputError(f"--u0 and --udot0 need {metric.n} components")
    return GeodesicState(parse_complex(opts.get("z0") or "0"), u0, ud)


def _system_and_state(cfg: RunConfig):
    """Geodesic system of a metric file or a scalar ODE file, with its initial vector."""
    src = cfg.inputs["system"]
    kind = detect_kind(read_text(src))
    opts = cfg.options
    if kind == "metric":
        m = load_metric(src)
        s0 = _seed_state(m, opts)
        return geodesic_rhs(m), s0.vector
    if opts.get("y0") is None:
        raise InputError("--y0 is required for an ODE file")
    return load_ode(src), np.array([parse_complex(opts["y0"])])


# -- subcommands --------------------------------------------------------------

def _cmd_christoffel(cfg: RunConfig) -> int:
    m = load_metric(cfg.inputs["metric"])
    at = parse_complex_list(cfg.options["at"])
    if len(at) != m.n:
        raise InputError(f"--at needs {m.n} components")
    w = christoffel_warped(m, at)
    g = christoffel_generic(m, at)
    rep = _Report(cfg)
    for name, tab in (("warped", w), ("generic", g)):
        arr = tab.as_array()
        entries = [f"Gamma^{k + 1}_{i + 1}{j + 1} = {_c(arr[k, i, j])}"
                   for k in range(m.n) for i in range(m.n) for j in range(i, m.n)
                   if arr[k, i, j] != 0]
        rep.add(name, entries)
    rep.add("max_relative_deviation", format_float(w.max_relative_deviation(g)))
    _emit(cfg, rep)
    return EXIT_OK


def _cmd_trace(cfg: RunConfig) -> int:
    m = load_metric(cfg.inputs["metric"])
    path = load_path(cfg.inputs["path"])
    s0 = _seed_state(m, cfg.options)
    if abs(path.start - s0.z) > 1e-12 * max(1.0, abs(s0.z)):
        raise InputError(f"path starts at {path.start}, seed is at {s0.z}")
    n_samples = cfg.options.get("samples")
    tr = trace_geodesic(m, s0, path, cfg.tol, n_samples=n_samples,
                        classify=not cfg.options.get("no_classify", False))
    status = str(tr.status)
    fmt = "json" if cfg.fmt == "json" else "csv"
    name = cfg.options.get("name") or "trace"
    target = os.path.join(cfg.outdir, f"{name}.{fmt}")
    writer = trace_json if fmt == "json" else trace_csv
    atomic_write(target, writer(tr, __version__, cfg.resolved(), status))
    print(f"status: {status}")
    print(f"wrote {target} ({len(tr.t)} samples)", file=sys.stderr)
    return EXIT_OK


def _cmd_monodromy(cfg: RunConfig) -> int:
    loop = load_path(cfg.inputs["loop"])
    system, y0 = _system_and_state(cfg)
    res = monodromy_probe(system, y0, loop, cfg.options.get("max_loops", 8), cfg.tol)
    rep = _Report(cfg)
    if isinstance(res, ReturnsAfter):
        rep.add("result", f"ReturnsAfter({res.loops})")
    else:
        rep.add("result", "NoReturn")
        rep.add("displacements", [_cs(d) for d in res.displacements])
        rep.add("stationary_displacement", str(displacement_is_stationary(res)))
    _emit(cfg, rep)
    return EXIT_OK


def _cmd_classify(cfg: RunConfig) -> int:
    approach = load_path(cfg.inputs["approach"])
    system, y0 = _system_and_state(cfg)
    center = parse_complex(cfg.options["center"])
    opts = ClassifyOptions(tol=cfg.tol)
    cls = classify_singularity(system, y0, center, approach, opts)
    rep = _Report(cfg)
    rep.add("center", _c(center))
    rep.add("class", str(cls))
    rep.add("monodromy", str(opts.diagnostics.get("monodromy")))
    if "pole_fit" in opts.diagnostics:
        order, resid, slope = opts.diagnostics["pole_fit"]
        rep.add("pole_fit", f"order {order} slope {format_float(slope)} rms {format_float(resid)}")
    _emit(cfg, rep)
    return EXIT_OK


def _cmd_coercive(cfg: RunConfig) -> int:
    spec = load_esempio(cfg.inputs["spec"])
    cert = check_esempio_coercive(spec)
    rep = _Report(cfg)
    rep.add("verdict", cert.verdict)
    rep.add("reasons", list(cert.reasons))
    _emit(cfg, rep)
    return EXIT_OK


def _cmd_probe(cfg: RunConfig) -> int:
    m = load_metric(cfg.inputs["metric"])
    s0 = _seed_state(m, cfg.options)
    o = cfg.options
    res = incompleteness_probe(m, [s0], o.get("rays", 32), o.get("radius", 50.0), cfg.tol,
                               budget=o.get("budget"))
    rep = _Report(cfg)
    rep.add("rays", f"{res.rays_done}/{res.rays_total}")
    rep.add("budget_exceeded", str(res.budget_exceeded))
    rep.add("stops", [str(w) for w in res.stops])
    rep.add("witnesses", [str(w) for w in res.witnesses])
    _emit(cfg, rep)
    return EXIT_WITNESS if res.witnesses else EXIT_OK


def _cmd_quadcheck(cfg: RunConfig) -> int:
    coef = parse_complex_list(cfg.inputs["coefficients"])
    if len(coef) != 3:
        raise InputError("quadcheck needs three coefficients a,b,c")
    try:
        qb = QuadBranch(*coef, base=parse_complex(cfg.options.get("base") or "0"))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rng = np.random.default_rng(cfg.seed)
    n = cfg.options.get("points", 100)
    radius = cfg.options.get("radius", 5.0)
    worst, used, skipped = 0.0, 0, 0
    while used < n and skipped < 100 * n:
        eta = qb.base + complex(*rng.uniform(-radius, radius, 2))
        if any(abs(eta - r) < 1e-3 for r in qb.zeros()):
            skipped += 1
            continue
        try:
            worst = max(worst, check_derivative(qb, eta))
            used += 1
        except BranchCutCrossing:
            skipped += 1
    rep = _Report(cfg)
    rep.add("case", qb.case)
    rep.add("points", str(used))
    rep.add("skipped", str(skipped))
    rep.add("max_derivative_error", format_float(worst))
    _emit(cfg, rep)
    return EXIT_OK


COMMANDS = {
    "christoffel": _cmd_christoffel, "trace": _cmd_trace, "monodromy": _cmd_monodromy,
    "classify": _cmd_classify, "coercive": _cmd_coercive, "probe": _cmd_probe,
    "quadcheck": _cmd_quadcheck,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand; returns the process exit code."""
    try:
        config.validate()
        return COMMANDS[config.command](config)
    except (InputError, NotOrdinary) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ContinuationFailure, NewtonDivergence, Pole, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        return float("nan")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="merogeo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"merogeo {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help=f"integration tolerance (default {DEFAULT_TOL}, env {TOL_ENV})")
    common.add_argument("--format", dest="fmt", choices=["csv", "json", "text"], default=None)
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--u0", help="initial point, comma separated complex literals")
    seeded.add_argument("--udot0", help="initial velocity, comma separated")
    seeded.add_argument("--z0", default=None, help="base point of the seed (default 0)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("christoffel", parents=[common], help="compare the two Christoffel tables")
    s.add_argument("metric")
    s.add_argument("--at", required=True)

    s = sub.add_parser("trace", parents=[common, seeded], help="trace a geodesic along a path")
    s.add_argument("metric")
    s.add_argument("path")
    s.add_argument("--outdir", default=".")
    s.add_argument("--name", default="trace", help="output file stem")
    s.add_argument("--samples", type=int, default=None, help="uniform samples in the path parameter")
    s.add_argument("--no-classify", action="store_true")

    for name, pos, hlp in (("monodromy", "loop", "continue around a closed loop"),
                           ("classify", "approach", "classify the singularity at the end of a path")):
        s = sub.add_parser(name, parents=[common, seeded], help=hlp)
        s.add_argument("system", help="metric file or scalar ODE file")
        s.add_argument(pos)
        s.add_argument("--y0", help="initial value for an ODE file")
        if name == "monodromy":
            s.add_argument("--max-loops", type=int, default=8)
        else:
            s.add_argument("--center", required=True)

    s = sub.add_parser("coercive", parents=[common], help="certify an example-class metric")
    s.add_argument("spec")

    s = sub.add_parser("probe", parents=[common, seeded], help="search for incompleteness witnesses")
    s.add_argument("metric")
    s.add_argument("--rays", type=int, default=32)
    s.add_argument("--radius", type=float, default=50.0)
    s.add_argument("--budget", type=float, default=None, help="wall-clock limit in seconds")

    s = sub.add_parser("quadcheck", parents=[common], help="derivative self-test of the quadrature table")
    s.add_argument("coefficients", help="a,b,c")
    s.add_argument("--points", type=int, default=100)
    s.add_argument("--base", default=None)
    return p


_INPUTS = {
    "christoffel": ["metric"], "trace": ["metric", "path"], "monodromy": ["system", "loop"],
    "classify": ["system", "approach"], "coercive": ["spec"], "probe": ["metric"],
    "quadcheck": ["coefficients"],
}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    cmd = d.pop("command")
    inputs = {k: d.pop(k) for k in _INPUTS[cmd]}
    tol = d.pop("tol")
    fmt = d.pop("fmt")
    seed = d.pop("seed")
    outdir = d.pop("outdir", ".")
    options = {k.replace("-", "_"): v for k, v in d.items()}
    return RunConfig(cmd, inputs, _default_tol() if tol is None else tol, outdir,
                     fmt or ("csv" if cmd == "trace" else "text"), seed, options)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
