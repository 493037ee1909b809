"""Text formats for metrics, paths, scalar ODEs and example-class data; trace serialisation.

All input formats are line based; ``#`` starts a comment and blank lines are
ignored.

Metric file::

    N = 2
    domain.1 = disc        # plane (default) or disc
    b1 = 1
    a.2 = 1/(u^2+1)
    f.2 = 1

Path file, one leg per line, complex literals like ``1.5-2i``::

    seg 0 10
    arc 0 1 0 3.141592653589793      # center radius angle_from angle_to

Scalar ODE file, ``dy/dz = Y(y) * Z(z)``::

    rhs.y = 1/(2*y)
    rhs.z = 1

Example-class file (``P.k`` lists coefficients in increasing degree)::

    N = 2
    h = u
    f.2 = 1
    P.2 = 1, 0, 1
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import re
import tempfile

import numpy as np

from .coercivity import EsempioSpec
from .continuation import Arc, ODESystem, PathSpec, Segment
from .expr import ExprSyntaxError, evaluate, parse
from .metric import MetricSpec

__all__ = [
    "InputError", "parse_complex", "parse_complex_list", "read_key_values", "parse_metric",
    "parse_path", "parse_ode", "parse_esempio", "load_metric", "load_path", "load_ode",
    "load_esempio", "read_text", "detect_kind", "format_float", "trace_columns", "trace_rows",
    "trace_csv", "trace_json", "atomic_write",
]


class InputError(ValueError):
    """Malformed input file or argument; carries the line number when known."""

    def __init__(self, msg: str, line: int | None = None, source: str = ""):
        where = f"{source}:{line}: " if line is not None else (f"{source}: " if source else "")
        super().__init__(where + msg)
        self.line = line


_BARE_I = re.compile(r"(?<![0-9.eE])i")


def parse_complex(text: str) -> complex:
    """``'1.5-2i'``, ``'3'``, ``'-i'``, ``'2e-3+1e2i'`` to a complex number."""
    s = text.strip().replace(" ", "")
    if not s:
        raise InputError("empty complex literal")
    s = _BARE_I.sub("1i", s).replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise InputError(f"bad complex literal {text!r}") from None


def parse_complex_list(text: str) -> list:
    return [parse_complex(p) for p in text.split(",")]


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def read_key_values(text: str, source: str = "") -> dict:
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if "=" not in line:
            raise InputError("expected 'key = value'", no, source)
        key, val = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise InputError(f"duplicate key {key!r}", no, source)
        out[key] = (val, no)
    return out


def _expr(kv, key, source, var="u"):
    if key not in kv:
        raise InputError(f"missing key {key!r}", None, source)
    val, no = kv[key]
    try:
        return parse(val, var)
    except ExprSyntaxError as exc:
        raise InputError(f"{key}: {exc}", no, source) from None


def _int(kv, key, source):
    if key not in kv:
        raise InputError(f"missing key {key!r}", None, source)
    val, no = kv[key]
    try:
        return int(val)
    except ValueError:
        raise InputError(f"{key} must be an integer", no, source) from None


def _check_keys(kv, allowed, source):
    for key, (_, no) in kv.items():
        if key not in allowed:
            raise InputError(f"unknown key {key!r}", no, source)


def parse_metric(text: str, source: str = "") -> MetricSpec:
    kv = read_key_values(text, source)
    n = _int(kv, "N", source)
    if n < 2:
        raise InputError("N must be at least 2", kv["N"][1], source)
    allowed = {"N", "b1"} | {f"domain.{i}" for i in range(1, n + 1)} \
        | {f"a.{k}" for k in range(2, n + 1)} | {f"f.{k}" for k in range(2, n + 1)}
    _check_keys(kv, allowed, source)
    domains = []
    for i in range(1, n + 1):
        val, no = kv.get(f"domain.{i}", ("plane", None))
        if val not in ("plane", "disc"):
            raise InputError(f"domain.{i} must be 'plane' or 'disc'", no, source)
        domains.append(val)
    b1 = _expr(kv, "b1", source)
    a = [_expr(kv, f"a.{k}", source) for k in range(2, n + 1)]
    f = [_expr(kv, f"f.{k}", source) for k in range(2, n + 1)]
    try:
        return MetricSpec(n, b1, a, f, tuple(domains))
    except ValueError as exc:
        raise InputError(str(exc), None, source) from None


def parse_path(text: str, source: str = "") -> PathSpec:
    legs = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "seg" and len(parts) == 3:
                legs.append(Segment(parse_complex(parts[1]), parse_complex(parts[2])))
            elif parts[0] == "arc" and len(parts) == 5:
                legs.append(Arc(parse_complex(parts[1]), float(parts[2]),
                                float(parts[3]), float(parts[4])))
            else:
                raise InputError("expected 'seg z1 z2' or 'arc c r th1 th2'", no, source)
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(str(exc), no, source) from None
    if not legs:
        raise InputError("path has no legs", None, source)
    try:
        return PathSpec(legs)
    except ValueError as exc:
        raise InputError(str(exc), None, source) from None


def parse_ode(text: str, source: str = "") -> ODESystem:
    """Scalar separable equation ``dy/dz = Y(y) Z(z)``."""
    kv = read_key_values(text, source)
    _check_keys(kv, {"rhs.y", "rhs.z"}, source)
    ey = _expr(kv, "rhs.y", source, "y")
    ez = _expr(kv, "rhs.z", source, "z") if "rhs.z" in kv else parse("1", "z")

    def rhs(y, z):
        return np.array([evaluate(ey, complex(y[0])) * evaluate(ez, complex(z))])

    return ODESystem(1, rhs, source or "ode")


def parse_esempio(text: str, source: str = "") -> EsempioSpec:
    kv = read_key_values(text, source)
    n = _int(kv, "N", source)
    if n < 2:
        raise InputError("N must be at least 2", kv["N"][1], source)
    allowed = {"N", "h"} | {f"f.{k}" for k in range(2, n + 1)} | {f"P.{k}" for k in range(2, n + 1)}
    _check_keys(kv, allowed, source)
    h = _expr(kv, "h", source)
    f = [_expr(kv, f"f.{k}", source) for k in range(2, n + 1)]
    P = []
    for k in range(2, n + 1):
        if f"P.{k}" not in kv:
            raise InputError(f"missing key 'P.{k}'", None, source)
        val, no = kv[f"P.{k}"]
        try:
            P.append(parse_complex_list(val))
        except InputError as exc:
            raise InputError(f"P.{k}: {exc}", no, source) from None
    return EsempioSpec(n, h, f, P)


def detect_kind(text: str) -> str:
    """``'metric'`` or ``'ode'`` from the keys present."""
    keys = {k for k in read_key_values(text)}
    if "rhs.y" in keys:
        return "ode"
    if "b1" in keys:
        return "metric"
    raise InputError("cannot tell a metric file from an ODE file (need 'b1' or 'rhs.y')")


def read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def load_metric(path: str) -> MetricSpec:
    return parse_metric(read_text(path), path)


def load_path(path: str) -> PathSpec:
    return parse_path(read_text(path), path)


def load_ode(path: str) -> ODESystem:
    return parse_ode(read_text(path), path)


def load_esempio(path: str) -> EsempioSpec:
    return parse_esempio(read_text(path), path)


# ---------------------------------------------------------------------------
# Output

def format_float(x: float) -> str:
    """17 significant digits: exact round trip for binary64."""
    return format(float(x), ".17g")


def trace_columns(n: int) -> list:
    cols = ["t", "re_z", "im_z"]
    for k in range(1, n + 1):
        cols += [f"re_u{k}", f"im_u{k}", f"re_udot{k}", f"im_udot{k}"]
    cols += [f"residual_{k}" for k in range(1, n + 1)]
    return cols + ["re_speed", "im_speed"]


def trace_rows(trace):
    n = trace.u.shape[1]
    for i in range(len(trace.t)):
        row = [trace.t[i], trace.z[i].real, trace.z[i].imag]
        for k in range(n):
            row += [trace.u[i, k].real, trace.u[i, k].imag,
                    trace.udot[i, k].real, trace.udot[i, k].imag]
        row += list(trace.residuals[i])
        row += [trace.speed[i].real, trace.speed[i].imag]
        yield row


def _header_lines(version: str, config: dict) -> list:
    return [f"# merogeo {version}",
            "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":"))]


def trace_csv(trace, version: str, config: dict, status: str) -> str:
    buf = _io.StringIO()
    for line in _header_lines(version, config):
        buf.write(line + "\n")
    buf.write(f"# status: {status}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_columns(trace.u.shape[1]))
    for row in trace_rows(trace):
        w.writerow([format_float(x) for x in row])
    return buf.getvalue()


def trace_json(trace, version: str, config: dict, status: str) -> str:
    cols = trace_columns(trace.u.shape[1])
    data = {c: [] for c in cols}
    for row in trace_rows(trace):
        for c, x in zip(cols, row):
            data[c].append(_json_float(x))
    doc = {"version": version, "config": config, "status": status,
           "columns": cols, "data": data}
    return _dumps(doc)


def _json_float(x):
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        return str(x)
    return float(format_float(x))


def _dumps(doc) -> str:
    # repr of a float is the shortest exact round-trip form
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def atomic_write(path: str, content: str) -> None:
    """Write ``content`` to ``path`` through a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
