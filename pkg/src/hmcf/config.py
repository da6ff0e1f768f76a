"""Experiment configuration: a strict ``key = value`` format.

Grammar (one statement per line)::

    # comment, also allowed after a value
    [section]          # one of: run, geometry, numerics, output (informational)
    key = value

Values are numbers, bare words, ``true``/``false`` or comma-separated lists.
Unknown keys, unknown sections and malformed lines are errors; every problem
in a file is collected before :class:`ConfigError` is raised.
"""
import math
import re
from dataclasses import dataclass, fields, replace

from hmcf.errors import ConfigError, ParseError, ValidationError

SECTIONS = {"run", "geometry", "numerics", "output"}
EXPERIMENTS = ("simulate", "oracle", "verify", "minkowski", "stability")
GEOMETRIES = ("circle", "ellipse", "sphere_band", "cylinder", "torus_band", "flat_band", "graph")
CONTEXTS = ("AnalyticSphere", "AnalyticCylinder", "SimulatedFlow")
PROFILES = ("sine", "height", "bump", "zero")


@dataclass(frozen=True)
class SimConfig:
    experiment: str = "simulate"
    geometry: str = "circle"
    n: int = 128
    n2: int = 0  # second axis; 0 picks a shape-dependent default
    r0: float = 1.0
    r1: float = 0.0
    c: float = 1.0
    a: float = 2.0
    b: float = 1.0
    alpha_max: float = math.pi / 4
    length: float = 2.0 * math.pi
    epsilon: float = 0.0
    eps_list: tuple = (0.02, 0.01, 0.005)
    profile: str = "sine"
    domain_dim: int = 1
    horizon: float = 2.0
    levels: tuple = (32, 64, 128)
    context: str = "AnalyticSphere"
    deturck: bool = False
    cfl_safety: float = 0.25
    det_floor: float = 1e-10
    h_max: float = 1e6
    ode_tol: float = 1e-10
    t_end: float = 2.0
    snapshot_every: int = 1
    output_dir: str = "out"
    precision: int = 17


def _in(lo, hi, lo_open=False, hi_open=False):
    def check(v):
        ok_lo = v > lo if lo_open else v >= lo
        ok_hi = v < hi if hi_open else v <= hi
        if not (ok_lo and ok_hi and math.isfinite(v)):
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            return f"must be in {lb}{lo:g}, {hi:g}{rb}, got {v!r}"
        return None
    return check


def _choice(options):
    return lambda v: None if v in options else f"must be one of {', '.join(options)}, got {v!r}"


def _each(check):
    def run(vs):
        if not vs:
            return "must not be empty"
        for v in vs:
            msg = check(v)
            if msg:
                return msg
        return None
    return run


def _finite(v):
    return None if math.isfinite(v) else f"must be finite, got {v!r}"


def _path(v):
    return None if v.strip() else "must be a non-empty path"


# key -> (kind, check)
SCHEMA = {
    "experiment": ("word", _choice(EXPERIMENTS)),
    "geometry": ("word", _choice(GEOMETRIES)),
    "n": ("int", _in(8, 4096)),
    "n2": ("int", lambda v: None if v == 0 or 8 <= v <= 4096 else f"must be 0 or in [8, 4096], got {v}"),
    "r0": ("float", _in(0.0, 1e6, lo_open=True)),
    "r1": ("float", _finite),
    "c": ("float", _in(0.0, 1e6, lo_open=True)),
    "a": ("float", _in(0.0, 1e6, lo_open=True)),
    "b": ("float", _in(0.0, 1e6, lo_open=True)),
    "alpha_max": ("float", _in(0.0, math.pi / 2, lo_open=True, hi_open=True)),
    "length": ("float", _in(0.0, 1e6, lo_open=True)),
    "epsilon": ("float", _in(0.0, 1.0, hi_open=True)),
    "eps_list": ("floats", _each(_in(0.0, 1.0, hi_open=True))),
    "profile": ("word", _choice(PROFILES)),
    "domain_dim": ("int", _in(1, 2)),
    "horizon": ("float", _in(0.0, 1e4, lo_open=True)),
    "levels": ("ints", _each(_in(8, 4096))),
    "context": ("word", _choice(CONTEXTS)),
    "deturck": ("bool", lambda v: None),
    "cfl_safety": ("float", _in(0.0, 0.9, lo_open=True)),
    "det_floor": ("float", _in(0.0, 1e-2, lo_open=True)),
    "h_max": ("float", _in(1.0, 1e300)),
    "ode_tol": ("float", _in(1e-14, 1e-3, lo_open=True, hi_open=True)),
    "t_end": ("float", _in(0.0, 1e6, lo_open=True)),
    "snapshot_every": ("int", _in(1, 10 ** 9)),
    "output_dir": ("str", _path),
    "precision": ("int", _in(1, 17)),
}
assert set(SCHEMA) == {f.name for f in fields(SimConfig)}

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\s*\[\s*([A-Za-z_]+)\s*\]\s*$")


def _convert(kind, raw):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ValueError("expected true or false")
        return low == "true"
    if kind == "floats":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if kind == "ints":
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if kind == "word":
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", raw):
            raise ValueError("expected a bare word")
        return raw
    return raw


def _strip_comment(line):
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def _assign(key, raw, problems, values, line=None, column=None):
    if key not in SCHEMA:
        problems.append(ParseError(f"unknown key {key!r}", line, column))
        return
    if key in values:
        problems.append(ParseError(f"duplicate key {key!r}", line, column))
        return
    kind, check = SCHEMA[key]
    try:
        value = _convert(kind, raw)
    except ValueError:
        problems.append(ValidationError(key, f"cannot read {raw!r} as {kind}"))
        return
    msg = check(value)
    if msg:
        problems.append(ValidationError(key, msg))
        return
    values[key] = value


def parse_config(text, overrides=()):
    """Validated :class:`SimConfig` from config text plus ``key=value`` overrides.

    Overrides replace file values; all problems are reported together.
    """
    problems, values = [], {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        if not body.strip():
            continue
        sec = _SECTION.match(body)
        if sec:
            if sec.group(1) not in SECTIONS:
                problems.append(ParseError(f"unknown section [{sec.group(1)}]", lineno,
                                           body.index("[") + 1))
            continue
        m = _LINE.match(body)
        if not m:
            col = len(body) - len(body.lstrip()) + 1
            problems.append(ParseError(f"expected 'key = value', got {body.strip()!r}", lineno, col))
            continue
        if not m.group(2):
            problems.append(ParseError(f"missing value for {m.group(1)!r}", lineno, m.end(1) + 1))
            continue
        _assign(m.group(1), m.group(2), problems, values, lineno, m.start(1) + 1)
    for item in overrides:
        key, sep, raw = item.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key or not raw:
            problems.append(ParseError(f"override must look like key=value, got {item!r}"))
            continue
        values.pop(key, None)
        _assign(key, raw, problems, values)
    if problems:
        raise ConfigError(problems)
    return replace(SimConfig(), **values)


def load_config(path=None, overrides=()):
    text = ""
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError([ParseError(f"cannot read config {path}: {exc.strerror}")]) from exc
    return parse_config(text, overrides)


def dump_config(cfg):
    """Canonical text form; parse_config(dump_config(c)) == c."""
    out = []
    for f in fields(SimConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, tuple):
            s = ", ".join(repr(x) for x in v)
        else:
            s = repr(v) if isinstance(v, float) else str(v)
        out.append(f"{f.name} = {s}")
    return "\n".join(out) + "\n"
