"""Snapshots, run configuration and CSV reports.

Snapshot layout (all little-endian)::

    8s   magic  b"HMHDSNAP"
    u4   format version
    u4   dim
    u4   n
    f8   t
    16s  system tag, NUL padded
    5*f8 nu, eta, eta_h, eta_v, epsilon
    c16  u coefficients, shape (3, n, ..., n), numpy FFT ordering
    c16  b coefficients, same shape
"""

from __future__ import annotations

import configparser
import csv
import math
import os
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import CriterionSpec, DiagnosticsRecord
from .fields import VectorField, random_solenoidal
from .mhd import SYSTEM_ALIASES, State, SystemSpec
from .spectral import Grid
from .timestepper import StepperConfig

__all__ = [
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "TIMESERIES_VERSION",
    "SnapshotError",
    "ConfigError",
    "RunConfig",
    "write_snapshot",
    "read_snapshot",
    "load_config",
    "parse_config",
    "initial_state",
    "format_float",
    "write_csv",
    "timeseries_rows",
]

SNAPSHOT_MAGIC = b"HMHDSNAP"
SNAPSHOT_VERSION = 1
TIMESERIES_VERSION = 1
_HEADER = struct.Struct("<8sIIId16s5d")
_COMPLEX = np.dtype("<c16")


class SnapshotError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# snapshots


def write_snapshot(path, state: State, spec: SystemSpec) -> None:
    g = state.grid
    header = _HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        g.dim,
        g.n,
        float(state.t),
        spec.system.encode("ascii").ljust(16, b"\0"),
        spec.nu,
        spec.eta,
        spec.eta_h,
        spec.eta_v,
        spec.epsilon,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.u.coeffs, dtype=_COMPLEX).tobytes())
        fh.write(np.ascontiguousarray(state.b.coeffs, dtype=_COMPLEX).tobytes())


def read_snapshot(path) -> tuple[State, SystemSpec]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, dim, n, t, tag, nu, eta, eta_h, eta_v, eps = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    try:
        grid = Grid(dim, n)
    except ValueError as exc:
        raise SnapshotError(f"{path}: bad grid in header: {exc}") from None
    count = 3 * n**dim
    expected = _HEADER.size + 2 * count * _COMPLEX.itemsize
    if len(data) != expected:
        raise SnapshotError(f"{path}: size {len(data)} bytes, expected {expected}")
    payload = np.frombuffer(data, dtype=_COMPLEX, offset=_HEADER.size)
    shape = (3,) + grid.shape
    uc = payload[:count].reshape(shape).astype(complex)
    bc = payload[count:].reshape(shape).astype(complex)
    try:
        spec = SystemSpec(tag.rstrip(b"\0").decode("ascii", "replace"), nu, eta, eta_h, eta_v, eps)
    except ValueError as exc:
        raise SnapshotError(f"{path}: bad system block: {exc}") from None
    return State.from_arrays(grid, uc, bc, t), spec


# ---------------------------------------------------------------------------
# configuration

_SCHEMA = {
    "system": {"name", "nu", "eta", "eta_h", "eta_v", "epsilon"},
    "grid": {"dim", "n"},
    "initial": {"kind", "seed", "band_limit", "amplitude_u", "amplitude_b", "norm", "profile", "path"},
    "stepper": {"dt", "cfl", "t_end", "adapt", "max_steps", "blowup_guard"},
    "diagnostics": {"criteria", "m", "cadence"},
    "output": {"directory"},
}
_REQUIRED = {("system", "name"), ("grid", "n"), ("stepper", "dt"), ("stepper", "t_end")}
OUTPUT_ENV = "HALLMHD_OUTPUT_DIR"
PROFILES = ("zero", "orszag_tang", "abc")


@dataclass(frozen=True)
class RunConfig:
    spec: SystemSpec
    grid: Grid
    initial: dict
    stepper: StepperConfig
    criteria: tuple = ()
    m: int = 3
    cadence: int = 1
    output: Path = Path("output")
    source: str = "<config>"


def _line_index(text: str) -> dict:
    """Map (section, key) and (section, None) to 1-based line numbers."""
    index = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), no)
    return index


def parse_config(text: str, source: str = "<config>", env=None) -> RunConfig:
    """Validate a run configuration; every error names its file and line."""
    env = os.environ if env is None else env
    lines = _line_index(text)

    def fail(msg, section=None, key=None):
        no = lines.get((section, key)) or lines.get((section, None)) or 1
        where = f"[{section}] {key}: " if key else (f"[{section}]: " if section else "")
        raise ConfigError(f"{source}:{no}: {where}{msg}")

    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        no = getattr(exc, "lineno", 1)
        raise ConfigError(f"{source}:{no}: {exc.message if hasattr(exc, 'message') else exc}") from None

    for sec in cp.sections():
        if sec not in _SCHEMA:
            fail(f"unknown section (expected one of {', '.join(_SCHEMA)})", sec)
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                fail("unknown key", sec, key)
    for sec, key in sorted(_REQUIRED):
        if not cp.has_option(sec, key):
            raise ConfigError(f"{source}:{lines.get((sec, None), 1)}: [{sec}] {key}: required")

    def get(sec, key, conv, default=None):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except ValueError:
            fail(f"cannot parse {raw!r}", sec, key)

    def boolean(raw):
        val = raw.strip().lower()
        if val in ("1", "true", "yes", "on"):
            return True
        if val in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)

    name = get("system", "name", str.strip)
    if name not in SYSTEM_ALIASES:
        fail(f"unknown system {name!r}", "system", "name")
    tag = SYSTEM_ALIASES[name]
    params = {k: get("system", k, float) for k in ("nu", "eta", "eta_h", "eta_v", "epsilon")}
    if tag in ("C", "D"):
        for k in ("eta_h", "eta_v"):
            if params[k] is None:
                fail(f"{k} is required for system {tag}", "system")
        if params["eta"] is not None:
            fail(f"eta does not apply to system {tag}; use eta_h and eta_v", "system", "eta")
    else:
        for k in ("eta_h", "eta_v"):
            if params[k] is not None:
                fail(f"{k} applies only to systems C and D", "system", k)
    try:
        spec = SystemSpec(tag, **{k: v for k, v in params.items() if v is not None})
    except ValueError as exc:
        fail(str(exc), "system")

    n = get("grid", "n", int)
    dim = get("grid", "dim", int, spec.dim)
    if dim != spec.dim:
        fail(f"system {tag} lives on a {spec.dim}-D grid", "grid", "dim")
    try:
        grid = Grid(dim, n)
    except ValueError as exc:
        fail(str(exc), "grid", "n")

    initial = {"kind": get("initial", "kind", str.strip, "random")}
    kind = initial["kind"]
    if kind == "random":
        initial["seed"] = get("initial", "seed", int, 0)
        K = get("initial", "band_limit", int, max(1, grid.n // 16))
        if not (1 <= K and 3 * K < grid.n):
            fail(f"band limit must satisfy 1 <= K and 3K < n={grid.n}", "initial", "band_limit")
        initial["band_limit"] = K
        initial["norm"] = get("initial", "norm", str.strip, "l2")
        if initial["norm"] not in ("l2", "h1"):
            fail("norm must be l2 or h1", "initial", "norm")
        for key in ("amplitude_u", "amplitude_b"):
            val = get("initial", key, float, 1.0)
            if not val >= 0:
                fail("must be >= 0", "initial", key)
            initial[key] = val
    elif kind == "profile":
        prof = get("initial", "profile", str.strip)
        if prof not in PROFILES:
            fail(f"profile must be one of {', '.join(PROFILES)}", "initial", "profile")
        if prof == "orszag_tang" and dim != 2:
            fail("orszag_tang is a 2.5-D profile", "initial", "profile")
        if prof == "abc" and dim != 3:
            fail("abc is a 3-D profile", "initial", "profile")
        initial["profile"] = prof
    elif kind == "snapshot":
        path = get("initial", "path", str.strip)
        if not path:
            fail("path is required for snapshot initial data", "initial", "kind")
        path = Path(path)
        if not path.is_absolute():
            path = Path(source).parent / path
        if not path.is_file():
            fail(f"snapshot {path} not found", "initial", "path")
        initial["path"] = path
    else:
        fail("kind must be random, profile or snapshot", "initial", "kind")

    sk = dict(
        dt=get("stepper", "dt", float),
        cfl=get("stepper", "cfl", float, 0.4),
        t_end=get("stepper", "t_end", float),
        adapt=get("stepper", "adapt", boolean, False),
        max_steps=get("stepper", "max_steps", int, 1_000_000),
        blowup_guard=get("stepper", "blowup_guard", float, 1e8),
    )
    try:
        stepper = StepperConfig(**sk)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("max_steps", "t_end", "cfl", "dt") if msg.startswith(k)), None)
        fail(msg, "stepper", key)

    criteria = []
    raw = get("diagnostics", "criteria", str, "")
    for item in filter(None, (s.strip() for s in raw.split(","))):
        parts = item.split(":")
        try:
            if len(parts) not in (2, 3):
                raise ValueError("use quantity:p or quantity:p:r")
            p = math.inf if parts[1].strip().lower() in ("inf", "infinity") else float(parts[1])
            r = float(parts[2]) if len(parts) == 3 else None
            criteria.append(CriterionSpec(parts[0].strip(), p, r))
        except ValueError as exc:
            fail(f"{item!r}: {exc}", "diagnostics", "criteria")
    m = get("diagnostics", "m", int, 3)
    if m < 1:
        fail("m must be a positive integer", "diagnostics", "m")
    cadence = get("diagnostics", "cadence", int, 1)
    if cadence < 1:
        fail("cadence must be >= 1", "diagnostics", "cadence")

    out = env.get(OUTPUT_ENV) or get("output", "directory", str.strip, "output")
    out = Path(out)
    if not out.is_absolute():
        out = Path(source).parent / out if source != "<config>" else out
    return RunConfig(spec, grid, initial, stepper, tuple(criteria), m, cadence, out, source)


def load_config(path, env=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path), env)


def _profile(grid: Grid, name: str) -> tuple[VectorField, VectorField]:
    if name == "zero":
        return VectorField.zeros(grid, "u"), VectorField.zeros(grid, "b")
    if name == "orszag_tang":
        u = VectorField.from_functions(
            grid, [lambda x, y: -np.sin(y), lambda x, y: np.sin(x), lambda x, y: 0 * x], "u"
        )
        b = VectorField.from_functions(
            grid, [lambda x, y: -np.sin(y), lambda x, y: np.sin(2 * x), lambda x, y: 0 * x], "b"
        )
        return u.replace(solenoidal=True), b.replace(solenoidal=True)
    if name == "abc":
        fns = [
            lambda x, y, z: np.sin(z) + np.cos(y),
            lambda x, y, z: np.sin(x) + np.cos(z),
            lambda x, y, z: np.sin(y) + np.cos(x),
        ]
        u = VectorField.from_functions(grid, fns, "u").replace(solenoidal=True)
        return u, (0.5 * u).replace(kind="b")
    raise ValueError(f"unknown profile {name!r}")


def initial_state(cfg: RunConfig) -> tuple[State, SystemSpec]:
    """Build the initial state described by ``cfg``."""
    init = cfg.initial
    if init["kind"] == "snapshot":
        state, _ = read_snapshot(init["path"])
        if state.grid != cfg.grid:
            raise ConfigError(f"{cfg.source}: snapshot grid {state.grid} differs from [grid]")
        return state, cfg.spec
    if init["kind"] == "profile":
        u, b = _profile(cfg.grid, init["profile"])
        return State(u, b), cfg.spec
    K, seed = init["band_limit"], init["seed"]
    u = random_solenoidal(cfg.grid, K, [seed, 0], "u")
    b = random_solenoidal(cfg.grid, K, [seed, 1], "b")
    if init["norm"] == "h1":
        u = u * (1.0 / math.sqrt(1.0 + u.seminorm(1.0) ** 2))
        b = b * (1.0 / math.sqrt(1.0 + b.seminorm(1.0) ** 2))
    return State(u * init["amplitude_u"], b * init["amplitude_b"]), cfg.spec


# ---------------------------------------------------------------------------
# CSV


def format_float(x: float) -> str:
    """17 significant digits in scientific notation."""
    return "%.16e" % x


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def write_csv(fh, header: list, rows, comment: str | None = None) -> None:
    if comment is not None:
        fh.write(f"# {comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])


def timeseries_rows(records: list[DiagnosticsRecord]) -> tuple[list, list]:
    """Header and rows of the time-series report."""
    if not records:
        return ["t"], []
    first = records[0]
    crit = list(first.criterion_samples)
    zk = list(first.z_norms)
    lk = list(first.linf_proxies)
    header = (
        ["t", "l2_u", "l2_b", "h1_u", "h1_b", f"hm_u_m{first.m}", f"hm_b_m{first.m}",
         "dissipation_rate", "dissipated", "energy_defect"]
        + [f"z_{k}" for k in zk]
        + lk
        + [f"{c}_sample" for c in crit]
        + [f"{c}_integral" for c in crit]
        + ["status"]
    )
    rows = []
    for r in records:
        rows.append(
            [r.t, r.l2_u, r.l2_b, r.h1_u, r.h1_b, r.hm_u, r.hm_b,
             r.dissipation_rate, r.dissipated, r.energy_defect]
            + [r.z_norms[k] for k in zk]
            + [r.linf_proxies[k] for k in lk]
            + [r.criterion_samples[c] for c in crit]
            + [r.criterion_integrals[c] for c in crit]
            + [r.status]
        )
    return header, rows
