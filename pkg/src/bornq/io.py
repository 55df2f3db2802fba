"""Run configuration, field import/export and plotting scripts.

Configuration files are INI files with the sections and keys listed in
``SCHEMA``; unknown sections or keys are rejected.  Any key can be
overridden from the environment as ``BORNQ_<SECTION>_<KEY>`` (upper case,
dashes as underscores).
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridField, GridSpec

MODES = ("electro-radial", "electro-grid", "magneto", "decompose", "verify")
FORMATS = ("csv", "vtk")
ENV_PREFIX = "BORNQ_"


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key path."""


def _onoff(text):
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "mode": (str, None),
        "q": (float, 1.5),
        "seed": (int, 0),
        "check": (_onoff, True),
        "out": (str, "out"),
        "threads": (int, 1),
    },
    "grid": {
        "n": (int, 48),
        "half_width": (float, 6.0),
        "tau_min": (float, 1e-4),
        "tau_max": (float, 100.0),
        "nodes": (int, 4000),
        "r_max": (float, 8.0),
        "z_max": (float, 8.0),
        "nr": (int, 129),
        "nz": (int, 257),
        "lift_n": (int, 33),
        "lift_half_width": (float, 2.0),
    },
    "source": {
        "kind": (str, "gaussian"),
        "total": (float, 1.0),
        "width": (float, 1.0),
        "file": (str, ""),
    },
    "field": {
        "kind": (str, "zero"),
        "amplitude": (float, 1.0),
        "decay": (float, 2.0),
        "file": (str, ""),
    },
    "current": {
        "kind": (str, "ring"),
        "amplitude": (float, 1.0),
        "r0": (float, 1.0),
        "z0": (float, 0.0),
        "width": (float, 0.25),
        "r_in": (float, 0.8),
        "r_out": (float, 1.2),
        "half_height": (float, 1.0),
        "file": (str, ""),
    },
    "solver": {
        "method": (str, "newton"),
        "stencil": (str, "forward"),
        "boundary": (str, "monopole"),
        "tol_E": (float, None),
        "tol_G": (float, 1e-6),
        "max_iter": (int, 200),
    },
    "checks": {
        "samples": (int, 100000),
        "tests": (int, 10),
        "tol_W": (float, 1e-3),
        "tol_V": (float, None),
        "tol_sym": (float, 2e-2),
    },
}


@dataclass
class RunConfig:
    """Validated configuration: ``values[section][key]`` for every schema key."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, path):
        section, key = path.split(".")
        return self.values[section][key]

    @property
    def mode(self):
        return self["run.mode"]

    def set(self, path, raw):
        section, key = _split_path(path)
        try:
            self.values[section][key] = None if raw is None else SCHEMA[section][key][0](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def echo(self):
        """Plain dict copy for the report."""
        return {s: dict(v) for s, v in self.values.items()}

    def validate(self):
        mode = self.mode
        if mode not in MODES:
            raise ConfigError(f"run.mode: expected one of {', '.join(MODES)}, got {mode!r}")
        q = self["run.q"]
        if mode in ("electro-radial", "electro-grid") and not 1.0 <= q < 2.0:
            raise ConfigError(f"run.q: electrostatic modes need 1 <= q < 2, got {q}")
        if mode == "magneto" and not 1.2 < q < 2.0:
            raise ConfigError(f"run.q: magnetostatic mode needs 6/5 < q < 2, got {q}")
        if mode in ("decompose", "verify") and not 1.0 <= q <= 2.0:
            raise ConfigError(f"run.q: need 1 <= q <= 2, got {q}")
        if self["run.threads"] < 1:
            raise ConfigError("run.threads: must be at least 1")
        return self


def _split_path(path):
    try:
        section, key = path.split(".")
    except ValueError:
        raise ConfigError(f"{path}: expected section.key") from None
    if section not in SCHEMA:
        raise ConfigError(f"{path}: unknown section {section!r}")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{path}: unknown key {key!r}")
    return section, key


def default_config(mode=None):
    cfg = RunConfig({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})
    cfg.values["run"]["mode"] = mode
    return cfg


def load_config(path=None, mode=None, overrides=None, environ=None):
    """Build a config from defaults, an INI file, the environment and explicit overrides
    (later sources win).  ``overrides`` maps ``"section.key"`` to raw strings."""
    cfg = default_config(mode)
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                cfg.set(f"{section}.{key}", raw)
    environ = os.environ if environ is None else environ
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if section not in SCHEMA:
            raise ConfigError(f"{name}: unknown section {section!r}")
        match = [k for k in SCHEMA[section] if k.lower() == key]
        if not match:
            raise ConfigError(f"{name}: unknown key {key!r} in section {section!r}")
        cfg.set(f"{section}.{match[0]}", raw)
    for path_, raw in (overrides or {}).items():
        cfg.set(path_, raw)
    if mode is not None:
        if cfg.mode not in (None, mode):
            raise ConfigError(f"run.mode: config says {cfg.mode!r} but subcommand is {mode!r}")
        cfg.values["run"]["mode"] = mode
    return cfg.validate()


# -- CSV ------------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def write_columns(path, header, columns, comments=()):
    """Write equal-length columns as CSV with full double precision."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = {len(c) for c in cols}
    if len(n) != 1:
        raise ValueError("columns must have equal length")
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return Path(path)


def read_columns(path):
    """Return ``(header, columns, comments)`` of a CSV written by :func:`write_columns`
    (or any comma-separated file with a header row)."""
    comments, header, rows = [], None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            else:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return header, [data[:, k] for k in range(len(header))], comments


def read_profile(path):
    """Two-column ``(tau, value)`` radial profile."""
    header, cols, _ = read_columns(path)
    if len(cols) != 2:
        raise ValueError(f"{path}: expected two columns, got {header}")
    return cols[0], cols[1]


RADIAL_COLUMNS = ("tau", "dphi", "phi", "flux", "slack")


def write_radial_csv(path, sol):
    return write_columns(path, RADIAL_COLUMNS, [sol.grid, sol.dphi, sol.phi, sol.flux, sol.slack])


def _grid_comment(spec):
    o = ",".join(_fmt(v) for v in spec.origin)
    d = ",".join(str(n) for n in spec.dims)
    return f"grid origin={o} h={_fmt(spec.h)} dims={d}"


def _parse_grid_comment(comments):
    for c in comments:
        if c.startswith("grid "):
            kv = dict(part.split("=") for part in c[5:].split())
            return GridSpec(tuple(float(v) for v in kv["origin"].split(",")), float(kv["h"]),
                            tuple(int(v) for v in kv["dims"].split(",")))
    raise ValueError("CSV lacks the '# grid ...' header line")


def write_field_csv(path, fld: GridField):
    """Columns ``x,y,z,value`` (or ``x,y,z,vx,vy,vz``), first index slowest."""
    pts = fld.spec.points().reshape(-1, 3)
    vals = fld.values.reshape(len(pts), -1)
    names = ["value"] if vals.shape[1] == 1 else ["vx", "vy", "vz"]
    return write_columns(path, ["x", "y", "z"] + names,
                         [pts[:, 0], pts[:, 1], pts[:, 2]] + [vals[:, k] for k in range(vals.shape[1])],
                         comments=[_grid_comment(fld.spec), f"name={fld.name}"])


def read_field_csv(path):
    header, cols, comments = read_columns(path)
    spec = _parse_grid_comment(comments)
    name = next((c[5:] for c in comments if c.startswith("name=")), "field")
    vals = np.stack(cols[3:], axis=-1)
    shape = spec.dims if vals.shape[1] == 1 else spec.dims + (3,)
    return GridField(spec, vals.reshape(shape), name)


# -- VTK structured points ------------------------------------------------------------------

def write_vtk(path, fld: GridField):
    """Legacy ASCII VTK ``STRUCTURED_POINTS`` file, x index fastest."""
    spec = fld.spec
    n = int(np.prod(spec.dims))
    name = fld.name.replace(" ", "_") or "field"
    lines = ["# vtk DataFile Version 3.0", name, "ASCII", "DATASET STRUCTURED_POINTS",
             "DIMENSIONS {} {} {}".format(*spec.dims),
             "ORIGIN " + " ".join(_fmt(v) for v in spec.origin),
             "SPACING " + " ".join([_fmt(spec.h)] * 3),
             f"POINT_DATA {n}"]
    if fld.is_vector:
        lines.append(f"VECTORS {name} double")
        flat = fld.values.transpose(2, 1, 0, 3).reshape(-1, 3)
        body = [" ".join(_fmt(v) for v in row) for row in flat]
    else:
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        body = [_fmt(v) for v in fld.values.transpose(2, 1, 0).ravel()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines + body) + "\n")
    return Path(path)


def read_vtk(path):
    with open(path) as fh:
        tokens = fh.read().split("\n")
    head, k = {}, 0
    while k < len(tokens):
        line = tokens[k].strip()
        k += 1
        word = line.split(" ")[0] if line else ""
        if word in ("DIMENSIONS", "ORIGIN", "SPACING"):
            head[word] = line.split()[1:]
        elif word in ("SCALARS", "VECTORS"):
            head["kind"], head["name"] = word, line.split()[1]
            if word == "SCALARS" and tokens[k].strip().startswith("LOOKUP_TABLE"):
                k += 1
            break
    dims = tuple(int(v) for v in head["DIMENSIONS"])
    sp = {float(v) for v in head["SPACING"]}
    if len(sp) != 1:
        raise ValueError(f"{path}: only uniform spacing is supported")
    spec = GridSpec(tuple(float(v) for v in head["ORIGIN"]), sp.pop(), dims)
    data = np.array(" ".join(tokens[k:]).split(), dtype=float)
    if head["kind"] == "VECTORS":
        vals = data.reshape(dims[2], dims[1], dims[0], 3).transpose(2, 1, 0, 3)
    else:
        vals = data.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0)
    return GridField(spec, vals, head["name"])


def export_field(fld: GridField, path, fmt=None):
    """Write a grid field as ``csv`` or ``vtk`` (default: from the file suffix)."""
    fmt = (fmt or Path(path).suffix.lstrip(".")).lower()
    if fmt == "csv":
        return write_field_csv(path, fld)
    if fmt == "vtk":
        return write_vtk(path, fld)
    raise ValueError(f"unsupported format {fmt!r}; supported: {', '.join(FORMATS)}")


def import_field(path):
    fmt = Path(path).suffix.lstrip(".").lower()
    if fmt == "csv":
        return read_field_csv(path)
    if fmt == "vtk":
        return read_vtk(path)
    raise ValueError(f"unsupported format {fmt!r}; supported: {', '.join(FORMATS)}")


def write_gnuplot(path, csv_name, xcol, ycols, logx=False, title=""):
    """Plotting script for a CSV written by :func:`write_columns` (nothing is rendered here)."""
    header, _, _ = read_columns(Path(path).parent / csv_name)
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             f"set title '{title}'", f"set xlabel '{xcol}'"]
    if logx:
        lines.append("set logscale x")
    ix = header.index(xcol) + 1
    plots = [f"'{csv_name}' using {ix}:{header.index(c) + 1} with lines" for c in ycols]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)
