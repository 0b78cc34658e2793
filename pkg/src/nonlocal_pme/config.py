"""INI experiment configuration: parsing, validation, serialization and builders.

Every key has a type and a default; unknown sections or keys are rejected
with the line they appear on.  ``parse(serialize(cfg)) == cfg`` holds for
every valid configuration.
"""

from __future__ import annotations

import configparser
import copy
import re

import numpy as np

from .errors import ConfigError, NonlocalPMEError

# ---------------------------------------------------------------------------
# value codecs


def _float(text):
    return float(text)


def _opt_float(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else float(text)


def _int(text):
    return int(text)


def _str(text):
    return text.strip()


def _floats(text):
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    return tuple(float(x) for x in text.split(","))


def _matrix(text):
    """Rows separated by ``;``, entries by ``,``; ``none`` for no local part."""
    text = text.strip()
    if not text or text.lower() == "none":
        return None
    if text.lower() == "identity":
        return "identity"
    return tuple(tuple(float(x) for x in row.split(",")) for row in text.split(";"))


def _atoms(text):
    """``z1,...,zN : mass`` entries separated by ``;``."""
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    out = []
    for item in text.split(";"):
        z, m = item.split(":")
        out.append((tuple(float(x) for x in z.split(",")), float(m)))
    return tuple(out)


def _fmt_float(x):
    return "none" if x is None else repr(float(x))


def _fmt_floats(xs):
    return ", ".join(repr(float(x)) for x in xs) if xs else "none"


def _fmt_matrix(M):
    if M is None:
        return "none"
    if M == "identity":
        return "identity"
    return "; ".join(", ".join(repr(float(x)) for x in row) for row in M)


def _fmt_atoms(atoms):
    if not atoms:
        return "none"
    return "; ".join(", ".join(repr(float(x)) for x in z) + " : " + repr(float(m)) for z, m in atoms)


FLOAT = (_float, _fmt_float)
OPT_FLOAT = (_opt_float, _fmt_float)
INT = (_int, str)
STR = (_str, str)
FLOATS = (_floats, _fmt_floats)

SCHEMA = {
    "measure": {
        "type": (STR, "none", ("none", "fractional", "dirac", "tempered")),
        "order": (FLOAT, 1.0, None),
        "atoms": ((_atoms, _fmt_atoms), (), None),
        "rate": (FLOAT, 1.0, None),
        "truncate": (OPT_FLOAT, None, None),
        "inner_cell": (STR, "drop", ("drop", "moment")),
    },
    "local": {
        "sigma": ((_matrix, _fmt_matrix), "identity", None),
    },
    "nonlinearity": {
        "type": (STR, "power", ("power", "stefan", "linear", "table")),
        "m": (FLOAT, 2.0, None),
        "c1": (FLOAT, 1.0, None),
        "c2": (FLOAT, 1.0, None),
        "latent": (FLOAT, 1.0, None),
        "a": (FLOAT, 1.0, None),
        "breakpoints": (FLOATS, (), None),
        "values": (FLOATS, (), None),
        "mollify": (FLOAT, 0.0, None),
        "mollify_range": (FLOATS, (), None),
    },
    "grid": {
        "dim": (INT, 1, None),
        "h": (FLOAT, 10.0 / 256, None),
        "lo": (FLOATS, (-5.0,), None),
        "hi": (FLOATS, (5.0,), None),
        "boundary": (STR, "zero_extension", ("periodic", "zero_extension")),
    },
    "initial": {
        "profile": (STR, "bump", ("bump", "gaussian", "barenblatt", "box", "csv")),
        "amplitude": (FLOAT, 1.0, None),
        "width": (FLOAT, 1.0, None),
        "center": (FLOATS, (), None),
        "t0": (FLOAT, 0.1, None),
        "path": (STR, "", None),
    },
    "time": {
        "cfl": (OPT_FLOAT, 0.9, None),
        "dt": (OPT_FLOAT, None, None),
        "t_final": (FLOAT, 0.5, None),
        "snapshots": (FLOATS, (), None),
    },
    "truncation": {
        "r_cut": (FLOAT, 10.0, None),
        "tail_policy": (STR, "drop", ("drop", "absorb")),
    },
    "resolvent": {
        "epsilon": (FLOAT, 1.0, None),
        "tol": (FLOAT, 1e-10, None),
        "rhs": (STR, "initial", ("initial", "random")),
        "seed": (INT, 0, None),
    },
    "output": {
        "directory": (STR, "out", None),
    },
}


def defaults() -> dict:
    return {sec: {k: copy.deepcopy(entry[1]) for k, entry in keys.items()} for sec, keys in SCHEMA.items()}


def _line_index(text):
    """Map ``(section, key)`` and ``section`` to 1-based line numbers."""
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault(section, no)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
        if section is not None:
            lines.setdefault((section, key), no)
    return lines


def parse(text: str) -> dict:
    """Parse INI text into a fully populated configuration dictionary."""
    where = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line) from None
    cfg = defaults()
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", where.get(section))
        for key, raw in cp.items(section):
            line = where.get((section, key))
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]", line)
            (decode, _), _, choices = SCHEMA[section][key]
            try:
                value = decode(raw)
            except (ValueError, TypeError):
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}", line) from None
            if choices is not None and value not in choices:
                raise ConfigError(f"{section}.{key} must be one of {', '.join(choices)}", line)
            cfg[section][key] = value
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.line is None and exc.key is not None:
            raise ConfigError(exc.bare, where.get(exc.key, where.get(exc.key[0])), exc.key) from None
        raise
    return cfg


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def serialize(cfg: dict) -> str:
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key, ((_, encode), _, _) in keys.items():
            out.append(f"{key} = {encode(cfg[section][key])}")
        out.append("")
    return "\n".join(out)


def validate(cfg: dict):
    """Build every component once so constructor errors surface at parse time."""
    g = cfg["grid"]
    N = g["dim"]
    if N < 1:
        raise ConfigError("grid.dim must be at least 1", None, ("grid", "dim"))
    if len(g["lo"]) != N or len(g["hi"]) != N:
        raise ConfigError("grid.lo and grid.hi need one entry per dimension", None, ("grid", "lo"))
    if not g["h"] > 0:
        raise ConfigError("grid.h must be positive", None, ("grid", "h"))
    for a, b in zip(g["lo"], g["hi"]):
        if not b > a:
            raise ConfigError("grid.hi must exceed grid.lo", None, ("grid", "hi"))
    t = cfg["time"]
    if t["cfl"] is None and t["dt"] is None:
        raise ConfigError("give time.cfl or time.dt", None, ("time", "cfl"))
    for sec, builder in (("measure", build_measure), ("local", build_local_sigma),
                         ("nonlinearity", build_nonlinearity)):
        try:
            builder(cfg)
        except NonlocalPMEError as exc:
            raise ConfigError(f"[{sec}] {exc}", None, (sec,)) from None
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{sec}] {exc}", None, (sec,)) from None
    if cfg["truncation"]["r_cut"] < g["h"]:
        raise ConfigError("truncation.r_cut must be at least grid.h", None, ("truncation", "r_cut"))


# ---------------------------------------------------------------------------
# builders


def build_measure(cfg):
    from .levy_measure import DiracSum, FractionalLaplacian, Truncated, tempered_stable

    m = cfg["measure"]
    N = cfg["grid"]["dim"]
    kind = m["type"]
    if kind == "none":
        return None
    if kind == "fractional":
        mu = FractionalLaplacian(N, m["order"])
    elif kind == "tempered":
        mu = tempered_stable(N, m["order"], m["rate"])
    else:
        atoms = m["atoms"]
        if not atoms:
            raise ValueError("dirac measure needs atoms")
        if any(len(z) != N for z, _ in atoms):
            raise ValueError("atom offsets must have grid.dim components")
        mu = DiracSum([(np.array(z), w) for z, w in atoms])
    if m["truncate"] is not None:
        mu = Truncated(mu, m["truncate"])
    return mu


def build_local_sigma(cfg):
    from .discrete_operator import assemble_local

    s = cfg["local"]["sigma"]
    N = cfg["grid"]["dim"]
    if s is None:
        return None
    if s == "identity":
        return np.eye(N)
    M = np.array(s, dtype=float)
    if M.ndim != 2 or M.shape[0] != N:
        raise ValueError("local.sigma needs grid.dim rows")
    assemble_local(M, 1.0)      # rejects columns that are not grid-compatible
    return M


def build_nonlinearity(cfg, mollify_eta=None):
    from . import nonlinearity as nl

    p = cfg["nonlinearity"]
    kind = p["type"]
    if kind == "power":
        phi = nl.Power(p["m"])
    elif kind == "stefan":
        phi = nl.Stefan(p["c1"], p["c2"], p["latent"])
    elif kind == "linear":
        phi = nl.Linear(p["a"])
    else:
        phi = nl.MonotoneTable(np.array(p["breakpoints"]), np.array(p["values"]))
    eta = p["mollify"] if mollify_eta is None else mollify_eta
    if eta > 0:
        rng = p["mollify_range"] or (-1.0, 1.0)
        phi = nl.mollify(phi, eta, rng)
    return phi


def mollify_range(cfg, M):
    """Range used when a fast-diffusion nonlinearity is mollified automatically."""
    rng = cfg["nonlinearity"]["mollify_range"]
    return rng if rng else (-1.05 * M, 1.05 * M)
