"""Configuration-driven runs: single solves, resolvent solves and parameter studies.

Distances in ``C([0,T]; L¹)`` are approximated by the maximum over stored
snapshot times of the discrete L¹ norm over the computational box.  Runs that
are compared with each other share one time step so their snapshots align.
"""

from __future__ import annotations

import copy
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from . import io
from .barenblatt import barenblatt, support_radius
from .discrete_operator import (GridFunction, StencilWeights, assemble_local, assemble_nonlocal)
from .errors import DomainError
from .evolution import (FAIL, INFO, PASS, EvolutionConfig, RunReport, Verdict, cfl_dt, evolve,
                        plan_steps)
from .levy_measure import FractionalLaplacian
from .nonlinearity import lipschitz_on, mollify
from .resolvent import residual_bound, solve_resolvent

log = logging.getLogger(__name__)

#: mollification radius used when a fast-diffusion exponent is met without one
AUTO_MOLLIFY = 0.01
#: snapshot count used by studies when the config lists none
STUDY_SNAPSHOTS = 10


@dataclass
class StudyResult:
    header: list
    rows: list
    verdicts: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    def passed(self):
        return all(v.passed for v in self.verdicts)


# ---------------------------------------------------------------------------
# building blocks


def initial_data(cfg, h=None) -> GridFunction:
    g, p = cfg["grid"], cfg["initial"]
    h = g["h"] if h is None else h
    N = g["dim"]
    c = np.array(p["center"] if p["center"] else (0.0,) * N)
    amp, width = p["amplitude"], p["width"]
    kind = p["profile"]
    if kind == "csv":
        u = io.read_grid_function(p["path"], boundary=g["boundary"])
        if not np.isclose(u.h, h, rtol=1e-9):
            raise DomainError("initial CSV spacing differs from grid.h")
        return u

    def f(pts):
        y = pts - c[None, :]
        r2 = np.sum(y ** 2, axis=1)
        if kind == "bump":
            return amp * np.maximum(1.0 - r2 / width ** 2, 0.0)
        if kind == "gaussian":
            return amp * np.exp(-r2 / (2 * width ** 2))
        if kind == "box":
            return amp * (np.max(np.abs(y), axis=1) < width).astype(float)
        if N != 1:
            raise DomainError("Barenblatt initial data is one-dimensional")
        return barenblatt(_power_exponent(cfg), p["t0"], y[:, 0], mass=amp)

    return GridFunction.on_box(f, h, g["lo"], g["hi"], g["boundary"])


def _power_exponent(cfg):
    nl = cfg["nonlinearity"]
    if nl["type"] != "power":
        raise DomainError("Barenblatt initial data needs a power nonlinearity")
    return nl["m"]


def build_weights(cfg, h=None, measure="config", sigma="config") -> StencilWeights:
    h = cfg["grid"]["h"] if h is None else h
    N = cfg["grid"]["dim"]
    tr = cfg["truncation"]
    w = StencilWeights.empty(h, N, tr["tail_policy"])
    sig = cfgmod.build_local_sigma(cfg) if sigma == "config" else sigma
    if sig is not None:
        w = w + assemble_local(sig, h)
    mu = cfgmod.build_measure(cfg) if measure == "config" else measure
    if mu is not None:
        w = w + assemble_nonlocal(mu, h, tr["r_cut"], tr["tail_policy"], cfg["measure"]["inner_cell"])
    return w


def build_phi(cfg, M, m=None):
    """Nonlinearity from the config; fast-diffusion powers are mollified automatically."""
    c = copy.deepcopy(cfg)
    if m is not None:
        c["nonlinearity"]["type"] = "power"
        c["nonlinearity"]["m"] = m
    phi = cfgmod.build_nonlinearity(c, mollify_eta=0.0)
    eta = c["nonlinearity"]["mollify"]
    if eta == 0 and math.isinf(lipschitz_on(phi, max(M, 1e-300))):
        eta = AUTO_MOLLIFY
    if eta > 0:
        phi = mollify(phi, eta, cfgmod.mollify_range(c, M))
    return phi


def evolution_config(cfg, dt=None, snapshots=None) -> EvolutionConfig:
    t = cfg["time"]
    snaps = tuple(t["snapshots"]) if snapshots is None else snapshots
    if dt is not None:
        return EvolutionConfig(t["t_final"], cfl=None, dt=dt, snapshots=snaps)
    return EvolutionConfig(t["t_final"], cfl=t["cfl"], dt=t["dt"], snapshots=snaps)


def study_snapshots(cfg):
    t = cfg["time"]
    if t["snapshots"]:
        return tuple(t["snapshots"])
    return tuple(t["t_final"] * k / STUDY_SNAPSHOTS for k in range(1, STUDY_SNAPSHOTS + 1))


def common_dt(cfg, problems):
    """One step size admissible for every ``(u0, weights, phi)`` in ``problems``."""
    t = cfg["time"]
    bound = min(cfl_dt(w, phi, u0.linf()) for u0, w, phi in problems)
    if t["dt"] is not None:
        if t["dt"] > bound:
            plan_steps(t["t_final"], bound, dt=t["dt"])    # raises the CFL error
        return t["dt"]
    dt, _ = plan_steps(t["t_final"], bound, cfl=t["cfl"])
    return dt


def snapshot_distance(a: RunReport, b: RunReport) -> float:
    """``max_t h^N Σ|a(t) - b(t)|`` over common snapshot steps."""
    steps = sorted(set(a.snapshots) & set(b.snapshots))
    vol = a.snapshots[steps[0]].cell_volume
    return max(vol * float(np.abs(a.snapshots[k].values - b.snapshots[k].values).sum()) for k in steps)


def _strictly_decreasing(name, values, detail=""):
    bad = [i + 1 for i, (x, y) in enumerate(zip(values, values[1:])) if not y < x]
    if len(values) < 2:
        return Verdict(name, INFO, "single entry, nothing to compare")
    if bad:
        return Verdict(name, FAIL, f"not decreasing at row {bad[0] + 1}: {values}")
    return Verdict(name, PASS, detail or ", ".join(f"{v:.6g}" for v in values))


def _output_dir(cfg, out_dir=None):
    d = out_dir or cfg["output"]["directory"]
    os.makedirs(d, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# single runs


def run_solve(cfg, out_dir=None, write=True) -> RunReport:
    u0 = initial_data(cfg)
    w = build_weights(cfg)
    phi = build_phi(cfg, u0.linf())
    rep = evolve(u0, w, phi, evolution_config(cfg))
    rep.verdicts.append(_support_verdict(rep))
    if write:
        d = _output_dir(cfg, out_dir)
        io.write_diagnostics(os.path.join(d, "diagnostics.csv"), rep)
        io.write_snapshots(d, rep)
        io.write_verdicts(os.path.join(d, "verdicts.txt"), rep.verdicts)
    return rep


def _support_verdict(rep):
    u = rep.final
    pts = u.points()
    nz = np.abs(u.values.ravel()) > 1e-12 * max(rep.linf[0], 1e-300)
    radius = float(np.max(np.linalg.norm(pts[nz], axis=1))) if nz.any() else 0.0
    return Verdict("support radius", INFO, f"{radius:.6g} at t = {rep.times[-1]:.6g}")


def run_resolvent(cfg, out_dir=None, write=True):
    r = cfg["resolvent"]
    if r["rhs"] == "random":
        rng = np.random.default_rng(r["seed"])
        tmpl = initial_data(cfg)
        g = tmpl.with_values(rng.standard_normal(tmpl.shape))
    else:
        g = initial_data(cfg)
    w = build_weights(cfg)
    res = solve_resolvent(g, w, r["epsilon"], r["tol"])
    eps = r["epsilon"]
    vol = g.cell_volume
    vals = res.v.values
    verdicts = [
        Verdict("residual bound", PASS if res.residual <= residual_bound(eps, res.q, r["tol"]) else FAIL,
                f"residual {res.residual:.3e}"),
        Verdict("iteration bound", PASS if res.iterations <= res.predicted else FAIL,
                f"{res.iterations} <= {res.predicted}"),
        Verdict("sup bound", PASS if eps * np.abs(vals).max() <= np.abs(g.values).max() * (1 + 1e-12) + eps * r["tol"]
                else FAIL, "ε‖v‖∞ <= ‖g‖∞"),
        Verdict("L1 bound", PASS if eps * vol * np.abs(vals).sum() <= vol * np.abs(g.values).sum() * (1 + 1e-12)
                + eps * r["tol"] * vals.size * vol else FAIL, "ε‖v‖₁ <= ‖g‖₁"),
    ]
    if write:
        d = _output_dir(cfg, out_dir)
        io.write_grid_function(os.path.join(d, "rhs.csv"), g)
        io.write_grid_function(os.path.join(d, "solution.csv"), res.v)
        io.write_verdicts(os.path.join(d, "verdicts.txt"), verdicts)
    return res, verdicts


# ---------------------------------------------------------------------------
# studies


def _write_study(cfg, out_dir, result):
    d = _output_dir(cfg, out_dir)
    io.write_table(os.path.join(d, "table.csv"), result.header, result.rows)
    io.write_verdicts(os.path.join(d, "verdicts.txt"), result.verdicts)


def _barenblatt_reference(cfg):
    return (cfg["initial"]["profile"] == "barenblatt" and cfg["measure"]["type"] == "none"
            and cfg["grid"]["dim"] == 1 and cfgmod.build_local_sigma(cfg) is not None
            and np.allclose(cfgmod.build_local_sigma(cfg), 1.0)
            and cfg["nonlinearity"]["type"] == "power" and cfg["nonlinearity"]["m"] > 1)


def _check_levels(cfg, levels):
    if len(levels) < 3:
        raise DomainError("a refinement study needs at least three grid levels")
    coarse = max(levels)
    for h in levels:
        ratio = coarse / h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise DomainError(f"level h={h} does not refine the coarsest level h={coarse}")
        for x in cfg["grid"]["lo"] + cfg["grid"]["hi"]:
            if abs(x / coarse - round(x / coarse)) > 1e-9 * max(1.0, abs(x / coarse)):
                raise DomainError(f"box edge {x} is not a multiple of the coarsest spacing {coarse}")


def run_converge_h(cfg, levels, out_dir=None, write=True) -> StudyResult:
    """L¹ error at ``T_final`` per level, against Barenblatt or the finest level."""
    levels = sorted((float(h) for h in levels), reverse=True)
    _check_levels(cfg, levels)
    reports = []
    for h in levels:
        u0 = initial_data(cfg, h)
        w = build_weights(cfg, h)
        phi = build_phi(cfg, u0.linf())
        reports.append(evolve(u0, w, phi, evolution_config(cfg)))
        log.info("level h=%g done (%d steps)", h, reports[-1].steps)

    if _barenblatt_reference(cfg):
        m = cfg["nonlinearity"]["m"]
        t_end = cfg["initial"]["t0"] + cfg["time"]["t_final"]
        mass = cfg["initial"]["amplitude"]
        errors = []
        for rep in reports:
            u = rep.final
            exact = barenblatt(m, t_end, u.points()[:, 0], mass=mass)
            errors.append(u.cell_volume * float(np.abs(u.values.ravel() - exact).sum()))
        reference = f"barenblatt(t={t_end:.6g}, support radius {support_radius(m, t_end, mass):.6g})"
    else:
        fine = reports[-1].final
        h_f = levels[-1]
        errors = []
        for h, rep in zip(levels, reports):
            u = rep.final
            k = int(round(h / h_f))
            # fine-level values at the coarse lattice points
            idx = tuple(slice((l * k) - lf, None, k) for l, lf in zip(u.lo, fine.lo))
            sub = fine.values[idx][tuple(slice(0, n) for n in u.shape)]
            errors.append(u.cell_volume * float(np.abs(u.values - sub).sum()))
        reference = f"finest level h={h_f:g}"

    rows = [[h, e, rep.steps] for h, e, rep in zip(levels, errors, reports)]
    verdicts = [Verdict("reference", INFO, reference)]
    # a repeated level reproduces its run exactly, so it is compared only once
    distinct = [e for i, e in enumerate(errors) if i == 0 or levels[i] != levels[i - 1]]
    verdicts.append(_strictly_decreasing("L1 error decreasing in h", distinct))
    res = StudyResult(["h", "l1_error", "steps"], rows, verdicts, reports)
    if write:
        _write_study(cfg, out_dir, res)
    return res


def run_converge_s(cfg, orders, out_dir=None, write=True) -> StudyResult:
    """Distance between fractional runs of order ``s`` and the ``σ = I`` local run."""
    orders = [float(s) for s in orders]
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise DomainError("orders must be strictly increasing")
    N = cfg["grid"]["dim"]
    u0 = initial_data(cfg)
    phi = build_phi(cfg, u0.linf())
    local = build_weights(cfg, measure=None, sigma=np.eye(N))
    frac = [build_weights(cfg, measure=FractionalLaplacian(N, s), sigma=None) for s in orders]
    dt = common_dt(cfg, [(u0, w, phi) for w in [local] + frac])
    ec = evolution_config(cfg, dt=dt, snapshots=study_snapshots(cfg))
    ref = evolve(u0, local, phi, ec)
    reports = [evolve(u0, w, phi, ec) for w in frac]
    dists = [snapshot_distance(r, ref) for r in reports]
    rows = [[s, d] for s, d in zip(orders, dists)]
    res = StudyResult(["s", "l1_distance"], rows,
                      [_strictly_decreasing("distance to local run decreasing in s", dists)],
                      [ref] + reports)
    if write:
        _write_study(cfg, out_dir, res)
    return res


def run_continuous_dependence(cfg, pairs, target=None, out_dir=None, write=True) -> StudyResult:
    """Distance from the ``(m, s)`` runs to the target-parameter run."""
    N = cfg["grid"]["dim"]
    if target is None:
        target = (cfg["nonlinearity"]["m"], cfg["measure"]["order"])
    pairs = [(float(m), float(s)) for m, s in pairs]
    u0 = initial_data(cfg)
    M = u0.linf()
    sigma = cfgmod.build_local_sigma(cfg)

    def problem(m, s):
        w = build_weights(cfg, measure=FractionalLaplacian(N, s), sigma=sigma)
        return u0, w, build_phi(cfg, M, m=m)

    probs = [problem(*target)] + [problem(m, s) for m, s in pairs]
    dt = common_dt(cfg, probs)
    ec = evolution_config(cfg, dt=dt, snapshots=study_snapshots(cfg))
    runs = [evolve(u, w, phi, ec) for u, w, phi in probs]
    dists = [snapshot_distance(r, runs[0]) for r in runs[1:]]
    rows = [[m, s, d] for (m, s), d in zip(pairs, dists)]
    if all(d == 0 for d in dists):
        verdict = Verdict("distance to target decreasing", PASS, "all distances 0")
    else:
        verdict = _strictly_decreasing("distance to target decreasing", dists)
    res = StudyResult(["m", "s", "l1_distance"], rows,
                      [Verdict("target", INFO, f"m={target[0]:g}, s={target[1]:g}"), verdict], runs)
    if write:
        _write_study(cfg, out_dir, res)
    return res


def run_verify(cfg, seed=0, out_dir=None, write=True):
    from .verify import verification_suite

    verdicts = verification_suite(cfg, seed)
    if write:
        d = _output_dir(cfg, out_dir)
        io.write_verdicts(os.path.join(d, "verdicts.txt"), verdicts)
    return verdicts
