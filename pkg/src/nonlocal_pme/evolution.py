"""Forward-Euler time stepping of ``∂_t u = L_h[φ(u)]`` under a monotonicity CFL.

Under ``Δt <= 1 / (Lip(φ) W_eff)`` every update value is a nondecreasing
function of every input value, so the discrete comparison principle, the
maximum principle and the L¹-contraction hold step by step.  ``evolve``
checks these per step and records the outcome as verdicts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .discrete_operator import DiscreteOperator, GridFunction, StencilWeights
from .errors import CFLError, DomainError, EvolutionAbort
from .nonlinearity import Nonlinearity, lipschitz_on

log = logging.getLogger(__name__)

PASS, FAIL, INFO = "PASS", "FAIL", "INFO"


@dataclass
class Verdict:
    name: str
    status: str
    detail: str = ""

    @property
    def passed(self):
        return self.status != FAIL

    def line(self):
        return f"{self.status} {self.name}: {self.detail}".rstrip(": ")


@dataclass(frozen=True)
class EvolutionConfig:
    t_final: float
    cfl: float | None = 0.9
    dt: float | None = None
    snapshots: tuple | str = ()

    def __post_init__(self):
        if not self.t_final > 0:
            raise DomainError("t_final must be positive")
        if self.dt is None and self.cfl is None:
            raise DomainError("give either a CFL fraction or a fixed dt")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.dt is None and not (0 < self.cfl <= 1):
            raise DomainError("CFL fraction must lie in (0, 1]")


@dataclass
class RunReport:
    h: float
    dt: float
    shape: tuple
    boundary: str
    fingerprint: tuple
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    umin: list = field(default_factory=list)
    umax: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)   # step index -> GridFunction
    verdicts: list = field(default_factory=list)

    @property
    def steps(self):
        return len(self.times) - 1

    def snapshot_items(self):
        """``(time, GridFunction)`` pairs in step order."""
        return [(self.times[k], self.snapshots[k]) for k in sorted(self.snapshots)]

    @property
    def final(self) -> GridFunction:
        return self.snapshots[max(self.snapshots)]

    def all_passed(self):
        return all(v.passed for v in self.verdicts)


def cfl_dt(weights: StencilWeights, phi: Nonlinearity, M: float) -> float:
    """Largest monotone step ``1 / (Lip(φ on [-M, M]) W_eff)``."""
    L = lipschitz_on(phi, M) if M > 0 else 0.0
    if math.isinf(L):
        raise CFLError("Lipschitz bound is infinite: mollify the nonlinearity first")
    W = weights.effective_total
    if L == 0 or W == 0:
        return math.inf
    return 1.0 / (L * W)


def step_explicit(u: GridFunction, weights: StencilWeights, phi: Nonlinearity, dt: float,
                  operator: DiscreteOperator | None = None) -> GridFunction:
    """One forward-Euler step ``u + Δt L_h[φ(u)]``; rejects steps above the CFL bound."""
    bound = cfl_dt(weights, phi, u.linf())
    if dt > bound:
        raise CFLError(f"dt = {dt:.6g} exceeds the monotonicity bound {bound:.6g}")
    op = operator or DiscreteOperator(weights, u.shape, u.boundary)
    new = u.values + dt * op(phi(u.values))
    if not np.all(np.isfinite(new)):
        raise EvolutionAbort(1)
    return u.with_values(new)


def _fingerprint(weights, phi):
    return (weights.h, weights.dim, weights.offsets.tobytes(), weights.weights.tobytes(),
            weights.tail_mass, weights.tail_policy, repr(phi) if not hasattr(phi, "values")
            else (phi.breakpoints.tobytes(), phi.values.tobytes()))


def plan_steps(t_final, dt_max, cfl=None, dt=None):
    """Uniform step landing exactly on ``t_final``; returns ``(dt, n_steps)``."""
    if dt is not None:
        if dt > dt_max:
            raise CFLError(f"fixed dt = {dt:.6g} exceeds the monotonicity bound {dt_max:.6g}")
        n = max(1, int(math.ceil(t_final / dt - 1e-9)))
    else:
        target = cfl * dt_max
        n = 1 if math.isinf(target) else max(1, int(math.ceil(t_final / target)))
    return t_final / n, n


def evolve(u0: GridFunction, weights: StencilWeights, phi: Nonlinearity,
           config: EvolutionConfig, callback=None) -> RunReport:
    """Step ``u0`` to ``config.t_final`` and record per-step diagnostics.

    ``config.snapshots`` is a tuple of times (each stored at the nearest
    completed step; ``0`` and ``t_final`` are always stored) or ``"all"``.
    ``callback(step, t, values)`` is called after every step.
    """
    if not np.isclose(weights.h, u0.h, rtol=1e-12, atol=0) or weights.dim != u0.dim:
        raise DomainError("stencil and initial data disagree on spacing or dimension")
    M = u0.linf()
    dt_max = cfl_dt(weights, phi, M)
    dt, n = plan_steps(config.t_final, dt_max, config.cfl, config.dt)
    op = DiscreteOperator(weights, u0.shape, u0.boundary)

    if config.snapshots == "all":
        wanted = set(range(n + 1))
    else:
        wanted = {0, n} | {min(n, max(0, int(round(t / dt)))) for t in config.snapshots}

    rep = RunReport(u0.h, dt, u0.shape, u0.boundary, _fingerprint(weights, phi))
    vol = u0.cell_volume
    u = np.array(u0.values, dtype=float)
    lo0, hi0 = float(u.min()), float(u.max())
    if u0.boundary == "zero_extension":
        lo0, hi0 = min(lo0, 0.0), max(hi0, 0.0)
    tol_mp = 1e-12 * max(M, 1e-300)
    mp_fail = osc_fail = l1_fail = None
    l1_prev = vol * float(np.abs(u).sum())
    osc_prev = hi0 - lo0

    def record(k, vals):
        rep.times.append(k * dt)
        rep.mass.append(vol * float(vals.sum()))
        rep.linf.append(float(np.abs(vals).max()))
        rep.l1.append(vol * float(np.abs(vals).sum()))
        rep.umin.append(float(vals.min()))
        rep.umax.append(float(vals.max()))
        if k in wanted:
            rep.snapshots[k] = u0.with_values(vals.copy())

    record(0, u)
    for k in range(1, n + 1):
        u = u + dt * op(phi(u))
        if not np.all(np.isfinite(u)):
            raise EvolutionAbort(k)
        record(k, u)
        if mp_fail is None and (u.min() < lo0 - tol_mp or u.max() > hi0 + tol_mp):
            mp_fail = k
        ext_lo = min(float(u.min()), 0.0) if u0.boundary == "zero_extension" else float(u.min())
        ext_hi = max(float(u.max()), 0.0) if u0.boundary == "zero_extension" else float(u.max())
        osc = ext_hi - ext_lo
        if osc_fail is None and osc > osc_prev + tol_mp:
            osc_fail = k
        osc_prev = osc
        if l1_fail is None and rep.l1[-1] > l1_prev * (1 + 1e-12) + 1e-300:
            l1_fail = k
        l1_prev = rep.l1[-1]
        if callback is not None:
            callback(k, k * dt, u)

    rep.verdicts.append(_verdict("maximum principle", mp_fail,
                                 f"values within [{lo0:.6g}, {hi0:.6g}] for {n} steps"))
    rep.verdicts.append(_verdict("oscillation damping", osc_fail, "max - min nonincreasing"))
    rep.verdicts.append(_verdict("L1 nonincreasing", l1_fail, "h^N Σ|u| nonincreasing"))
    rep.verdicts.append(_mass_verdict(rep, weights, phi, u0, n, dt))
    log.info("evolved %d steps of dt=%.4g; mass %.12g -> %.12g", n, dt, rep.mass[0], rep.mass[-1])
    return rep


def _verdict(name, fail_step, detail):
    if fail_step is None:
        return Verdict(name, PASS, detail)
    return Verdict(name, FAIL, f"violated at step {fail_step}")


def _mass_verdict(rep, weights, phi, u0, n, dt):
    drift = abs(rep.mass[-1] - rep.mass[0])
    conservative = u0.boundary == "periodic" and (weights.tail_policy == "drop" or weights.tail_mass == 0)
    if conservative:
        bound = max(n, 1) * 1e-15 * rep.l1[0] * weights.effective_total * dt
        status = PASS if drift <= bound else FAIL
        return Verdict("mass conservation", status, f"drift {drift:.3e} (bound {bound:.3e})")
    if phi.eta > 0 or not phi.satisfies_linear_bound_near_zero():
        return Verdict("mass conservation", INFO,
                       f"expected non-conservation (fast diffusion); mass {rep.mass[0]:.6g} -> {rep.mass[-1]:.6g}")
    return Verdict("mass conservation", INFO,
                   f"open boundary or absorbed tail; mass {rep.mass[0]:.6g} -> {rep.mass[-1]:.6g}")


# ---------------------------------------------------------------------------
# paired runs


def _positive_gap(a, b, vol):
    return vol * float(np.maximum(a - b, 0.0).sum())


def estimate_suite(run_u: RunReport, run_v: RunReport, rtol=1e-12) -> list[Verdict]:
    """Check the comparison-type a priori estimates on two runs with equal parameters.

    L¹⁺-contraction, comparison, L¹ and L∞ bounds at every common snapshot, and
    a fitted constant for the time-regularity modulus
    ``‖u(t) - u(s)‖₁ <= C (|t-s|^{1/3} + |t-s|)``.
    """
    if (run_u.shape != run_v.shape or run_u.boundary != run_v.boundary
            or not np.isclose(run_u.h, run_v.h, rtol=1e-14, atol=0)
            or not np.isclose(run_u.dt, run_v.dt, rtol=1e-14, atol=0)
            or run_u.fingerprint != run_v.fingerprint):
        raise DomainError("runs differ in grid, time step, stencil or nonlinearity")
    steps = sorted(set(run_u.snapshots) & set(run_v.snapshots))
    if 0 not in steps:
        raise DomainError("both runs must store the initial state")
    vol = run_u.snapshots[0].cell_volume
    u0 = run_u.snapshots[0].values
    v0 = run_v.snapshots[0].values
    scale = vol * float(np.abs(u0).sum() + np.abs(v0).sum()) + 1e-300
    out = []

    gaps = [_positive_gap(run_u.snapshots[k].values, run_v.snapshots[k].values, vol) for k in steps]
    inc = [k for k, (a, b) in zip(steps[1:], zip(gaps, gaps[1:])) if b > a + rtol * scale]
    out.append(Verdict("(a) L1+ contraction", FAIL if inc else PASS,
                       f"first increase at step {inc[0]}" if inc else
                       f"gap {gaps[0]:.6g} -> {gaps[-1]:.6g} over {len(steps)} snapshots"))

    if np.all(u0 <= v0):
        bad = [k for k in steps if np.any(run_u.snapshots[k].values > run_v.snapshots[k].values)]
        out.append(Verdict("(b) comparison", FAIL if bad else PASS,
                           f"order lost at step {bad[0]}" if bad else "u <= v at every snapshot"))
    else:
        out.append(Verdict("(b) comparison", INFO, "initial data not ordered"))

    for name, rep in (("u", run_u), ("v", run_v)):
        l1_0, linf_0 = rep.l1[0], rep.linf[0]
        l1_bad = [k for k in steps if rep.l1[k] > l1_0 * (1 + rtol)]
        linf_bad = [k for k in steps if rep.linf[k] > linf_0 * (1 + rtol)]
        out.append(Verdict(f"(c) L1 bound [{name}]", FAIL if l1_bad else PASS,
                           f"exceeded at step {l1_bad[0]}" if l1_bad else f"‖{name}‖₁ <= {l1_0:.6g}"))
        out.append(Verdict(f"(d) Linf bound [{name}]", FAIL if linf_bad else PASS,
                           f"exceeded at step {linf_bad[0]}" if linf_bad else f"‖{name}‖∞ <= {linf_0:.6g}"))

    out.append(Verdict("(e) time regularity", INFO, f"fitted C = {time_modulus_constant(run_u):.6g}"))
    return out


def time_modulus_constant(run: RunReport, max_snapshots: int = 64) -> float:
    """Smallest C with ``‖u(t)-u(s)‖₁ <= C(|t-s|^{1/3} + |t-s|)`` over stored snapshots.

    At most ``max_snapshots`` evenly spaced snapshots enter the pairwise scan.
    """
    items = run.snapshot_items()
    if len(items) > max_snapshots:
        pick = np.unique(np.linspace(0, len(items) - 1, max_snapshots).round().astype(int))
        items = [items[i] for i in pick]
    best = 0.0
    for i, (t, a) in enumerate(items):
        for s, b in items[:i]:
            d = abs(t - s)
            if d == 0:
                continue
            dist = a.cell_volume * float(np.abs(a.values - b.values).sum())
            best = max(best, dist / (d ** (1 / 3) + d))
    return best
