"""Diagnostics: every checkable solution property, as a named record.

Covers the admissible-speed bracket and Rankine-Hugoniot selection, the
one-sided Lipschitz (Oleinik) bound, weak residuals of u_t + A(u)_x = 0,
quantile-based flow reconstruction with the push-forward identity, the
pressureless momentum extension, and the non-uniqueness demonstration for
a single Dirac.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import flux as fx
from .measure import AtomicMeasure, GridField, quantile
from .pde import SolverState, momentum_field


class AnalysisError(ValueError):
    """Diagnostic requested outside its validity domain."""


@dataclass(frozen=True)
class CheckRecord:
    name: str
    t: float
    value: float
    bound: float
    tol: float
    passed: bool

    def __post_init__(self):
        # numpy scalars sneak in from array reductions; keep records
        # plain so they serialize to JSON without a custom encoder
        for f in ("t", "value", "bound", "tol"):
            object.__setattr__(self, f, float(getattr(self, f)))
        object.__setattr__(self, "passed", bool(self.passed))


@dataclass
class DiagnosticsReport:
    scenario: dict = field(default_factory=dict)
    checks: list[CheckRecord] = field(default_factory=list)

    def add(self, record: CheckRecord):
        self.checks.append(record)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "checks": [asdict(c) for c in self.checks],
            "scenario": self.scenario,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def admissible_speed_range(model: fx.FluxModel, u_minus: float, u_plus: float):
    """(low, high, selected) speeds for a jump from u_minus to u_plus.

    low/high bracket the endpoint velocities; selected is the
    Rankine-Hugoniot chord slope of A, the speed singled out by the
    flux-product identity.
    """
    if u_minus == u_plus:
        raise AnalysisError("degenerate state pair (u_minus == u_plus)")
    a_m = fx.eval_a(model, u_minus)
    a_p = fx.eval_a(model, u_plus)
    selected = (fx.eval_A(model, u_plus) - fx.eval_A(model, u_minus)) / (u_plus - u_minus)
    return min(a_m, a_p), max(a_m, a_p), selected


def check_oleinik(state: SolverState, model: fx.FluxModel, tol: float) -> list[CheckRecord]:
    """One-sided Lipschitz bound on a(u): face differences of a(u) vs 1/t.

    For the convex quadratic model (a(u) = u) the same bound applies to the
    cell density itself; with a(u) = -u the density bound is vacuous at
    shocks, so it is checked only in the repulsive case.
    """
    if state.t <= 0:
        raise AnalysisError("Oleinik bound 1/t is undefined at t = 0")
    f = state.field
    au = fx.eval_a(model, f.u_faces)
    lhs = float(np.max(np.diff(au)) / f.dx)
    bound = 1.0 / state.t
    records = [CheckRecord("oleinik_osl", state.t, lhs, bound, tol,
                           lhs <= bound + tol)]
    if model.kind == "quadratic-repulsive":
        dens = float(np.max(f.cell_masses) / f.dx)
        records.append(CheckRecord("oleinik_density", state.t, dens, bound, tol,
                                   dens <= bound + tol))
    return records


# ---------------------------------------------------------------------------
# weak residual


def _bump(c, r):
    """C^1 bump (1 - s^2)^2 on |x - c| < r, with its derivative."""
    def phi(x):
        s = (np.asarray(x, dtype=float) - c) / r
        w = np.clip(1.0 - s * s, 0.0, None)
        return w * w

    def dphi(x):
        s = (np.asarray(x, dtype=float) - c) / r
        w = np.clip(1.0 - s * s, 0.0, None)
        return -4.0 * s * w / r

    return phi, dphi


def default_test_functions(x_min, x_max, t0, t1, seed: int = 0,
                           n_space: int = 8, n_time: int = 4):
    """Deterministic family of separable test functions psi(t) * phi(x).

    Spatial factors are compactly supported bumps strictly inside the
    domain; time windows include a constant one (boundary-in-time terms
    carry the information) and smooth bumps.
    """
    rng = np.random.default_rng(seed)
    span = x_max - x_min
    spatial = []
    for _ in range(n_space):
        r = span * rng.uniform(0.1, 0.3)
        c = rng.uniform(x_min + 1.05 * r, x_max - 1.05 * r)
        spatial.append(_bump(c, r))
    one = (lambda t: np.ones_like(np.asarray(t, dtype=float)),
           lambda t: np.zeros_like(np.asarray(t, dtype=float)))
    temporal = [one]
    T = t1 - t0
    for _ in range(n_time - 1):
        r = T * rng.uniform(0.2, 0.45)
        c = rng.uniform(t0 + 0.05 * T, t1 - 0.05 * T)
        temporal.append(_bump(c, r))
    return [(phi, dphi, psi, dpsi)
            for phi, dphi in spatial for psi, dpsi in temporal]


def weak_residual(snapshots: list[SolverState], model: fx.FluxModel,
                  tests=None, seed: int = 0) -> float:
    """Max |weak form of u_t + A(u)_x = 0| over the test family.

    Midpoint quadrature in x over the cells, trapezoid in t over the
    snapshot times; time-boundary terms are included so windows need not
    vanish at t0/t1.
    """
    if len(snapshots) < 2:
        raise AnalysisError("weak residual needs at least two snapshots")
    f0 = snapshots[0].field
    times = np.array([s.t for s in snapshots])
    centers = f0.centers
    dx = f0.dx
    if tests is None:
        tests = default_test_functions(f0.x_min, f0.x_max,
                                       float(times[0]), float(times[-1]), seed=seed)
    # precompute midpoint values of u and A(u) per snapshot
    u_mid = np.array([0.5 * (s.field.u_faces[:-1] + s.field.u_faces[1:])
                      for s in snapshots])
    A_mid = fx.eval_A(model, u_mid)

    worst = 0.0
    for phi, dphi, psi, dpsi in tests:
        pv = phi(centers)
        if abs(pv[0]) > 0 or abs(pv[-1]) > 0:
            raise AnalysisError("test function support touches the domain boundary")
        dpv = dphi(centers)
        psiv = psi(times)
        dpsiv = dpsi(times)
        # spatial integrals per snapshot
        space_u = u_mid @ pv * dx          # int u phi dx
        space_Adp = A_mid @ dpv * dx       # int A(u) phi' dx
        integrand = space_u * dpsiv + space_Adp * psiv
        interior = float(np.trapezoid(integrand, times))
        boundary = float(space_u[-1] * psiv[-1] - space_u[0] * psiv[0])
        worst = max(worst, abs(interior - boundary))
    return worst


# ---------------------------------------------------------------------------
# flow reconstruction / push-forward


@dataclass(frozen=True)
class FlowTable:
    times: np.ndarray
    q: np.ndarray             # mass coordinates
    weights: np.ndarray       # quadrature weights summing to the total mass
    X: np.ndarray             # X[k, j] = position of mass coordinate q[j] at times[k]


def reconstruct_flow(snapshots: list[SolverState], initial, model: fx.FluxModel,
                     n_quantiles: int = 64) -> FlowTable:
    """Tabulate the transport flow X(t, q) via quantiles of the solution.

    Only offered for attractive models (non-increasing a); the general case
    has no flow down to t = 0.
    """
    total = initial.total_mass
    if not fx.is_attractive(model, total):
        raise AnalysisError("flow reconstruction requires a non-increasing velocity a")
    if isinstance(initial, AtomicMeasure):
        cum = np.concatenate(([0.0], initial.cumulative))
        q = cum[:-1] + 0.5 * initial.masses
        w = initial.masses.copy()
    else:
        q = (np.arange(n_quantiles) + 0.5) * total / n_quantiles
        w = np.full(n_quantiles, total / n_quantiles)
    times = np.array([s.t for s in snapshots])
    X = np.array([[quantile(s.field, qq) for qq in q] for s in snapshots])
    return FlowTable(times, q, w, X)


def pushforward_checks(flow: FlowTable, snapshots: list[SolverState],
                       test_funcs: dict, tol_per_lip: float) -> list[CheckRecord]:
    """Compare int phi d rho(t) against sum_j w_j phi(X(t, q_j)).

    ``test_funcs`` maps name -> (phi, lipschitz constant); the per-function
    tolerance is tol_per_lip * lipschitz.
    """
    records = []
    for k, s in enumerate(snapshots):
        f = s.field
        direct = {name: float(np.sum(f.cell_masses * phi(f.centers)))
                  for name, (phi, _) in test_funcs.items()}
        for name, (phi, lip) in test_funcs.items():
            pushed = float(np.sum(flow.weights * phi(flow.X[k])))
            err = abs(direct[name] - pushed)
            tol = tol_per_lip * lip
            records.append(CheckRecord(f"pushforward_{name}", s.t, err, tol, tol,
                                       err <= tol))
    return records


# ---------------------------------------------------------------------------
# pressureless extension


def pressureless_check(snapshots: list[SolverState], model: fx.FluxModel,
                       mass_floor_rel: float = 1e-10,
                       momentum_tol: float = 1e-10) -> list[CheckRecord]:
    """Momentum bookkeeping for the q = A(u)_x extension.

    (i) total momentum equals A(M) - A(0) at every snapshot;
    (ii) per-cell mean speed q_i / rho_i lies in the velocity range of a
    over [u_i, u_{i+1}] wherever the cell carries mass.
    """
    records = []
    total = snapshots[0].field.total_mass
    expected = fx.eval_A(model, total) - fx.eval_A(model, 0.0)
    floor = mass_floor_rel * total
    for s in snapshots:
        q = momentum_field(s, model)
        err = abs(float(np.sum(q)) - expected)
        records.append(CheckRecord("momentum_total", s.t, err, momentum_tol,
                                   momentum_tol, err <= momentum_tol))
        u = s.field.u_faces
        rho = s.field.cell_masses
        bad = 0
        checked = 0
        A_scale = 1.0 + float(np.max(np.abs(fx.eval_A(model, u))))
        for i in np.nonzero(rho > floor)[0]:
            amin, amax = fx.a_range(model, float(u[i]), float(u[i + 1]))
            speed = q[i] / rho[i]
            # second term absorbs cancellation in A(u_{i+1}) - A(u_i)
            # when the cell mass is tiny
            slack = (1e-12 * (1.0 + abs(amin) + abs(amax))
                     + 16 * np.finfo(float).eps * A_scale / rho[i])
            checked += 1
            if not (amin - slack <= speed <= amax + slack):
                bad += 1
        records.append(CheckRecord("momentum_bracket", s.t, float(bad),
                                   0.0, 0.0, bad == 0))
    return records


# ---------------------------------------------------------------------------
# non-uniqueness demonstration


def nonuniqueness_demo(model: fx.FluxModel, x0: float, speed: float,
                       t_end: float) -> dict:
    """Classify the candidate solution delta_{x0 + speed t} for unit mass.

    Any speed strictly inside (a(1), a(0)) yields a duality solution; only
    the chord slope A(1) - A(0) satisfies the flux-product selection.
    """
    low, high, selected = admissible_speed_range(model, 0.0, 1.0)
    admissible = low < speed < high
    is_selected = abs(speed - selected) <= 1e-12
    return {
        "x0": x0,
        "speed": speed,
        "t_end": t_end,
        "x_final": x0 + speed * t_end,
        "admissible_low": low,
        "admissible_high": high,
        "selected_speed": selected,
        "admissible": admissible,
        "selected": is_selected,
    }


# ---------------------------------------------------------------------------
# Riemann wave classification (informational; the scheme needs none of it)


def classify_riemann(model: fx.FluxModel, u_minus: float, u_plus: float,
                     n_samples: int = 2001, tol: float = 1e-10) -> dict:
    """Wave structure for nondecreasing data via the lower convex envelope of A."""
    if u_minus >= u_plus:
        raise AnalysisError("requires u_minus < u_plus")
    low, high, selected = admissible_speed_range(model, u_minus, u_plus)
    us = np.linspace(u_minus, u_plus, n_samples)
    As = fx.eval_A(model, us)
    chord = As[0] + (As[-1] - As[0]) * (us - us[0]) / (us[-1] - us[0])
    scale = max(1.0, float(np.max(np.abs(As))))
    if np.all(As >= chord - tol * scale):
        wave = "shock"
        segments = [("shock", u_minus, u_plus, selected)]
    else:
        hull = _lower_hull_indices(us, As)
        segments = []
        on_graph = np.diff(hull) == 1
        if np.all(on_graph):
            wave = "rarefaction"
            segments = [("rarefaction", u_minus, u_plus, None)]
        else:
            wave = "composite"
            i = 0
            while i < len(hull) - 1:
                if hull[i + 1] - hull[i] == 1:
                    j = i
                    while j < len(hull) - 1 and hull[j + 1] - hull[j] == 1:
                        j += 1
                    segments.append(("rarefaction", float(us[hull[i]]),
                                     float(us[hull[j]]), None))
                    i = j
                else:
                    ua, ub = float(us[hull[i]]), float(us[hull[i + 1]])
                    s = (fx.eval_A(model, ub) - fx.eval_A(model, ua)) / (ub - ua)
                    segments.append(("shock", ua, ub, s))
                    i += 1
    return {
        "wave": wave,
        "segments": segments,
        "admissible_low": low,
        "admissible_high": high,
        "selected_speed": selected,
    }


def _lower_hull_indices(x: np.ndarray, y: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            cross = (x[i2] - x[i1]) * (y[i] - y[i1]) - (y[i2] - y[i1]) * (x[i] - x[i1])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull
