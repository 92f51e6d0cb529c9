"""Exact event-driven dynamics of Dirac aggregates (attractive case only).

Between merge events every aggregate drifts at the constant speed

    v_i = (A(M_i) - A(M_{i-1})) / m_i,   M_i = m_1 + ... + m_i,

aggregates stick on contact (masses summed, position continuous), and
velocities are recomputed after each merge.  Valid only when a is
non-increasing on [0, total mass]; the repulsive/general case belongs to
the PDE path and is refused here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import flux as fx
from .measure import AtomicMeasure, MeasureError

EVENT_TOL = 1e-12
MAX_EVENTS = 10**6


class OracleError(ValueError):
    """Oracle used outside its validity domain (non-attractive flux, caps)."""


@dataclass(frozen=True)
class MergeEvent:
    t: float
    indices: tuple[int, ...]  # indices into the pre-merge atom list
    x: float
    m: float


def velocities(atoms: AtomicMeasure, model: fx.FluxModel) -> np.ndarray:
    """Aggregate speeds from the antiderivative increments over mass blocks."""
    if atoms.n_atoms == 0:
        raise MeasureError("no atoms")
    total = atoms.total_mass
    if not fx.is_attractive(model, total):
        raise OracleError("aggregate dynamics requires a non-increasing velocity a "
                          "on [0, total mass]")
    cum = np.concatenate(([0.0], atoms.cumulative))
    A = fx.eval_A(model, cum)
    return np.diff(A) / atoms.masses


@dataclass(frozen=True)
class AggregateSystem:
    time: float
    atoms: AtomicMeasure
    model: fx.FluxModel
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.v is None:
            object.__setattr__(self, "v", velocities(self.atoms, self.model))

    @classmethod
    def create(cls, atoms: AtomicMeasure, model: fx.FluxModel,
               time: float = 0.0) -> "AggregateSystem":
        return cls(time, atoms, model)

    @property
    def total_mass(self) -> float:
        return self.atoms.total_mass


def next_event(system: AggregateSystem):
    """(t_event, colliding pairs) for the earliest adjacent collision, or (None, [])."""
    x, v = system.atoms.positions, system.v
    if x.size < 2:
        return None, []
    gaps = np.diff(x)
    closing = v[:-1] - v[1:]
    times = np.full(gaps.shape, np.inf)
    active = closing > 0
    times[active] = gaps[active] / closing[active]
    t_min = times.min()
    if not np.isfinite(t_min):
        return None, []
    pairs = [(i, i + 1) for i in np.nonzero(times <= t_min + EVENT_TOL)[0]]
    return system.time + t_min, pairs


def _coalesce(xs, ms, tol: float = EVENT_TOL) -> AtomicMeasure:
    """Merge atoms whose gap has closed to within tol (roundoff guard)."""
    out_x: list[float] = []
    out_m: list[float] = []
    for x, m in zip(xs, ms):
        if out_x and x - out_x[-1] <= tol:
            gm = out_m[-1] + m
            out_x[-1] = (out_x[-1] * out_m[-1] + x * m) / gm
            out_m[-1] = gm
        else:
            out_x.append(float(x))
            out_m.append(float(m))
    return AtomicMeasure(np.array(out_x), np.array(out_m))


def _merge_groups(pairs) -> list[list[int]]:
    # union of overlapping adjacent pairs -> maximal index runs
    members = sorted({i for p in pairs for i in p})
    groups: list[list[int]] = []
    for i in members:
        if groups and i == groups[-1][-1] + 1:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [g for g in groups if len(g) > 1]


def _drift(atoms: AtomicMeasure, v: np.ndarray, dt: float) -> np.ndarray:
    return atoms.positions + v * dt


def advance(system: AggregateSystem, t_target: float):
    """Alternate linear drift and sticky merges up to t_target.

    Returns (system at t_target, list of MergeEvent).
    """
    if t_target < system.time - EVENT_TOL:
        raise ValueError("t_target must not precede the current time")
    events: list[MergeEvent] = []
    n_events = 0
    while True:
        t_ev, pairs = next_event(system)
        if t_ev is None or t_ev > t_target:
            dt = t_target - system.time
            new_x = _drift(system.atoms, system.v, dt)
            atoms = _coalesce(new_x, system.atoms.masses)
            if atoms.n_atoms == system.atoms.n_atoms:
                return AggregateSystem(t_target, atoms, system.model, v=system.v), events
            return AggregateSystem(t_target, atoms, system.model), events
        dt = t_ev - system.time
        x = _drift(system.atoms, system.v, dt)
        m = system.atoms.masses
        groups = _merge_groups(pairs)
        keep = np.ones(x.size, dtype=bool)
        new_x = x.copy()
        new_m = m.copy()
        for g in groups:
            gm = float(np.sum(m[g]))
            gx = float(np.sum(m[g] * x[g]) / gm)
            new_x[g[0]] = gx
            new_m[g[0]] = gm
            keep[g[1:]] = False
            events.append(MergeEvent(t_ev, tuple(g), gx, gm))
        atoms = _coalesce(new_x[keep], new_m[keep])
        system = AggregateSystem(t_ev, atoms, system.model)
        n_events += 1
        if n_events > MAX_EVENTS:
            raise OracleError("event cap exceeded (10^6 merge events)")


def collapse_time(system: AggregateSystem) -> float:
    """First time a single aggregate remains; math.inf if merges stall."""
    n_events = 0
    while system.atoms.n_atoms > 1:
        t_ev, pairs = next_event(system)
        if t_ev is None:
            return math.inf
        system, _ = advance(system, t_ev)
        n_events += 1
        if n_events > MAX_EVENTS:
            raise OracleError("event cap exceeded (10^6 merge events)")
    return system.time


def trajectory_samples(system: AggregateSystem, times) -> list[tuple]:
    """Rows (t, atom_id, x, m, v) at the given times, advancing a copy."""
    rows = []
    current = system
    for t in sorted(times):
        current, _ = advance(current, t)
        for i in range(current.atoms.n_atoms):
            rows.append((t, i, float(current.atoms.positions[i]),
                         float(current.atoms.masses[i]), float(current.v[i])))
    return rows
