"""Interaction-velocity models: a(u), its antiderivative A(u), and the Godunov flux.

A model is the pair (a, A) with the normalization A(0) = 0.  Built-in kinds:

    quadratic-attractive   a(u) = -u,  A(u) = -u^2/2
    quadratic-repulsive    a(u) =  u,  A(u) =  u^2/2
    polynomial             a(u) = sum_k c_k u^k
    piecewise-linear-a     a interpolated between (u_k, a_k) nodes,
                           constant extension outside the node range
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

KINDS = (
    "quadratic-attractive",
    "quadratic-repulsive",
    "polynomial",
    "piecewise-linear-a",
)


class FluxError(ValueError):
    """Bad flux model definition or non-finite evaluation input."""


@dataclass(frozen=True)
class FluxModel:
    """Velocity a and antiderivative A, both evaluable in closed form.

    ``a_coeffs`` holds polynomial coefficients c_0..c_n (a(u) = sum c_k u^k)
    for polynomial-type kinds; ``nodes`` holds ((u_0, a_0), ...) for the
    piecewise-linear kind.  A(0) = 0 always.
    """

    kind: str
    a_coeffs: tuple[float, ...] = ()
    nodes: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FluxError(f"unknown flux kind {self.kind!r}")
        if self.kind == "piecewise-linear-a":
            if len(self.nodes) < 2:
                raise FluxError("piecewise-linear-a needs at least 2 nodes")
            us = [u for u, _ in self.nodes]
            if any(u2 <= u1 for u1, u2 in zip(us, us[1:])):
                raise FluxError("piecewise-linear-a nodes must have increasing u")
        elif self.kind == "polynomial":
            if not self.a_coeffs:
                raise FluxError("polynomial model needs coefficients")


def quadratic_attractive() -> FluxModel:
    return FluxModel("quadratic-attractive", a_coeffs=(0.0, -1.0))


def quadratic_repulsive() -> FluxModel:
    return FluxModel("quadratic-repulsive", a_coeffs=(0.0, 1.0))


def polynomial(coeffs) -> FluxModel:
    return FluxModel("polynomial", a_coeffs=tuple(float(c) for c in coeffs))


def piecewise_linear(nodes) -> FluxModel:
    return FluxModel(
        "piecewise-linear-a",
        nodes=tuple((float(u), float(a)) for u, a in nodes),
    )


def from_dict(block: dict) -> FluxModel:
    """Build a model from a scenario flux block (fail-closed on unknown keys)."""
    allowed = {"kind", "coeffs", "nodes"}
    unknown = set(block) - allowed
    if unknown:
        raise FluxError(f"unknown flux field(s): {sorted(unknown)}")
    kind = block.get("kind")
    if kind == "quadratic-attractive":
        return quadratic_attractive()
    if kind == "quadratic-repulsive":
        return quadratic_repulsive()
    if kind == "polynomial":
        if "coeffs" not in block:
            raise FluxError("polynomial flux requires 'coeffs'")
        return polynomial(block["coeffs"])
    if kind == "piecewise-linear-a":
        if "nodes" not in block:
            raise FluxError("piecewise-linear-a flux requires 'nodes'")
        return piecewise_linear(block["nodes"])
    raise FluxError(f"unknown flux kind {kind!r}")


def _check_finite(u):
    if not np.all(np.isfinite(u)):
        raise FluxError("non-finite argument to flux evaluation")


def _pwl_arrays(model):
    us = np.array([u for u, _ in model.nodes])
    avs = np.array([a for _, a in model.nodes])
    return us, avs


def eval_a(model: FluxModel, u):
    """Evaluate the velocity a(u).  Accepts scalars or arrays."""
    u = np.asarray(u, dtype=float)
    _check_finite(u)
    if model.kind == "piecewise-linear-a":
        us, avs = _pwl_arrays(model)
        out = np.interp(u, us, avs)
    else:
        out = P.polyval(u, np.asarray(model.a_coeffs))
    return out if out.ndim else float(out)


@functools.lru_cache(maxsize=None)
def _pwl_antiderivative_nodes(model: FluxModel):
    # Cumulative trapezoid integrals of a at the nodes, shifted so A(0) = 0.
    us, avs = _pwl_arrays(model)
    seg = 0.5 * (avs[1:] + avs[:-1]) * np.diff(us)
    raw = np.concatenate(([0.0], np.cumsum(seg)))
    return us, avs, raw


def _pwl_A_raw(model, u):
    us, avs, raw = _pwl_antiderivative_nodes(model)
    u = np.asarray(u, dtype=float)
    idx = np.clip(np.searchsorted(us, u, side="right") - 1, 0, len(us) - 2)
    u0, u1 = us[idx], us[idx + 1]
    a0, a1 = avs[idx], avs[idx + 1]
    du = u - u0
    slope = (a1 - a0) / (u1 - u0)
    inside = raw[idx] + a0 * du + 0.5 * slope * du * du
    # constant extension of a outside the node range
    below = raw[0] + avs[0] * (u - us[0])
    above = raw[-1] + avs[-1] * (u - us[-1])
    return np.where(u < us[0], below, np.where(u > us[-1], above, inside))


def eval_A(model: FluxModel, u):
    """Evaluate the antiderivative A(u) with A(0) = 0."""
    u = np.asarray(u, dtype=float)
    _check_finite(u)
    if model.kind == "piecewise-linear-a":
        out = _pwl_A_raw(model, u) - _pwl_A_raw(model, 0.0)
    else:
        c = np.asarray(model.a_coeffs)
        ac = np.concatenate(([0.0], c / np.arange(1, len(c) + 1)))
        out = P.polyval(u, ac)
    return out if out.ndim else float(out)


def _real_poly_roots(coeffs):
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(c) <= 1:
        return np.empty(0)
    r = np.roots(c[::-1])
    r = r[np.abs(r.imag) < 1e-9].real
    return np.sort(r)


@functools.lru_cache(maxsize=None)
def stationary_points(model: FluxModel) -> tuple[float, ...]:
    """All u where a(u) = 0, i.e. interior extremum candidates of A."""
    if model.kind == "piecewise-linear-a":
        us, avs = _pwl_arrays(model)
        pts = list(us[avs == 0.0])
        for k in range(len(us) - 1):
            a0, a1 = avs[k], avs[k + 1]
            if a0 * a1 < 0:
                pts.append(us[k] - a0 * (us[k + 1] - us[k]) / (a1 - a0))
        return tuple(sorted(pts))
    return tuple(_real_poly_roots(model.a_coeffs))


@functools.lru_cache(maxsize=None)
def _a_derivative_roots(model: FluxModel) -> tuple[float, ...]:
    """Interior extremum candidates of a itself (for range-of-a queries)."""
    if model.kind == "piecewise-linear-a":
        return tuple(u for u, _ in model.nodes)
    c = np.asarray(model.a_coeffs)
    if len(c) <= 1:
        return ()
    dc = c[1:] * np.arange(1, len(c))
    return tuple(_real_poly_roots(dc))


def a_range(model: FluxModel, lo: float, hi: float) -> tuple[float, float]:
    """(min, max) of a over [lo, hi]."""
    if hi < lo:
        lo, hi = hi, lo
    cand = [lo, hi] + [c for c in _a_derivative_roots(model) if lo < c < hi]
    vals = eval_a(model, np.asarray(cand))
    return float(np.min(vals)), float(np.max(vals))


def max_wave_speed(model: FluxModel, lo: float, hi: float) -> float:
    amin, amax = a_range(model, lo, hi)
    return max(abs(amin), abs(amax))


def max_slope_of_a(model: FluxModel, lo: float, hi: float) -> float:
    """Largest slope of a on [lo, hi]; used to test the attractive hypothesis."""
    if hi < lo:
        lo, hi = hi, lo
    if model.kind == "piecewise-linear-a":
        us, avs = _pwl_arrays(model)
        slopes = np.diff(avs) / np.diff(us)
        best = -np.inf
        for k, s in enumerate(slopes):
            if us[k + 1] > lo and us[k] < hi:
                best = max(best, s)
        return 0.0 if best == -np.inf else float(best)
    c = np.asarray(model.a_coeffs)
    if len(c) <= 1:
        return 0.0
    dc = c[1:] * np.arange(1, len(c))
    cand = [lo, hi] + [r for r in _real_poly_roots(dc[1:] * np.arange(1, len(dc)))
                       if lo < r < hi]
    return float(np.max(P.polyval(np.asarray(cand), dc)))


def max_slope_on_intervals(model: FluxModel, lo, hi):
    """Vectorized max of a' over each [lo_i, hi_i] (slope of the velocity).

    Positive values flag locally convex stretches of A, where rarefactions
    live; the solver uses this to scale its corner-dissipation term.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if model.kind == "piecewise-linear-a":
        us, avs = _pwl_arrays(model)
        slopes = np.diff(avs) / np.diff(us)
        out = np.full(np.broadcast(lo, hi).shape, -np.inf)
        for k, s in enumerate(slopes):
            overlap = (hi > us[k]) & (lo < us[k + 1])
            out = np.where(overlap, np.maximum(out, s), out)
        # degenerate interval entirely outside the node range: a is constant
        return np.where(np.isfinite(out), out, 0.0)
    c = np.asarray(model.a_coeffs)
    if len(c) <= 1:
        return np.zeros(np.broadcast(lo, hi).shape)
    dc = c[1:] * np.arange(1, len(c))
    out = np.maximum(P.polyval(lo, dc), P.polyval(hi, dc))
    if len(dc) > 1:
        ddc = dc[1:] * np.arange(1, len(dc))
        for r in _real_poly_roots(ddc):
            inside = (lo < r) & (r < hi)
            if np.any(inside):
                out = np.where(inside, np.maximum(out, P.polyval(r, dc)), out)
    return out


def is_attractive(model: FluxModel, m_total: float, tol: float = 1e-12) -> bool:
    """True when a is non-increasing on [0, m_total] (concave A)."""
    return max_slope_of_a(model, 0.0, m_total) <= tol


def godunov_flux(model: FluxModel, u_left, u_right):
    """Exact Godunov interface flux for u_t + A(u)_x = 0.

    min of A over [u_left, u_right] for u_left <= u_right, max over
    [u_right, u_left] otherwise.  Vectorized over both arguments.
    """
    ul = np.asarray(u_left, dtype=float)
    ur = np.asarray(u_right, dtype=float)
    _check_finite(ul)
    _check_finite(ur)
    lo = np.minimum(ul, ur)
    hi = np.maximum(ul, ur)
    A_lo = eval_A(model, lo)
    A_hi = eval_A(model, hi)
    fmin = np.minimum(A_lo, A_hi)
    fmax = np.maximum(A_lo, A_hi)
    for c in stationary_points(model):
        inside = (lo < c) & (c < hi)
        if np.any(inside):
            Ac = eval_A(model, c)
            fmin = np.where(inside, np.minimum(fmin, Ac), fmin)
            fmax = np.where(inside, np.maximum(fmax, Ac), fmax)
    out = np.where(ul <= ur, fmin, fmax)
    return out if out.ndim else float(out)
