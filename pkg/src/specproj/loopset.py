"""Geodesic return statistics on model surfaces.

A direction xi at a base point is flagged as looping when the unit-speed
geodesic it launches comes back within tol of the base point at some time
in [t_min, T_max].  The flagged fraction over a stratified sample of
directions estimates the size of the loop set: measure zero on the flat
torus (rational slopes only), everything on the round sphere (all great
circles close), and somewhere in between on ellipsoids of revolution.

Integration is fixed-step RK4 of the geodesic equation in a surface chart.
Charts are polar parametrizations of the surface of revolution
x^2 + y^2 + (z/c)^2 = 1 about the z axis (chart 0) or the x axis
(chart 1); trajectories that approach a polar cap of their current chart
are handed over to the other chart mid-flight, which keeps the equation
regular everywhere.  The flat torus uses the trivial chart of R^2.

Accelerations come from the embedding: with chart map P, Jacobian J and
second partials H, unit-speed geodesics satisfy

    (J^T J) q'' = - J^T (H_11 q1'^2 + 2 H_12 q1' q2' + H_22 q2'^2).

Energy g(gamma', gamma') is tracked every step and must hold 1 to 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

_SWITCH_MARGIN = 0.8     # |cos(polar angle)| beyond which we change chart
_ENERGY_TOL = 1e-6
_MAX_STEP = 1e-3


class ChartExitError(Exception):
    """No chart can hold the current state (should be unreachable)."""


@dataclass(frozen=True)
class SurfaceSpec:
    """Flat torus, round sphere, or ellipsoid of revolution (1, 1, c)."""

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("torus", "sphere", "ellipsoid"):
            raise ValueError(f"unknown surface kind {self.kind!r}")
        if self.kind == "ellipsoid" and not (0.5 <= self.c <= 2.0):
            raise ValueError("ellipsoid axis ratio c must lie in [0.5, 2]")

    @property
    def axis_c(self) -> float:
        return 1.0 if self.kind == "sphere" else self.c

    @property
    def embed_dim(self) -> int:
        return 2 if self.kind == "torus" else 3


# --------------------------------------------------------------------------
# chart geometry for the surface of revolution
# --------------------------------------------------------------------------

def _rev_pos_jac(c: float, chart: int, a, b):
    sa, ca = np.sin(a), np.cos(a)
    sb, cb = np.sin(b), np.cos(b)
    if chart == 0:
        pos = np.stack([sa * cb, sa * sb, c * ca], axis=-1)
        d1 = np.stack([ca * cb, ca * sb, -c * sa], axis=-1)
        d2 = np.stack([-sa * sb, sa * cb, np.zeros_like(sa)], axis=-1)
    else:
        pos = np.stack([ca, sa * cb, c * sa * sb], axis=-1)
        d1 = np.stack([-sa, ca * cb, c * ca * sb], axis=-1)
        d2 = np.stack([np.zeros_like(sa), -sa * sb, c * sa * cb], axis=-1)
    return pos, d1, d2


def _rev_hessians(c: float, chart: int, a, b):
    sa, ca = np.sin(a), np.cos(a)
    sb, cb = np.sin(b), np.cos(b)
    zero = np.zeros_like(sa)
    if chart == 0:
        h11 = np.stack([-sa * cb, -sa * sb, -c * ca], axis=-1)
        h12 = np.stack([-ca * sb, ca * cb, zero], axis=-1)
        h22 = np.stack([-sa * cb, -sa * sb, zero], axis=-1)
    else:
        h11 = np.stack([-ca, -sa * cb, -c * sa * sb], axis=-1)
        h12 = np.stack([zero, -ca * sb, c * ca * cb], axis=-1)
        h22 = np.stack([zero, -sa * cb, -c * sa * sb], axis=-1)
    return h11, h12, h22


def _rev_accel_single(c: float, chart: int, q: np.ndarray,
                      qd: np.ndarray) -> np.ndarray:
    _, d1, d2 = _rev_pos_jac(c, chart, q[:, 0], q[:, 1])
    h11, h12, h22 = _rev_hessians(c, chart, q[:, 0], q[:, 1])
    u = qd[:, 0:1]
    v = qd[:, 1:2]
    s = h11 * u * u + 2.0 * h12 * u * v + h22 * v * v
    r1 = np.sum(d1 * s, axis=1)
    r2 = np.sum(d2 * s, axis=1)
    g11 = np.sum(d1 * d1, axis=1)
    g12 = np.sum(d1 * d2, axis=1)
    g22 = np.sum(d2 * d2, axis=1)
    det = g11 * g22 - g12 * g12
    acc = np.empty_like(qd)
    acc[:, 0] = -(g22 * r1 - g12 * r2) / det
    acc[:, 1] = -(g11 * r2 - g12 * r1) / det
    return acc


def _accel(surface: SurfaceSpec, charts: np.ndarray, q: np.ndarray,
           qd: np.ndarray) -> np.ndarray:
    if surface.kind == "torus":
        return np.zeros_like(qd)
    c = surface.axis_c
    if np.all(charts == charts[0]):
        return _rev_accel_single(c, int(charts[0]), q, qd)
    acc = np.empty_like(qd)
    for ch in (0, 1):
        idx = charts == ch
        if np.any(idx):
            acc[idx] = _rev_accel_single(c, ch, q[idx], qd[idx])
    return acc


def _positions(surface: SurfaceSpec, charts: np.ndarray,
               q: np.ndarray) -> np.ndarray:
    if surface.kind == "torus":
        return q.copy()
    c = surface.axis_c
    if np.all(charts == charts[0]):
        return _rev_pos_jac(c, int(charts[0]), q[:, 0], q[:, 1])[0]
    out = np.empty((q.shape[0], 3))
    for ch in (0, 1):
        idx = charts == ch
        if np.any(idx):
            out[idx] = _rev_pos_jac(c, ch, q[idx, 0], q[idx, 1])[0]
    return out


def _energy(surface: SurfaceSpec, charts: np.ndarray, q: np.ndarray,
            qd: np.ndarray) -> np.ndarray:
    if surface.kind == "torus":
        return np.sum(qd * qd, axis=1)
    c = surface.axis_c
    out = np.empty(q.shape[0])
    for ch in (0, 1):
        idx = charts == ch
        if np.any(idx):
            _, d1, d2 = _rev_pos_jac(c, ch, q[idx, 0], q[idx, 1])
            g11 = np.sum(d1 * d1, axis=1)
            g12 = np.sum(d1 * d2, axis=1)
            g22 = np.sum(d2 * d2, axis=1)
            u, v = qd[idx, 0], qd[idx, 1]
            out[idx] = g11 * u * u + 2.0 * g12 * u * v + g22 * v * v
    return out


def _chart_coords(c: float, chart: int, pos: np.ndarray) -> np.ndarray:
    q = np.empty((pos.shape[0], 2))
    if chart == 0:
        q[:, 0] = np.arccos(np.clip(pos[:, 2] / c, -1.0, 1.0))
        q[:, 1] = np.arctan2(pos[:, 1], pos[:, 0])
    else:
        q[:, 0] = np.arccos(np.clip(pos[:, 0], -1.0, 1.0))
        q[:, 1] = np.arctan2(pos[:, 2] / c, pos[:, 1])
    return q


def _chart_velocity(c: float, chart: int, q: np.ndarray,
                    v_emb: np.ndarray) -> np.ndarray:
    _, d1, d2 = _rev_pos_jac(c, chart, q[:, 0], q[:, 1])
    g11 = np.sum(d1 * d1, axis=1)
    g12 = np.sum(d1 * d2, axis=1)
    g22 = np.sum(d2 * d2, axis=1)
    det = g11 * g22 - g12 * g12
    b1 = np.sum(d1 * v_emb, axis=1)
    b2 = np.sum(d2 * v_emb, axis=1)
    qd = np.empty_like(q)
    qd[:, 0] = (g22 * b1 - g12 * b2) / det
    qd[:, 1] = (g11 * b2 - g12 * b1) / det
    return qd


def _polar_margin(c: float, chart: int, pos: np.ndarray) -> np.ndarray:
    # |cos| of the polar angle in the given chart
    return np.abs(pos[:, 2] / c) if chart == 0 else np.abs(pos[:, 0])


def _switch_charts(surface: SurfaceSpec, charts: np.ndarray, q: np.ndarray,
                   qd: np.ndarray) -> None:
    """Move states whose polar margin degraded into the other chart."""
    if surface.kind == "torus":
        return
    c = surface.axis_c
    for ch in (0, 1):
        idx = np.flatnonzero(charts == ch)
        if idx.size == 0:
            continue
        pos, d1, d2 = _rev_pos_jac(c, ch, q[idx, 0], q[idx, 1])
        bad = _polar_margin(c, ch, pos) > _SWITCH_MARGIN
        if not np.any(bad):
            continue
        sel = idx[bad]
        v_emb = d1[bad] * qd[sel, 0:1] + d2[bad] * qd[sel, 1:2]
        other = 1 - ch
        new_q = _chart_coords(c, other, pos[bad])
        if np.any(_polar_margin(c, other,
                                _rev_pos_jac(c, other, new_q[:, 0],
                                             new_q[:, 1])[0]) > _SWITCH_MARGIN):
            raise ChartExitError("state has no safe chart")
        q[sel] = new_q
        qd[sel] = _chart_velocity(c, other, new_q, v_emb)
        charts[sel] = other


def _rk4_step(surface: SurfaceSpec, charts: np.ndarray, q: np.ndarray,
              qd: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    k1q = qd
    k1v = _accel(surface, charts, q, qd)
    k2q = qd + 0.5 * h * k1v
    k2v = _accel(surface, charts, q + 0.5 * h * k1q, k2q)
    k3q = qd + 0.5 * h * k2v
    k3v = _accel(surface, charts, q + 0.5 * h * k2q, k3q)
    k4q = qd + h * k3v
    k4v = _accel(surface, charts, q + h * k3q, k4q)
    q_new = q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    qd_new = qd + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return q_new, qd_new


def _base_frame(surface: SurfaceSpec, x0: np.ndarray):
    """Embedded base point and orthonormal tangent frame at x0 (chart 0)."""
    if surface.kind == "torus":
        return x0.copy(), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    pos, d1, d2 = _rev_pos_jac(surface.axis_c, 0,
                               np.array([x0[0]]), np.array([x0[1]]))
    e1 = d1[0] / np.linalg.norm(d1[0])
    e2 = d2[0] - np.dot(d2[0], e1) * e1
    e2 /= np.linalg.norm(e2)
    return pos[0], e1, e2


def _launch(surface: SurfaceSpec, x0: np.ndarray, angles: np.ndarray):
    """Initial chart states for unit-speed directions at the given angles."""
    count = angles.shape[0]
    base, e1, e2 = _base_frame(surface, x0)
    xi = (np.cos(angles)[:, None] * e1[None, :]
          + np.sin(angles)[:, None] * e2[None, :])
    q = np.tile(np.asarray(x0, dtype=float), (count, 1))
    if surface.kind == "torus":
        return q, xi.copy(), np.zeros(count, dtype=np.int64), base
    charts = np.zeros(count, dtype=np.int64)
    qd = _chart_velocity(surface.axis_c, 0, q, xi)
    return q, qd, charts, base


def _wrap(rel: np.ndarray) -> np.ndarray:
    return np.mod(rel + math.pi, TWO_PI) - math.pi


def _segment_min(rel: np.ndarray, delta: np.ndarray):
    """Min distance to the origin over the segment rel + s*delta, s in [0,1]."""
    dd = np.sum(delta * delta, axis=1)
    s = -np.sum(rel * delta, axis=1) / np.where(dd > 0.0, dd, 1.0)
    s = np.clip(s, 0.0, 1.0)
    closest = rel + s[:, None] * delta
    return np.sqrt(np.sum(closest * closest, axis=1)), s


@dataclass(frozen=True)
class GeodesicPath:
    times: np.ndarray
    positions: np.ndarray      # embedded coordinates per step
    max_energy_drift: float


def integrate_geodesic(surface: SurfaceSpec, x0, angle: float, t_max: float,
                       h: float = _MAX_STEP) -> GeodesicPath:
    """Integrate one unit-speed geodesic; returns the embedded path.

    x0 is a chart-0 point (torus coordinates, or polar (theta, phi) for
    sphere/ellipsoid), angle the launch direction in the tangent frame.
    """
    if not (0 < h <= _MAX_STEP):
        raise ValueError(f"step must lie in (0, {_MAX_STEP}]")
    if t_max <= 0:
        raise ValueError("t_max must be > 0")
    x0 = np.asarray(x0, dtype=float)
    q, qd, charts, _ = _launch(surface, x0, np.array([float(angle)]))
    steps = int(round(t_max / h))
    positions = np.empty((steps + 1, surface.embed_dim))
    positions[0] = _positions(surface, charts, q)[0]
    drift = 0.0
    for step in range(steps):
        q, qd = _rk4_step(surface, charts, q, qd, h)
        _switch_charts(surface, charts, q, qd)
        positions[step + 1] = _positions(surface, charts, q)[0]
        drift = max(drift, abs(float(_energy(surface, charts, q, qd)[0]) - 1.0))
        if drift > _ENERGY_TOL:
            raise ArithmeticError(f"energy drift {drift:.3e} exceeds {_ENERGY_TOL}")
    times = h * np.arange(steps + 1)
    return GeodesicPath(times=times, positions=positions,
                        max_energy_drift=drift)


def closed_form_geodesic(surface: SurfaceSpec, x0, angle: float,
                         times: np.ndarray) -> np.ndarray:
    """Exact geodesics for the torus (straight lines) and sphere (great
    circles), used as integration oracles."""
    x0 = np.asarray(x0, dtype=float)
    times = np.asarray(times, dtype=float)
    base, e1, e2 = _base_frame(surface, x0)
    xi = math.cos(angle) * e1 + math.sin(angle) * e2
    if surface.kind == "torus":
        return x0[None, :] + times[:, None] * xi[None, :]
    if surface.kind == "sphere" or surface.axis_c == 1.0:
        return (np.cos(times)[:, None] * base[None, :]
                + np.sin(times)[:, None] * xi[None, :])
    raise ValueError("no closed form for a non-round ellipsoid")


@dataclass(frozen=True)
class LoopsetEstimate:
    surface: SurfaceSpec
    x0: tuple[float, float]
    t_max: float
    tol: float
    t_min: float
    angles: np.ndarray
    first_return_times: np.ndarray   # -1 where no return within tol
    min_distances: np.ndarray
    max_energy_drift: float

    @property
    def fraction(self) -> float:
        return float(np.mean(self.min_distances <= self.tol))

    def fraction_at(self, tol: float) -> float:
        """Flagged fraction at a different tolerance, same trajectories."""
        return float(np.mean(self.min_distances <= tol))

    def csv_rows(self):
        return [(float(a), float(t), float(d))
                for a, t, d in zip(self.angles, self.first_return_times,
                                   self.min_distances)]


def loopset_fraction(surface: SurfaceSpec, x0, n_directions: int,
                     t_max: float, tol: float, h: float = _MAX_STEP,
                     seed: int = 0, t_min: float = 0.1) -> LoopsetEstimate:
    """Fraction of directions whose geodesic returns within tol of x0.

    Directions are stratified: n equally spaced angles with an independent
    seeded jitter inside each stratum.  Distances are measured to the
    chord-accurate minimum over each integration segment, from t_min on.
    """
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if not (0 < h <= _MAX_STEP):
        raise ValueError(f"step must lie in (0, {_MAX_STEP}]")
    if t_max <= t_min:
        raise ValueError("t_max must exceed t_min")
    x0 = np.asarray(x0, dtype=float)
    rng = np.random.default_rng(seed)
    jitter = rng.random(n_directions)
    angles = TWO_PI * (np.arange(n_directions) + jitter) / n_directions

    q, qd, charts, base = _launch(surface, x0, angles)
    pos = _positions(surface, charts, q)
    rel = _wrap(pos - base[None, :]) if surface.kind == "torus" else pos - base[None, :]
    min_d = np.full(n_directions, np.inf)
    ret_t = np.full(n_directions, -1.0)
    drift = 0.0
    steps = int(round(t_max / h))
    for step in range(steps):
        q, qd = _rk4_step(surface, charts, q, qd, h)
        _switch_charts(surface, charts, q, qd)
        new_pos = _positions(surface, charts, q)
        delta = new_pos - pos
        t0 = step * h
        if t0 + h >= t_min:
            # clamp the one segment that straddles t_min so distances are
            # measured over [t_min, t_max] exactly
            if t0 < t_min:
                frac = (t_min - t0) / h
                seg_start = rel + frac * delta
                seg_delta = (1.0 - frac) * delta
                seg_t0, seg_len = t_min, (1.0 - frac) * h
            else:
                seg_start, seg_delta = rel, delta
                seg_t0, seg_len = t0, h
            d, s = _segment_min(seg_start, seg_delta)
            np.minimum(min_d, d, out=min_d)
            hit = (ret_t < 0.0) & (d <= tol)
            if np.any(hit):
                ret_t[hit] = seg_t0 + s[hit] * seg_len
        energy = _energy(surface, charts, q, qd)
        drift = max(drift, float(np.max(np.abs(energy - 1.0))))
        if drift > _ENERGY_TOL:
            raise ArithmeticError(f"energy drift {drift:.3e} exceeds {_ENERGY_TOL}")
        if surface.kind == "torus":
            rel = _wrap(rel + delta)
        else:
            rel = new_pos - base[None, :]
        pos = new_pos
    return LoopsetEstimate(surface=surface, x0=(float(x0[0]), float(x0[1])),
                           t_max=float(t_max), tol=float(tol),
                           t_min=float(t_min), angles=angles,
                           first_return_times=ret_t, min_distances=min_d,
                           max_energy_drift=drift)
