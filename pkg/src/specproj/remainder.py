"""Remainder of the cumulative kernel after subtracting the volume term.

For the cumulative window [0, lam] the kernel splits as

    E_[0,lam](x, y) = ball_kernel(n, d(x,y), lam) + R(x, y, lam)

and this module measures R and its derivatives on probe grids, then fits
the growth exponent alpha_hat in sup|R| ~ C * lam^alpha_hat by least
squares in log-log coordinates.  On the torus the diagonal remainder is the
classical lattice-count error divided by the volume, so exact integer
counting doubles as an oracle for everything here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import (
    Model,
    SphereModel,
    SpectralWindow,
    TorusModel,
    counting_function,
    distance,
    exp_map,
    sphere_clusters,
    torus_separation,
)
from .kernels import (
    DerivOrder,
    ball_kernel,
    ball_kernel_deriv,
    sphere_pair_deriv_batch,
    torus_pair_deriv_batch,
    _sphere_coeffs,
    _sphere_kernel_values,
    _fd_apply,
)

__all__ = [
    "ExponentFit",
    "ProbeGrid",
    "RemainderReport",
    "counting_function",
    "remainder_field",
    "remainder_sweep",
    "scaling_exponent_fit",
    "cluster_lambda",
]


def cluster_lambda(ell: int, offset: float = 0.01) -> float:
    """Frequency just above the sphere cluster l (for sampling sweeps)."""
    return math.sqrt(ell * (ell + 1.0)) + offset


def _check_pair(model: Model, x, y) -> None:
    if distance(model, x, y) >= 0.5 * model.injectivity_radius:
        raise ValueError("x and y must be within half the injectivity radius")


def remainder_field(model: Model, x, y, lam: float,
                    order: DerivOrder | None = None) -> float:
    """Derivative of [E_(0,lam](x,y) + 1/vol - ball_kernel(n, d(x,y), lam)].

    The constant mode restores the full cumulative kernel E_[0,lam]; it
    only contributes at derivative order zero.  Derivatives are taken in
    normal coordinates centered at x and y respectively: exactly on the
    torus, by finite differences on the sphere.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if order is None:
        order = DerivOrder.zero(model.dim)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_pair(model, x, y)
    if lam == 0.0:
        window = None
    else:
        window = SpectralWindow(0.0, lam)
    n = model.n

    if isinstance(model, TorusModel):
        diff = torus_separation(model, x, y)[None, :]
        if window is None:
            mode_part = 0.0
        else:
            mode_part = float(
                torus_pair_deriv_batch(model, window, diff, order)[0]
            )
        gamma = tuple(a + b for a, b in zip(order.alpha, order.beta))
        sign = (-1.0) ** sum(order.beta)
        main = sign * ball_kernel_deriv(n, diff[0], lam, gamma)
        const = 1.0 / model.volume if order.omega == 0 else 0.0
        return mode_part + const - main

    # sphere: order zero is a direct evaluation, higher orders are finite
    # differences of the full bracket in normal coordinates at x and y
    if order.omega == 0:
        if window is None:
            mode_part = 0.0
        else:
            coeffs = _sphere_coeffs(sphere_clusters(model, window))
            mode_part = float(
                _sphere_kernel_values(coeffs, x[None, :], y[None, :])[0]
            )
        return mode_part + 1.0 / model.volume - ball_kernel(n, distance(model, x, y), lam)

    coeffs = _sphere_coeffs(sphere_clusters(model, window)) if window else None

    def batch_eval(us, vs):
        xs = np.array([exp_map(model, x, uu) for uu in us])
        ys = np.array([exp_map(model, y, vv) for vv in vs])
        if coeffs is not None and coeffs.size:
            vals = _sphere_kernel_values(coeffs, xs, ys)
        else:
            vals = np.zeros(xs.shape[0])
        dists = np.arccos(np.clip(np.sum(xs * ys, axis=1), -1.0, 1.0))
        mains = np.array([ball_kernel(n, d, lam) for d in dists])
        return vals - mains

    zero = np.zeros(model.dim)
    return _fd_apply(batch_eval, zero, zero, order)


# --------------------------------------------------------------------------
# exponent fit
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    alpha_hat: float
    c_hat: float
    residual: float       # max |log deviation| over kept samples
    dropped_zeros: int


def scaling_exponent_fit(samples) -> ExponentFit:
    """Least-squares fit of log(value) against log(lam).

    Zero values are dropped (their count is recorded); at least four
    positive samples with strictly increasing lam must remain.
    """
    lams = np.array([s[0] for s in samples], dtype=float)
    vals = np.array([s[1] for s in samples], dtype=float)
    if np.any(np.diff(lams) <= 0):
        raise ValueError("lam samples must be strictly increasing")
    if np.any(vals < 0):
        raise ValueError("values must be >= 0")
    keep = vals > 0
    dropped = int(np.sum(~keep))
    lams, vals = lams[keep], vals[keep]
    if lams.size < 4:
        raise ValueError(
            f"degenerate fit input: {lams.size} positive samples (need >= 4)"
        )
    lx = np.log(lams)
    ly = np.log(vals)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return ExponentFit(alpha_hat=float(slope), c_hat=float(math.exp(intercept)),
                       residual=residual, dropped_zeros=dropped)


# --------------------------------------------------------------------------
# probe sweep
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeGrid:
    """Regular grid of normal-coordinate offsets around a base point."""

    radius: float = 0.1
    points_per_axis: int = 5

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("probe radius must be > 0")
        if self.points_per_axis < 1:
            raise ValueError("points_per_axis must be >= 1")

    def offsets(self, dim: int) -> np.ndarray:
        axis = (np.linspace(-self.radius, self.radius, self.points_per_axis)
                if self.points_per_axis > 1 else np.zeros(1))
        grids = np.meshgrid(*([axis] * dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class RemainderReport:
    model_id: str
    x0: tuple[float, ...]
    order: DerivOrder
    lambdas: tuple[float, ...]
    sups: tuple[float, ...]
    fit: ExponentFit

    def csv_rows(self):
        return [(lam, sup) for lam, sup in zip(self.lambdas, self.sups)]

    def summary_record(self) -> dict:
        return {
            "model": self.model_id,
            "x0": list(self.x0),
            "alpha": list(self.order.alpha),
            "beta": list(self.order.beta),
            "alpha_hat": self.fit.alpha_hat,
            "C_hat": self.fit.c_hat,
            "residual": self.fit.residual,
            "dropped_zeros": self.fit.dropped_zeros,
        }


def _probe_points(model: Model, x0, probe: ProbeGrid) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if probe.radius >= 0.5 * model.injectivity_radius:
        raise ValueError("probe radius must stay below half the injectivity radius")
    offsets = probe.offsets(model.dim)
    return np.array([exp_map(model, x0, o) for o in offsets])


def _sup_remainder_torus(model: TorusModel, points: np.ndarray, lam: float,
                         order: DerivOrder) -> float:
    idx_x, idx_y = np.meshgrid(np.arange(points.shape[0]),
                               np.arange(points.shape[0]), indexing="ij")
    diffs = np.array([
        torus_separation(model, points[i], points[j])
        for i, j in zip(idx_x.ravel(), idx_y.ravel())
    ])
    window = SpectralWindow(0.0, lam) if lam > 0 else None
    if window is None:
        mode_part = np.zeros(diffs.shape[0])
    else:
        mode_part = torus_pair_deriv_batch(model, window, diffs, order)
    gamma = tuple(a + b for a, b in zip(order.alpha, order.beta))
    sign = (-1.0) ** sum(order.beta)
    mains = np.array([sign * ball_kernel_deriv(model.n, w, lam, gamma)
                      for w in diffs])
    const = 1.0 / model.volume if order.omega == 0 else 0.0
    return float(np.max(np.abs(mode_part + const - mains)))


def _sup_remainder_sphere(model: SphereModel, points: np.ndarray, lam: float,
                          order: DerivOrder) -> float:
    count = points.shape[0]
    best = 0.0
    if order.omega == 0:
        window = SpectralWindow(0.0, lam) if lam > 0 else None
        coeffs = (_sphere_coeffs(sphere_clusters(model, window))
                  if window else np.zeros(0))
        xs = np.repeat(points, count, axis=0)
        ys = np.tile(points, (count, 1))
        if coeffs.size:
            mode_part = _sphere_kernel_values(coeffs, xs, ys)
        else:
            mode_part = np.zeros(xs.shape[0])
        dists = np.arccos(np.clip(np.sum(xs * ys, axis=1), -1.0, 1.0))
        mains = np.array([ball_kernel(model.n, d, lam) for d in dists])
        vals = mode_part + 1.0 / model.volume - mains
        return float(np.max(np.abs(vals)))
    for i in range(count):
        for j in range(count):
            val = remainder_field(model, points[i], points[j], lam, order)
            best = max(best, abs(val))
    return best


def remainder_sweep(model: Model, x0, probe: ProbeGrid, lambdas,
                    order: DerivOrder | None = None,
                    threads: int = 1) -> RemainderReport:
    """Sup of |remainder_field| over probe pairs, per lam, plus the fit."""
    if order is None:
        order = DerivOrder.zero(model.dim)
    lambdas = tuple(float(l) for l in lambdas)
    if len(lambdas) < 4:
        raise ValueError("need at least 4 lambda samples for the exponent fit")
    if any(l <= 0 for l in lambdas):
        raise ValueError("lambda samples must be > 0")
    points = _probe_points(model, x0, probe)
    if points.shape[0] == 0:
        raise ValueError("empty probe grid")

    def one(lam: float) -> float:
        if isinstance(model, TorusModel):
            return _sup_remainder_torus(model, points, lam, order)
        return _sup_remainder_sphere(model, points, lam, order)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sups = tuple(pool.map(one, lambdas))
    else:
        sups = tuple(one(lam) for lam in lambdas)
    fit = scaling_exponent_fit(list(zip(lambdas, sups)))
    x0 = np.asarray(x0, dtype=float)
    return RemainderReport(model_id=model.model_id, x0=tuple(x0.tolist()),
                           order=order, lambdas=lambdas, sups=sups, fit=fit)
