"""Circle reparameterizations for invariance testing.

Maps are truncated harmonic perturbations of the identity,
phi(sigma) = sigma + sum_j c_j sin(j sigma + theta_j), with the monotone
budget sum_j j*|c_j| <= 0.9 so phi' >= 0.1 everywhere by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import TAU, grid_sigma, trig_interpolate
from .phase_space import FieldGrid

__all__ = ["ReparamMap", "random_diffeo", "pullback_weight_one"]


@dataclass(frozen=True)
class ReparamMap:
    amplitudes: np.ndarray  # c_j, j = 1..J
    phases: np.ndarray      # theta_j

    def __post_init__(self):
        c = np.asarray(self.amplitudes, float)
        t = np.asarray(self.phases, float)
        if c.shape != t.shape or c.ndim != 1:
            raise ValueError("amplitudes and phases must be equal-length 1d arrays")
        j = np.arange(1, c.size + 1)
        if float(np.sum(j * np.abs(c))) > 0.9 + 1e-12:
            raise ValueError("monotone budget sum j*|c_j| <= 0.9 violated")
        for name, arr in (("amplitudes", c), ("phases", t)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def order(self):
        return self.amplitudes.size

    def __call__(self, sigma):
        out = np.asarray(sigma, float).copy()
        for j, (c, th) in enumerate(zip(self.amplitudes, self.phases), start=1):
            out += c * np.sin(j * np.asarray(sigma) + th)
        return out

    def deriv(self, sigma):
        out = np.ones_like(np.asarray(sigma, float))
        for j, (c, th) in enumerate(zip(self.amplitudes, self.phases), start=1):
            out += j * c * np.cos(j * np.asarray(sigma) + th)
        return out

    def fixes_base_point(self, tol=1e-12):
        return abs(float(self(0.0))) % TAU < tol


def random_diffeo(seed, order=3, amplitude=0.5, fix_base_point=True) -> ReparamMap:
    """Seeded random circle diffeo with sum j*c_j = amplitude (<= 0.9).

    With ``fix_base_point`` the first harmonic keeps half the budget and its
    phase solves sum_j c_j sin(theta_j) = 0 exactly, so phi(0) = 0.
    """
    if not (0.0 <= amplitude <= 0.9):
        raise ValueError("amplitude must lie in [0, 0.9]")
    if order < 1:
        raise ValueError("order must be >= 1")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.5, 1.0, order)
    theta = rng.uniform(0.0, TAU, order)
    j = np.arange(1, order + 1)
    if amplitude == 0.0:
        return ReparamMap(np.zeros(order), np.zeros(order))
    if fix_base_point:
        # j=1 keeps half the weighted budget, so c_1 >= sum_{j>=2} c_j and
        # c_1 sin(theta_1) = -sum_{j>=2} c_j sin(theta_j) is always solvable
        c = np.empty(order)
        c[0] = 0.5 * amplitude
        if order > 1:
            c[1:] = raw[1:] / np.sum(j[1:] * raw[1:]) * (0.5 * amplitude)
            s = float(np.sum(c[1:] * np.sin(theta[1:])))
        else:
            s = 0.0
        theta[0] = np.arcsin(np.clip(-s / c[0], -1.0, 1.0))
    else:
        c = raw / np.sum(j * raw) * amplitude
    return ReparamMap(c, theta)


def pullback_weight_one(field: FieldGrid, cmap) -> FieldGrid:
    """Weight-one pullback (F o phi) * phi' on the field's own grid."""
    vals = field.values
    n = vals.shape[0]
    sig = grid_sigma(n)
    pts = cmap(sig)
    moved = trig_interpolate(vals, pts)
    moved = moved.real if np.max(np.abs(moved.imag)) <= 1e-10 * (1.0 + np.max(np.abs(moved.real))) else moved
    dphi = cmap.deriv(sig)
    out = moved * (dphi[:, None] if moved.ndim == 2 else dphi)
    return FieldGrid(out)
