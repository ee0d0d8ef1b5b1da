"""Truncated phase-space points of the classical closed string.

A state holds the zero modes (x, p) and the oscillators alpha_m, tilde
alpha_m for 1 <= m <= M; negative modes are conjugates by construction and
never stored.  The chiral momentum fields are

    P_minus(sigma) = (1/sqrt(2 pi)) sum_m alpha_m  e^{+i m sigma}
    P_plus(sigma)  = (1/sqrt(2 pi)) sum_m ~alpha_m e^{-i m sigma}

with the shared zero mode alpha_0 = p / sqrt(4 pi T), fixed so that the
total momentum integral reproduces p identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import jets as jz
from .errors import DegenerateFrame
from .numerics import TAU, grid_sigma, is_power_of_two, periodic_antiderivative

DEFAULT_TENSION = 1.0 / TAU  # alpha' = 1
DEFAULT_DECAY = 0.7
CHIRALITIES = ("+", "-")

__all__ = [
    "DEFAULT_TENSION",
    "DEFAULT_DECAY",
    "Metric",
    "minkowski",
    "eta_dot",
    "LightlikeFrame",
    "default_frame",
    "StringState",
    "FieldGrid",
    "random_state",
    "eval_field",
    "com_momentum",
    "virasoro_density",
    "position_field",
    "state_to_json",
    "state_from_json",
]


# ----------------------------------------------------------------------
# metric
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Metric:
    """Minkowski metric diag(-1, +1, ..., +1); all contractions use it."""

    dim: int

    @property
    def signs(self):
        s = np.ones(self.dim)
        s[0] = -1.0
        return s


def minkowski(dim: int) -> np.ndarray:
    """Sign vector of diag(-1, +1, ..., +1)."""
    s = np.ones(dim)
    s[0] = -1.0
    return s


def eta_dot(a, b):
    """eta-contraction over the last value axis (jet-safe)."""
    signs = minkowski(jz.value(b).shape[-1])
    return ((a * b) * signs).sum(axis=-1)


# ----------------------------------------------------------------------
# frame and state
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LightlikeFrame:
    k: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, float)
        object.__setattr__(self, "k", k)
        if k.ndim != 1 or k.shape[0] < 2:
            raise ValueError("frame vector must have dimension >= 2")
        scale = float(np.max(k * k))
        if scale == 0.0:
            raise ValueError("frame vector must be nonzero")
        if abs(float(eta_dot(k, k))) > 1e-14 * scale:
            raise ValueError("frame vector must be lightlike")
        k.setflags(write=False)


def default_frame(dim: int) -> LightlikeFrame:
    k = np.zeros(dim)
    k[0] = k[1] = 1.0
    return LightlikeFrame(k)


@dataclass(frozen=True)
class StringState:
    """Point of the truncated mode phase space.

    left/right hold alpha_m resp. ~alpha_m as complex (M, dim) arrays,
    row m-1 for mode number m.  Instances are immutable; operations on
    them are pure functions.
    """

    dim: int
    tension: float
    truncation: int
    x: np.ndarray
    p: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.tension <= 0:
            raise ValueError("tension must be positive")
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        for name, want in (("x", (self.dim,)), ("p", (self.dim,)),
                           ("left", (self.truncation, self.dim)),
                           ("right", (self.truncation, self.dim))):
            v = getattr(self, name)
            if isinstance(v, jz.Jet):
                continue  # seeded evaluation: shapes are the caller's business
            arr = np.asarray(v, float if name in ("x", "p") else complex)
            if arr.shape != want:
                raise ValueError(f"{name} must have shape {want}, got {arr.shape}")
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def alpha0(self):
        """Shared zero mode of both chiralities, p / sqrt(4 pi T)."""
        return self.p / np.sqrt(2.0 * TAU * self.tension)

    def modes(self, chirality):
        _check_chirality(chirality)
        return self.left if chirality == "-" else self.right

    def replace(self, **kw):
        data = {f: getattr(self, f) for f in ("dim", "tension", "truncation", "x", "p", "left", "right")}
        data.update(kw)
        return StringState(**data)


def _check_chirality(chirality):
    if chirality not in CHIRALITIES:
        raise ValueError(f"chirality must be '+' or '-', got {chirality!r}")


@dataclass(frozen=True)
class FieldGrid:
    """Uniform samples of a periodic field on [0, 2*pi); vector or scalar."""

    values: np.ndarray

    @property
    def n_samples(self):
        return jz.value(self.values).shape[0]

    @property
    def is_scalar(self):
        return jz.value(self.values).ndim == 1

    def sigma(self):
        return grid_sigma(self.n_samples)


# ----------------------------------------------------------------------
# generation
# ----------------------------------------------------------------------

def random_state(dim, truncation, seed, *, decay=DEFAULT_DECAY, frame=None,
                 margin=0.2, tension=DEFAULT_TENSION, max_retries=64):
    """Seeded random state with guaranteed-monotone clocks.

    Oscillators are complex Gaussian with std ~ e^{-m/decay}/m per component,
    then rescaled by one global factor so min_sigma R'(sigma) >= margin for
    both chiralities (rescaling, not rejection).  p is redrawn until
    k.p is safely nonzero.  Bit-identical output for identical arguments.
    """
    if dim < 2 or truncation < 1:
        raise ValueError("need dim >= 2 and truncation >= 1")
    if decay <= 0 or not (0.0 < margin < 1.0):
        raise ValueError("need decay > 0 and 0 < margin < 1")
    frame = frame or default_frame(dim)
    if frame.k.shape[0] != dim:
        raise ValueError("frame dimension mismatch")
    rng = np.random.default_rng(seed)

    x = rng.standard_normal(dim)
    k = frame.k
    knorm = float(np.linalg.norm(k))
    for _ in range(max_retries):
        p = rng.standard_normal(dim)
        kp = float(eta_dot(k, p))
        if abs(kp) >= 0.1 * knorm * float(np.linalg.norm(p)):
            break
    else:
        raise DegenerateFrame("could not draw p with k.p away from zero")

    std = np.exp(-np.arange(1, truncation + 1) / decay) / np.arange(1, truncation + 1)
    left = (rng.standard_normal((truncation, dim)) + 1j * rng.standard_normal((truncation, dim))) * std[:, None]
    right = (rng.standard_normal((truncation, dim)) + 1j * rng.standard_normal((truncation, dim))) * std[:, None]

    # R'_- = 1 + (sqrt(4 pi T)/k.p) sum_{m!=0} (k.alpha_m) e^{i m sigma}, same
    # structure for +; one global oscillator rescale enforces the margin.
    n_fine = max(4096, 64 * truncation)
    sig = grid_sigma(n_fine)
    coef = np.sqrt(2.0 * TAU * tension) / kp
    worst = 0.0
    for mode_rows in (left, right):
        kdot = (mode_rows * minkowski(dim)) @ k
        osc = np.zeros(n_fine)
        for m in range(1, truncation + 1):
            osc += 2.0 * np.real(coef * kdot[m - 1] * np.exp(1j * m * sig))
        worst = max(worst, float(-osc.min()))
    scale = 1.0 if worst <= (1.0 - margin) else (1.0 - margin) / worst
    return StringState(dim=dim, tension=tension, truncation=truncation,
                       x=x, p=p, left=left * scale, right=right * scale)


# ----------------------------------------------------------------------
# field evaluation
# ----------------------------------------------------------------------

def _grid_guard(state, n):
    if not is_power_of_two(n):
        raise ValueError(f"grid size {n} must be a power of two")
    if n < 4 * state.truncation:
        raise ValueError(f"grid size {n} < 4M = {4 * state.truncation}: aliasing in quadratic densities")


def _mode_spectrum(alpha0, mode_rows, n, orientation, dim):
    """Full FFT spectrum for sum_m c_m e^{orientation*i*m*sigma} with c_{-m} = conj(c_m)."""
    spec = jz.zeros((n, dim), jz.seed_count(mode_rows)) if isinstance(mode_rows, jz.Jet) \
        else np.zeros((n, dim), np.complex128)
    spec[0] = alpha0
    m_max = jz.value(mode_rows).shape[0]
    for m in range(1, m_max + 1):
        row = mode_rows[m - 1]
        spec[(orientation * m) % n] = row
        spec[(-orientation * m) % n] = np.conj(row)
    return spec


def eval_field(state: StringState, chirality: str, n: int) -> FieldGrid:
    """Samples of the chiral field P_- or P_+ on the n-grid.

    The result is real up to a checked 1e-13 relative residue, which is
    then discarded.
    """
    _check_chirality(chirality)
    _grid_guard(state, n)
    orientation = +1 if chirality == "-" else -1
    spec = _mode_spectrum(state.alpha0, state.modes(chirality), n, orientation, state.dim)
    vals = jz.ifft(spec, axis=0) * (n / np.sqrt(TAU))
    v = jz.value(vals)
    resid = float(np.max(np.abs(v.imag)))
    if resid > 1e-13 * max(float(np.max(np.abs(v.real))), 1e-300):
        raise ValueError(f"field has non-real residue {resid:.3e}")
    return FieldGrid(vals.real)


def com_momentum(state: StringState, n: int) -> np.ndarray:
    """Center-of-mass momentum integral int P dsigma by periodic trapezoid."""
    _grid_guard(state, n)
    pm = eval_field(state, "-", n).values
    pp = eval_field(state, "+", n).values
    total = np.sqrt(state.tension / 2.0) * (pm + pp)
    return total.sum(axis=0) * (TAU / n)


def virasoro_density(state: StringState, chirality: str, n: int) -> FieldGrid:
    """Scalar samples of eta(P_chir, P_chir)."""
    vals = eval_field(state, chirality, n).values
    return FieldGrid(eta_dot(vals, vals))


def position_field(state: StringState, n: int) -> FieldGrid:
    """Samples of X(sigma), reconstructed from X' = (P_+ - P_-)/sqrt(2T).

    The oscillator part comes from the spectral antiderivative; the mean is
    pinned to the stored center of mass x.
    """
    _grid_guard(state, n)
    pm = eval_field(state, "-", n).values
    pp = eval_field(state, "+", n).values
    xprime = (pp - pm) / np.sqrt(2.0 * state.tension)
    g, _ = periodic_antiderivative(xprime)
    g = g - g.mean(axis=0)
    return FieldGrid(g + state.x)


# ----------------------------------------------------------------------
# JSON round-trip (schema "stringstate-v1")
# ----------------------------------------------------------------------

def _cpx_rows(arr):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(arr)]


def _rows_cpx(rows, what):
    arr = np.asarray(rows, float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"{what} must be [[ [re, im], ... ], ...]")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(state: StringState) -> str:
    doc = {
        "format": "stringstate-v1",
        "dim": state.dim,
        "tension": float(state.tension),
        "M": state.truncation,
        "x": [float(v) for v in state.x],
        "p": [float(v) for v in state.p],
        "left": _cpx_rows(state.left),
        "right": _cpx_rows(state.right),
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def state_from_json(text: str) -> StringState:
    doc = json.loads(text)
    if doc.get("format") != "stringstate-v1":
        raise ValueError(f"unsupported state format {doc.get('format')!r}")
    return StringState(
        dim=int(doc["dim"]),
        tension=float(doc["tension"]),
        truncation=int(doc["M"]),
        x=np.asarray(doc["x"], float),
        p=np.asarray(doc["p"], float),
        left=_rows_cpx(doc["left"], "left"),
        right=_rows_cpx(doc["right"], "right"),
    )
