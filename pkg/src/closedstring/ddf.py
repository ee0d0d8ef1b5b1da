"""Reparameterization clocks R, DDF modes and invariants, reconstructions.

The clock of each chirality,

    R_-(sigma) = -(4 pi T / k.p) k.X_-(sigma),
    R_+(sigma) = +(4 pi T / k.p) k.X_+(sigma),

is a monotone degree-one circle map (away from a measure-zero set), and the
DDF modes are its Fourier-like integrals

    A_m       = (1/sqrt(2 pi)) int P_-(sigma) e^{-i m R_-(sigma)} dsigma,
    tilde A_m = (1/sqrt(2 pi)) int P_+(sigma) e^{+i m R_+(sigma)} dsigma.

Quasi-local fields are recovered either by the mode sum over A_m or by the
direct weight-one substitution through R^{-1}; the two agree up to mode
truncation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import jets as jz
from .errors import DegenerateFrame, LevelMismatch, NonMonotone
from .numerics import (TAU, MonotoneCircleMap, grid_sigma, invert_monotone,
                       is_power_of_two, trig_interpolate)
from .phase_space import FieldGrid, LightlikeFrame, StringState, eta_dot, eval_field

__all__ = [
    "DDFModes",
    "DDFInvariantSpec",
    "zero_mode_phase",
    "compute_R",
    "ddf_modes",
    "strip_zero_mode",
    "ddf_invariant",
    "reconstruct_field",
    "reconstruct_field_direct",
    "ddfmodes_to_json",
    "ddfmodes_from_json",
]


# ----------------------------------------------------------------------
# types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DDFModes:
    """Complex mode vectors, row m + m_max for mode number m in [-m_max, m_max]."""

    chirality: str
    m_max: int
    modes: np.ndarray  # (2*m_max + 1, dim)
    k: np.ndarray      # frame vector the modes were built with

    def mode(self, m):
        if abs(m) > self.m_max:
            raise IndexError(f"|m| = {abs(m)} exceeds m_max = {self.m_max}")
        return self.modes[m + self.m_max]

    @property
    def dim(self):
        return jz.value(self.modes).shape[1]


@dataclass(frozen=True)
class DDFInvariantSpec:
    """Factor lists [(mu_i, m_i)] / [(nu_j, ~m_j)] and the level N.

    Level matching sum(m_i) = N = sum(~m_j) is enforced at construction
    unless ``allow_unmatched`` is set (negative-control invariants).
    """

    left: tuple
    right: tuple
    level: int
    allow_unmatched: bool = False

    def __post_init__(self):
        object.__setattr__(self, "left", tuple((int(mu), int(m)) for mu, m in self.left))
        object.__setattr__(self, "right", tuple((int(nu), int(m)) for nu, m in self.right))
        if not self.allow_unmatched and not self.is_matched:
            raise LevelMismatch(
                f"sum(left)={self.left_sum}, sum(right)={self.right_sum}, level={self.level}")

    @property
    def left_sum(self):
        return sum(m for _, m in self.left)

    @property
    def right_sum(self):
        return sum(m for _, m in self.right)

    @property
    def is_matched(self):
        return self.left_sum == self.level == self.right_sum


# ----------------------------------------------------------------------
# clocks
# ----------------------------------------------------------------------

def _kp(state, frame):
    kp = eta_dot(frame.k, state.p)
    if abs(float(jz.value(kp))) < 1e-12:
        raise DegenerateFrame("k.p vanishes for this state")
    return kp


def zero_mode_phase(state: StringState, frame: LightlikeFrame):
    """phi0 = (4 pi T / k.p) k.x, the x-dependent phase carried by both clocks."""
    return (2.0 * TAU * state.tension) * eta_dot(frame.k, state.x) / _kp(state, frame)


def compute_R(state: StringState, frame: LightlikeFrame, chirality: str, n: int,
              require_monotone: bool = True) -> MonotoneCircleMap:
    """The clock R_chir on the n-grid, with its derivative samples.

    The derivative comes from the independent mode formula
    R' = (2 pi sqrt(2T)/k.p) k.P_chir rather than from differentiating the
    samples; the two agree spectrally and are cross-checked in tests.
    """
    if not is_power_of_two(n):
        raise ValueError("grid size must be a power of two")
    if n < 4 * state.truncation:
        raise ValueError(f"grid size {n} < 4M")
    kp = _kp(state, frame)
    phi0 = zero_mode_phase(state, frame)
    rows = state.modes(chirality)
    kdot = _k_dot_rows(rows, frame.k)
    root = np.sqrt(2.0 * TAU * state.tension)  # sqrt(4 pi T)
    sig = grid_sigma(n)

    orientation = +1 if chirality == "-" else -1
    sign_phi = -1.0 if chirality == "-" else +1.0
    m_max = jz.value(rows).shape[0]

    rho = sign_phi * phi0 + _zero_like(sig, rows)
    drv = 1.0 + _zero_like(sig, rows)
    for m in range(1, m_max + 1):
        phase = np.exp(1j * orientation * m * sig)
        coeff = sign_phi * 1j * root * kdot[m - 1] / (m * kp)
        rho = rho + 2.0 * (coeff * phase).real
        drv = drv + 2.0 * ((root * kdot[m - 1] / kp) * phase).real
    cmap = MonotoneCircleMap(periodic=rho, deriv=drv)
    if require_monotone and cmap.min_deriv() <= 0.0:
        raise NonMonotone(f"min R' = {cmap.min_deriv():.3e} <= 0 for chirality {chirality}")
    return cmap


def _k_dot_rows(rows, k):
    signs = np.ones(k.shape[0])
    signs[0] = -1.0
    return rows @ (k * signs)


def _zero_like(sig, rows):
    if isinstance(rows, jz.Jet):
        return jz.Jet(np.zeros_like(sig), np.zeros(sig.shape + (rows.tan.shape[-1],)))
    return np.zeros_like(sig)


# ----------------------------------------------------------------------
# DDF modes
# ----------------------------------------------------------------------

def _mode_integrals(state, frame, chirality, ms, n):
    """Quadrature of (1/sqrt(2 pi)) int P e^{-+ i m R} dsigma for each m in ms."""
    if n < 8 * max(state.truncation, max((abs(m) for m in ms), default=1)):
        raise ValueError("grid size must be >= 8*max(M, m_out) for the clock quadrature")
    cmap = compute_R(state, frame, chirality, n)
    rvals = cmap.values()
    field = eval_field(state, chirality, n).values
    sign = -1.0 if chirality == "-" else +1.0
    marr = np.asarray(ms, float)
    weights = np.exp(sign * 1j * marr[:, None] * _row(rvals))
    return (weights @ field) * (TAU / n) / np.sqrt(TAU)


def _row(v):
    return v[None, :] if not isinstance(v, jz.Jet) else jz.Jet(v.val[None, :], v.tan[None, :, :])


def ddf_modes(state: StringState, frame: LightlikeFrame, chirality: str,
              m_out: int, n: int) -> DDFModes:
    """All DDF modes |m| <= m_out of one chirality."""
    if m_out < 0:
        raise ValueError("m_out must be >= 0")
    ms = range(-m_out, m_out + 1)
    modes = _mode_integrals(state, frame, chirality, list(ms), n)
    return DDFModes(chirality=chirality, m_max=m_out, modes=modes, k=frame.k)


def strip_zero_mode(modes: DDFModes, state: StringState, frame: LightlikeFrame) -> DDFModes:
    """Remove the k.x phase: a_m = A_m e^{-i m phi0} (x-independent by construction)."""
    phi0 = zero_mode_phase(state, frame)
    ms = np.arange(-modes.m_max, modes.m_max + 1, dtype=float)
    phases = np.exp(-1j * _col(ms) * phi0)
    return DDFModes(chirality=modes.chirality, m_max=modes.m_max,
                    modes=modes.modes * phases, k=modes.k)


def _col(ms):
    return ms[:, None]


def ddf_invariant(state: StringState, frame: LightlikeFrame, spec: DDFInvariantSpec,
                  n: int):
    """Composite invariant prod a_{m_i}^{mu_i} prod ~a_{~m_j}^{nu_j} e^{i N phi0}.

    Level-matched specs Poisson-commute with both Virasoro families; the
    level phase uses the same phi0 as strip_zero_mode so that matching
    cancels the x-dependence between the two factorizations.
    """
    if not spec.allow_unmatched and not spec.is_matched:
        raise LevelMismatch("spec is not level-matched")
    phi0 = zero_mode_phase(state, frame)
    out = np.exp(1j * float(spec.level) * phi0)
    for chir, factors in (("-", spec.left), ("+", spec.right)):
        if not factors:
            continue
        ms = sorted({m for _, m in factors})
        raw = _mode_integrals(state, frame, chir, ms, n)
        lookup = {m: i for i, m in enumerate(ms)}
        for mu, m in factors:
            stripped = raw[lookup[m], mu] * np.exp(-1j * float(m) * phi0)
            out = out * stripped
    return out


# ----------------------------------------------------------------------
# reconstructions
# ----------------------------------------------------------------------

def reconstruct_field(modes: DDFModes, n: int) -> FieldGrid:
    """Mode-sum quasi-local field, (1/sqrt(2 pi)) sum_m A_m e^{+-i m sigma}."""
    if modes.m_max > n // 2 - 1:
        raise ValueError("m_max exceeds n/2 - 1")
    if not is_power_of_two(n):
        raise ValueError("grid size must be a power of two")
    orientation = +1 if modes.chirality == "-" else -1
    dim = modes.dim
    spec = jz.zeros((n, dim), jz.seed_count(modes.modes)) if isinstance(modes.modes, jz.Jet) \
        else np.zeros((n, dim), np.complex128)
    for m in range(-modes.m_max, modes.m_max + 1):
        spec[(orientation * m) % n] = modes.mode(m)
    vals = jz.ifft(spec, axis=0) * (n / np.sqrt(TAU))
    v = jz.value(vals)
    resid = float(np.max(np.abs(v.imag)))
    if resid > 1e-8 * max(float(np.max(np.abs(v.real))), 1e-300):
        raise ValueError(f"reconstructed field has non-real residue {resid:.3e}")
    return FieldGrid(vals.real)


def reconstruct_field_direct(state: StringState, frame: LightlikeFrame,
                             chirality: str, n: int) -> FieldGrid:
    """Direct substitution (R^{-1})'(sigma) * P(R^{-1}(sigma))."""
    cmap = compute_R(state, frame, chirality, n)
    inv = invert_monotone(cmap)
    field = eval_field(state, chirality, n).values
    moved = trig_interpolate(field, inv.values())
    moved = moved.real
    out = moved * _col_like(inv.deriv, moved)
    return FieldGrid(out)


def _col_like(w, ref):
    if jz.value(ref).ndim == 1:
        return w
    return w[:, None] if not isinstance(w, jz.Jet) else jz.Jet(w.val[:, None], w.tan[:, None, :])


# ----------------------------------------------------------------------
# JSON (schema "ddfmodes-v1")
# ----------------------------------------------------------------------

def ddfmodes_to_json(modes: DDFModes) -> str:
    arr = np.asarray(jz.value(modes.modes))
    doc = {
        "format": "ddfmodes-v1",
        "chirality": modes.chirality,
        "m_max": modes.m_max,
        "k": [float(v) for v in modes.k],
        "modes": [[[float(z.real), float(z.imag)] for z in row] for row in arr],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def ddfmodes_from_json(text: str) -> DDFModes:
    doc = json.loads(text)
    if doc.get("format") != "ddfmodes-v1":
        raise ValueError(f"unsupported modes format {doc.get('format')!r}")
    arr = np.asarray(doc["modes"], float)
    modes = arr[..., 0] + 1j * arr[..., 1]
    return DDFModes(chirality=doc["chirality"], m_max=int(doc["m_max"]),
                    modes=modes, k=np.asarray(doc["k"], float))
