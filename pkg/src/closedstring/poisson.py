"""Poisson brackets on the truncated mode phase space.

The chart flattens a state into the real vector
(x, p, Re alpha, Im alpha, Re ~alpha, Im ~alpha); the bracket matrix
pairs {x^mu, p^nu} = eta^{mu nu} and {Re alpha_m^mu, Im alpha_m^nu} =
(m/2) eta^{mu nu} per chirality, which reproduces the oscillator brackets
{alpha_m^mu, alpha_n^nu} = -i m eta^{mu nu} delta_{m+n,0}.  These mode
brackets are validated against the smeared canonical pairing before any
invariance claim is trusted.

Gradients are propagated forward through the evaluation pipeline with
jets (monotone inversion included, via the implicit-function relation)
and cross-checked against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as jz
from .ddf import DDFInvariantSpec, ddf_invariant
from .errors import GradientMismatch
from .numerics import TAU, grid_sigma
from .phase_space import (LightlikeFrame, StringState, eta_dot, eval_field,
                          minkowski, position_field)
from .pohlmeyer import InvariantSpec, pohlmeyer_invariant

DEFAULT_OBS_GRID = 512

__all__ = [
    "DEFAULT_OBS_GRID",
    "CoordinateChart",
    "Observable",
    "gradient",
    "finite_difference_gradient",
    "bracket",
    "virasoro_mode",
    "invariance_report",
    "coordinate_observable",
    "pohlmeyer_observable",
    "ddf_invariant_observable",
    "smeared_position_observable",
    "smeared_momentum_observable",
    "product_observable",
    "observable_from_config",
]


# ----------------------------------------------------------------------
# chart
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateChart:
    """Bijective flattening of a state into a real coordinate vector."""

    dim: int
    truncation: int

    @property
    def size(self):
        return 2 * self.dim + 4 * self.truncation * self.dim

    def _blocks(self):
        d, m = self.dim, self.truncation
        edges = np.cumsum([0, d, d, m * d, m * d, m * d, m * d])
        names = ("x", "p", "re_left", "im_left", "re_right", "im_right")
        return {nm: slice(int(a), int(b)) for nm, a, b in zip(names, edges[:-1], edges[1:])}

    def pack(self, state: StringState) -> np.ndarray:
        b = self._blocks()
        y = np.empty(self.size)
        y[b["x"]] = state.x
        y[b["p"]] = state.p
        y[b["re_left"]] = state.left.real.ravel()
        y[b["im_left"]] = state.left.imag.ravel()
        y[b["re_right"]] = state.right.real.ravel()
        y[b["im_right"]] = state.right.imag.ravel()
        return y

    def unpack(self, y, template: StringState) -> StringState:
        b = self._blocks()
        md = (self.truncation, self.dim)
        return template.replace(
            x=np.asarray(y[b["x"]], float),
            p=np.asarray(y[b["p"]], float),
            left=(y[b["re_left"]] + 1j * y[b["im_left"]]).reshape(md),
            right=(y[b["re_right"]] + 1j * y[b["im_right"]]).reshape(md),
        )

    def seed_state(self, state: StringState) -> StringState:
        """State whose fields are jets seeded with the chart identity."""
        b = self._blocks()
        s = self.size
        md = (self.truncation, self.dim)
        x = jz.Jet(state.x.astype(float), _identity_seeds(b["x"], (self.dim,), s, 1.0))
        p = jz.Jet(state.p.astype(float), _identity_seeds(b["p"], (self.dim,), s, 1.0))
        left = jz.Jet(state.left.astype(complex),
                      _identity_seeds(b["re_left"], md, s, 1.0) + _identity_seeds(b["im_left"], md, s, 1.0j))
        right = jz.Jet(state.right.astype(complex),
                       _identity_seeds(b["re_right"], md, s, 1.0) + _identity_seeds(b["im_right"], md, s, 1.0j))
        return state.replace(x=x, p=p, left=left, right=right)

    def omega(self) -> np.ndarray:
        """Dense bracket matrix Omega^{ab} = {y^a, y^b}."""
        b = self._blocks()
        d, m = self.dim, self.truncation
        eta = np.diag(minkowski(d))
        omega = np.zeros((self.size, self.size))
        omega[b["x"], b["p"]] = eta
        omega[b["p"], b["x"]] = -eta
        for sector in ("left", "right"):
            re, im = b[f"re_{sector}"], b[f"im_{sector}"]
            blk = np.kron(np.diag(np.arange(1, m + 1) / 2.0), eta)
            omega[re, im] = blk
            omega[im, re] = -blk
        return omega

    def omega_norm(self) -> float:
        return float(np.linalg.norm(self.omega(), 2))

    def labels(self):
        b = self._blocks()
        out = [""] * self.size
        for name, sl in b.items():
            for i, j in enumerate(range(sl.start, sl.stop)):
                if name in ("x", "p"):
                    out[j] = f"{name}[{i}]"
                else:
                    out[j] = f"{name}[m={i // self.dim + 1},mu={i % self.dim}]"
        return out


def _identity_seeds(sl, shape, size, factor):
    t = np.zeros(shape + (size,), complex)
    flat = t.reshape(-1, size)
    for row, col in enumerate(range(sl.start, sl.stop)):
        flat[row, col] = factor
    return t


def chart_for(state: StringState) -> CoordinateChart:
    return CoordinateChart(state.dim, state.truncation)


# ----------------------------------------------------------------------
# observables
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Observable:
    """Named smooth map StringState -> complex, evaluable on jet states."""

    name: str
    fn: object

    def __call__(self, state: StringState):
        return self.fn(state)


def coordinate_observable(chart: CoordinateChart, index: int) -> Observable:
    labels = chart.labels()

    def fn(state):
        b = chart._blocks()
        for name, sl in b.items():
            if sl.start <= index < sl.stop:
                i = index - sl.start
                if name == "x":
                    return state.x[i]
                if name == "p":
                    return state.p[i]
                sector = state.left if name.endswith("left") else state.right
                entry = sector[i // chart.dim, i % chart.dim]
                part = entry.real if name.startswith("re") else entry.imag
                return part
        raise IndexError(index)

    return Observable(name=f"coord:{labels[index]}", fn=fn)


def pohlmeyer_observable(spec: InvariantSpec, n_samples=DEFAULT_OBS_GRID) -> Observable:
    word = ",".join(str(i) for i in spec.indices)
    tag = "sym" if spec.symmetrized else "raw"

    def fn(state):
        return pohlmeyer_invariant(eval_field(state, spec.chirality, n_samples), spec)

    return Observable(name=f"Z[{spec.chirality}]({word},{tag})", fn=fn)


def ddf_invariant_observable(spec: DDFInvariantSpec, frame: LightlikeFrame,
                             n_samples=DEFAULT_OBS_GRID) -> Observable:
    def fn(state):
        return ddf_invariant(state, frame, spec, n_samples)

    tag = "matched" if spec.is_matched else "unmatched"
    return Observable(name=f"D[L={spec.left},R={spec.right},N={spec.level},{tag}]", fn=fn)


def virasoro_mode(state: StringState, chirality: str, m: int,
                  n_samples=DEFAULT_OBS_GRID) -> Observable:
    """L_m (chirality -) or ~L_m (chirality +) as an observable.

    L_m = (1/2) oint e^{-i m sigma} eta(P_-, P_-) dsigma and the mirrored
    phase for +; |m| <= M keeps the window aliasing-safe on the truncated
    space.
    """
    if abs(m) > state.truncation:
        raise ValueError(f"|m| = {abs(m)} exceeds the truncation M = {state.truncation}")
    sign = -1.0 if chirality == "-" else +1.0
    phase = np.exp(sign * 1j * m * grid_sigma(n_samples))

    def fn(st):
        vals = eval_field(st, chirality, n_samples).values
        dens = eta_dot(vals, vals)
        return 0.5 * (TAU / n_samples) * (dens * phase).sum(axis=0)

    label = "L" if chirality == "-" else "Lt"
    return Observable(name=f"{label}[{m}]", fn=fn)


def smeared_position_observable(harmonic: int, kind: str, e: np.ndarray,
                                n_samples=DEFAULT_OBS_GRID) -> Observable:
    """int phi(sigma) eta(e, X(sigma)) dsigma with phi = cos/sin(harmonic*sigma)."""
    phi = _test_function(harmonic, kind, n_samples)
    e = np.asarray(e, float)

    def fn(state):
        x = position_field(state, n_samples).values
        return (eta_dot(x, e) * phi).sum(axis=0) * (TAU / n_samples)

    return Observable(name=f"smearX[{kind}{harmonic},e={e.tolist()}]", fn=fn)


def smeared_momentum_observable(harmonic: int, kind: str, e: np.ndarray,
                                n_samples=DEFAULT_OBS_GRID) -> Observable:
    """int psi(sigma) eta(e, P(sigma)) dsigma, P = sqrt(T/2)(P_+ + P_-)."""
    psi = _test_function(harmonic, kind, n_samples)
    e = np.asarray(e, float)

    def fn(state):
        total = np.sqrt(state.tension / 2.0) * (eval_field(state, "-", n_samples).values
                                                + eval_field(state, "+", n_samples).values)
        return (eta_dot(total, e) * psi).sum(axis=0) * (TAU / n_samples)

    return Observable(name=f"smearP[{kind}{harmonic},e={e.tolist()}]", fn=fn)


def _test_function(harmonic, kind, n):
    sig = grid_sigma(n)
    if kind == "cos":
        return np.cos(harmonic * sig)
    if kind == "sin":
        return np.sin(harmonic * sig)
    raise ValueError("kind must be 'cos' or 'sin'")


def product_observable(f: Observable, g: Observable) -> Observable:
    return Observable(name=f"({f.name})*({g.name})", fn=lambda s: f.fn(s) * g.fn(s))


def observable_from_config(cfg: dict, frame: LightlikeFrame,
                           n_samples=DEFAULT_OBS_GRID, state: StringState | None = None) -> Observable:
    """Build an observable from its JSON description (CLI surface)."""
    kind = cfg.get("type")
    if kind is None and "indices" in cfg:
        kind = "pohlmeyer"  # bare invariant request {"chirality","indices","symmetrized"}
    if kind == "pohlmeyer":
        spec = InvariantSpec(chirality=cfg["chirality"], indices=cfg["indices"],
                             symmetrized=bool(cfg.get("symmetrized", False)))
        return pohlmeyer_observable(spec, cfg.get("n", n_samples))
    if kind == "virasoro":
        if state is None:
            raise ValueError("virasoro observable needs a state for the mode window")
        return virasoro_mode(state, cfg["chirality"], int(cfg["m"]), cfg.get("n", n_samples))
    if kind == "ddf":
        spec = DDFInvariantSpec(left=[tuple(t) for t in cfg.get("left", [])],
                                right=[tuple(t) for t in cfg.get("right", [])],
                                level=int(cfg["level"]),
                                allow_unmatched=bool(cfg.get("allow_unmatched", False)))
        return ddf_invariant_observable(spec, frame, cfg.get("n", n_samples))
    raise ValueError(f"unknown observable type {kind!r}")


# ----------------------------------------------------------------------
# gradients and brackets
# ----------------------------------------------------------------------

def gradient(obs: Observable, state: StringState, chart: CoordinateChart | None = None,
             *, check: bool = True, fd_step: float = 1e-5,
             mismatch_tol: float = 1e-3) -> np.ndarray:
    """Chart gradient of the observable, propagated with forward-mode jets.

    With ``check`` the result is compared against central finite differences
    with step h_i = fd_step*(1 + |y_i|); disagreement beyond mismatch_tol
    (relative to the gradient scale) raises GradientMismatch.  The
    propagated value is returned either way.
    """
    chart = chart or chart_for(state)
    out = obs.fn(chart.seed_state(state))
    if not isinstance(out, jz.Jet):
        return np.zeros(chart.size, complex)
    grad = np.asarray(out.tan, complex)
    if check:
        fd = finite_difference_gradient(obs, state, chart, step=fd_step)
        scale = max(float(np.max(np.abs(grad))), float(np.max(np.abs(fd))), 1e-300)
        err = np.abs(grad - fd)
        tol = mismatch_tol * (np.abs(grad) + scale)
        if np.any(err > tol):
            worst = int(np.argmax(err - tol))
            raise GradientMismatch(
                f"{obs.name}: component {worst} propagated={grad[worst]:.6e} fd={fd[worst]:.6e}")
    return grad


def finite_difference_gradient(obs: Observable, state: StringState,
                               chart: CoordinateChart | None = None,
                               step: float = 1e-5) -> np.ndarray:
    chart = chart or chart_for(state)
    y0 = chart.pack(state)
    out = np.zeros(chart.size, complex)
    for i in range(chart.size):
        h = step * (1.0 + abs(y0[i]))
        yp, ym = y0.copy(), y0.copy()
        yp[i] += h
        ym[i] -= h
        fp = complex(jz.value(obs.fn(chart.unpack(yp, state))))
        fm = complex(jz.value(obs.fn(chart.unpack(ym, state))))
        out[i] = (fp - fm) / (2.0 * h)
    return out


def bracket(f: Observable, g: Observable, state: StringState,
            chart: CoordinateChart | None = None, *, check: bool = True,
            grads: dict | None = None) -> complex:
    """{f, g} = grad f . Omega . grad g at the state (complex bilinear).

    Gradients inherit the finite-difference cross-check (and its
    GradientMismatch) unless ``check`` is disabled; sweeps that reuse
    cached gradients do that and rely on the dedicated cross-validation
    tests instead.
    """
    chart = chart or chart_for(state)
    gf = _cached_grad(f, state, chart, check, grads)
    gg = _cached_grad(g, state, chart, check, grads)
    return complex(gf @ (chart.omega() @ gg))


def _cached_grad(obs, state, chart, check, grads):
    if grads is not None and obs.name in grads:
        return grads[obs.name]
    g = gradient(obs, state, chart, check=check)
    if grads is not None:
        grads[obs.name] = g
    return g


def invariance_report(obs: Observable, state: StringState, m_window: int,
                      chart: CoordinateChart | None = None,
                      n_samples=DEFAULT_OBS_GRID, threshold: float = 1e-5,
                      check_gradients: bool = False,
                      grad_cache: dict | None = None) -> list:
    """Normalized residues |{obs, L_m}| over the Virasoro window.

    Residues are |{obs, L_m}| / (||grad obs|| ||grad L_m|| ||Omega||), so the
    pass threshold is scale-free.  Rows are sorted by (chirality, m).
    ``grad_cache`` (keyed by (chirality, m, n_samples)) lets sweeps over many
    observables reuse the constraint gradients.
    """
    if m_window > state.truncation // 2:
        raise ValueError("m_window must be <= M/2 for an aliasing-safe sweep")
    chart = chart or chart_for(state)
    omega = chart.omega()
    onorm = float(np.linalg.norm(omega, 2))
    gobs = gradient(obs, state, chart, check=check_gradients)
    nobs = float(np.linalg.norm(gobs))
    rows = []
    for chirality in ("+", "-"):
        for m in range(-m_window, m_window + 1):
            key = (chirality, m, n_samples)
            if grad_cache is not None and key in grad_cache:
                gl = grad_cache[key]
            else:
                lm = virasoro_mode(state, chirality, m, n_samples)
                gl = gradient(lm, state, chart, check=check_gradients)
                if grad_cache is not None:
                    grad_cache[key] = gl
            resid = abs(complex(gobs @ (omega @ gl)))
            denom = nobs * float(np.linalg.norm(gl)) * onorm
            resid = resid / max(denom, 1e-300)
            rows.append({
                "observable": obs.name,
                "m": m,
                "chirality": chirality,
                "residue": resid,
                "pass": bool(resid <= threshold),
            })
    rows.sort(key=lambda r: (r["chirality"], r["m"]))
    return rows
