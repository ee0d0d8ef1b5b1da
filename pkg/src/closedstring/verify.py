"""Named verification suites producing machine-readable report rows.

Each suite maps a state to a list of check rows {name, inputs, measured,
tolerance, comparison, pass}.  Rows with comparison "le" pass when
measured <= tolerance; negative controls use "ge".  Checks across states
run in a thread pool (pure functions, so row content is independent of
the thread count); row order is canonical.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import jets as jz
from .ddf import DDFInvariantSpec, compute_R, ddf_modes, reconstruct_field
from .numerics import TAU, grid_sigma, invert_monotone, trig_interpolate
from .phase_space import eval_field, state_to_json
from .pohlmeyer import InvariantSpec, pohlmeyer_invariant, pohlmeyer_via_ddf, reparam_check
from .poisson import (chart_for, ddf_invariant_observable, gradient,
                      invariance_report, pohlmeyer_observable, virasoro_mode)
from .reparam import pullback_weight_one, random_diffeo

THREAD_ENV = "CLOSEDSTRING_THREADS"

DEFAULT_TOLERANCES = {
    "reality": 1e-13,
    "periodicity": 1e-10,
    "transversality": 1e-10,
    "shuffle2": 1e-10,
    "shuffle3": 1e-9,
    "reparam": 1e-8,
    "substitution": 1e-6,
    "poisson": 1e-5,
    "witt": 1e-5,
    "negative-controls": 1e-2,
}

SUITES = {}


def _suite(name):
    def deco(fn):
        SUITES[name] = fn
        return fn
    return deco


def _row(name, digest, measured, tol, comparison="le"):
    ok = measured <= tol if comparison == "le" else measured >= tol
    return {
        "name": name,
        "inputs": digest,
        "measured": float(measured),
        "tolerance": float(tol),
        "comparison": comparison,
        "pass": bool(ok),
    }


def _digest(state, **extras):
    payload = {"state": state_to_json(state), **{k: repr(v) for k, v in extras.items()}}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _eta_signs(dim):
    s = np.ones(dim)
    s[0] = -1.0
    return s


def _power_scale(field, degree):
    peak = TAU * float(np.max(np.abs(field.values)))
    out = 1.0
    for j in range(1, degree + 1):
        out *= peak / j
    return out


class RotationMap:
    """Rigid rotation phi(sigma) = sigma + c, pullback-compatible."""

    def __init__(self, c):
        self.c = float(c)

    def __call__(self, sigma):
        return np.asarray(sigma, float) + self.c

    def deriv(self, sigma):
        return np.ones_like(np.asarray(sigma, float))

    def fixes_base_point(self, tol=1e-12):
        return abs(self.c) % TAU < tol


# ----------------------------------------------------------------------
# suites
# ----------------------------------------------------------------------

@_suite("reality")
def suite_reality(state, frame, params, tols):
    from .phase_space import _mode_spectrum

    n = params["n"]
    tol = tols["reality"]
    rows = []
    for chir in ("-", "+"):
        orientation = +1 if chir == "-" else -1
        spec = _mode_spectrum(state.alpha0, state.modes(chir), n, orientation, state.dim)
        vals = np.fft.ifft(spec, axis=0) * (n / np.sqrt(TAU))
        resid = float(np.max(np.abs(vals.imag))) / max(float(np.max(np.abs(vals.real))), 1e-300)
        rows.append(_row(f"reality[{chir}]", _digest(state, n=n), resid, tol))
    return rows


@_suite("periodicity")
def suite_periodicity(state, frame, params, tols):
    n = params["n"]
    tol = tols["periodicity"]
    rows = []
    for chir in ("-", "+"):
        cmap = compute_R(state, frame, chir, n)
        inv = invert_monotone(cmap)
        # winding R(sigma+2pi) = R(sigma)+2pi is exact by representation;
        # measure R(R^-1(sigma)) = sigma through R's exact interpolant
        pts = inv.values()
        fwd = pts + trig_interpolate(cmap.periodic, pts).real
        err = float(np.max(np.abs(fwd - grid_sigma(n))))
        rows.append(_row(f"roundtrip[{chir}]", _digest(state, n=n), err, tol))
    return rows


@_suite("transversality")
def suite_transversality(state, frame, params, tols):
    n, m_out = params["n"], params["m_out"]
    tol = tols["transversality"]
    rows = []
    for chir in ("-", "+"):
        modes = ddf_modes(state, frame, chir, m_out, n)
        kdots = np.abs(modes.modes @ (frame.k * _eta_signs(state.dim)))
        kdots[m_out] = 0.0  # m = 0 carries the full k.p
        resid = float(kdots.max()) / max(float(np.max(np.abs(modes.modes))), 1e-300)
        rows.append(_row(f"transversality[{chir}]", _digest(state, n=n, m_out=m_out), resid, tol))
    return rows


@_suite("shuffle")
def suite_shuffle(state, frame, params, tols):
    n = params["n"]
    field = eval_field(state, "-", n)
    d = state.dim
    rows = []

    z1 = {mu: pohlmeyer_invariant(field, InvariantSpec("-", (mu,))) for mu in range(d)}
    z2 = {(mu, nu): pohlmeyer_invariant(field, InvariantSpec("-", (mu, nu)))
          for mu in range(d) for nu in range(d)}
    scale2 = max(abs(v) for v in z2.values()) + max(abs(v) ** 2 for v in z1.values())
    worst2 = max(abs(z1[mu] * z1[nu] - z2[(mu, nu)] - z2[(nu, mu)]) / scale2
                 for mu in range(d) for nu in range(d))
    rows.append(_row("shuffle[deg2]", _digest(state, n=n), worst2, tols["shuffle2"]))

    words = [(0, 1, 2), (1, 0, 2), (2, 3, 0), (3, 1, 1)] if d >= 4 else [(0, 1, 1)]
    needed = {w for mu, nu, rho in words for w in ((mu, nu, rho), (nu, mu, rho), (nu, rho, mu))}
    z3 = {w: pohlmeyer_invariant(field, InvariantSpec("-", w)) for w in needed}
    scale3 = max(abs(v) for v in z3.values()) + max(abs(v) ** 3 for v in z1.values())
    worst3 = max(abs(z1[mu] * z2[(nu, rho)]
                     - z3[(mu, nu, rho)] - z3[(nu, mu, rho)] - z3[(nu, rho, mu)]) / scale3
                 for mu, nu, rho in words)
    rows.append(_row("shuffle[deg3]", _digest(state, n=n), worst3, tols["shuffle3"]))
    return rows


@_suite("reparam")
def suite_reparam(state, frame, params, tols):
    n = params["n"]
    tol = tols["reparam"]
    field = eval_field(state, "-", n)
    rows = []

    spec_raw = InvariantSpec("-", (0, 1))
    worst_raw = 0.0
    for seed in range(5):
        cmap = random_diffeo(seed, order=3, amplitude=0.5, fix_base_point=True)
        direct, pulled = reparam_check(field, cmap, spec_raw)
        worst_raw = max(worst_raw, abs(direct - pulled) / (abs(direct) + _power_scale(field, 2)))
    rows.append(_row("reparam[raw,fixed-base]", _digest(state, n=n), worst_raw, tol))

    spec_sym = InvariantSpec("-", (0, 1), symmetrized=True)
    direct = pohlmeyer_invariant(field, spec_sym)
    worst_sym = 0.0
    for j in range(5):
        pulled = pohlmeyer_invariant(pullback_weight_one(field, RotationMap(0.5 + 1.1 * j)), spec_sym)
        worst_sym = max(worst_sym, abs(direct - pulled) / (abs(direct) + _power_scale(field, 2)))
    rows.append(_row("reparam[symmetrized,rotations]", _digest(state, n=n), worst_sym, tol))
    return rows


@_suite("substitution")
def suite_substitution(state, frame, params, tols):
    from .pohlmeyer import align_base_point

    n, m_out = params["n"], params["m_out"]
    tol = tols["substitution"]
    rows = []
    for chir in ("-", "+"):
        field = eval_field(state, chir, n)
        # one extraction per chirality; the invariants share the rebuilt field
        aligned = align_base_point(ddf_modes(state, frame, chir, m_out, n),
                                   compute_R(state, frame, chir, n))
        rebuilt = reconstruct_field(aligned, n)
        for deg in (1, 2, 3, 4):
            word = tuple(i % state.dim for i in range(deg))
            spec = InvariantSpec(chir, word)
            direct = pohlmeyer_invariant(field, spec)
            via = pohlmeyer_invariant(rebuilt, spec)
            scale = abs(direct) + _power_scale(field, deg)
            rows.append(_row(f"substitution[{chir},n={deg}]",
                             _digest(state, n=n, m_out=m_out, deg=deg),
                             abs(direct - via) / scale, tol))
    return rows


@_suite("poisson")
def suite_poisson(state, frame, params, tols):
    window = params["m_window"]
    n = params["obs_n"]
    tol = tols["poisson"]
    rows = []
    specs = [InvariantSpec("-", (0,)),
             InvariantSpec("-", (0, 1), symmetrized=True),
             InvariantSpec("+", (1, 2), symmetrized=True)]
    observables = [pohlmeyer_observable(s, n) for s in specs]
    observables.append(ddf_invariant_observable(
        DDFInvariantSpec(left=[(1, 1)], right=[(2, 1)], level=1), frame, n))
    for obs in observables:
        rep = invariance_report(obs, state, window, n_samples=n, threshold=tol)
        rows.append(_row(f"poisson[{obs.name}]", _digest(state, window=window),
                         max(r["residue"] for r in rep), tol))
    return rows


@_suite("witt")
def suite_witt(state, frame, params, tols):
    window = params["m_window"]
    n = params["obs_n"]
    tol = tols["witt"]
    chart = chart_for(state)
    omega = chart.omega()
    onorm = float(np.linalg.norm(omega, 2))
    grads, values = {}, {}
    for m in range(-2 * window, 2 * window + 1):
        if abs(m) <= state.truncation:
            lm = virasoro_mode(state, "-", m, n)
            grads[m] = gradient(lm, state, chart, check=False)
            values[m] = complex(jz.value(lm.fn(state)))
    worst = 0.0
    for m in range(-window, window + 1):
        for k in range(-window, window + 1):
            br = complex(grads[m] @ (omega @ grads[k]))
            target = -1j * (m - k) * values[m + k]
            denom = float(np.linalg.norm(grads[m]) * np.linalg.norm(grads[k])) * onorm
            worst = max(worst, abs(br - target) / max(denom, 1e-300))
    return [_row("witt[-]", _digest(state, window=window), worst, tol)]


NEGATIVE_CONTROLS = [
    DDFInvariantSpec(left=[], right=[], level=1, allow_unmatched=True),
    DDFInvariantSpec(left=[], right=[(1, 1)], level=2, allow_unmatched=True),
    DDFInvariantSpec(left=[(1, 1)], right=[], level=4, allow_unmatched=True),
]


@_suite("negative-controls")
def suite_negative_controls(states, frame, params, tols):
    # ensemble check: each unmatched control must produce a residue >= tol
    # somewhere on the state ensemble (its normalized size is state-dependent,
    # so single tame states are not failures of the control)
    window = params["m_window"]
    n = params["obs_n"]
    tol = tols["negative-controls"]
    rows = []
    for i, spec in enumerate(NEGATIVE_CONTROLS):
        obs = ddf_invariant_observable(spec, frame, n)
        loudest = 0.0
        for state in states:
            rep = invariance_report(obs, state, window, n_samples=n)
            loudest = max(loudest, max(r["residue"] for r in rep))
        rows.append(_row(f"negative-control[{i}]", _digest(states[0], i=i, states=len(states)),
                         loudest, tol, comparison="ge"))
    return rows


suite_negative_controls.ensemble = True


# ----------------------------------------------------------------------
# runner
# ----------------------------------------------------------------------

def default_params():
    return {"n": 4096, "m_out": 512, "m_window": 4, "obs_n": 512}


def thread_count():
    env = os.environ.get(THREAD_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_suites(names, states, frame, params=None, tolerances=None, threads=None,
               provenance=None):
    """Run the named suites over all states and assemble the report.

    ``provenance`` (state paths, generator seeds) is echoed into the report
    so a run can be reproduced exactly from its own output.
    """
    params = {**default_params(), **(params or {})}
    tols = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    unknown = [nm for nm in names if nm not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}; known: {suite_names()}")
    jobs = []
    for nm in names:
        if getattr(SUITES[nm], "ensemble", False):
            jobs.append((nm, -1, states))
        else:
            jobs.extend((nm, idx, state) for idx, state in enumerate(states))

    def run(job):
        nm, idx, payload = job
        t0 = time.perf_counter()
        out = SUITES[nm](payload, frame, params, tols)
        for r in out:
            r["suite"] = nm
            r["state_index"] = idx
        return nm, time.perf_counter() - t0, out

    workers = threads or thread_count()
    if workers == 1:
        results = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))

    timings, rows = {}, []
    for nm, dt, out in results:
        timings[nm] = timings.get(nm, 0.0) + dt
        rows.extend(out)
    rows.sort(key=lambda r: (r["suite"], r["state_index"], r["name"]))
    return {
        "tool": "closedstring",
        "version": __version__,
        "config": {
            "suites": list(names),
            "params": params,
            "tolerances": tols,
            "frame": [float(v) for v in frame.k],
            "states": len(states),
            "provenance": provenance or {},
            "threads": workers,
        },
        "rows": rows,
        "pass": all(r["pass"] for r in rows),
        "timings": {k: round(v, 4) for k, v in sorted(timings.items())},
    }


def suite_names():
    return sorted(SUITES)
